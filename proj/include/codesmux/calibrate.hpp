#pragma once

#include <utility>
#include <vector>

#include "codesmux/pulsefeat.hpp"
#include "codesmux/scaling.hpp"
#include "codesmux/synth.hpp"

namespace codesmux {

// Isolated-event record labeled with the sensor the particle went through.
struct LabeledRecord {
  int sensor_id = 0;
  SignalRecord record;
};

// Per-sensor mean of (k-th code pulse peak) / (pre pulse peak), code pulses
// matched to positive bits in chronological order. Every sensor in the book
// needs at least one record; a pulse-count mismatch with the code's popcount
// is an error.
ScalingTable estimate_scaling(const std::vector<LabeledRecord>& records,
                              const CodeBook& book,
                              const FeatureOptions& opt = {});

// Pointwise mean of normalize_pulse over all pre-coding pulses (the Fig-4b
// style quarter-level shape).
std::vector<double> canonical_pulse_shape(
    const std::vector<SignalRecord>& records, std::size_t n_points,
    const FeatureOptions& opt = {});

// Same averaging over normalize_pulse_full; this is the shape the decoder
// places when building code templates.
std::vector<double> canonical_template_shape(
    const std::vector<SignalRecord>& records, std::size_t n_points,
    const FeatureOptions& opt = {});

}  // namespace codesmux

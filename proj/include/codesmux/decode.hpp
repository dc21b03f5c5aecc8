#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "codesmux/calibrate.hpp"
#include "codesmux/codebook.hpp"
#include "codesmux/scaling.hpp"
#include "codesmux/speedknn.hpp"
#include "codesmux/synth.hpp"

namespace codesmux {

// Predicted code-channel waveform for one pre-pulse under one sensor
// hypothesis. The waveform is a dense run of samples on the record grid
// starting at start_index.
struct CodeTemplate {
  std::size_t pulse_index = 0;
  int sensor_id = 0;
  std::size_t start_index = 0;
  std::vector<double> samples;
  double est_speed_um_s = 0;
  double est_amplitude_v = 0;
  bool clipped = false;  // template ran past the record end and was cut

  std::size_t end_index() const { return start_index + samples.size(); }
};

struct DecodedEvent {
  std::size_t pulse_index = 0;
  int sensor_id = 0;
  double t_peak_s = 0;
  double est_speed_um_s = 0;
  double est_amplitude_v = 0;
};

struct DecodeResult {
  std::vector<DecodedEvent> events;  // chronological
  double total_mse = 0;              // over the whole code channel
  std::vector<std::vector<std::size_t>> clusters;
  std::vector<bool> exhaustive;      // per cluster: exact enumeration vs beam
  std::vector<std::string> warnings;
};

// Everything decode_record needs besides the record itself.
struct DecodeModel {
  CodeBook book;
  ScalingTable scaling;
  std::vector<double> shape;  // normalized full-extent pulse shape
  TrainingSet training;
  int k = 5;
  bool standardize = false;
  FeatureOptions features;
  int n_exact = 6;       // exhaustive enumeration up to this cluster size
  int beam_width = 64;
};

// Places the shape at every positive bit of the sensor's code: peak k at
// t_peak + (pre_offset + (k-1)*pitch) / est_speed, amplitude x1 * factor[k],
// pulse duration 2*x3 mapped onto the shape's measured half-level width.
// Throws when the template runs past the record unless allow_clip is set.
CodeTemplate build_template(const PulseFeatures& pf, std::size_t pulse_index,
                            const SensorCode& sensor, const DecodeModel& model,
                            double sample_rate_hz, std::size_t record_len,
                            bool allow_clip = false);

// Groups pulses whose candidate template spans overlap, transitively closed,
// clusters in chronological order. candidates[i] holds pulse i's templates.
std::vector<std::vector<std::size_t>> segment_pulses(
    const std::vector<std::vector<CodeTemplate>>& candidates);

struct Assignment {
  std::vector<int> sensor_ids;  // one per pulse in the cluster, in order
  double mse = 0;
  bool exhaustive = true;
};

// Chooses the sensor per pulse minimizing the MSE between the summed chosen
// templates and the code channel over the union of candidate supports.
// Exhaustive when the cluster is small enough, chronological beam search
// otherwise; ties break to the lexicographically smallest sensor sequence.
Assignment mmse_assign(const std::vector<std::size_t>& cluster,
                       const std::vector<std::vector<CodeTemplate>>& candidates,
                       std::span<const double> code_channel, int n_exact,
                       int beam_width);

// Exposed separately so the two routes can be compared directly.
Assignment mmse_exhaustive(const std::vector<std::size_t>& cluster,
                           const std::vector<std::vector<CodeTemplate>>& candidates,
                           std::span<const double> code_channel);
Assignment mmse_beam(const std::vector<std::size_t>& cluster,
                     const std::vector<std::vector<CodeTemplate>>& candidates,
                     std::span<const double> code_channel, int beam_width);

DecodeResult decode_record(const SignalRecord& record, const DecodeModel& model);

}  // namespace codesmux

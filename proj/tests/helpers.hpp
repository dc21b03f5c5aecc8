#pragma once

#include <vector>

#include "codesmux/eval.hpp"
#include "codesmux/synth.hpp"

namespace testutil {

using namespace codesmux;

inline CodeBook default_book(int sensors = 10, int bits = 5) {
  return generate_codebook(sensors, bits);
}

inline SynthConfig default_synth(const CodeBook& book, double duration_s = 0.02,
                                 double factor = 0.8) {
  SynthConfig cfg;
  cfg.book = book;
  cfg.scaling = ScalingTable::uniform(book, factor);
  cfg.sample_rate_hz = 50000.0;
  cfg.duration_s = duration_s;
  return cfg;
}

inline ParticleEvent event(int channel, double t_arrival, double speed = 30000,
                           double amp = 0.1) {
  return {channel, t_arrival, speed, amp};
}

// Isolated single-event record with enough room for the full code waveform.
inline SignalRecord isolated_record(const SynthConfig& base, const ParticleEvent& e) {
  SynthConfig cfg = base;
  cfg.duration_s = required_duration_s(cfg.book, e.t_arrival_s, e.speed_um_s);
  return synthesize_record({e}, cfg);
}

}  // namespace testutil

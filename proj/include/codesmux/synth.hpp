#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "codesmux/codebook.hpp"
#include "codesmux/scaling.hpp"

namespace codesmux {

struct ParticleEvent {
  int channel = 0;          // sensor_id
  double t_arrival_s = 0;   // pre-coding pulse peak time
  double speed_um_s = 0;
  double amplitude_v = 0;   // pre-coding pulse peak
};

struct SignalRecord {
  double sample_rate_hz = 50000.0;
  std::vector<double> pre_channel;
  std::vector<double> code_channel;

  std::size_t size() const { return pre_channel.size(); }
  double duration_s() const { return double(size()) / sample_rate_hz; }
};

struct SynthConfig {
  CodeBook book;
  ScalingTable scaling;        // ground-truth scaling used for synthesis
  double sample_rate_hz = 50000.0;
  double noise_sigma_v = 0.0;  // RMS of additive white Gaussian noise
  uint64_t rng_seed = 0;
  double duration_s = 0.0;
};

// Raised-cosine (Hann) lobe of full duration transit_s centered at t_peak_s,
// sampled on the record grid t_i = i / sample_rate.
std::vector<double> pulse_waveform(double amplitude_v, double t_peak_s,
                                   double transit_s, double sample_rate_hz,
                                   std::size_t n_samples);

// Noiseless per-event contribution to (pre channel, code channel).
std::pair<std::vector<double>, std::vector<double>> event_waveforms(
    const ParticleEvent& e, const SynthConfig& cfg);

SignalRecord synthesize_record(const std::vector<ParticleEvent>& events,
                               const SynthConfig& cfg);

struct ScenarioParams {
  int n_events = 0;
  double window_s = 0.06;  // arrival times drawn uniformly from [0, window]
  double min_gap_s = 0;    // arrivals redrawn until pairwise gaps reach this
  double speed_min_um_s = 0;
  double speed_max_um_s = 0;
  double amp_min_v = 0;
  double amp_max_v = 0;
  uint64_t rng_seed = 0;
};

std::vector<ParticleEvent> random_scenario(const CodeBook& book,
                                           const ScenarioParams& p);

// Axial distance from the pre-coding zone to code bit k (1-indexed).
double bit_distance_um(const SensorGeometry& g, int bit_index);

// Record length that contains every event's full code waveform.
double required_duration_s(const CodeBook& book, double window_s,
                           double speed_min_um_s);

}  // namespace codesmux

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "codesmux/decode.hpp"
#include "codesmux/synth.hpp"

namespace codesmux {

struct ScoreReport {
  double channel_accuracy = 0;  // trace / total, 1.0 when empty
  double speed_mae_um_s = 0;
  double amplitude_mae_v = 0;
  std::vector<std::vector<int>> confusion;  // [true sensor - 1][decoded - 1]
  int n_events = 0;
  std::vector<std::string> warnings;
};

// Pairs decoded events with truth chronologically. A count mismatch is
// reported as a warning and scoring proceeds on the paired prefix.
ScoreReport score(const DecodeResult& decoded,
                  const std::vector<ParticleEvent>& truth, int n_sensors);

struct ExperimentConfig {
  CodeBook book;
  ScalingTable scaling;           // ground truth for synthesis
  std::vector<double> noise_sigmas_v;
  std::vector<int> event_counts;
  int trials = 1;
  uint64_t seed = 0;
  double window_s = 0.06;
  double min_gap_s = 0;  // minimum spacing between scenario arrivals
  double speed_min_um_s = 24000;
  double speed_max_um_s = 36000;
  double amp_min_v = 0.08;
  double amp_max_v = 0.12;
  double sample_rate_hz = 50000;
  int training_size = 400;
  int shape_points = 200;
  int k = 5;
  FeatureOptions features;
  int n_exact = 6;
  int beam_width = 64;
};

struct ExperimentCell {
  double noise_sigma_v = 0;
  int n_events = 0;
  double accuracy_mean = 0;
  double accuracy_std = 0;
  double speed_mae_mean = 0;
};

struct TrialRow {
  int trial = 0;
  double noise_sigma_v = 0;
  int n_events = 0;
  double accuracy = 0;
  double speed_mae_um_s = 0;
};

struct ExperimentReport {
  std::vector<ExperimentCell> cells;
  std::vector<TrialRow> trial_rows;
};

// Monte-Carlo sweep over (noise level, event count). Scenarios and the unit
// noise realization are shared across noise levels within a trial so the
// sweep compares like against like; everything derives from the seed.
ExperimentReport run_experiment(const ExperimentConfig& cfg);

// Harness helpers: synthesize an isolated-event record per grid speed at a
// fixed amplitude and build the training set / decoder shape from them.
TrainingSet make_training_grid(const CodeBook& book, const ScalingTable& scaling,
                               double speed_min, double speed_max, int n,
                               double amplitude_v, double sample_rate_hz,
                               const FeatureOptions& opt = {});
std::vector<double> make_template_shape(const CodeBook& book,
                                        const ScalingTable& scaling,
                                        double speed_um_s, double amplitude_v,
                                        double sample_rate_hz, int n_points,
                                        const FeatureOptions& opt = {});

// Deterministic per-trial seed derivation.
uint64_t derive_seed(uint64_t base, uint64_t a, uint64_t b = 0, uint64_t c = 0);

}  // namespace codesmux

#pragma once

#include <cstdint>
#include <vector>

#include "codesmux/codebook.hpp"
#include "codesmux/pulsefeat.hpp"
#include "codesmux/synth.hpp"

namespace codesmux {

struct TrainingSample {
  PulseFeatures features;
  double speed_um_s = 0;
};

struct TrainingSet {
  std::vector<TrainingSample> samples;

  std::size_t size() const { return samples.size(); }
};

struct KSelectionReport {
  int k_star = 0;
  std::vector<double> in_sample_err;   // RMSE, indexed by K-1
  std::vector<double> out_sample_err;  // RMSE, indexed by K-1
  int repeats = 0;
  uint64_t rng_seed = 0;
};

// One isolated event per record. Ground-truth speed comes from the delay
// between the pre-coding peak and the first code-channel peak: with leading-1
// codes that distance is pre_offset for every sensor.
TrainingSet build_training_set(const std::vector<SignalRecord>& records,
                               const CodeBook& book,
                               const FeatureOptions& opt = {});

// Mean speed of the k nearest samples under Euclidean distance over raw
// (x1, x2, x3, x4); distance ties go to the lower sample index. When
// standardize is set, features are z-scored against the training set first.
double knn_speed(const PulseFeatures& query, const TrainingSet& set, int k,
                 bool standardize = false);

// Repeated random sub-sampling validation: equal-half splits (training half
// gets the extra sample), in-sample queries include themselves as candidates,
// errors are RMSE of speed averaged over repeats.
KSelectionReport select_k(const TrainingSet& set, int k_max, int repeats = 50,
                          uint64_t rng_seed = 0, bool standardize = false);

}  // namespace codesmux

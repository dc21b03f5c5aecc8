#include "codesmux/speedknn.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace codesmux {

namespace {

struct FeatureStats {
  double mean[4] = {0, 0, 0, 0};
  double sd[4] = {1, 1, 1, 1};
};

std::array<double, 4> raw(const PulseFeatures& f) {
  return {f.x1_v, f.x2_s, f.x3_s, f.x4_s};
}

FeatureStats stats_of(const TrainingSet& set) {
  FeatureStats st;
  const double n = double(set.size());
  for (const auto& s : set.samples) {
    const auto v = raw(s.features);
    for (int d = 0; d < 4; ++d) st.mean[d] += v[std::size_t(d)];
  }
  for (int d = 0; d < 4; ++d) st.mean[d] /= n;
  double var[4] = {0, 0, 0, 0};
  for (const auto& s : set.samples) {
    const auto v = raw(s.features);
    for (int d = 0; d < 4; ++d) {
      const double c = v[std::size_t(d)] - st.mean[d];
      var[d] += c * c;
    }
  }
  for (int d = 0; d < 4; ++d) {
    const double sd = std::sqrt(var[d] / n);
    st.sd[d] = sd > 0 ? sd : 1.0;
  }
  return st;
}

double dist2(const PulseFeatures& a, const PulseFeatures& b,
             const FeatureStats& st) {
  const auto va = raw(a);
  const auto vb = raw(b);
  double acc = 0;
  for (int d = 0; d < 4; ++d) {
    const double c = (va[std::size_t(d)] - vb[std::size_t(d)]) / st.sd[d];
    acc += c * c;
  }
  return acc;
}

}  // namespace

TrainingSet build_training_set(const std::vector<SignalRecord>& records,
                               const CodeBook& book, const FeatureOptions& opt) {
  TrainingSet set;
  set.samples.reserve(records.size());
  const double pre_offset = book.geometry.pre_offset_um;

  for (const auto& rec : records) {
    const auto pre = opt.smooth_window > 1
                         ? moving_average(rec.pre_channel, opt.smooth_window)
                         : rec.pre_channel;
    const auto code = opt.smooth_window > 1
                          ? moving_average(rec.code_channel, opt.smooth_window)
                          : rec.code_channel;

    const double pre_thr = opt.threshold_v > 0 ? opt.threshold_v : auto_threshold(pre);
    const auto pre_peaks =
        detect_pulses(pre, rec.sample_rate_hz, pre_thr, opt.min_separation_s);
    if (pre_peaks.size() != 1)
      throw std::runtime_error("training record must contain exactly one pre pulse, got " +
                               std::to_string(pre_peaks.size()));

    const double code_thr = opt.threshold_v > 0 ? opt.threshold_v : auto_threshold(code);
    const auto code_peaks =
        detect_pulses(code, rec.sample_rate_hz, code_thr, opt.min_separation_s);
    if (code_peaks.empty())
      throw std::runtime_error("training record has no detectable code pulse");

    const bool smoothed = opt.smooth_window > 1;
    const PulseFeatures pf = extract_features(
        pre, rec.sample_rate_hz, pre_peaks[0],
        smoothed ? std::span<const double>(rec.pre_channel)
                 : std::span<const double>{});
    const PulseFeatures cf = extract_features(
        code, rec.sample_rate_hz, code_peaks[0],
        smoothed ? std::span<const double>(rec.code_channel)
                 : std::span<const double>{});
    const double dt = cf.t_peak_s - pf.t_peak_s;
    if (dt <= 0)
      throw std::runtime_error("non-positive pre-to-code peak time difference");
    set.samples.push_back({pf, pre_offset / dt});
  }
  if (set.samples.empty()) throw std::runtime_error("empty training set");
  return set;
}

double knn_speed(const PulseFeatures& query, const TrainingSet& set, int k,
                 bool standardize) {
  if (set.samples.empty()) throw std::invalid_argument("empty training set");
  if (k < 1 || std::size_t(k) > set.size())
    throw std::invalid_argument("k out of range");

  const FeatureStats st = standardize ? stats_of(set) : FeatureStats{};
  std::vector<std::pair<double, std::size_t>> ranked;
  ranked.reserve(set.size());
  for (std::size_t i = 0; i < set.size(); ++i)
    ranked.emplace_back(dist2(query, set.samples[i].features, st), i);
  std::partial_sort(ranked.begin(), ranked.begin() + k, ranked.end());

  double acc = 0;
  for (int i = 0; i < k; ++i)
    acc += set.samples[ranked[std::size_t(i)].second].speed_um_s;
  return acc / double(k);
}

KSelectionReport select_k(const TrainingSet& set, int k_max, int repeats,
                          uint64_t rng_seed, bool standardize) {
  const std::size_t n = set.size();
  if (n < 4) throw std::invalid_argument("training set too small for select_k");
  if (k_max < 1 || std::size_t(k_max) > n / 2)
    throw std::invalid_argument("k_max out of range");
  if (repeats < 1) throw std::invalid_argument("repeats must be >= 1");

  const FeatureStats st = standardize ? stats_of(set) : FeatureStats{};
  KSelectionReport rep;
  rep.repeats = repeats;
  rep.rng_seed = rng_seed;
  rep.in_sample_err.assign(std::size_t(k_max), 0.0);
  rep.out_sample_err.assign(std::size_t(k_max), 0.0);

  // Accumulates, per K, the prediction for every prefix size in one sorted
  // pass over the candidates of each query.
  auto accumulate = [&](const std::vector<std::size_t>& train,
                        const PulseFeatures& qf, double truth,
                        std::vector<double>& sq_err) {
    std::vector<std::pair<double, std::size_t>> ranked;
    ranked.reserve(train.size());
    for (std::size_t idx : train)
      ranked.emplace_back(dist2(qf, set.samples[idx].features, st), idx);
    std::sort(ranked.begin(), ranked.end());
    double prefix = 0;
    for (int k = 1; k <= k_max; ++k) {
      prefix += set.samples[ranked[std::size_t(k - 1)].second].speed_um_s;
      const double err = prefix / double(k) - truth;
      sq_err[std::size_t(k - 1)] += err * err;
    }
  };

  for (int r = 0; r < repeats; ++r) {
    std::mt19937_64 rng(rng_seed + 0x9E3779B97F4A7C15ull * uint64_t(r + 1));
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    const std::size_t n_train = (n + 1) / 2;  // training half gets the extra
    std::vector<std::size_t> train(perm.begin(), perm.begin() + long(n_train));
    std::vector<std::size_t> test(perm.begin() + long(n_train), perm.end());

    std::vector<double> in_sq(std::size_t(k_max), 0.0);
    std::vector<double> out_sq(std::size_t(k_max), 0.0);
    for (std::size_t idx : train)
      accumulate(train, set.samples[idx].features, set.samples[idx].speed_um_s,
                 in_sq);
    for (std::size_t idx : test)
      accumulate(train, set.samples[idx].features, set.samples[idx].speed_um_s,
                 out_sq);

    for (int k = 0; k < k_max; ++k) {
      rep.in_sample_err[std::size_t(k)] +=
          std::sqrt(in_sq[std::size_t(k)] / double(train.size()));
      rep.out_sample_err[std::size_t(k)] +=
          std::sqrt(out_sq[std::size_t(k)] / double(test.size()));
    }
  }
  for (int k = 0; k < k_max; ++k) {
    rep.in_sample_err[std::size_t(k)] /= double(repeats);
    rep.out_sample_err[std::size_t(k)] /= double(repeats);
  }

  rep.k_star = 1;
  for (int k = 2; k <= k_max; ++k)
    if (rep.out_sample_err[std::size_t(k - 1)] <
        rep.out_sample_err[std::size_t(rep.k_star - 1)])
      rep.k_star = k;
  return rep;
}

}  // namespace codesmux

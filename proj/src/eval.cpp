#include "codesmux/eval.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace codesmux {

uint64_t derive_seed(uint64_t base, uint64_t a, uint64_t b, uint64_t c) {
  // splitmix64-style mixing
  uint64_t x = base ^ (a * 0x9E3779B97F4A7C15ull) ^ (b * 0xBF58476D1CE4E5B9ull) ^
               (c * 0x94D049BB133111EBull);
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ull;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBull;
  x ^= x >> 31;
  return x;
}

ScoreReport score(const DecodeResult& decoded,
                  const std::vector<ParticleEvent>& truth, int n_sensors) {
  ScoreReport rep;
  rep.confusion.assign(std::size_t(n_sensors),
                       std::vector<int>(std::size_t(n_sensors), 0));

  std::vector<ParticleEvent> sorted_truth = truth;
  std::sort(sorted_truth.begin(), sorted_truth.end(),
            [](const ParticleEvent& a, const ParticleEvent& b) {
              return a.t_arrival_s < b.t_arrival_s;
            });

  if (decoded.events.size() != sorted_truth.size())
    rep.warnings.push_back("event count mismatch: decoded " +
                           std::to_string(decoded.events.size()) + ", truth " +
                           std::to_string(sorted_truth.size()) +
                           "; scoring the paired prefix");

  const std::size_t n = std::min(decoded.events.size(), sorted_truth.size());
  rep.n_events = int(n);
  if (n == 0) {
    rep.channel_accuracy = 1.0;  // vacuous
    return rep;
  }

  int hits = 0;
  double speed_abs = 0, amp_abs = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& d = decoded.events[i];
    const auto& t = sorted_truth[i];
    if (t.channel >= 1 && t.channel <= n_sensors && d.sensor_id >= 1 &&
        d.sensor_id <= n_sensors)
      ++rep.confusion[std::size_t(t.channel - 1)][std::size_t(d.sensor_id - 1)];
    if (d.sensor_id == t.channel) ++hits;
    speed_abs += std::abs(d.est_speed_um_s - t.speed_um_s);
    amp_abs += std::abs(d.est_amplitude_v - t.amplitude_v);
  }
  rep.channel_accuracy = double(hits) / double(n);
  rep.speed_mae_um_s = speed_abs / double(n);
  rep.amplitude_mae_v = amp_abs / double(n);
  return rep;
}

TrainingSet make_training_grid(const CodeBook& book, const ScalingTable& scaling,
                               double speed_min, double speed_max, int n,
                               double amplitude_v, double sample_rate_hz,
                               const FeatureOptions& opt) {
  if (n < 1) throw std::invalid_argument("training grid size must be >= 1");
  SynthConfig cfg;
  cfg.book = book;
  cfg.scaling = scaling;
  cfg.sample_rate_hz = sample_rate_hz;
  cfg.noise_sigma_v = 0;

  std::vector<SignalRecord> records;
  records.reserve(std::size_t(n));
  const int channel = book.codes.front().sensor_id;
  for (int i = 0; i < n; ++i) {
    const double frac = n > 1 ? double(i) / double(n - 1) : 0.5;
    ParticleEvent e;
    e.channel = channel;
    e.speed_um_s = speed_min + frac * (speed_max - speed_min);
    e.amplitude_v = amplitude_v;
    e.t_arrival_s = book.geometry.sensing_zone_um / e.speed_um_s;  // clear of t=0
    cfg.duration_s = required_duration_s(book, e.t_arrival_s, speed_min);
    records.push_back(synthesize_record({e}, cfg));
  }
  return build_training_set(records, book, opt);
}

std::vector<double> make_template_shape(const CodeBook& book,
                                        const ScalingTable& scaling,
                                        double speed_um_s, double amplitude_v,
                                        double sample_rate_hz, int n_points,
                                        const FeatureOptions& opt) {
  SynthConfig cfg;
  cfg.book = book;
  cfg.scaling = scaling;
  cfg.sample_rate_hz = sample_rate_hz;
  ParticleEvent e;
  e.channel = book.codes.front().sensor_id;
  e.speed_um_s = speed_um_s;
  e.amplitude_v = amplitude_v;
  e.t_arrival_s = book.geometry.sensing_zone_um / speed_um_s;
  cfg.duration_s = required_duration_s(book, e.t_arrival_s, speed_um_s);
  const SignalRecord rec = synthesize_record({e}, cfg);
  return canonical_template_shape({rec}, std::size_t(n_points), opt);
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  if (cfg.trials < 1) throw std::invalid_argument("trials must be >= 1");
  ExperimentReport rep;

  const double mid_speed = 0.5 * (cfg.speed_min_um_s + cfg.speed_max_um_s);
  const double mid_amp = 0.5 * (cfg.amp_min_v + cfg.amp_max_v);

  DecodeModel model;
  model.book = cfg.book;
  model.scaling = cfg.scaling;
  model.training =
      make_training_grid(cfg.book, cfg.scaling, cfg.speed_min_um_s,
                         cfg.speed_max_um_s, cfg.training_size, mid_amp,
                         cfg.sample_rate_hz, cfg.features);
  model.shape = make_template_shape(cfg.book, cfg.scaling, mid_speed, mid_amp,
                                    cfg.sample_rate_hz, cfg.shape_points,
                                    cfg.features);
  model.k = cfg.k;
  model.features = cfg.features;
  model.n_exact = cfg.n_exact;
  model.beam_width = cfg.beam_width;

  SynthConfig synth;
  synth.book = cfg.book;
  synth.scaling = cfg.scaling;
  synth.sample_rate_hz = cfg.sample_rate_hz;

  const double t_margin =
      cfg.book.geometry.sensing_zone_um / cfg.speed_min_um_s;

  for (std::size_t ei = 0; ei < cfg.event_counts.size(); ++ei) {
    const int n_events = cfg.event_counts[ei];
    // scenarios and unit noise are per (event count, trial): every noise
    // level sees the same particles and the same noise shape, scaled
    std::vector<std::vector<ParticleEvent>> scenarios(std::size_t(cfg.trials));
    std::vector<SignalRecord> clean(std::size_t(cfg.trials));
    for (int t = 0; t < cfg.trials; ++t) {
      ScenarioParams p;
      p.n_events = n_events;
      p.window_s = cfg.window_s;
      p.min_gap_s = cfg.min_gap_s;
      p.speed_min_um_s = cfg.speed_min_um_s;
      p.speed_max_um_s = cfg.speed_max_um_s;
      p.amp_min_v = cfg.amp_min_v;
      p.amp_max_v = cfg.amp_max_v;
      p.rng_seed = derive_seed(cfg.seed, ei, std::size_t(t), 1);
      auto events = random_scenario(cfg.book, p);
      for (auto& e : events) e.t_arrival_s += t_margin;
      synth.duration_s =
          required_duration_s(cfg.book, cfg.window_s + 2 * t_margin,
                              cfg.speed_min_um_s);
      synth.noise_sigma_v = 0;
      clean[std::size_t(t)] = synthesize_record(events, synth);
      scenarios[std::size_t(t)] = std::move(events);
    }

    for (std::size_t ni = 0; ni < cfg.noise_sigmas_v.size(); ++ni) {
      const double sigma = cfg.noise_sigmas_v[ni];
      double acc_sum = 0, acc_sq = 0, mae_sum = 0;
      for (int t = 0; t < cfg.trials; ++t) {
        SignalRecord rec = clean[std::size_t(t)];
        if (sigma > 0) {
          std::mt19937_64 rng(derive_seed(cfg.seed, ei, std::size_t(t), 2));
          std::normal_distribution<double> unit(0.0, 1.0);
          for (auto& v : rec.pre_channel) v += sigma * unit(rng);
          for (auto& v : rec.code_channel) v += sigma * unit(rng);
        }
        const DecodeResult dec = decode_record(rec, model);
        const ScoreReport sr =
            score(dec, scenarios[std::size_t(t)], int(cfg.book.codes.size()));
        acc_sum += sr.channel_accuracy;
        acc_sq += sr.channel_accuracy * sr.channel_accuracy;
        mae_sum += sr.speed_mae_um_s;
        rep.trial_rows.push_back(
            {t, sigma, n_events, sr.channel_accuracy, sr.speed_mae_um_s});
      }
      ExperimentCell cell;
      cell.noise_sigma_v = sigma;
      cell.n_events = n_events;
      cell.accuracy_mean = acc_sum / cfg.trials;
      cell.accuracy_std = std::sqrt(
          std::max(0.0, acc_sq / cfg.trials - cell.accuracy_mean * cell.accuracy_mean));
      cell.speed_mae_mean = mae_sum / cfg.trials;
      rep.cells.push_back(cell);
    }
  }
  return rep;
}

}  // namespace codesmux

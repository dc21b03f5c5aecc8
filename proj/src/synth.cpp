#include "codesmux/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace codesmux {

double bit_distance_um(const SensorGeometry& g, int bit_index) {
  return g.pre_offset_um + (bit_index - 1) * g.bit_pitch_um;
}

double required_duration_s(const CodeBook& book, double window_s,
                           double speed_min_um_s) {
  const auto& g = book.geometry;
  const double last_bit = bit_distance_um(g, int(book.code_length()));
  // slowest particle arriving at the end of the window, plus half a transit
  return window_s + (last_bit + g.sensing_zone_um) / speed_min_um_s;
}

std::vector<double> pulse_waveform(double amplitude_v, double t_peak_s,
                                   double transit_s, double sample_rate_hz,
                                   std::size_t n_samples) {
  if (transit_s <= 0) throw std::invalid_argument("transit time must be > 0");
  std::vector<double> out(n_samples, 0.0);
  if (amplitude_v == 0.0 || n_samples == 0) return out;

  const double t0 = t_peak_s - transit_s / 2;
  const double t1 = t_peak_s + transit_s / 2;
  long i0 = long(std::ceil(t0 * sample_rate_hz));
  long i1 = long(std::floor(t1 * sample_rate_hz));
  i0 = std::max(i0, 0L);
  i1 = std::min(i1, long(n_samples) - 1);
  for (long i = i0; i <= i1; ++i) {
    const double t = double(i) / sample_rate_hz;
    const double phase = 2.0 * std::numbers::pi * (t - t0) / transit_s;
    out[std::size_t(i)] = amplitude_v * 0.5 * (1.0 - std::cos(phase));
  }
  return out;
}

std::pair<std::vector<double>, std::vector<double>> event_waveforms(
    const ParticleEvent& e, const SynthConfig& cfg) {
  const SensorCode& code = cfg.book.find(e.channel);
  const ScalingRow& row = cfg.scaling.row(e.channel);
  if (row.factors.size() != code.bits.size())
    throw std::invalid_argument("scaling row length mismatch for sensor " +
                                std::to_string(e.channel));
  if (e.speed_um_s <= 0) throw std::invalid_argument("speed must be > 0");

  const auto& g = cfg.book.geometry;
  const std::size_t n = std::size_t(std::llround(cfg.duration_s * cfg.sample_rate_hz));
  const double transit = g.sensing_zone_um / e.speed_um_s;

  std::vector<double> pre = pulse_waveform(e.amplitude_v, e.t_arrival_s, transit,
                                           cfg.sample_rate_hz, n);
  std::vector<double> codech(n, 0.0);
  for (std::size_t k = 0; k < code.bits.size(); ++k) {
    if (!code.bits[k]) continue;
    const double t_peak =
        e.t_arrival_s + bit_distance_um(g, int(k) + 1) / e.speed_um_s;
    auto pulse = pulse_waveform(e.amplitude_v * row.factors[k], t_peak, transit,
                                cfg.sample_rate_hz, n);
    for (std::size_t i = 0; i < n; ++i) codech[i] += pulse[i];
  }
  return {std::move(pre), std::move(codech)};
}

SignalRecord synthesize_record(const std::vector<ParticleEvent>& events,
                               const SynthConfig& cfg) {
  if (cfg.noise_sigma_v < 0)
    throw std::invalid_argument("noise_sigma_v must be >= 0");
  const std::size_t n = std::size_t(std::llround(cfg.duration_s * cfg.sample_rate_hz));
  SignalRecord rec;
  rec.sample_rate_hz = cfg.sample_rate_hz;
  rec.pre_channel.assign(n, 0.0);
  rec.code_channel.assign(n, 0.0);

  const auto& g = cfg.book.geometry;
  for (const auto& e : events) {
    const double transit = g.sensing_zone_um / e.speed_um_s;
    const double code_end =
        e.t_arrival_s +
        bit_distance_um(g, int(cfg.book.code_length())) / e.speed_um_s +
        transit / 2;
    if (e.t_arrival_s - transit / 2 < 0 || code_end > cfg.duration_s)
      throw std::invalid_argument("event outside record window");

    auto [pre, codech] = event_waveforms(e, cfg);
    for (std::size_t i = 0; i < n; ++i) {
      rec.pre_channel[i] += pre[i];
      rec.code_channel[i] += codech[i];
    }
  }

  if (cfg.noise_sigma_v > 0) {
    std::mt19937_64 rng(cfg.rng_seed);
    std::normal_distribution<double> noise(0.0, cfg.noise_sigma_v);
    for (auto& v : rec.pre_channel) v += noise(rng);
    for (auto& v : rec.code_channel) v += noise(rng);
  }
  return rec;
}

std::vector<ParticleEvent> random_scenario(const CodeBook& book,
                                           const ScenarioParams& p) {
  if (p.n_events < 0) throw std::invalid_argument("n_events must be >= 0");
  if (p.n_events > 0) {
    if (p.speed_min_um_s <= 0 || p.speed_max_um_s < p.speed_min_um_s ||
        p.amp_min_v <= 0 || p.amp_max_v < p.amp_min_v || p.window_s <= 0)
      throw std::invalid_argument("scenario ranges must be positive and non-empty");
  }
  std::mt19937_64 rng(p.rng_seed);
  std::uniform_int_distribution<int> channel(1, int(book.codes.size()));
  std::uniform_real_distribution<double> arrival(0.0, p.window_s);
  std::uniform_real_distribution<double> speed(p.speed_min_um_s, p.speed_max_um_s);
  std::uniform_real_distribution<double> amp(p.amp_min_v, p.amp_max_v);

  std::vector<double> arrivals;
  for (int attempt = 0; attempt < 1000; ++attempt) {
    arrivals.clear();
    for (int i = 0; i < p.n_events; ++i) arrivals.push_back(arrival(rng));
    std::sort(arrivals.begin(), arrivals.end());
    bool ok = true;
    for (std::size_t i = 0; i + 1 < arrivals.size(); ++i)
      ok = ok && arrivals[i + 1] - arrivals[i] >= p.min_gap_s;
    if (ok) break;
    if (attempt == 999)
      throw std::runtime_error("cannot fit events with the requested minimum gap");
  }

  std::vector<ParticleEvent> events;
  events.reserve(std::size_t(p.n_events));
  for (int i = 0; i < p.n_events; ++i) {
    ParticleEvent e;
    e.channel = channel(rng);
    e.t_arrival_s = arrivals[std::size_t(i)];
    e.speed_um_s = speed(rng);
    e.amplitude_v = amp(rng);
    events.push_back(e);
  }
  return events;
}

}  // namespace codesmux

#include "codesmux/pulsefeat.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace codesmux {

std::vector<double> moving_average(std::span<const double> channel,
                                   std::size_t window) {
  if (window <= 1 || channel.size() < window)
    return std::vector<double>(channel.begin(), channel.end());
  const std::size_t n = channel.size();
  const long half = long(window) / 2;
  std::vector<double> out(n, 0.0);
  double acc = 0;
  // running box sum, shrinking at the edges
  for (std::size_t i = 0; i < n; ++i) {
    const long lo = std::max(0L, long(i) - half);
    const long hi = std::min(long(n) - 1, long(i) + half);
    if (i == 0) {
      for (long j = lo; j <= hi; ++j) acc += channel[std::size_t(j)];
    } else {
      const long plo = std::max(0L, long(i) - 1 - half);
      const long phi = std::min(long(n) - 1, long(i) - 1 + half);
      if (lo > plo) acc -= channel[std::size_t(plo)];
      if (hi > phi) acc += channel[std::size_t(hi)];
    }
    const long lo2 = std::max(0L, long(i) - half);
    const long hi2 = std::min(long(n) - 1, long(i) + half);
    out[i] = acc / double(hi2 - lo2 + 1);
  }
  return out;
}

double auto_threshold(std::span<const double> channel) {
  if (channel.empty()) return 1e-12;
  std::vector<double> work(channel.begin(), channel.end());
  const std::size_t mid = work.size() / 2;
  std::nth_element(work.begin(), work.begin() + long(mid), work.end());
  const double median = work[mid];
  for (auto& v : work) v = std::abs(v - median);
  std::nth_element(work.begin(), work.begin() + long(mid), work.end());
  const double mad = work[mid];
  double max_abs = 0;
  for (double v : channel) max_abs = std::max(max_abs, std::abs(v));
  return std::max({5.0 * 1.4826 * mad, 0.02 * max_abs, 1e-12});
}

std::vector<std::size_t> detect_pulses(std::span<const double> channel,
                                       double sample_rate_hz,
                                       double threshold_v,
                                       double min_separation_s) {
  if (threshold_v <= 0) throw std::invalid_argument("threshold must be > 0");
  if (min_separation_s < 0)
    throw std::invalid_argument("min_separation must be >= 0");

  const std::size_t n = channel.size();
  std::vector<std::size_t> peaks;
  std::size_t i = 1;
  while (n >= 3 && i + 1 < n) {
    if (channel[i] > threshold_v && channel[i] > channel[i - 1]) {
      // plateau-aware: run of equal samples counts as one maximum
      std::size_t j = i;
      while (j + 1 < n && channel[j + 1] == channel[i]) ++j;
      if (j + 1 < n && channel[i] > channel[j + 1]) {
        peaks.push_back(i + (j - i) / 2);
        i = j + 1;
        continue;
      }
      i = j + 1;
      continue;
    }
    ++i;
  }

  if (min_separation_s == 0 || peaks.size() < 2) return peaks;

  const double min_sep = min_separation_s * sample_rate_hz;
  std::vector<std::size_t> kept;
  for (std::size_t p : peaks) {
    if (!kept.empty() && double(p - kept.back()) < min_sep) {
      if (channel[p] > channel[kept.back()]) kept.back() = p;
    } else {
      kept.push_back(p);
    }
  }
  return kept;
}

namespace {

// First crossing of `level` walking outward from the peak; returns the
// crossing time in samples, linearly interpolated. dir is -1 (left) or +1.
double crossing_time(std::span<const double> channel, std::size_t peak,
                     double level, int dir) {
  long i = long(peak);
  const long n = long(channel.size());
  while (true) {
    const long j = i + dir;
    if (j < 0 || j >= n)
      throw std::runtime_error("truncated pulse: level crossing runs off the record");
    if (channel[std::size_t(j)] < level) {
      const double a = channel[std::size_t(i)];
      const double b = channel[std::size_t(j)];
      const double frac = (a - level) / (a - b);  // a >= level > b
      return double(i) + dir * frac;
    }
    i = j;
  }
}

// Sub-sample peak amplitude. The raw peak sample is up to ~(pi * dt / T)^2
// low when the true peak falls between samples, which is enough to swamp the
// width features in nearest-neighbor distances. A quartic through the peak
// and its four neighbors keeps the residual interpolation error far below
// the width resolution; falls back to a parabola near the record edges.
double refined_peak_value(std::span<const double> channel, std::size_t peak) {
  const double y0 = channel[peak];
  if (peak == 0 || peak + 1 >= channel.size()) return y0;
  const double ym = channel[peak - 1];
  const double yp = channel[peak + 1];
  const double par_denom = 2 * y0 - ym - yp;
  if (par_denom <= 0) return y0;
  const double d = yp - ym;
  const double parabola = y0 + d * d / (8 * par_denom);

  if (peak < 2 || peak + 2 >= channel.size()) return parabola;
  const double ym2 = channel[peak - 2];
  const double yp2 = channel[peak + 2];
  // central-stencil interpolating quartic p(u), u in samples from the peak
  const double a0 = y0;
  const double a1 = (8 * (yp - ym) - (yp2 - ym2)) / 12.0;
  const double a2 = (-30 * y0 + 16 * (yp + ym) - (yp2 + ym2)) / 24.0;
  const double a3 = ((yp2 - ym2) - 2 * (yp - ym)) / 12.0;
  const double a4 = ((yp2 + ym2) - 4 * (yp + ym) + 6 * y0) / 24.0;
  if (a2 >= 0) return parabola;

  double u = -a1 / (2 * a2);  // parabola vertex as the starting point
  for (int it = 0; it < 8; ++it) {
    const double dp = a1 + u * (2 * a2 + u * (3 * a3 + u * 4 * a4));
    const double ddp = 2 * a2 + u * (6 * a3 + u * 12 * a4);
    if (ddp >= 0) return parabola;
    const double step = dp / ddp;
    u -= step;
    if (std::abs(step) < 1e-12) break;
  }
  if (!(u > -1.0 && u < 1.0)) return parabola;
  const double value = a0 + u * (a1 + u * (a2 + u * (a3 + u * a4)));
  return value >= y0 ? value : parabola;
}

}  // namespace

PulseFeatures extract_features(std::span<const double> channel,
                               double sample_rate_hz, std::size_t peak_index,
                               std::span<const double> raw) {
  if (peak_index >= channel.size())
    throw std::invalid_argument("peak index out of range");
  if (!raw.empty() && raw.size() != channel.size())
    throw std::invalid_argument("raw channel length mismatch");
  const double x1 = refined_peak_value(channel, peak_index);
  if (x1 <= 0) throw std::invalid_argument("peak amplitude must be > 0");

  PulseFeatures f;
  f.x1_v = x1;
  double widths[3];
  double half_l = 0, half_r = 0;
  const double fracs[3] = {0.75, 0.5, 0.25};
  for (int w = 0; w < 3; ++w) {
    const double level = fracs[w] * x1;
    const double tl = crossing_time(channel, peak_index, level, -1);
    const double tr = crossing_time(channel, peak_index, level, +1);
    widths[w] = (tr - tl) / sample_rate_hz;
    if (w == 1) {
      half_l = tl;
      half_r = tr;
    }
  }
  f.x2_s = widths[0];
  f.x3_s = widths[1];
  f.x4_s = widths[2];
  // sub-sample peak time from the half-level crossing midpoint
  f.t_peak_s = 0.5 * (half_l + half_r) / sample_rate_hz;
  if (!raw.empty()) {
    // local raw maximum can sit a couple of samples off the smoothed one
    std::size_t rp = peak_index;
    const std::size_t lo = peak_index >= 3 ? peak_index - 3 : 0;
    const std::size_t hi = std::min(peak_index + 3, raw.size() - 1);
    for (std::size_t i = lo; i <= hi; ++i)
      if (raw[i] > raw[rp]) rp = i;
    const double x1_raw = refined_peak_value(raw, rp);
    if (x1_raw > 0) f.x1_v = x1_raw;
  }
  return f;
}

namespace {

double interp_at(std::span<const double> channel, double t_samples) {
  const long i = long(std::floor(t_samples));
  const double frac = t_samples - double(i);
  const long n = long(channel.size());
  const long i0 = std::clamp(i, 0L, n - 1);
  const long i1 = std::clamp(i + 1, 0L, n - 1);
  return channel[std::size_t(i0)] * (1 - frac) + channel[std::size_t(i1)] * frac;
}

std::vector<double> resample_segment(std::span<const double> channel,
                                     double t_left, double t_right, double x1,
                                     std::size_t n_points) {
  if (n_points < 2) throw std::invalid_argument("n_points must be >= 2");
  std::vector<double> out(n_points);
  for (std::size_t p = 0; p < n_points; ++p) {
    const double u = double(p) / double(n_points - 1);
    out[p] = interp_at(channel, t_left + u * (t_right - t_left)) / x1;
  }
  return out;
}

}  // namespace

std::vector<double> normalize_pulse(std::span<const double> channel,
                                    std::size_t peak_index,
                                    std::size_t n_points) {
  const double x1 = channel[peak_index];
  if (x1 <= 0) throw std::invalid_argument("peak amplitude must be > 0");
  const double level = 0.25 * x1;
  const double tl = crossing_time(channel, peak_index, level, -1);
  const double tr = crossing_time(channel, peak_index, level, +1);
  return resample_segment(channel, tl, tr, x1, n_points);
}

std::vector<double> normalize_pulse_full(std::span<const double> channel,
                                         std::size_t peak_index,
                                         std::size_t n_points,
                                         double rel_floor) {
  const double x1 = channel[peak_index];
  if (x1 <= 0) throw std::invalid_argument("peak amplitude must be > 0");
  const double level = rel_floor * x1;
  const double tl = crossing_time(channel, peak_index, level, -1);
  const double tr = crossing_time(channel, peak_index, level, +1);
  return resample_segment(channel, tl, tr, x1, n_points);
}

}  // namespace codesmux

#include "codesmux/calibrate.hpp"

#include <map>
#include <stdexcept>

namespace codesmux {

namespace {

std::vector<double> maybe_smooth(const std::vector<double>& ch,
                                 const FeatureOptions& opt) {
  return opt.smooth_window > 1 ? moving_average(ch, opt.smooth_window) : ch;
}

double threshold_for(const std::vector<double>& ch, const FeatureOptions& opt) {
  return opt.threshold_v > 0 ? opt.threshold_v : auto_threshold(ch);
}

}  // namespace

ScalingTable estimate_scaling(const std::vector<LabeledRecord>& records,
                              const CodeBook& book, const FeatureOptions& opt) {
  std::map<int, std::vector<double>> sums;
  std::map<int, int> counts;
  for (const auto& c : book.codes) {
    sums[c.sensor_id].assign(c.bits.size(), 0.0);
    counts[c.sensor_id] = 0;
  }

  for (const auto& lr : records) {
    const SensorCode& code = book.find(lr.sensor_id);
    const auto pre = maybe_smooth(lr.record.pre_channel, opt);
    const auto codech = maybe_smooth(lr.record.code_channel, opt);

    const auto pre_peaks = detect_pulses(pre, lr.record.sample_rate_hz,
                                         threshold_for(pre, opt),
                                         opt.min_separation_s);
    if (pre_peaks.size() != 1)
      throw std::runtime_error("calibration record for sensor " +
                               std::to_string(lr.sensor_id) +
                               " must contain exactly one pre pulse");
    const auto code_peaks = detect_pulses(codech, lr.record.sample_rate_hz,
                                          threshold_for(codech, opt),
                                          opt.min_separation_s);
    if (int(code_peaks.size()) != code.popcount())
      throw std::runtime_error(
          "sensor " + std::to_string(lr.sensor_id) + ": found " +
          std::to_string(code_peaks.size()) + " code pulses, expected " +
          std::to_string(code.popcount()));

    const double pre_amp = pre[pre_peaks[0]];
    auto& acc = sums[lr.sensor_id];
    std::size_t pulse = 0;  // code pulses in chronological order map to bits
    for (std::size_t k = 0; k < code.bits.size(); ++k) {
      if (!code.bits[k]) continue;
      acc[k] += codech[code_peaks[pulse]] / pre_amp;
      ++pulse;
    }
    ++counts[lr.sensor_id];
  }

  ScalingTable table;
  for (const auto& c : book.codes) {
    const int used = counts[c.sensor_id];
    if (used == 0)
      throw std::runtime_error("sensor " + std::to_string(c.sensor_id) +
                               " has no calibration records");
    ScalingRow row;
    row.n_events_used = used;
    row.factors.assign(c.bits.size(), 0.0);
    for (std::size_t k = 0; k < c.bits.size(); ++k)
      if (c.bits[k]) row.factors[k] = sums[c.sensor_id][k] / double(used);
    table.rows[c.sensor_id] = std::move(row);
  }
  return table;
}

namespace {

std::vector<double> average_shapes(const std::vector<SignalRecord>& records,
                                   std::size_t n_points,
                                   const FeatureOptions& opt, bool full_extent) {
  std::vector<double> mean(n_points, 0.0);
  std::size_t used = 0;
  for (const auto& rec : records) {
    const auto pre = maybe_smooth(rec.pre_channel, opt);
    const auto peaks = detect_pulses(pre, rec.sample_rate_hz,
                                     threshold_for(pre, opt),
                                     opt.min_separation_s);
    for (std::size_t p : peaks) {
      const auto shape = full_extent ? normalize_pulse_full(pre, p, n_points)
                                     : normalize_pulse(pre, p, n_points);
      for (std::size_t i = 0; i < n_points; ++i) mean[i] += shape[i];
      ++used;
    }
  }
  if (used == 0) throw std::runtime_error("no usable pulses for shape averaging");
  for (auto& v : mean) v /= double(used);
  return mean;
}

}  // namespace

std::vector<double> canonical_pulse_shape(const std::vector<SignalRecord>& records,
                                          std::size_t n_points,
                                          const FeatureOptions& opt) {
  return average_shapes(records, n_points, opt, false);
}

std::vector<double> canonical_template_shape(
    const std::vector<SignalRecord>& records, std::size_t n_points,
    const FeatureOptions& opt) {
  return average_shapes(records, n_points, opt, true);
}

}  // namespace codesmux

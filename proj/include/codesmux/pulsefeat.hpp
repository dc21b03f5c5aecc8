#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace codesmux {

// The four features of one pre-coding pulse: peak amplitude and full widths
// at 3/4, 1/2 and 1/4 of the peak.
struct PulseFeatures {
  double t_peak_s = 0;  // midpoint of the half-level crossings
  double x1_v = 0;      // peak amplitude (sample value at the peak)
  double x2_s = 0;      // full width at 3/4 peak
  double x3_s = 0;      // full width at 1/2 peak
  double x4_s = 0;      // full width at 1/4 peak
};

// Detection knobs shared across the pipeline. Zeros mean "derive a default
// from the data" (auto threshold, no separation constraint).
struct FeatureOptions {
  double threshold_v = 0;
  double min_separation_s = 0;
  std::size_t smooth_window = 1;  // moving-average width for detection/features
};

// Strict local maxima above threshold, in ascending order. Of any two maxima
// closer than min_separation only the larger survives. Flat-topped maxima
// report the middle sample of the plateau.
std::vector<std::size_t> detect_pulses(std::span<const double> channel,
                                       double sample_rate_hz,
                                       double threshold_v,
                                       double min_separation_s);

// Level crossings are located by linear interpolation walking outward from
// the peak. Throws if a crossing runs off the record (truncated pulse).
// When a non-empty raw channel of the same length is supplied, widths and
// timing come from `channel` (typically a smoothed copy) but the amplitude
// is re-read from the raw samples, so smoothing never biases x1.
PulseFeatures extract_features(std::span<const double> channel,
                               double sample_rate_hz, std::size_t peak_index,
                               std::span<const double> raw = {});

// Segment between the two 1/4-level crossings, amplitude-normalized by x1,
// time-rescaled to [0,1] and linearly resampled to n_points.
std::vector<double> normalize_pulse(std::span<const double> channel,
                                    std::size_t peak_index,
                                    std::size_t n_points);

// Like normalize_pulse but over the full pulse extent, walking outward from
// the peak down to rel_floor * x1. Used for decoder template shapes.
std::vector<double> normalize_pulse_full(std::span<const double> channel,
                                         std::size_t peak_index,
                                         std::size_t n_points,
                                         double rel_floor = 0.01);

// Default detection threshold: 5x the MAD-based noise RMS estimate, with a
// floor of 2% of the channel's absolute maximum.
double auto_threshold(std::span<const double> channel);

// Centered moving average; window <= 1 returns the input unchanged.
std::vector<double> moving_average(std::span<const double> channel,
                                   std::size_t window);

}  // namespace codesmux

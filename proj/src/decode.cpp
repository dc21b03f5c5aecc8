#include "codesmux/decode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace codesmux {

namespace {

struct ShapeInfo {
  double u_peak = 0.5;   // normalized peak position (half-crossing midpoint)
  double w_half = 0.5;   // normalized full width at half maximum
};

double shape_at(std::span<const double> shape, double u) {
  if (u <= 0 || u >= 1) return 0.0;
  const double t = u * double(shape.size() - 1);
  const std::size_t i = std::size_t(t);
  const double frac = t - double(i);
  const std::size_t j = std::min(i + 1, shape.size() - 1);
  return shape[i] * (1 - frac) + shape[j] * frac;
}

ShapeInfo analyze_shape(std::span<const double> shape) {
  if (shape.size() < 3) throw std::invalid_argument("template shape too short");
  std::size_t peak = 0;
  for (std::size_t i = 1; i < shape.size(); ++i)
    if (shape[i] > shape[peak]) peak = i;
  const double level = 0.5 * shape[peak];

  long l = long(peak);
  while (l > 0 && shape[std::size_t(l - 1)] >= level) --l;
  double ul;
  if (l == 0) {
    ul = 0;
  } else {
    const double a = shape[std::size_t(l)], b = shape[std::size_t(l - 1)];
    ul = double(l) - (a - level) / (a - b);
  }
  long r = long(peak);
  const long n = long(shape.size());
  while (r + 1 < n && shape[std::size_t(r + 1)] >= level) ++r;
  double ur;
  if (r == n - 1) {
    ur = double(n - 1);
  } else {
    const double a = shape[std::size_t(r)], b = shape[std::size_t(r + 1)];
    ur = double(r) + (a - level) / (a - b);
  }

  ShapeInfo info;
  info.u_peak = 0.5 * (ul + ur) / double(n - 1);
  info.w_half = (ur - ul) / double(n - 1);
  if (info.w_half <= 0) throw std::invalid_argument("degenerate template shape");
  return info;
}

}  // namespace

namespace {

CodeTemplate build_template_at(const PulseFeatures& pf, std::size_t pulse_index,
                               const SensorCode& sensor, const DecodeModel& model,
                               double sample_rate_hz, std::size_t record_len,
                               bool allow_clip, double speed_um_s) {
  const ScalingRow& row = model.scaling.row(sensor.sensor_id);
  const ShapeInfo info = analyze_shape(model.shape);
  const auto& g = model.book.geometry;

  CodeTemplate tpl;
  tpl.pulse_index = pulse_index;
  tpl.sensor_id = sensor.sensor_id;
  tpl.est_speed_um_s = speed_um_s;
  tpl.est_amplitude_v = pf.x1_v;

  // The shape spans the full pulse; its real-time extent follows from the
  // measured half-peak width x3.
  const double extent_s = pf.x3_s / info.w_half;

  std::vector<double> peak_times;
  for (std::size_t k = 0; k < sensor.bits.size(); ++k)
    if (sensor.bits[k])
      peak_times.push_back(pf.t_peak_s +
                           bit_distance_um(g, int(k) + 1) / tpl.est_speed_um_s);
  if (peak_times.empty()) throw std::invalid_argument("code has no positive bit");

  const double t_start = peak_times.front() - info.u_peak * extent_s;
  const double t_end = peak_times.back() + (1 - info.u_peak) * extent_s;
  long i0 = std::max(0L, long(std::ceil(t_start * sample_rate_hz)));
  long i1 = long(std::floor(t_end * sample_rate_hz));
  if (i1 >= long(record_len)) {
    if (!allow_clip)
      throw std::runtime_error("template extends beyond record end");
    tpl.clipped = true;
    i1 = long(record_len) - 1;
  }
  if (i1 < i0) i1 = i0 - 1;  // fully clipped, empty waveform

  tpl.start_index = std::size_t(i0);
  tpl.samples.assign(std::size_t(i1 - i0 + 1), 0.0);

  std::size_t bit = 0;
  for (std::size_t k = 0; k < sensor.bits.size(); ++k) {
    if (!sensor.bits[k]) continue;
    const double amp = pf.x1_v * row.factors[k];
    const double t_peak = peak_times[bit++];
    const double lobe_start = t_peak - info.u_peak * extent_s;
    for (long i = i0; i <= i1; ++i) {
      const double u = (double(i) / sample_rate_hz - lobe_start) / extent_s;
      tpl.samples[std::size_t(i - i0)] += amp * shape_at(model.shape, u);
    }
  }
  return tpl;
}

}  // namespace

CodeTemplate build_template(const PulseFeatures& pf, std::size_t pulse_index,
                            const SensorCode& sensor, const DecodeModel& model,
                            double sample_rate_hz, std::size_t record_len,
                            bool allow_clip) {
  return build_template_at(
      pf, pulse_index, sensor, model, sample_rate_hz, record_len, allow_clip,
      knn_speed(pf, model.training, model.k, model.standardize));
}

std::vector<std::vector<std::size_t>> segment_pulses(
    const std::vector<std::vector<CodeTemplate>>& candidates) {
  const std::size_t n = candidates.size();
  std::vector<std::vector<std::size_t>> clusters;
  if (n == 0) return clusters;

  // interval hull of each pulse's candidate spans
  std::vector<std::pair<std::size_t, std::size_t>> hulls(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t lo = std::numeric_limits<std::size_t>::max();
    std::size_t hi = 0;
    for (const auto& t : candidates[i]) {
      lo = std::min(lo, t.start_index);
      hi = std::max(hi, t.end_index());
    }
    hulls[i] = {lo, hi};
  }

  std::vector<std::size_t> current{0};
  std::size_t reach = hulls[0].second;
  for (std::size_t i = 1; i < n; ++i) {
    if (hulls[i].first < reach) {
      current.push_back(i);
    } else {
      clusters.push_back(std::move(current));
      current = {i};
    }
    reach = std::max(reach, hulls[i].second);
  }
  clusters.push_back(std::move(current));
  return clusters;
}

namespace {

// Shared precomputation for one cluster.
struct ClusterContext {
  std::size_t w0 = 0, w1 = 0;          // window on the record grid
  std::vector<char> mask;              // union of candidate supports
  std::vector<double> y;               // observed code channel in the window
  std::size_t support_count = 0;
  double yy = 0;                       // sum y^2 over masked samples
  std::vector<std::size_t> pulses;     // cluster members, chronological
  const std::vector<std::vector<CodeTemplate>>* candidates = nullptr;

  const std::vector<CodeTemplate>& cand(std::size_t m) const {
    return (*candidates)[pulses[m]];
  }
};

ClusterContext make_context(const std::vector<std::size_t>& cluster,
                            const std::vector<std::vector<CodeTemplate>>& candidates,
                            std::span<const double> code_channel) {
  if (cluster.empty()) throw std::invalid_argument("empty cluster");
  ClusterContext ctx;
  ctx.pulses = cluster;
  ctx.candidates = &candidates;
  std::size_t lo = std::numeric_limits<std::size_t>::max();
  std::size_t hi = 0;
  for (std::size_t p : cluster) {
    if (candidates[p].empty())
      throw std::invalid_argument("pulse without candidate templates");
    for (const auto& t : candidates[p]) {
      lo = std::min(lo, t.start_index);
      hi = std::max(hi, t.end_index());
    }
  }
  hi = std::min(hi, code_channel.size());
  ctx.w0 = lo;
  ctx.w1 = std::max(hi, lo);
  ctx.mask.assign(ctx.w1 - ctx.w0, 0);
  for (std::size_t p : cluster)
    for (const auto& t : candidates[p])
      for (std::size_t i = t.start_index; i < std::min(t.end_index(), ctx.w1); ++i)
        ctx.mask[i - ctx.w0] = 1;
  ctx.y.assign(code_channel.begin() + long(ctx.w0),
               code_channel.begin() + long(ctx.w1));
  for (std::size_t i = 0; i < ctx.mask.size(); ++i)
    if (ctx.mask[i]) {
      ++ctx.support_count;
      ctx.yy += ctx.y[i] * ctx.y[i];
    }
  return ctx;
}

double dot_template_y(const CodeTemplate& t, const ClusterContext& ctx) {
  double acc = 0;
  const std::size_t end = std::min(t.end_index(), ctx.w1);
  for (std::size_t i = t.start_index; i < end; ++i)
    acc += t.samples[i - t.start_index] * ctx.y[i - ctx.w0];
  return acc;
}

double dot_templates(const CodeTemplate& a, const CodeTemplate& b,
                     std::size_t w1) {
  const std::size_t lo = std::max(a.start_index, b.start_index);
  const std::size_t hi = std::min({a.end_index(), b.end_index(), w1});
  double acc = 0;
  for (std::size_t i = lo; i < hi; ++i)
    acc += a.samples[i - a.start_index] * b.samples[i - b.start_index];
  return acc;
}

}  // namespace

Assignment mmse_exhaustive(const std::vector<std::size_t>& cluster,
                           const std::vector<std::vector<CodeTemplate>>& candidates,
                           std::span<const double> code_channel) {
  ClusterContext ctx = make_context(cluster, candidates, code_channel);
  const std::size_t n = ctx.pulses.size();

  // Gram-matrix decomposition: sse = yy + sum_i (tt_i - 2 ty_i)
  //                                  + 2 sum_{i<j} <t_i, t_j>
  std::vector<std::vector<double>> lin(n);  // tt - 2*ty per (pulse, sensor)
  for (std::size_t m = 0; m < n; ++m) {
    for (const auto& t : ctx.cand(m))
      lin[m].push_back(dot_templates(t, t, ctx.w1) - 2 * dot_template_y(t, ctx));
  }
  // cross[m][s][m2][s2] for m2 < m, flattened
  std::vector<std::vector<std::vector<std::vector<double>>>> cross(n);
  for (std::size_t m = 1; m < n; ++m) {
    cross[m].resize(ctx.cand(m).size());
    for (std::size_t s = 0; s < ctx.cand(m).size(); ++s) {
      cross[m][s].resize(m);
      for (std::size_t m2 = 0; m2 < m; ++m2) {
        cross[m][s][m2].resize(ctx.cand(m2).size());
        for (std::size_t s2 = 0; s2 < ctx.cand(m2).size(); ++s2)
          cross[m][s][m2][s2] =
              dot_templates(ctx.cand(m)[s], ctx.cand(m2)[s2], ctx.w1);
      }
    }
  }

  std::vector<std::size_t> choice(n, 0);
  std::vector<std::size_t> best_choice;
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> partial(n + 1, 0.0);

  // DFS in lexicographic sensor order; strict improvement keeps the
  // lexicographically smallest among ties.
  std::size_t m = 0;
  choice[0] = 0;
  while (true) {
    if (choice[m] < ctx.cand(m).size()) {
      double cost = partial[m] + lin[m][choice[m]];
      for (std::size_t m2 = 0; m2 < m; ++m2)
        cost += 2 * cross[m][choice[m]][m2][choice[m2]];
      if (m + 1 == n) {
        if (cost < best) {
          best = cost;
          best_choice.assign(choice.begin(), choice.end());
        }
        ++choice[m];
      } else {
        partial[m + 1] = cost;
        ++m;
        choice[m] = 0;
      }
    } else {
      if (m == 0) break;
      --m;
      ++choice[m];
    }
  }

  Assignment a;
  a.exhaustive = true;
  for (std::size_t i = 0; i < n; ++i)
    a.sensor_ids.push_back(ctx.cand(i)[best_choice[i]].sensor_id);
  a.mse = (ctx.yy + best) / double(std::max<std::size_t>(ctx.support_count, 1));
  return a;
}

namespace {

struct BeamState {
  std::vector<std::size_t> choice;
  std::vector<double> recon;  // reconstruction over the window
  double score = 0;
};

bool lex_less(const std::vector<int>& a, const std::vector<int>& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

}  // namespace

Assignment mmse_beam(const std::vector<std::size_t>& cluster,
                     const std::vector<std::vector<CodeTemplate>>& candidates,
                     std::span<const double> code_channel, int beam_width) {
  if (beam_width < 1) throw std::invalid_argument("beam width must be >= 1");
  ClusterContext ctx = make_context(cluster, candidates, code_channel);
  const std::size_t n = ctx.pulses.size();
  const std::size_t win = ctx.w1 - ctx.w0;

  // earliest candidate start per pulse, for the partial-score boundary
  std::vector<std::size_t> earliest(n);
  for (std::size_t m = 0; m < n; ++m) {
    std::size_t lo = ctx.w1;
    for (const auto& t : ctx.cand(m)) lo = std::min(lo, t.start_index);
    earliest[m] = lo;
  }

  auto sse_prefix = [&](const std::vector<double>& recon, std::size_t bound) {
    double acc = 0;
    const std::size_t end = std::min(bound > ctx.w0 ? bound - ctx.w0 : 0, win);
    for (std::size_t i = 0; i < end; ++i) {
      if (!ctx.mask[i]) continue;
      const double d = ctx.y[i] - recon[i];
      acc += d * d;
    }
    return acc;
  };

  std::vector<BeamState> beam(1);
  beam[0].recon.assign(win, 0.0);

  for (std::size_t m = 0; m < n; ++m) {
    // samples later than this cannot be explained yet
    std::size_t bound = ctx.w1;
    for (std::size_t m2 = m + 1; m2 < n; ++m2)
      bound = std::min(bound, earliest[m2]);

    std::vector<BeamState> next;
    next.reserve(beam.size() * ctx.cand(m).size());
    for (const auto& st : beam) {
      for (std::size_t s = 0; s < ctx.cand(m).size(); ++s) {
        BeamState ns;
        ns.choice = st.choice;
        ns.choice.push_back(s);
        ns.recon = st.recon;
        const auto& t = ctx.cand(m)[s];
        const std::size_t end = std::min(t.end_index(), ctx.w1);
        for (std::size_t i = t.start_index; i < end; ++i)
          ns.recon[i - ctx.w0] += t.samples[i - t.start_index];
        ns.score = sse_prefix(ns.recon, bound);
        next.push_back(std::move(ns));
      }
    }

    auto state_less = [&](const BeamState& a, const BeamState& b) {
      if (a.score != b.score) return a.score < b.score;
      for (std::size_t i = 0; i < a.choice.size(); ++i) {
        const int sa = ctx.cand(i)[a.choice[i]].sensor_id;
        const int sb = ctx.cand(i)[b.choice[i]].sensor_id;
        if (sa != sb) return sa < sb;
      }
      return false;
    };
    std::sort(next.begin(), next.end(), state_less);

    if (m + 1 < n && next.size() > std::size_t(beam_width)) {
      // keep exact ties with the last retained state so equal-score
      // prefixes are never pruned arbitrarily
      std::size_t keep = std::size_t(beam_width);
      const double cut = next[keep - 1].score;
      const double eps = 1e-12 * std::max(1.0, std::abs(cut));
      while (keep < next.size() && next[keep].score <= cut + eps) ++keep;
      next.resize(keep);
    }
    beam = std::move(next);
  }

  // final ranking by full-support SSE
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> best_ids;
  for (const auto& st : beam) {
    const double sse = sse_prefix(st.recon, ctx.w1);
    std::vector<int> ids;
    ids.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
      ids.push_back(ctx.cand(i)[st.choice[i]].sensor_id);
    if (sse < best || (sse == best && lex_less(ids, best_ids))) {
      best = sse;
      best_ids = std::move(ids);
    }
  }

  Assignment a;
  a.exhaustive = false;
  a.sensor_ids = std::move(best_ids);
  a.mse = best / double(std::max<std::size_t>(ctx.support_count, 1));
  return a;
}

Assignment mmse_assign(const std::vector<std::size_t>& cluster,
                       const std::vector<std::vector<CodeTemplate>>& candidates,
                       std::span<const double> code_channel, int n_exact,
                       int beam_width) {
  if (cluster.size() <= std::size_t(n_exact))
    return mmse_exhaustive(cluster, candidates, code_channel);
  return mmse_beam(cluster, candidates, code_channel, beam_width);
}

DecodeResult decode_record(const SignalRecord& record, const DecodeModel& model) {
  DecodeResult res;
  const auto& opt = model.features;
  const auto pre = opt.smooth_window > 1
                       ? moving_average(record.pre_channel, opt.smooth_window)
                       : record.pre_channel;
  const double thr = opt.threshold_v > 0 ? opt.threshold_v : auto_threshold(pre);
  const auto peaks =
      detect_pulses(pre, record.sample_rate_hz, thr, opt.min_separation_s);

  std::vector<PulseFeatures> feats;
  feats.reserve(peaks.size());
  for (std::size_t p : peaks)
    feats.push_back(extract_features(pre, record.sample_rate_hz, p,
                                     opt.smooth_window > 1
                                         ? std::span<const double>(record.pre_channel)
                                         : std::span<const double>{}));

  // flag unresolved pre-pulse overlaps rather than guessing
  for (std::size_t i = 0; i + 1 < feats.size(); ++i) {
    const double right_i = feats[i].t_peak_s + feats[i].x4_s / 2;
    const double left_j = feats[i + 1].t_peak_s - feats[i + 1].x4_s / 2;
    if (left_j < right_i)
      res.warnings.push_back("pre-pulse overlap between pulses " +
                             std::to_string(i) + " and " + std::to_string(i + 1));
  }

  // One pulse's candidate row: the nearest-neighbor speed seeds a small
  // matched search, and each template gets a least-squares gain against the
  // target channel. The gain scales the match only; the reported amplitude
  // stays the pre-pulse peak, which is exact on clean data.
  const auto build_row = [&](std::size_t i, std::span<const double> target) {
    std::vector<CodeTemplate> row;
    const double base_speed =
        knn_speed(feats[i], model.training, model.k, model.standardize);
    for (const auto& code : model.book.codes) {
      CodeTemplate best;
      double best_score = -1, best_ty = 0, best_tt = 0;
      for (int step = -5; step <= 5; ++step) {
        auto tpl = build_template_at(feats[i], i, code, model,
                                     record.sample_rate_hz, record.size(),
                                     /*allow_clip=*/true,
                                     base_speed * (1.0 + 0.02 * step));
        double ty = 0, tt = 0;
        for (std::size_t s = 0; s < tpl.samples.size(); ++s) {
          ty += tpl.samples[s] * target[tpl.start_index + s];
          tt += tpl.samples[s] * tpl.samples[s];
        }
        const double score = tt > 0 ? ty * ty / tt : 0;
        if (score > best_score) {
          best_score = score;
          best_ty = ty;
          best_tt = tt;
          best = std::move(tpl);
        }
      }
      if (best_tt > 0) {
        const double g = std::clamp(best_ty / best_tt, 0.3, 3.0);
        for (auto& s : best.samples) s *= g;
      }
      row.push_back(std::move(best));
    }
    return row;
  };

  std::vector<std::vector<CodeTemplate>> candidates(feats.size());
  bool any_clipped = false;
  for (std::size_t i = 0; i < feats.size(); ++i) {
    candidates[i] = build_row(i, record.code_channel);
    for (const auto& t : candidates[i]) any_clipped = any_clipped || t.clipped;
  }
  if (any_clipped)
    res.warnings.push_back("one or more candidate templates clipped at record end");

  if (!feats.empty()) {
    res.clusters = segment_pulses(candidates);
    std::vector<Assignment> assigns;
    for (const auto& cluster : res.clusters)
      assigns.push_back(mmse_assign(cluster, candidates, record.code_channel,
                                    model.n_exact, model.beam_width));

    // Overlapping neighbors leak energy into each other's gain fits; refit
    // each pulse against the residual left by its cluster-mates' current
    // assignments, then re-assign. Two rounds settle in practice.
    for (int round = 0; round < 2; ++round) {
      for (std::size_t c = 0; c < res.clusters.size(); ++c) {
        const auto& cluster = res.clusters[c];
        if (cluster.size() < 2) continue;
        for (std::size_t ci = 0; ci < cluster.size(); ++ci) {
          std::vector<double> residual(record.code_channel.begin(),
                                       record.code_channel.end());
          for (std::size_t cj = 0; cj < cluster.size(); ++cj) {
            if (cj == ci) continue;
            const std::size_t q = cluster[cj];
            for (const auto& t : candidates[q])
              if (t.sensor_id == assigns[c].sensor_ids[cj]) {
                for (std::size_t s = 0; s < t.samples.size(); ++s)
                  residual[t.start_index + s] -= t.samples[s];
                break;
              }
          }
          candidates[cluster[ci]] = build_row(cluster[ci], residual);
        }
        assigns[c] = mmse_assign(cluster, candidates, record.code_channel,
                                 model.n_exact, model.beam_width);
      }
    }

    for (std::size_t c = 0; c < res.clusters.size(); ++c) {
      const auto& cluster = res.clusters[c];
      const Assignment& a = assigns[c];
      res.exhaustive.push_back(a.exhaustive);
      for (std::size_t i = 0; i < cluster.size(); ++i) {
        const std::size_t p = cluster[i];
        DecodedEvent ev;
        ev.pulse_index = p;
        ev.sensor_id = a.sensor_ids[i];
        ev.t_peak_s = feats[p].t_peak_s;
        // sensor ids are list positions in book order
        for (const auto& t : candidates[p])
          if (t.sensor_id == ev.sensor_id) {
            ev.est_speed_um_s = t.est_speed_um_s;
            ev.est_amplitude_v = t.est_amplitude_v;
          }
        res.events.push_back(ev);
      }
    }
    std::sort(res.events.begin(), res.events.end(),
              [](const DecodedEvent& a, const DecodedEvent& b) {
                return a.t_peak_s < b.t_peak_s;
              });
  }

  // residual over the whole code channel
  std::vector<double> recon(record.size(), 0.0);
  for (const auto& ev : res.events) {
    for (const auto& t : candidates[ev.pulse_index]) {
      if (t.sensor_id != ev.sensor_id) continue;
      const std::size_t end = std::min(t.end_index(), record.size());
      for (std::size_t i = t.start_index; i < end; ++i)
        recon[i] += t.samples[i - t.start_index];
    }
  }
  double sse = 0;
  for (std::size_t i = 0; i < record.size(); ++i) {
    const double d = record.code_channel[i] - recon[i];
    sse += d * d;
  }
  res.total_mse = record.size() ? sse / double(record.size()) : 0.0;
  return res;
}

}  // namespace codesmux

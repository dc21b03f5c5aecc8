#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "helpers.hpp"

using namespace codesmux;
using namespace testutil;

TEST_CASE("estimate_scaling round trip at zero noise") {
  const CodeBook book = default_book(4, 5);
  SynthConfig cfg = default_synth(book, 0.02, 0.8);

  std::vector<LabeledRecord> records;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> sp(24000, 36000);
  for (const auto& c : book.codes)
    for (int i = 0; i < 5; ++i)
      records.push_back({c.sensor_id,
                         isolated_record(cfg, event(c.sensor_id, 0.004, sp(rng)))});

  const auto table = estimate_scaling(records, book);
  for (const auto& c : book.codes) {
    const auto& row = table.row(c.sensor_id);
    CHECK(row.n_events_used == 5);
    REQUIRE(row.factors.size() == c.bits.size());
    for (std::size_t k = 0; k < c.bits.size(); ++k) {
      if (c.bits[k])
        CHECK(row.factors[k] == doctest::Approx(0.8).epsilon(0.01));
      else
        CHECK(row.factors[k] == 0.0);
    }
  }
}

TEST_CASE("estimate_scaling per-bit factors") {
  // distinct factor per positive bit must come back per-bit, not averaged
  const CodeBook book = default_book(3, 5);
  SynthConfig cfg = default_synth(book, 0.02);
  for (auto& [id, row] : cfg.scaling.rows) {
    double f = 0.5;
    for (auto& v : row.factors) {
      if (v > 0) v = f;
      f += 0.15;
    }
  }

  std::vector<LabeledRecord> records;
  for (const auto& c : book.codes)
    records.push_back({c.sensor_id, isolated_record(cfg, event(c.sensor_id, 0.004))});

  const auto table = estimate_scaling(records, book);
  for (const auto& c : book.codes) {
    const auto& truth = cfg.scaling.row(c.sensor_id);
    const auto& est = table.row(c.sensor_id);
    for (std::size_t k = 0; k < c.bits.size(); ++k)
      CHECK(est.factors[k] == doctest::Approx(truth.factors[k]).epsilon(0.01));
  }
}

TEST_CASE("estimate_scaling is invariant to uniform amplitude scaling") {
  const CodeBook book = default_book(2, 5);
  const SynthConfig cfg = default_synth(book, 0.02);

  std::vector<LabeledRecord> base, scaled;
  for (const auto& c : book.codes) {
    auto rec = isolated_record(cfg, event(c.sensor_id, 0.004));
    auto big = rec;
    for (auto& v : big.pre_channel) v *= 3.0;
    for (auto& v : big.code_channel) v *= 3.0;
    base.push_back({c.sensor_id, std::move(rec)});
    scaled.push_back({c.sensor_id, std::move(big)});
  }
  const auto a = estimate_scaling(base, book);
  const auto b = estimate_scaling(scaled, book);
  for (const auto& c : book.codes)
    for (std::size_t k = 0; k < c.bits.size(); ++k)
      CHECK(a.row(c.sensor_id).factors[k] ==
            doctest::Approx(b.row(c.sensor_id).factors[k]));
}

TEST_CASE("estimate_scaling error paths") {
  const CodeBook book = default_book(2, 5);
  const SynthConfig cfg = default_synth(book, 0.02);
  SUBCASE("sensor with zero records") {
    std::vector<LabeledRecord> records{
        {1, isolated_record(cfg, event(1, 0.004))}};
    CHECK_THROWS(estimate_scaling(records, book));
  }
  SUBCASE("pulse count mismatch") {
    // label a record with a sensor whose popcount differs
    int a = 0, b = 0;
    for (const auto& c : book.codes)
      for (const auto& c2 : book.codes)
        if (c.popcount() != c2.popcount()) {
          a = c.sensor_id;
          b = c2.sensor_id;
        }
    if (a != 0) {
      std::vector<LabeledRecord> records{
          {a, isolated_record(cfg, event(b, 0.004))},
          {b, isolated_record(cfg, event(b, 0.004))}};
      CHECK_THROWS(estimate_scaling(records, book));
    }
  }
}

TEST_CASE("canonical_pulse_shape averages to the normalized pulse") {
  const CodeBook book = default_book();
  const SynthConfig cfg = default_synth(book);
  std::vector<SignalRecord> records;
  for (int i = 0; i < 6; ++i)
    records.push_back(
        isolated_record(cfg, event(1, 0.004, 24000 + 2000 * i, 0.05 + 0.02 * i)));

  const auto shape = canonical_pulse_shape(records, 64);
  REQUIRE(shape.size() == 64);
  const double peak = *std::max_element(shape.begin(), shape.end());
  CHECK(peak == doctest::Approx(1.0).epsilon(0.01));
  CHECK(shape.front() == doctest::Approx(0.25).epsilon(0.05));
  CHECK(shape.back() == doctest::Approx(0.25).epsilon(0.05));

  // single record reproduces its own normalized shape
  const auto single = canonical_pulse_shape({records[0]}, 64);
  const auto peaks = detect_pulses(records[0].pre_channel, cfg.sample_rate_hz,
                                   auto_threshold(records[0].pre_channel), 0);
  REQUIRE(peaks.size() == 1);
  const auto own = normalize_pulse(records[0].pre_channel, peaks[0], 64);
  for (std::size_t i = 0; i < 64; ++i)
    CHECK(single[i] == doctest::Approx(own[i]));

  CHECK_THROWS(canonical_pulse_shape({}, 64));
}

TEST_CASE("canonical_template_shape spans the full pulse") {
  const CodeBook book = default_book();
  const SynthConfig cfg = default_synth(book);
  const auto rec = isolated_record(cfg, event(1, 0.004));
  const auto shape = canonical_template_shape({rec}, 128);
  REQUIRE(shape.size() == 128);
  CHECK(*std::max_element(shape.begin(), shape.end()) ==
        doctest::Approx(1.0).epsilon(0.01));
  CHECK(shape.front() < 0.05);
  CHECK(shape.back() < 0.05);
}

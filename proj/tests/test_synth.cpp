#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "helpers.hpp"

using namespace codesmux;
using namespace testutil;

TEST_CASE("pulse_waveform basics") {
  const double fs = 50000;
  SUBCASE("zero amplitude") {
    const auto w = pulse_waveform(0.0, 0.005, 1e-3, fs, 500);
    CHECK(*std::max_element(w.begin(), w.end()) == 0.0);
  }
  SUBCASE("peak and support") {
    const auto w = pulse_waveform(1.0, 0.005, 1e-3, fs, 500);
    const double peak = *std::max_element(w.begin(), w.end());
    CHECK(peak == doctest::Approx(1.0).epsilon(0.005));
    int nonzero = 0;
    for (double v : w) nonzero += (v > 0);
    CHECK(nonzero >= 48);
    CHECK(nonzero <= 51);
  }
  SUBCASE("full width at half peak is T/2") {
    // closed form: Hann crosses 0.5 at T/4 either side of the peak
    const double T = 1e-3;
    const auto w = pulse_waveform(1.0, 0.005, T, fs, 500);
    std::size_t peak = std::size_t(
        std::max_element(w.begin(), w.end()) - w.begin());
    const auto f = extract_features(w, fs, peak);
    CHECK(f.x3_s == doctest::Approx(T / 2).epsilon(1.0 / (fs * T)));
  }
  CHECK_THROWS(pulse_waveform(1.0, 0.005, 0.0, fs, 100));
}

TEST_CASE("event_waveforms pulse layout") {
  const CodeBook book = default_book();
  SynthConfig cfg = default_synth(book, 0.02);
  // find the sensor with code 10011 if present, else use any 3-pulse code
  const auto e = event(1, 0.005, 30000, 0.1);
  const auto [pre, code] = event_waveforms(e, cfg);

  const auto pre_peaks = detect_pulses(pre, cfg.sample_rate_hz, 0.01, 0);
  REQUIRE(pre_peaks.size() == 1);

  const auto code_peaks = detect_pulses(code, cfg.sample_rate_hz, 0.01, 0);
  CHECK(int(code_peaks.size()) == book.find(1).popcount());

  // pre-to-first-code delay equals pre_offset / speed
  const double delay =
      (double(code_peaks[0]) - double(pre_peaks[0])) / cfg.sample_rate_hz;
  const double expected = book.geometry.pre_offset_um / e.speed_um_s;
  CHECK(delay == doctest::Approx(expected).epsilon(0.03));
  CHECK(expected == doctest::Approx(1.0e-3));
}

TEST_CASE("event_waveforms rejects unknown channel and missing scaling") {
  const CodeBook book = default_book();
  SynthConfig cfg = default_synth(book);
  CHECK_THROWS(event_waveforms(event(99, 0.005), cfg));
  cfg.scaling.rows.erase(3);
  CHECK_THROWS(event_waveforms(event(3, 0.005), cfg));
}

TEST_CASE("synthesize_record superposition and determinism") {
  const CodeBook book = default_book();
  SynthConfig cfg = default_synth(book, 0.03);

  const std::vector<ParticleEvent> A{event(1, 0.005), event(4, 0.012, 25000, 0.08)};
  const std::vector<ParticleEvent> B{event(7, 0.018, 35000, 0.12)};
  std::vector<ParticleEvent> AB = A;
  AB.insert(AB.end(), B.begin(), B.end());

  const auto ra = synthesize_record(A, cfg);
  const auto rb = synthesize_record(B, cfg);
  const auto rab = synthesize_record(AB, cfg);
  double max_diff = 0;
  for (std::size_t i = 0; i < rab.size(); ++i) {
    max_diff = std::max(max_diff, std::abs(rab.pre_channel[i] - ra.pre_channel[i] -
                                           rb.pre_channel[i]));
    max_diff = std::max(max_diff, std::abs(rab.code_channel[i] - ra.code_channel[i] -
                                           rb.code_channel[i]));
  }
  CHECK(max_diff <= 1e-12);

  SUBCASE("empty event list with zero noise is all zero") {
    const auto r0 = synthesize_record({}, cfg);
    CHECK(*std::max_element(r0.pre_channel.begin(), r0.pre_channel.end()) == 0.0);
    CHECK(*std::max_element(r0.code_channel.begin(), r0.code_channel.end()) == 0.0);
  }

  SUBCASE("noisy records are bit-identical for the same seed") {
    cfg.noise_sigma_v = 0.01;
    cfg.rng_seed = 7;
    const auto r1 = synthesize_record(A, cfg);
    const auto r2 = synthesize_record(A, cfg);
    CHECK(r1.pre_channel == r2.pre_channel);
    CHECK(r1.code_channel == r2.code_channel);
    cfg.rng_seed = 8;
    const auto r3 = synthesize_record(A, cfg);
    CHECK(r1.pre_channel != r3.pre_channel);
  }

  SUBCASE("event outside window throws") {
    CHECK_THROWS(synthesize_record({event(1, 0.029)}, cfg));
    CHECK_THROWS(synthesize_record({event(1, 0.0)}, cfg));
  }
}

TEST_CASE("pulse count on a ten-event record") {
  const CodeBook book = default_book();
  SynthConfig cfg = default_synth(book, 0.08);
  std::vector<ParticleEvent> events;
  int expected_code_pulses = 0;
  for (int i = 0; i < 10; ++i) {
    const int ch = 1 + (i % int(book.codes.size()));
    events.push_back(event(ch, 0.004 + 0.006 * i));
    expected_code_pulses += book.find(ch).popcount();
  }
  const auto rec = synthesize_record(events, cfg);
  const auto pre_peaks = detect_pulses(rec.pre_channel, cfg.sample_rate_hz, 0.01, 1e-4);
  CHECK(pre_peaks.size() == 10);
  const auto code_peaks = detect_pulses(rec.code_channel, cfg.sample_rate_hz, 0.01, 1e-4);
  CHECK(int(code_peaks.size()) == expected_code_pulses);
}

TEST_CASE("doubling speed halves inter-pulse delays") {
  const CodeBook book = default_book();
  SynthConfig cfg = default_synth(book, 0.03);
  for (double speed : {15000.0, 30000.0}) {
    const auto [pre, code] = event_waveforms(event(1, 0.01, speed), cfg);
    const auto pp = detect_pulses(pre, cfg.sample_rate_hz, 0.01, 0);
    const auto cp = detect_pulses(code, cfg.sample_rate_hz, 0.01, 0);
    REQUIRE(pp.size() == 1);
    REQUIRE(!cp.empty());
    const double delay = double(cp[0] - pp[0]) / cfg.sample_rate_hz;
    const double expected = book.geometry.pre_offset_um / speed;
    CHECK(std::abs(delay - expected) <= 1.0 / cfg.sample_rate_hz);
  }
}

TEST_CASE("random_scenario determinism and ranges") {
  const CodeBook book = default_book();
  ScenarioParams p;
  p.n_events = 10;
  p.window_s = 0.06;
  p.speed_min_um_s = 24000;
  p.speed_max_um_s = 36000;
  p.amp_min_v = 0.08;
  p.amp_max_v = 0.12;
  p.rng_seed = 123;

  const auto a = random_scenario(book, p);
  const auto b = random_scenario(book, p);
  REQUIRE(a.size() == 10);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].channel == b[i].channel);
    CHECK(a[i].t_arrival_s == b[i].t_arrival_s);
    CHECK(a[i].t_arrival_s >= 0);
    CHECK(a[i].t_arrival_s <= p.window_s);
    CHECK(a[i].speed_um_s >= p.speed_min_um_s);
    CHECK(a[i].speed_um_s <= p.speed_max_um_s);
    CHECK(a[i].amplitude_v >= p.amp_min_v);
    CHECK(a[i].amplitude_v <= p.amp_max_v);
  }
  p.n_events = 0;
  CHECK(random_scenario(book, p).empty());
}

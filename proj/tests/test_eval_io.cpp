#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "codesmux/io.hpp"
#include "helpers.hpp"

using namespace codesmux;
using namespace testutil;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("codesmux_test_" + std::to_string(std::rand()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

DecodeResult fake_result(const std::vector<int>& sensors) {
  DecodeResult res;
  for (std::size_t i = 0; i < sensors.size(); ++i) {
    DecodedEvent e;
    e.pulse_index = i;
    e.sensor_id = sensors[i];
    e.t_peak_s = 0.001 * double(i + 1);
    e.est_speed_um_s = 30000;
    e.est_amplitude_v = 0.1;
    res.events.push_back(e);
  }
  return res;
}

std::vector<ParticleEvent> truth_for(const std::vector<int>& channels) {
  std::vector<ParticleEvent> truth;
  for (std::size_t i = 0; i < channels.size(); ++i)
    truth.push_back({channels[i], 0.001 * double(i + 1), 30000, 0.1});
  return truth;
}

}  // namespace

TEST_CASE("score basics") {
  SUBCASE("identity") {
    const auto rep = score(fake_result({1, 2, 3}), truth_for({1, 2, 3}), 10);
    CHECK(rep.channel_accuracy == 1.0);
    CHECK(rep.speed_mae_um_s == 0.0);
    CHECK(rep.amplitude_mae_v == 0.0);
    CHECK(rep.n_events == 3);
  }
  SUBCASE("one wrong of ten") {
    std::vector<int> dec(10, 4), tru(10, 4);
    dec[7] = 5;
    const auto rep = score(fake_result(dec), truth_for(tru), 10);
    CHECK(rep.channel_accuracy == doctest::Approx(0.9));
  }
  SUBCASE("empty is vacuous accuracy 1") {
    const auto rep = score(fake_result({}), {}, 10);
    CHECK(rep.channel_accuracy == 1.0);
    CHECK(rep.n_events == 0);
  }
  SUBCASE("count mismatch warns and scores the prefix") {
    const auto rep = score(fake_result({1, 2}), truth_for({1, 2, 3}), 10);
    CHECK(rep.n_events == 2);
    CHECK(!rep.warnings.empty());
    CHECK(rep.channel_accuracy == 1.0);
  }
  SUBCASE("confusion totals equal event totals") {
    const auto rep = score(fake_result({1, 2, 2, 5}), truth_for({1, 2, 3, 4}), 5);
    int total = 0;
    for (const auto& row : rep.confusion)
      for (int v : row) total += v;
    CHECK(total == rep.n_events);
  }
}

TEST_CASE("run_experiment determinism and zero-noise accuracy") {
  const CodeBook book = default_book();
  ExperimentConfig cfg;
  cfg.book = book;
  cfg.scaling = ScalingTable::uniform(book, 0.8);
  cfg.noise_sigmas_v = {0.0, 0.002};
  cfg.event_counts = {2};
  cfg.trials = 4;
  cfg.seed = 31;
  cfg.window_s = 0.04;
  cfg.training_size = 100;
  cfg.k = 3;

  const auto a = run_experiment(cfg);
  const auto b = run_experiment(cfg);
  REQUIRE(a.cells.size() == 2);
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    CHECK(a.cells[i].accuracy_mean == b.cells[i].accuracy_mean);
    CHECK(a.cells[i].speed_mae_mean == b.cells[i].speed_mae_mean);
  }
  CHECK(a.cells[0].noise_sigma_v == 0.0);
  CHECK(a.cells[0].accuracy_mean == doctest::Approx(1.0));
  CHECK(a.trial_rows.size() == 2 * 4);
}

TEST_CASE("codebook file round trip") {
  TempDir dir;
  const CodeBook book = default_book();
  const auto path = dir.file("book.txt");
  write_codebook(book, path);
  const CodeBook back = read_codebook(path);
  REQUIRE(back.codes.size() == book.codes.size());
  for (std::size_t i = 0; i < book.codes.size(); ++i) {
    CHECK(back.codes[i].sensor_id == book.codes[i].sensor_id);
    CHECK(back.codes[i].bits == book.codes[i].bits);
  }
  CHECK(back.geometry.bit_pitch_um == book.geometry.bit_pitch_um);
  CHECK(back.geometry.pre_offset_um == book.geometry.pre_offset_um);
  CHECK(validate_codebook(back).ok());
}

TEST_CASE("signal file round trip preserves samples") {
  TempDir dir;
  const CodeBook book = default_book();
  SynthConfig cfg = default_synth(book, 0.01);
  cfg.noise_sigma_v = 0.005;
  cfg.rng_seed = 3;
  const auto rec = synthesize_record({event(1, 0.004)}, cfg);

  const auto path = dir.file("signal.csv");
  write_signal_csv(rec, path);
  const auto back = read_signal_csv(path);
  CHECK(back.sample_rate_hz == rec.sample_rate_hz);
  REQUIRE(back.size() == rec.size());
  for (std::size_t i = 0; i < rec.size(); ++i) {
    // 9 significant digits
    CHECK(back.pre_channel[i] ==
          doctest::Approx(rec.pre_channel[i]).epsilon(1e-9));
    CHECK(back.code_channel[i] ==
          doctest::Approx(rec.code_channel[i]).epsilon(1e-9));
  }
}

TEST_CASE("training and events CSV round trips") {
  TempDir dir;
  const CodeBook book = default_book();
  const auto scaling = ScalingTable::uniform(book, 0.8);
  const auto set = make_training_grid(book, scaling, 24000, 36000, 20, 0.1, 50000);

  const auto tpath = dir.file("train.csv");
  write_training_csv(set, tpath);
  const auto tback = read_training_csv(tpath);
  REQUIRE(tback.size() == set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    CHECK(tback.samples[i].speed_um_s ==
          doctest::Approx(set.samples[i].speed_um_s).epsilon(1e-9));
    CHECK(tback.samples[i].features.x3_s ==
          doctest::Approx(set.samples[i].features.x3_s).epsilon(1e-9));
  }

  const std::vector<ParticleEvent> events{event(3, 0.0123, 28500.5, 0.0987)};
  const auto epath = dir.file("events.csv");
  write_events_csv(events, epath);
  const auto eback = read_events_csv(epath);
  REQUIRE(eback.size() == 1);
  CHECK(eback[0].channel == 3);
  CHECK(eback[0].t_arrival_s == doctest::Approx(0.0123).epsilon(1e-9));
}

TEST_CASE("scaling file round trip with shape") {
  TempDir dir;
  const CodeBook book = default_book(3, 5);
  auto table = ScalingTable::uniform(book, 0.8);
  table.rows[2].factors[0] = 0.65;
  const std::vector<double> shape{0.0, 0.5, 1.0, 0.5, 0.0};

  const auto path = dir.file("scaling.txt");
  write_scaling(table, shape, path);
  const auto [tback, sback] = read_scaling(path);
  REQUIRE(tback.rows.size() == 3);
  CHECK(tback.row(2).factors[0] == doctest::Approx(0.65));
  CHECK(sback == shape);
}

TEST_CASE("json report writers emit parseable files") {
  TempDir dir;
  KSelectionReport rep;
  rep.k_star = 5;
  rep.in_sample_err = {0.0, 1.0};
  rep.out_sample_err = {2.0, 1.5};
  rep.repeats = 50;
  rep.rng_seed = 7;
  write_k_report_json(rep, dir.file("k.json"));
  write_k_curves_csv(rep, dir.file("k.csv"));
  write_decode_report_json(fake_result({1, 2}), dir.file("decode.json"));
  CHECK(std::filesystem::file_size(dir.file("k.json")) > 0);
  CHECK(std::filesystem::file_size(dir.file("k.csv")) > 0);
  CHECK(std::filesystem::file_size(dir.file("decode.json")) > 0);
}

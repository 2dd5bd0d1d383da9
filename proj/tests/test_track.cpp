#include <doctest.h>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>

#include "isac/rng.hpp"
#include "isac/track.hpp"
#include "test_util.hpp"
#include "track_fixtures.hpp"

using namespace isac;
using isac::test::detection;
using isac::test::raised;

namespace {

TrackerConfig default_config() { return TrackerConfig{}; }

TrackState state(double tau, double fd) {
  TrackState s;
  s.x << tau, fd;
  s.p = Eigen::Vector2d(1e-18, 25.0).asDiagonal();
  return s;
}

double min_eigen(const Eigen::Matrix2d& p) { return Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(p).eigenvalues()(0); }

}  // namespace

TEST_CASE("prediction couples delay to Doppler") {
  const double fc = 3.75e9;
  CHECK(predict(state(1e-6, 0.0), 0.1, fc, 1e4).x(0) == 1e-6);
  const auto s = predict(state(1000e-9, 375.0), 16.384e-3, fc, 1e4);
  CHECK(s.x(0) * 1e9 == doctest::Approx(998.3616).epsilon(1e-12));
  CHECK(s.x(1) == 375.0);
  CHECK(raised([&] { predict(state(0, 0), 0.0, fc, 1e4); }).kind == ErrorKind::Validation);
}

TEST_CASE("prediction composes over consecutive intervals") {
  const double fc = 3.75e9, q = 1e4;
  auto s0 = state(3e-7, -120.0);
  s0.p(0, 1) = s0.p(1, 0) = 1e-9;
  const auto two = predict(predict(s0, 0.013, fc, q), 0.029, fc, q);
  const auto one = predict(s0, 0.042, fc, q);
  CHECK(two.x(0) == doctest::Approx(one.x(0)).epsilon(1e-14));
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) CHECK(two.p(i, j) == doctest::Approx(one.p(i, j)).epsilon(1e-9));
  CHECK(min_eigen(one.p) > 0.0);
}

TEST_CASE("delay rate of a constant-velocity target equals -f_D / f_c") {
  const double fc = 3.75e9;
  Rng rng(12);
  for (int i = 0; i < 20; ++i) {
    const Vec3 tx(0, 0, 8), rx(rng.uniform(-50, 150), rng.uniform(-50, 150), rng.uniform(2, 40));
    const Vec3 p0(rng.uniform(0, 100), rng.uniform(0, 100), rng.uniform(10, 40));
    const Vec3 v(rng.uniform(-15, 15), rng.uniform(-15, 15), rng.uniform(-3, 3));
    const double t = 1.0, h = 1e-3;
    const double rate = (bistatic_delay(tx, p0 + v * (t + h), rx) - bistatic_delay(tx, p0 + v * (t - h), rx)) / (2 * h);
    const double fd = bistatic_doppler(tx, p0 + v * t, v, rx, fc);
    CHECK(rate == doctest::Approx(-fd / fc).epsilon(1e-6));
    // the filter's transition reproduces the same first-order step
    const auto s = predict(state(bistatic_delay(tx, p0 + v * t, rx), fd), h, fc, 1e4);
    CHECK((s.x(0) - bistatic_delay(tx, p0 + v * t, rx)) / h == doctest::Approx(-fd / fc).epsilon(1e-12));
  }
}

TEST_CASE("an in-gate update shrinks the covariance") {
  auto cfg = default_config();
  std::vector<TrackState> tracks = {state(500e-9, 100.0)};
  tracks[0].status = TrackStatus::Confirmed;
  const double trace = tracks[0].p.trace();
  const std::vector<Detection> dets = {detection(500.5e-9, 101.0, 20.0)};
  UpdateStats stats;
  const auto unused = associate_and_update(tracks, dets, cfg, &stats);
  CHECK(unused.empty());
  CHECK(tracks[0].p.trace() < trace);
  CHECK(min_eigen(tracks[0].p) > 0.0);
  CHECK(stats.nis.size() == 1);
}

TEST_CASE("an out-of-gate detection spawns a tentative track and the old one coasts") {
  auto cfg = default_config();
  std::vector<TrackState> tracks = {state(500e-9, 100.0)};
  tracks[0].id = 4;
  tracks[0].status = TrackStatus::Confirmed;
  const std::vector<Detection> dets = {detection(900e-9, -800.0, 20.0)};
  const auto unused = associate_and_update(tracks, dets, cfg);
  REQUIRE(tracks.size() == 2);
  CHECK(unused.size() == 1);
  CHECK(tracks[0].status == TrackStatus::Coasting);
  CHECK(tracks[1].status == TrackStatus::Tentative);
  CHECK(tracks[1].id == 5);
}

TEST_CASE("no detections means no tracks") {
  std::vector<CpiDetections> stream;
  for (int n = 0; n < 10; ++n) stream.push_back({n, 0.1 * n + 0.1, {}});
  CHECK(run_tracker(stream, default_config()).empty());
}

TEST_CASE("periodic single dropouts do not fragment the track") {
  auto cfg = default_config();
  const auto stream = isac::test::bistatic_pass(cfg, 60, 0.05, 20.0, [](int n) { return n % 6 != 5; }, 3);
  const auto tracks = run_tracker(stream, cfg);
  REQUIRE(tracks.size() == 1);
  CHECK(tracks[0].history.front().cpi_index == 0);
  CHECK(tracks[0].history.back().cpi_index == 59);
}

TEST_CASE("five consecutive misses are bridged by coasting") {
  auto cfg = default_config();
  const auto stream = isac::test::bistatic_pass(cfg, 30, 0.05, 20.0, [](int n) { return n < 10 || n >= 15; }, 4);
  const auto tracks = run_tracker(stream, cfg);
  REQUIRE(tracks.size() == 1);
  int coasting = 0;
  for (const auto& p : tracks[0].history) coasting += p.status == TrackStatus::Coasting;
  CHECK(coasting == 5);
  CHECK(tracks[0].history.back().status == TrackStatus::Confirmed);
}

TEST_CASE("a track dead after max_coast misses is never revived") {
  auto cfg = default_config();
  const auto stream = isac::test::bistatic_pass(cfg, 30, 0.05, 20.0, [](int n) { return n < 10 || n >= 16; }, 5);
  Tracker tracker(cfg);
  for (const auto& c : stream) tracker.step(c.cpi_index, c.time_s, c.detections);
  const auto& first = tracker.tracks().front();
  CHECK(first.status == TrackStatus::Dead);
  CHECK(first.history.back().cpi_index == 15);
  CHECK(tracker.tracks().size() == 2);
}

TEST_CASE("two well separated targets keep their identities") {
  auto cfg = default_config();
  auto a = isac::test::bistatic_pass(cfg, 40, 0.05, 20.0, [](int) { return true; }, 6);
  const auto b = isac::test::bistatic_pass(cfg, 40, 0.05, 20.0, [](int) { return true; }, 7, Vec3(20, 90, 30),
                                           Vec3(-8, 0, 0));
  for (std::size_t n = 0; n < a.size(); ++n) a[n].detections.push_back(b[n].detections[0]);
  const auto tracks = run_tracker(a, cfg);
  REQUIRE(tracks.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    const int column = i == 0 ? 0 : 1;
    for (const auto& p : tracks[i].history) {
      const auto& d = a[static_cast<std::size_t>(p.cpi_index)].detections[static_cast<std::size_t>(column)];
      CHECK(std::abs(p.x(0) - d.delay_s) < 2e-9);
    }
  }
}

TEST_CASE("out-of-order CPIs are rejected") {
  Tracker tracker(default_config());
  tracker.step(3, 0.3, {});
  CHECK(raised([&] { tracker.step(3, 0.4, {}); }).kind == ErrorKind::Validation);
  CHECK(raised([&] { tracker.step(4, 0.3, {}); }).kind == ErrorKind::Validation);
}

TEST_CASE("normalized innovations are consistent on matched data") {
  auto cfg = default_config();
  const double dt = 16.384e-3, snr_db = 20.0;
  Rng rng(21);
  const Eigen::Matrix2d q = process_noise(dt, cfg.f_c, cfg.q_doppler);
  const Eigen::Matrix2d lq = q.llt().matrixL();
  Eigen::Vector2d x(400e-9, 150.0);
  const auto r = measurement_noise(detection(0, 0, snr_db), cfg);
  Tracker tracker(cfg);
  for (int n = 0; n < 400; ++n) {
    if (n > 0) x = transition(dt, cfg.f_c) * x + lq * Eigen::Vector2d(rng.normal(), rng.normal());
    auto d = detection(x(0) + std::sqrt(r(0, 0)) * rng.normal(), x(1) + std::sqrt(r(1, 1)) * rng.normal(), snr_db);
    tracker.step(n, n * dt, std::vector<Detection>{d});
  }
  const auto& nis = tracker.stats().nis;
  REQUIRE(nis.size() >= 200);
  double mean = 0.0;
  for (double v : nis) mean += v;
  mean /= static_cast<double>(nis.size());
  CHECK(mean >= 1.6);
  CHECK(mean <= 2.4);
}

TEST_CASE("measurement noise follows the SNR with a floor") {
  auto cfg = default_config();
  const auto r20 = measurement_noise(detection(0, 0, 20.0), cfg);
  CHECK(std::sqrt(r20(0, 0)) == doctest::Approx(cfg.delay_bin / 16.0));
  CHECK(std::sqrt(r20(1, 1)) == doctest::Approx(cfg.doppler_bin / 16.0));
  const auto r60 = measurement_noise(detection(0, 0, 60.0), cfg);
  CHECK(std::sqrt(r60(0, 0)) == doctest::Approx(cfg.min_sigma_bins * cfg.delay_bin));
}

TEST_CASE("tracker config validation") {
  auto cfg = default_config();
  cfg.gate_chi2 = 3.0;
  CHECK(raised([&] { cfg.validate(); }).kind == ErrorKind::Validation);
  cfg = default_config();
  cfg.confirm_m = 5;
  CHECK(raised([&] { cfg.validate(); }).kind == ErrorKind::Validation);
}

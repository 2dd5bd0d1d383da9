#include <doctest.h>

#include <cmath>
#include <numbers>

#include "isac/rng.hpp"
#include "isac/scene.hpp"
#include "test_util.hpp"

using namespace isac;
using isac::test::raised;

namespace {
constexpr double c = kSpeedOfLight;
}

TEST_CASE("position_at interpolates linearly and is exact at samples") {
  Trajectory t("pass", {{0.0, Vec3(0, 0, 0)}, {10.0, Vec3(100, 0, 0)}});
  CHECK((position_at(t, 5.0) - Vec3(50, 0, 0)).norm() == 0.0);
  CHECK(position_at(t, 0.0) == Vec3(0, 0, 0));
  CHECK(position_at(t, 10.0) == Vec3(100, 0, 0));

  Trajectory level("level", {{0.0, Vec3(0, 0, 30)}, {10.0, Vec3(100, 0, 30)}});
  CHECK((velocity_at(level, 3.0) - Vec3(10, 0, 0)).norm() < 1e-12);
  // closed-form line p0 + v t
  const Vec3 expected = Vec3(0, 0, 30) + 2.5 * Vec3(10, 0, 0);
  CHECK((position_at(level, 2.5) - expected).norm() < 1e-12);
}

TEST_CASE("position_at outside the trajectory span is a range error naming it") {
  Trajectory t("vtol", {{0.0, Vec3(0, 0, 0)}, {10.0, Vec3(100, 0, 0)}});
  const auto r = raised([&] { position_at(t, 10.5); });
  REQUIRE(r.kind == ErrorKind::Range);
  CHECK(isac::test::contains(r.message, "vtol"));
  CHECK(raised([&] { position_at(t, -0.1); }).kind == ErrorKind::Range);
  auto fixed = Trajectory::stationary("mast", Vec3(1, 2, 3));
  CHECK(position_at(fixed, 1e6) == Vec3(1, 2, 3));
}

TEST_CASE("trajectory construction rejects unordered or non-finite samples") {
  CHECK(raised([] { Trajectory("t", {{1.0, Vec3::Zero()}, {1.0, Vec3::Ones()}}); }).kind == ErrorKind::Validation);
  CHECK(raised([] { Trajectory("t", {{0.0, Vec3(NAN, 0, 0)}}); }).kind == ErrorKind::Validation);
  CHECK(raised([] { Trajectory("t", {}); }).kind == ErrorKind::Validation);
}

TEST_CASE("los_delay") {
  CHECK(los_delay(Vec3(0, 0, 10), Vec3(100, 0, 10)) * 1e9 == doctest::Approx(333.5641).epsilon(1e-7));
  CHECK(los_delay(Vec3(0, 0, 0), Vec3(0, 0, 299.792458)) == doctest::Approx(1e-6).epsilon(1e-14));
  CHECK(los_delay(Vec3(0, 0, 0), Vec3(3, 4, 0)) == doctest::Approx(5.0 / c).epsilon(1e-15));
  CHECK(raised([] { los_delay(Vec3(1, 1, 1), Vec3(1, 1, 1)); }).kind == ErrorKind::Degenerate);
}

TEST_CASE("bistatic_delay") {
  CHECK(bistatic_delay(Vec3(0, 0, 0), Vec3(50, 0, 20), Vec3(100, 0, 0)) * 1e9 ==
        doctest::Approx(359.2595).epsilon(1e-6));
  CHECK(bistatic_delay(Vec3(0, 0, 0), Vec3(50, 0, 20), Vec3(100, 0, 0)) ==
        doctest::Approx(2.0 * std::sqrt(2900.0) / c).epsilon(1e-14));
  CHECK(bistatic_delay(Vec3(0, 0, 0), Vec3(50, 0, 0), Vec3(100, 0, 0)) ==
        doctest::Approx(los_delay(Vec3(0, 0, 0), Vec3(100, 0, 0))).epsilon(1e-15));
  CHECK(bistatic_delay(Vec3(0, 0, 0), Vec3(0, 0, 50), Vec3(0, 0, 0)) == doctest::Approx(100.0 / c).epsilon(1e-15));
  CHECK(raised([] { bistatic_delay(Vec3(0, 0, 0), Vec3(0, 0, 0), Vec3(1, 0, 0)); }).kind == ErrorKind::Degenerate);
}

TEST_CASE("bistatic_doppler") {
  const double fc = 3.75e9;
  CHECK(std::abs(bistatic_doppler(Vec3(0, 0, 0), Vec3(50, 0, 20), Vec3(10, 0, 0), Vec3(100, 0, 0), fc)) < 1e-9);
  // range rate: -10 (toward tx) + (-10)(50/sqrt(12500)) ... computed by hand as -14.4721 m/s
  const double fd = bistatic_doppler(Vec3(0, 0, 0), Vec3(0, 50, 0), Vec3(0, -10, 0), Vec3(100, 0, 0), fc);
  CHECK(fd == doctest::Approx(181.03).epsilon(2e-5));
  const double range_rate = -10.0 - 10.0 * 50.0 / std::sqrt(100.0 * 100.0 + 50.0 * 50.0);
  CHECK(fd == doctest::Approx(-range_rate * fc / c).epsilon(1e-12));
  CHECK(bistatic_doppler(Vec3(0, 0, 0), Vec3(0, 50, 0), Vec3::Zero(), Vec3(100, 0, 0), fc) == 0.0);
}

TEST_CASE("bistatic_doppler equals the negative range-rate derivative of the bistatic delay") {
  Rng rng(3);
  const double fc = 3.75e9;
  for (int i = 0; i < 50; ++i) {
    const Vec3 tx(rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(0, 30));
    const Vec3 rx(rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(0, 30));
    const Vec3 tgt(rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(40, 80));
    const Vec3 v(rng.uniform(-20, 20), rng.uniform(-20, 20), rng.uniform(-5, 5));
    const double h = 1e-4;
    const double dtau = (bistatic_delay(tx, tgt + h * v, rx) - bistatic_delay(tx, tgt - h * v, rx)) / (2 * h);
    const double fd = bistatic_doppler(tx, tgt, v, rx, fc);
    CHECK(-fd / fc == doctest::Approx(dtau).epsilon(1e-6));
  }
}

TEST_CASE("antenna_gain") {
  AntennaPattern omni;
  CHECK(antenna_gain(omni, Vec3(0.3, -2, 5)) == 0.0);
  AntennaPattern dir{AntennaKind::Directional, Vec3(1, 0, 0), 40.0};
  CHECK(antenna_gain(dir, Vec3(1, 0, 0)) == doctest::Approx(0.0));
  const double th = 20.0 * std::numbers::pi / 180.0;
  CHECK(antenna_gain(dir, Vec3(std::cos(th), std::sin(th), 0)) == doctest::Approx(-10.0).epsilon(1e-12));
  CHECK(antenna_gain(dir, Vec3(-1, 0, 0)) == -30.0);
  CHECK(raised([&] { antenna_gain(dir, Vec3::Zero()); }).kind == ErrorKind::Degenerate);
}

TEST_CASE("delays are invariant under a common translation") {
  const Vec3 off(123.4, -56.7, 8.9);
  const Vec3 tx(0, 0, 8), tgt(30, 40, 20), rx(60, -5, 2);
  CHECK(bistatic_delay(tx + off, tgt + off, rx + off) == doctest::Approx(bistatic_delay(tx, tgt, rx)).epsilon(1e-13));
  Trajectory t("p", {{0.0, Vec3(0, 0, 0)}, {4.0, Vec3(8, 4, 0)}});
  CHECK((position_at(t.shifted(off), 1.0) - (position_at(t, 1.0) + off)).norm() < 1e-12);
}

#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "isac/scenario.hpp"
#include "test_util.hpp"

using namespace isac;
using isac::test::contains;
using isac::test::raised;
using nlohmann::json;

namespace {

json demo_json() { return scenario_to_json(demo_scenario()); }

// Expects a validation error whose message starts with the field path.
void expect_path(const json& j, const std::string& path) {
  const auto r = raised([&] { scenario_from_json(j); });
  REQUIRE(r.kind == ErrorKind::Validation);
  CHECK_MESSAGE(r.message.rfind(path, 0) == 0, r.message);
}

}  // namespace

TEST_CASE("demo scenario matches the campaign layout") {
  const auto s = demo_scenario();
  CHECK(s.signal.bandwidth == 80e6);
  CHECK(s.signal.f_c == 3.75e9);
  CHECK(s.receivers().size() == 4);
  CHECK(s.node("tx_roof").eirp_dbm == 46.0);
  int airborne = 0;
  for (const auto* r : s.receivers()) airborne += position_at(r->trajectory, 0.0).z() > 20.0;
  CHECK(airborne == 3);
  REQUIRE(s.targets.size() == 1);
  CHECK(s.targets[0].rcs_dbsm == -3.0);
  CHECK(velocity_at(s.targets[0].trajectory, 5.0).norm() == doctest::Approx(10.0));
  CHECK((position_at(s.targets[0].trajectory, 10.0) - position_at(s.targets[0].trajectory, 0.0)).norm() ==
        doctest::Approx(100.0));
  CHECK_FALSE(s.clutter.empty());
}

TEST_CASE("scenario JSON round trip") {
  const auto j = demo_json();
  const auto s = scenario_from_json(j);
  CHECK(scenario_to_json(s) == j);
  CHECK(s.schedule.size() == demo_scenario().schedule.size());
}

TEST_CASE("schedule repeat expands into windows") {
  auto j = demo_json();
  j["schedule"] = json::array({{{"tx", "tx_roof"}, {"start_s", 0.5}, {"repeat", 3}, {"period_s", 1.0}}});
  const auto s = scenario_from_json(j);
  REQUIRE(s.schedule.size() == 3);
  CHECK(s.schedule[2].start_s == 2.5);
}

TEST_CASE("cross-reference violations name the field") {
  SUBCASE("unknown clock") {
    auto j = demo_json();
    j["nodes"][2]["clock"] = "clk_missing";
    expect_path(j, "nodes[2].clock");
  }
  SUBCASE("duplicate node id") {
    auto j = demo_json();
    j["nodes"][3]["id"] = j["nodes"][1]["id"];
    expect_path(j, "nodes[3].id");
  }
  SUBCASE("clutter on a transmitter") {
    auto j = demo_json();
    j["clutter"][1]["rx"] = "tx_roof";
    expect_path(j, "clutter[1].rx");
  }
  SUBCASE("clutter on an unknown node") {
    auto j = demo_json();
    j["clutter"][0]["rx"] = "nobody";
    expect_path(j, "clutter[0].rx");
  }
  SUBCASE("schedule names a receiver") {
    auto j = demo_json();
    j["schedule"][4]["tx"] = "rx_uav1";
    expect_path(j, "schedule[4].tx");
  }
  SUBCASE("overlapping windows are listed") {
    auto j = demo_json();
    j["schedule"][1]["start_s"] = j["schedule"][0]["start_s"].get<double>() + 1e-4;
    const auto r = raised([&] { scenario_from_json(j); });
    REQUIRE(r.kind == ErrorKind::Validation);
    CHECK(contains(r.message, "schedule[0] overlaps schedule[1]"));
  }
  SUBCASE("target trajectory too short for the schedule") {
    auto j = demo_json();
    j["targets"][0]["trajectory"][1]["t"] = 5.0;
    expect_path(j, "targets[0].trajectory");
  }
  SUBCASE("clutter beyond the symbol") {
    auto j = demo_json();
    j["clutter"][0]["delay_s"] = 20e-6;
    expect_path(j, "clutter[0].delay_s");
  }
  SUBCASE("bandwidth inconsistent with the subcarriers") {
    auto j = demo_json();
    j["signal"]["bandwidth_hz"] = 79e6;
    expect_path(j, "signal");
  }
  SUBCASE("out-of-range processing values") {
    auto j = demo_json();
    j["processing"]["alpha"] = 1.0;
    expect_path(j, "processing.alpha");
    j = demo_json();
    j["processing"]["cfar"]["pfa"] = 0.5;
    expect_path(j, "processing.cfar.pfa");
    j = demo_json();
    j["processing"]["tracker"]["gate_chi2"] = 2.0;
    expect_path(j, "processing.tracker");
  }
}

TEST_CASE("schema violations name the field") {
  auto j = demo_json();
  j["signal"].erase("fc_hz");
  expect_path(j, "signal.fc_hz");
  j = demo_json();
  j["nodes"][1]["role"] = "relay";
  expect_path(j, "nodes[1].role");
  j = demo_json();
  j["clocks"][0]["initial_ffo"] = "fast";
  expect_path(j, "clocks[0].initial_ffo");
  j = demo_json();
  j["schema_version"] = 2;
  expect_path(j, "schema_version");
  j = demo_json();
  j["nodes"][0]["position"] = json::array({1.0, 2.0});
  expect_path(j, "nodes[0].position");
}

TEST_CASE("random single-field mutations never pass silently with a bad reference") {
  const auto base = demo_json();
  const std::vector<std::pair<json::json_pointer, std::string>> refs = {
      {json::json_pointer("/nodes/0/clock"), "nodes[0].clock"},
      {json::json_pointer("/nodes/4/clock"), "nodes[4].clock"},
      {json::json_pointer("/clutter/5/rx"), "clutter[5].rx"},
      {json::json_pointer("/schedule/39/tx"), "schedule[39].tx"},
  };
  for (const auto& [ptr, path] : refs) {
    auto j = base;
    j[ptr] = "does_not_exist";
    expect_path(j, path);
  }
}

TEST_CASE("scenario files") {
  const auto dir = std::filesystem::temp_directory_path() / "isac_scenario_test";
  std::filesystem::create_directories(dir);
  const auto ok = dir / "demo.json";
  std::ofstream(ok) << demo_json().dump(2);
  CHECK(scenario_to_json(load_scenario(ok)) == demo_json());
  const auto bad = dir / "bad.json";
  std::ofstream(bad) << "{ \"signal\": ";
  CHECK(raised([&] { load_scenario(bad); }).kind == ErrorKind::Validation);
  CHECK(raised([&] { load_scenario(dir / "missing.json"); }).kind == ErrorKind::Io);
  std::filesystem::remove_all(dir);
}

// SPDX-License-Identifier: Apache-2.0
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "isac/isac.h"

namespace {

int exit_code(isac_status s) {
  switch (s) {
    case ISAC_OK:
      return 0;
    case ISAC_ERR_VALIDATION:
      return 2;
    case ISAC_ERR_DATA:
    case ISAC_ERR_RANGE:
    case ISAC_ERR_DEGENERATE:
    case ISAC_ERR_IO:
      return 3;
    default:
      return 1;
  }
}

int report_failure(const char* what, isac_status s) {
  std::fprintf(stderr, "isac %s: %s\n", what, isac_last_error());
  return exit_code(s);
}

struct ScenarioHandle {
  isac_scenario* ptr = nullptr;
  ~ScenarioHandle() { isac_scenario_free(ptr); }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multistatic ISAC channel-sounding simulator and radar processing"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(isac_version()));

  std::string scenario_path, out_dir, captures_dir, tracks_dir;
  std::uint64_t seed = 0;
  std::optional<int> cpi;
  std::optional<double> alpha, pfa;

  auto* sim = app.add_subcommand("simulate", "synthesize captures, B2B records and telemetry");
  sim->add_option("--scenario", scenario_path, "scenario JSON")->required();
  sim->add_option("--out", out_dir, "output directory")->required();
  auto* seed_opt = sim->add_option("--seed", seed, "random seed (overrides the scenario seed)");

  auto* proc = app.add_subcommand("process", "sounding, detection and tracking per receiver");
  proc->add_option("--captures", captures_dir, "capture directory")->required();
  proc->add_option("--out", out_dir, "output directory")->required();
  proc->add_option("--cpi", cpi, "symbols per CPI");
  proc->add_option("--alpha", alpha, "background forgetting factor");
  proc->add_option("--pfa", pfa, "CFAR false-alarm probability");

  auto* loc = app.add_subcommand("localize", "fuse receiver tracks into position fixes");
  loc->add_option("--tracks", tracks_dir, "process output directory")->required();
  loc->add_option("--scenario", scenario_path, "scenario JSON")->required();
  loc->add_option("--out", out_dir, "output directory")->required();

  auto* rep = app.add_subcommand("report", "consolidated summary of a localize output directory");
  rep->add_option("--out", out_dir, "localize output directory")->required();

  auto* demo = app.add_subcommand("demo-scenario", "write the built-in demonstration scenario");
  demo->add_option("--out", out_dir, "scenario JSON path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  ScenarioHandle sc;
  if (*sim) {
    if (const auto s = isac_scenario_load(scenario_path.c_str(), &sc.ptr); s != ISAC_OK) return report_failure("simulate", s);
    if (*seed_opt) isac_scenario_set_seed(sc.ptr, seed);
    isac_simulate_summary r{};
    if (const auto s = isac_simulate(sc.ptr, out_dir.c_str(), &r); s != ISAC_OK) return report_failure("simulate", s);
    std::printf("simulate: %d captures, %d B2B records, %d telemetry records -> %s\n", r.captures, r.b2b,
                r.telemetry_records, out_dir.c_str());
  } else if (*proc) {
    isac_process_options opt{};
    opt.cpi = cpi.value_or(0);
    if (alpha) {
      opt.has_alpha = 1;
      opt.alpha = *alpha;
    }
    if (pfa) {
      opt.has_pfa = 1;
      opt.pfa = *pfa;
    }
    if (cpi && *cpi <= 0) {
      std::fprintf(stderr, "isac process: --cpi must be positive\n");
      return 2;
    }
    isac_process_summary r{};
    if (const auto s = isac_process(captures_dir.c_str(), out_dir.c_str(), &opt, &r); s != ISAC_OK)
      return report_failure("process", s);
    std::printf("process: %d streams, %d captures, %d detections, %d confirmed tracks -> %s\n", r.streams, r.captures,
                r.detections, r.confirmed_tracks, out_dir.c_str());
  } else if (*loc) {
    if (const auto s = isac_scenario_load(scenario_path.c_str(), &sc.ptr); s != ISAC_OK) return report_failure("localize", s);
    isac_localize_summary r{};
    if (const auto s = isac_localize(tracks_dir.c_str(), sc.ptr, out_dir.c_str(), &r); s != ISAC_OK)
      return report_failure("localize", s);
    std::printf("localize: %d fixes on %d CPIs, %d gaps", r.fixes, r.cpis, r.gaps);
    if (r.has_truth) std::printf(", RMSE %.3f m, CE90 %.3f m", r.rmse_m, r.ce90_m);
    std::printf(" -> %s\n", out_dir.c_str());
  } else if (*rep) {
    isac_report_summary r{};
    if (const auto s = isac_report(out_dir.c_str(), &r); s != ISAC_OK) return report_failure("report", s);
    std::printf("report: %d sections, %d warnings -> %s/report.md\n", r.sections, r.warnings, out_dir.c_str());
  } else if (*demo) {
    if (const auto s = isac_scenario_demo(&sc.ptr); s != ISAC_OK) return report_failure("demo-scenario", s);
    if (const auto s = isac_scenario_save(sc.ptr, out_dir.c_str()); s != ISAC_OK) return report_failure("demo-scenario", s);
    std::printf("demo scenario -> %s\n", out_dir.c_str());
  }
  return 0;
}

// ckitchen: command-line front end for dataset generation, calibration,
// simulation, KPI comparison, one-off VRPTW solving and the HTTP service.

#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "cloudkitchen/dataset.hpp"
#include "cloudkitchen/kpi.hpp"
#include "cloudkitchen/simulator.hpp"
#include "cloudkitchen/solver.hpp"
#include "cloudkitchen/task_json.hpp"
#include "cloudkitchen/tsb.hpp"

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int fail(const std::string& kind, const std::string& message, int code) {
  nlohmann::ordered_json e;
  e["error"] = kind;
  e["message"] = message;
  std::cerr << e.dump() << '\n';
  return code;
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ck::InputError("'" + path + "' is not valid JSON: " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write '" + path + "'");
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cloud Kitchen delivery dispatch toolkit"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Run the simulator on a dataset and write a KPI report");
  std::string sim_dataset, sim_mode = "optimized", sim_out, sim_log;
  ck::Seconds delta = 120;
  int solver_ms = 50, loop_ms = 1000;
  std::uint64_t seed = 0;
  std::optional<double> factor;
  sim->add_option("--dataset", sim_dataset, "Dataset directory")->required();
  sim->add_option("--mode", sim_mode, "baseline or optimized")->check(CLI::IsMember({"baseline", "optimized"}));
  sim->add_option("--delta-seconds", delta, "Deadline extension step");
  sim->add_option("--solver-timeout-ms", solver_ms, "Per-attempt solver budget");
  sim->add_option("--loop-budget-ms", loop_ms, "Per-episode budget");
  sim->add_option("--seed", seed, "Solver seed");
  sim->add_option("--calibration-factor", factor, "Travel-time factor (calibrated from the dataset if omitted)");
  sim->add_option("--out", sim_out, "KPI report path (stdout if omitted)");
  sim->add_option("--log", sim_log, "Run log path (JSONL)");

  // calibrate
  auto* cal = app.add_subcommand("calibrate", "Estimate the travel-time factor from historical legs");
  std::string cal_dataset;
  cal->add_option("--dataset", cal_dataset, "Dataset directory")->required();

  // generate
  auto* gen = app.add_subcommand("generate", "Write a synthetic dataset");
  std::string gen_spec, gen_out;
  gen->add_option("--spec", gen_spec, "Generator spec JSON (defaults if omitted)");
  gen->add_option("--out", gen_out, "Output directory")->required();

  // solve
  auto* slv = app.add_subcommand("solve", "Solve one VRPTW task file");
  std::string task_path;
  int task_ms = 50;
  std::uint64_t task_seed = 0;
  slv->add_option("--task", task_path, "Task JSON")->required();
  slv->add_option("--timeout-ms", task_ms, "Solver budget");
  slv->add_option("--seed", task_seed, "Solver seed");

  // compare
  auto* cmp = app.add_subcommand("compare", "Compare two KPI reports");
  std::string cmp_opt, cmp_base, cmp_out, cmp_json;
  cmp->add_option("--optimized", cmp_opt, "Optimized-run KPI report")->required();
  cmp->add_option("--baseline", cmp_base, "Baseline-run KPI report")->required();
  cmp->add_option("--out", cmp_out, "CSV path (stdout if omitted)");
  cmp->add_option("--json", cmp_json, "Also write the comparison as JSON");

  // serve
  auto* srv = app.add_subcommand("serve", "Serve the HTTP API, replaying a dataset");
  std::string srv_dataset, srv_static, srv_host = "127.0.0.1";
  double replay_speed = 60.0;
  int port = 8080;
  bool interactive = false;
  srv->add_option("--dataset", srv_dataset, "Dataset directory")->required();
  srv->add_option("--replay-speed", replay_speed, "Simulated seconds per wall second");
  srv->add_option("--port", port, "TCP port");
  srv->add_option("--host", srv_host, "Bind address");
  srv->add_option("--static", srv_static, "Directory of static UI files");
  srv->add_flag("--interactive", interactive, "Staff dispatch only (no auto dispatch)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 2);
  }

  try {
    if (*sim) {
      const auto ds = ck::load_dataset(sim_dataset);
      const auto provider = ck::make_provider(ds);
      ck::RunConfig cfg;
      cfg.mode = ck::parse_run_mode(sim_mode);
      cfg.calibration_factor = factor ? *factor : ck::calibrate(ds, *provider).factor;
      cfg.rng_seed = seed;
      cfg.loop.delta = delta;
      cfg.loop.solver_timeout = std::chrono::milliseconds(solver_ms);
      cfg.loop.loop_budget = std::chrono::milliseconds(loop_ms);
      const auto result = ck::run(ds, *provider, cfg);
      if (!sim_log.empty()) write_text(sim_log, result.log.to_jsonl());
      const auto report = ck::compute_kpis(result.log, ds);
      auto j = ck::to_json(report);
      j["calibration_factor"] = cfg.calibration_factor;
      j["seed"] = seed;
      write_text(sim_out, j.dump(2) + "\n");
    } else if (*cal) {
      const auto ds = ck::load_dataset(cal_dataset);
      const auto provider = ck::make_provider(ds);
      const auto r = ck::calibrate(ds, *provider);
      nlohmann::ordered_json j;
      j["factor"] = r.factor;
      j["legs_used"] = r.legs_used;
      j["legs_excluded"] = r.legs_excluded;
      j["provider"] = provider->describe();
      std::cout << j.dump(2) << '\n';
    } else if (*gen) {
      const auto spec = gen_spec.empty() ? ck::GeneratorSpec{} : ck::generator_spec_from_json(read_json(gen_spec));
      const auto ds = ck::generate_dataset(spec);
      ck::save_dataset(ds, gen_out);
      nlohmann::ordered_json j;
      j["out"] = gen_out;
      j["days"] = ds.days().size();
      j["orders"] = ds.orders.size();
      j["vehicles"] = ds.vehicles.size();
      std::cout << j.dump(2) << '\n';
    } else if (*slv) {
      const auto task = ck::task_from_json(read_json(task_path));
      ck::SolverConfig sc;
      sc.time_budget = std::chrono::milliseconds(task_ms);
      sc.rng_seed = task_seed;
      const auto outcome = ck::solve(task, sc);
      nlohmann::ordered_json j;
      j["schema_version"] = ck::kTaskSchemaVersion;
      j["status"] = ck::to_string(outcome.status);
      j["solution"] = outcome.solution ? nlohmann::ordered_json(ck::to_json(*outcome.solution)) : nullptr;
      std::cout << j.dump(2) << '\n';
      return outcome.solved() ? 0 : 3;
    } else if (*cmp) {
      const auto opt = ck::kpi_report_from_json(read_json(cmp_opt));
      const auto base = ck::kpi_report_from_json(read_json(cmp_base));
      const auto c = ck::compare(opt, base);
      write_text(cmp_out, ck::to_csv(c));
      if (!cmp_json.empty()) write_text(cmp_json, ck::to_json(c).dump(2) + "\n");
    } else if (*srv) {
      ck::ServiceConfig sc;
      sc.host = srv_host;
      sc.port = port;
      sc.replay_speed = replay_speed;
      sc.static_dir = srv_static;
      sc.interactive = interactive;
      return ck::serve_dataset(srv_dataset, sc);
    }
  } catch (const UsageError& e) {
    return fail("usage", e.what(), 2);
  } catch (const ck::LoadError& e) {
    return fail("load", e.what(), 1);
  } catch (const ck::InputError& e) {
    return fail("input", e.what(), 1);
  } catch (const std::exception& e) {
    return fail("runtime", e.what(), 1);
  }
  return 0;
}

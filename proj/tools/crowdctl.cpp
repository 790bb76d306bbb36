/*
 * Copyright 2026 The crowdctl Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// crowdctl: command-line front door to the experiment orchestrator.
#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "crowdctl/analysis/bias.hpp"
#include "crowdctl/common/error.hpp"
#include "crowdctl/common/json.hpp"
#include "crowdctl/common/time.hpp"
#include "crowdctl/common/violation.hpp"
#include "crowdctl/orchestrator/reporting.hpp"
#include "crowdctl/orchestrator/simulation.hpp"
#include "crowdctl/orchestrator/workloads.hpp"
#include "crowdctl/platform/population.hpp"
#include "crowdctl/service/server.hpp"
#include "crowdctl/store/store.hpp"
#include "crowdctl/workflow/codec.hpp"
#include "crowdctl/workflow/graph.hpp"

using namespace crowdctl;

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop.store(true); }

// One JSON object per line on stderr.
void error_line(std::string_view code, std::string_view message, const Json& extra = Json::object()) {
  Json j{{"error", code}, {"message", message}};
  for (const auto& [k, v] : extra.items()) j[k] = v;
  std::cerr << j.dump() << "\n";
}

std::string default_store() {
  const char* v = std::getenv("CROWDCTL_STORE");
  return v ? v : "crowdctl.db";
}

Json violations_json(const Violations& vs) {
  Json arr = Json::array();
  for (const auto& v : vs) arr.push_back(Json{{"code", v.code}, {"message", v.message}, {"subject", v.subject}});
  return arr;
}

int cmd_validate(const std::string& workflow_file, const std::string& units_file) {
  const auto def = workflow::parse_workflow(read_file(workflow_file));
  const auto cyclic = workflow::cyclic_blocks(def);
  if (!cyclic.empty()) {
    std::string joined;
    for (const auto& b : cyclic) joined += (joined.empty() ? "" : ",") + b;
    std::cout << "cycle: " << joined << "\n";
    error_line(errc::cycle, "workflow has a cycle", Json{{"blocks", cyclic}});
    return 1;
  }
  std::set<std::string> schema;
  Violations violations;
  const bool bindings = !units_file.empty();
  if (bindings) {
    const auto units = workflow::units_from_json(parse_json(read_file(units_file), units_file));
    schema = workflow::unit_schema_of(units);
    violations = workflow::validate_units(def, units);
  }
  auto res = workflow::validate_workflow(def, schema);
  if (!bindings) {
    std::erase_if(res.violations, [](const Violation& v) { return v.code == "unresolved-binding"; });
  }
  res.violations.insert(res.violations.begin(), violations.begin(), violations.end());
  if (res.violations.empty()) {
    std::cout << "ok: " << def.id << " v" << def.version << " (" << def.blocks.size() << " blocks"
              << (bindings ? "" : ", bindings not checked") << ")\n";
    return 0;
  }
  for (const auto& v : res.violations) {
    std::cout << v.code << ": " << v.subject << ": " << v.message << "\n";
  }
  error_line(errc::validation_failed, std::to_string(res.violations.size()) + " violation(s)",
             Json{{"violations", violations_json(res.violations)}});
  return 1;
}

struct RunArgs {
  std::string workflow_file;
  std::string units_file;
  std::string adapter = "sim";
  std::string profile_file;
  std::uint64_t seed = 1;
  bool no_eligibility = false;
  bool no_quotas = false;
  bool no_schedule = false;
  int horizon_hours = 24 * 60;
  std::string store_path;
  std::string format = "summary";
};

int cmd_run(const RunArgs& a) {
  if (a.adapter != "sim") {
    error_line(errc::invalid_argument, "the CLI runs the sim adapter only; use `serve` for live adapters");
    return 2;
  }
  orchestrator::SimulationConfig cfg;
  cfg.def = workflow::parse_workflow(read_file(a.workflow_file));
  cfg.units = workflow::units_from_json(parse_json(read_file(a.units_file), a.units_file));
  cfg.profile = a.profile_file.empty()
                    ? platform::default_profile()
                    : platform::profile_from_json(parse_json(read_file(a.profile_file), a.profile_file));
  if (const auto pv = platform::validate_profile(cfg.profile); !pv.empty()) throw ValidationFailed(pv);
  cfg.toggles = {!a.no_eligibility, !a.no_quotas, !a.no_schedule};
  cfg.seed = a.seed;
  cfg.horizon = std::chrono::hours(a.horizon_hours);
  store::Store store(a.store_path);
  cfg.store = &store;
  const auto result = orchestrator::run_simulation(cfg);

  Json summary{{"runId", result.run_id},
               {"status", store::to_string(result.status)},
               {"judgments", result.judgments.size()},
               {"simulatedUntil", format_utc(result.finished_at)},
               {"store", a.store_path}};
  if (!result.judgments.empty()) {
    const auto rep = orchestrator::run_report(store, result.run_id, {});
    summary["returningFraction"] = rep.fractions.returning;
    summary["crossoverFraction"] = rep.fractions.crossover;
    summary["topKShare"] = rep.dominance.top_k_share;
    summary["discardFraction"] = rep.discard.fraction;
    summary["reportDigest"] = rep.digest;
  }
  std::cout << summary.dump(2) << "\n";
  return result.status == store::RunStatus::completed ? 0 : 3;
}

int cmd_report(const std::string& run_id, const std::string& store_path, const std::string& format,
               bool per_condition, const std::vector<std::string>& cleanup, int top_k) {
  store::Store store(store_path);
  analysis::ReportConfig cfg;
  cfg.generated_at = SystemClock().now();
  cfg.per_condition = per_condition;
  cfg.top_k = top_k;
  if (!cleanup.empty()) {
    cfg.cleanup.clear();
    for (const auto& c : cleanup) cfg.cleanup.insert(analysis::cleanup_policy_from_string(c));
  }
  const auto rep = orchestrator::run_report(store, run_id, cfg);
  if (format == "text") {
    std::cout << analysis::to_text(rep);
  } else {
    std::cout << analysis::to_json(rep).dump(2) << "\n";
  }
  return 0;
}

int cmd_export(const std::string& run_id, const std::string& archive, const std::string& store_path) {
  store::Store store(store_path);
  if (!store.get_run(run_id)) throw Error(errc::not_found, "unknown run " + run_id);
  write_file(archive, store.export_run(run_id).dump(2) + "\n");
  std::cout << "exported " << run_id << " to " << archive << "\n";
  return 0;
}

int cmd_workload(const std::string& name, const std::string& out_dir) {
  orchestrator::Workload w;
  platform::PopulationProfile profile = platform::default_profile();
  if (name == "highlight-study") {
    w = orchestrator::highlight_study();
  } else if (name == "crash") {
    w = orchestrator::crash_workload();
  } else {
    throw Error(errc::invalid_argument, "unknown workload " + name + " (highlight-study, crash)");
  }
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);
  write_file((dir / (name + ".workflow.json")).string(), workflow::serialize_workflow(w.def) + "\n");
  write_file((dir / (name + ".units.json")).string(), workflow::to_json(w.units).dump(2) + "\n");
  write_file((dir / "default.profile.json").string(), platform::to_json(profile).dump(2) + "\n");
  std::cout << "wrote " << name << " workflow, units and default profile to " << out_dir << "\n";
  return 0;
}

int cmd_serve(service::ServerConfig cfg) {
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  return service::serve(cfg, g_stop);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"crowdctl: controlled crowdsourcing experiments"};
  app.require_subcommand(1);

  std::string workflow_file, units_file;
  auto* validate = app.add_subcommand("validate", "Check a workflow file");
  validate->add_option("workflow", workflow_file, "Workflow JSON file")->required()->check(CLI::ExistingFile);
  validate->add_option("--units", units_file, "Units file; enables the binding check")->check(CLI::ExistingFile);

  RunArgs run_args;
  run_args.store_path = default_store();
  auto add_run_options = [&run_args](CLI::App* sub, bool adapter_flag) {
    sub->add_option("workflow", run_args.workflow_file, "Workflow JSON file")->required()->check(CLI::ExistingFile);
    sub->add_option("--units", run_args.units_file, "Units JSON file")->required()->check(CLI::ExistingFile);
    if (adapter_flag) sub->add_option("--adapter", run_args.adapter, "Platform adapter")->capture_default_str();
    sub->add_option("--profile", run_args.profile_file, "Population profile JSON (default profile if omitted)")
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", run_args.seed, "Seed for population and run")->capture_default_str();
    sub->add_flag("--no-eligibility", run_args.no_eligibility, "Observe eligibility only");
    sub->add_flag("--no-quotas", run_args.no_quotas, "Observe quotas only");
    sub->add_flag("--no-schedule", run_args.no_schedule, "Ignore schedule windows");
    sub->add_option("--horizon-hours", run_args.horizon_hours, "Simulated time limit")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    sub->add_option("--store", run_args.store_path, "Store path (env CROWDCTL_STORE)")->capture_default_str();
  };
  auto* run = app.add_subcommand("run", "Run a workflow");
  add_run_options(run, true);
  auto* simulate = app.add_subcommand("simulate", "Run a workflow on the simulated platform");
  add_run_options(simulate, false);

  std::string run_id, format = "json", store_path = default_store();
  bool per_condition = false;
  std::vector<std::string> cleanup;
  int top_k = 3;
  auto* report = app.add_subcommand("report", "Bias report of a stored run");
  report->add_option("run-id", run_id, "Run id")->required();
  report->add_option("--format", format, "json or text")
      ->capture_default_str()
      ->check(CLI::IsMember({"json", "text"}));
  report->add_option("--store", store_path, "Store path (env CROWDCTL_STORE)")->capture_default_str();
  report->add_flag("--per-condition", per_condition, "Summaries per experiment group");
  report->add_option("--cleanup", cleanup, "drop-returning, drop-crossover, drop-untrusted")->delimiter(',');
  report->add_option("--top-k", top_k, "Dominance k")->capture_default_str()->check(CLI::PositiveNumber);

  std::string archive;
  auto* exp = app.add_subcommand("export", "Write a run archive");
  exp->add_option("run-id", run_id, "Run id")->required();
  exp->add_option("archive", archive, "Output file")->required();
  exp->add_option("--store", store_path, "Store path (env CROWDCTL_STORE)")->capture_default_str();

  std::string workload_name, out_dir = ".";
  auto* workload = app.add_subcommand("workload", "Write a built-in workflow, units and profile");
  workload->add_option("name", workload_name, "highlight-study or crash")->required();
  workload->add_option("--out", out_dir, "Output directory")->capture_default_str();

  service::ServerConfig server;
  try {
    service::apply_environment(server);
  } catch (const Error& e) {
    error_line(e.code(), e.what());
    return 2;
  }
  auto* serve = app.add_subcommand("serve", "Serve the HTTP API");
  serve->add_option("--port", server.port, "Port (env CROWDCTL_PORT)")->capture_default_str();
  serve->add_option("--host", server.host, "Bind address")->capture_default_str();
  serve->add_option("--store", server.store_path, "Store path (env CROWDCTL_STORE)")->capture_default_str();
  serve->add_option("--file-root", server.file_root, "File adapter root (env CROWDCTL_FILE_ROOT)")
      ->capture_default_str();
  serve->add_option("--log-level", server.log_level, "Log level (env CROWDCTL_LOG_LEVEL)")
      ->capture_default_str()
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "critical", "off"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*validate) return cmd_validate(workflow_file, units_file);
    if (*run || *simulate) return cmd_run(run_args);
    if (*report) return cmd_report(run_id, store_path, format, per_condition, cleanup, top_k);
    if (*exp) return cmd_export(run_id, archive, store_path);
    if (*workload) return cmd_workload(workload_name, out_dir);
    if (*serve) return cmd_serve(server);
  } catch (const ValidationFailed& e) {
    error_line(e.code(), e.what(), Json{{"violations", violations_json(e.violations())}});
    return 1;
  } catch (const Error& e) {
    error_line(e.code(), e.what());
    return 1;
  } catch (const std::exception& e) {
    error_line("internal", e.what());
    return 1;
  }
  return 0;
}

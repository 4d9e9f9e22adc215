// manta: scenario runner and tooling for the deterministic autonomy runtime.
#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "manta/bus/bus.hpp"
#include "manta/codesynth/deploy.hpp"
#include "manta/diagnostics/diagnostics.hpp"
#include "manta/mission/rules.hpp"
#include "manta/mission/scenario.hpp"

using namespace manta;

namespace {

int cmd_run(const std::string& scenario_path, std::uint64_t seed, bool seed_set,
            const std::string& backend, int ticks, const std::string& out_dir) {
  auto config = mission::ScenarioConfig::load_file(scenario_path);
  if (!config.ok()) {
    std::cerr << "error: " << config.error().message << "\n";
    return 2;
  }
  mission::ScenarioConfig c = std::move(config).take();
  if (seed_set) c.seed = seed;
  if (!backend.empty()) c.backend = backend;
  if (ticks > 0) c.ticks = ticks;
  auto report = mission::run_scenario(c, out_dir);
  if (!report.ok()) {
    std::cerr << "error: " << report.error().message << "\n";
    return 2;
  }
  std::cout << report.value().summary.dump(2) << "\n";
  for (const auto& f : report.value().files) std::cout << "wrote " << f << "\n";
  return report.value().ok ? 0 : 1;
}

int cmd_replay(const std::string& trace_path) {
  auto trace = bus::Trace::load_jsonl(trace_path);
  if (!trace.ok()) {
    std::cerr << "error: " << trace.error().message << "\n";
    return 2;
  }
  auto fresh = bus::bus_from_wiring(trace.value().wiring);
  if (!fresh.ok()) {
    std::cerr << "error: " << fresh.error().message << "\n";
    return 2;
  }
  bus::Bus bus = std::move(fresh).take();
  auto r = bus::replay_trace(trace.value(), bus);
  if (!r.ok()) {
    std::cerr << "error: " << r.error().message << "\n";
    return 2;
  }
  std::cout << Json{{"config_digest", bus.config_digest()},
                    {"entries", trace.value().entries.size()},
                    {"inbox_digests", bus.inbox_digests()}}
                   .dump(2)
            << "\n";
  return 0;
}

int cmd_diagnose(const std::string& status_log) {
  std::ifstream f(status_log);
  if (!f) {
    std::cerr << "error: cannot open status log: " << status_log << "\n";
    return 2;
  }
  diagnostics::Monitor monitor;
  std::string line;
  std::size_t lineno = 0;
  int reports = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    Json j = Json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      std::cerr << "error: unparseable JSON at line " << lineno << "\n";
      return 2;
    }
    auto status = sim::VehicleStatus::from_json(j);
    if (!status.ok()) {
      std::cerr << "error: line " << lineno << ": " << status.error().message << "\n";
      return 2;
    }
    auto pushed = monitor.push(status.value());
    if (!pushed.ok()) {
      std::cerr << "error: line " << lineno << ": " << pushed.error().message << "\n";
      return 2;
    }
    if (pushed.value().has_value()) {
      for (const auto& report_line : pushed.value()->lines()) {
        std::cout << report_line << "\n";
      }
      std::cout << "\n";
      ++reports;
    }
  }
  if (reports == 0) {
    std::cerr << "fewer than 10 samples; no diagnosis emitted\n";
    return 1;
  }
  return 0;
}

int cmd_synth(const std::string& request_path, const std::string& out_dir) {
  std::ifstream f(request_path);
  if (!f) {
    std::cerr << "error: cannot open request: " << request_path << "\n";
    return 2;
  }
  Json j = Json::parse(f, nullptr, false);
  if (j.is_discarded()) {
    std::cerr << "error: request is not valid JSON\n";
    return 2;
  }
  auto req = codesynth::NodeRequirement::from_json(j);
  if (!req.ok()) {
    std::cerr << "error: " << req.error().message << "\n";
    return 2;
  }
  bus::Bus bus;
  auto wired = mission::register_standard_topics(bus);
  if (!wired.ok()) {
    std::cerr << "error: " << wired.error().message << "\n";
    return 2;
  }
  // Register the requirement's topics when they are not part of the standard
  // profile (schema-free pass-through for synth workbench runs).
  auto ensure_topic = [&](const std::string& topic) {
    if (bus.has_topic(topic)) return;
    if (!bus.schemas().contains("nav_sample")) return;
    (void)bus.register_topic(topic, "nav_sample");
  };
  for (const auto& [topic, schema] : req.value().inputs) {
    (void)schema;
    ensure_topic(topic);
  }
  ensure_topic(req.value().output.first);

  codesynth::Runtime runtime(bus, out_dir);
  auto report = codesynth::synthesize_and_deploy(req.value(), runtime);
  if (!report.ok()) {
    std::cerr << "error: " << report.error().message << "\n";
    return 2;
  }
  std::cout << report.value().to_json().dump(2) << "\n";
  return report.value().deployed ? 0 : 1;
}

int cmd_report(const std::string& in_dir) {
  auto summary = mission::summarize_reports(in_dir);
  if (!summary.ok()) {
    std::cerr << "error: " << summary.error().message << "\n";
    return 2;
  }
  bool all_ok = true;
  for (const auto& row : summary.value()) {
    const bool ok = row.value("ok", false);
    all_ok = all_ok && ok;
    std::cout << (ok ? "PASS " : "FAIL ") << row.value("kind", "?") << "  "
              << row.value("path", "") << "\n";
  }
  std::cout << summary.value().dump(2) << "\n";
  return all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deterministic multi-agent autonomy runtime and underwater simulator"};
  app.require_subcommand(1);

  std::string scenario_path, backend, out_dir = "out", trace_path, status_log, request_path,
              in_dir;
  std::uint64_t seed = 0;
  int ticks = 0;

  auto* run = app.add_subcommand("run", "run a scenario config and write its report bundle");
  run->add_option("--scenario", scenario_path, "scenario JSON path")->required();
  auto* seed_opt = run->add_option("--seed", seed, "override the scenario seed");
  run->add_option("--backend", backend, "template|playback|remote");
  run->add_option("--ticks", ticks, "override the tick budget");
  run->add_option("--out", out_dir, "output directory");

  auto* replay = app.add_subcommand("replay", "replay a recorded trace and print inbox digests");
  replay->add_option("--trace", trace_path, "trace JSONL path")->required();

  auto* diagnose = app.add_subcommand("diagnose", "run the diagnostics monitor over a status log");
  diagnose->add_option("--status-log", status_log, "JSONL of vehicle status samples")->required();

  auto* synth = app.add_subcommand("synth", "synthesize, test and deploy a node requirement");
  synth->add_option("--request", request_path, "requirement JSON path")->required();
  synth->add_option("--out", out_dir, "directory for the deployed NodeDef");

  auto* report = app.add_subcommand("report", "aggregate summary.json files under a directory");
  report->add_option("--in", in_dir, "reports directory")->required();

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    return cmd_run(scenario_path, seed, seed_opt->count() > 0, backend, ticks, out_dir);
  }
  if (replay->parsed()) return cmd_replay(trace_path);
  if (diagnose->parsed()) return cmd_diagnose(status_log);
  if (synth->parsed()) return cmd_synth(request_path, out_dir);
  if (report->parsed()) return cmd_report(in_dir);
  return 2;
}

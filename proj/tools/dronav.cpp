// dronav command-line front end.
#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "dronav/runtime/headless.hpp"
#include "dronav/runtime/map_io.hpp"
#include "dronav/runtime/run_log.hpp"
#include "dronav/runtime/scenario.hpp"
#include "dronav/runtime/server.hpp"
#include "dronav/runtime/sim.hpp"

namespace {

using namespace dronav;
using namespace dronav::runtime;

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted = true; }

struct SimArgs {
  std::string scenario;
  std::string script;
  std::string serve;
  std::string log;
  std::string report;
  std::optional<std::uint64_t> seed;
  bool headless = false;
  double rtf = 1.0;
  std::optional<double> duration;
};

void write_json(const nlohmann::json& j, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << j.dump(2) << '\n';
}

int run_sim(const SimArgs& a) {
  auto scenario = load_scenario(a.scenario);
  if (a.seed) scenario.seed = *a.seed;
  if (a.headless == !a.serve.empty()) {
    std::cerr << "sim: pick exactly one of --headless or --serve\n";
    return 2;
  }
  Sim sim(scenario);
  std::ofstream log_file;
  std::optional<RunLog> log;
  if (!a.log.empty()) {
    log_file.open(a.log);
    if (!log_file) throw IoError("cannot write " + a.log);
    log.emplace(log_file);
    log->attach(sim, std::filesystem::path(a.scenario).parent_path().string());
  }

  if (a.headless) {
    Script script;
    if (!a.script.empty()) script = load_script(a.script);
    if (a.duration) script.steps.push_back(script::Hold{*a.duration});
    try {
      const auto report = run_headless(sim, script);
      if (log) log->finish(report);
      write_json(report.to_json(), a.report);
      return report.crashed ? 1 : 0;
    } catch (const TimeoutError& e) {
      if (log) log->finish(e.partial());
      write_json(e.partial().to_json(), a.report);
      std::cerr << "timeout: " << e.what() << '\n';
      return 3;
    }
  }

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  ServeOptions opts;
  opts.bind = a.serve;
  opts.realtime_factor = a.rtf;
  opts.max_sim_time = a.duration;
  opts.should_stop = [] { return g_interrupted.load(); };
  opts.on_listening = [&](unsigned short port) {
    const auto host = a.serve.substr(0, a.serve.rfind(':'));
    std::cerr << "listening on ws://" << host << ':' << port << "/\n";
  };
  const auto stats = serve(sim, opts);
  std::cerr << "served " << stats.connections << " connection(s), " << stats.commands << " command(s), "
            << stats.parse_errors << " parse error(s)\n";
  return 0;
}

nlohmann::json map_summary(const MapFile& m) {
  const auto& g = m.grid.geometry;
  return {{"image", m.meta.image},
          {"width", g.width},
          {"height", g.height},
          {"resolution", g.resolution},
          {"origin", m.meta.origin},
          {"extent", {g.width * g.resolution, g.height * g.resolution}},
          {"free", m.grid.count(mapping::CellState::kFree)},
          {"occupied", m.grid.count(mapping::CellState::kOccupied)},
          {"unknown", m.grid.count(mapping::CellState::kUnknown)},
          {"occupied_thresh", m.meta.occupied_thresh},
          {"free_thresh", m.meta.free_thresh},
          {"negate", m.meta.negate}};
}

int map_info(const std::string& path) {
  std::cout << map_summary(load_map(map_yaml_path(path))).dump(2) << '\n';
  return 0;
}

// Exit 0 when the trinary grids match, 1 when they differ.
int map_diff(const std::string& a_path, const std::string& b_path) {
  const auto a = load_map(map_yaml_path(a_path));
  const auto b = load_map(map_yaml_path(b_path));
  nlohmann::json out;
  if (a.grid.geometry != b.grid.geometry) {
    out = {{"same_geometry", false}, {"a", map_summary(a)}, {"b", map_summary(b)}};
    std::cout << out.dump(2) << '\n';
    return 1;
  }
  std::size_t changed = 0, both_occ = 0, any_occ = 0;
  nlohmann::json transitions = nlohmann::json::object();
  const char* names[] = {"free", "occupied", "unknown"};
  for (std::size_t i = 0; i < a.grid.cells.size(); ++i) {
    const auto ca = a.grid.cells[i], cb = b.grid.cells[i];
    const bool oa = ca == mapping::CellState::kOccupied, ob = cb == mapping::CellState::kOccupied;
    both_occ += oa && ob;
    any_occ += oa || ob;
    if (ca == cb) continue;
    ++changed;
    const std::string key = std::string(names[static_cast<int>(ca)]) + "->" + names[static_cast<int>(cb)];
    transitions[key] = transitions.value(key, 0) + 1;
  }
  out = {{"same_geometry", true},
         {"cells", a.grid.cells.size()},
         {"changed", changed},
         {"transitions", transitions},
         {"occupied_iou", any_occ ? static_cast<double>(both_occ) / static_cast<double>(any_occ) : 1.0}};
  std::cout << out.dump(2) << '\n';
  return changed == 0 ? 0 : 1;
}

int replay(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  const auto r = replay_log(in, path);
  nlohmann::json j{{"ok", r.ok()},
                   {"ticks_checked", r.ticks_checked},
                   {"commands", r.commands},
                   {"mismatches", r.mismatches},
                   {"first_mismatch_step", r.first_mismatch_step ? nlohmann::json(*r.first_mismatch_step) : nlohmann::json()}};
  std::cout << j.dump(2) << '\n';
  return r.ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Indoor drone autonomy sandbox"};
  app.require_subcommand(1);

  SimArgs sim_args;
  auto* sim = app.add_subcommand("sim", "Run a scenario headless or behind the WebSocket server");
  sim->add_option("--scenario", sim_args.scenario, "Scenario YAML")->required()->check(CLI::ExistingFile);
  sim->add_flag("--headless", sim_args.headless, "Run a script without a server and print the metrics report");
  sim->add_option("--script", sim_args.script, "Script YAML for --headless")->check(CLI::ExistingFile);
  sim->add_option("--serve", sim_args.serve, "Serve the cockpit protocol on host:port");
  sim->add_option("--seed", sim_args.seed, "Override the scenario seed");
  sim->add_option("--log", sim_args.log, "Write a JSON-lines run log");
  sim->add_option("--report", sim_args.report, "Write the report here instead of stdout");
  sim->add_option("--rtf", sim_args.rtf, "Real-time factor when serving; 0 runs flat out");
  sim->add_option("--duration", sim_args.duration, "Stop after this many sim seconds");

  auto* map = app.add_subcommand("map", "Inspect map files");
  map->require_subcommand(1);
  std::string info_path, diff_a, diff_b;
  auto* info = map->add_subcommand("info", "Print geometry and cell counts");
  info->add_option("map", info_path, "Map YAML (or its stem)")->required();
  auto* diff = map->add_subcommand("diff", "Compare two maps cell by cell; exit 1 when they differ");
  diff->add_option("a", diff_a, "First map")->required();
  diff->add_option("b", diff_b, "Second map")->required();

  std::string log_path;
  auto* rep = app.add_subcommand("replay", "Re-run a run log and check every state hash");
  rep->add_option("log", log_path, "JSON-lines log")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*sim) return run_sim(sim_args);
    if (*info) return map_info(info_path);
    if (*diff) return map_diff(diff_a, diff_b);
    if (*rep) return replay(log_path);
  } catch (const ValidationError& e) {
    std::cerr << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

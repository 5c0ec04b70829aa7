#include "dronav/runtime/run_log.hpp"

#include <charconv>
#include <filesystem>

#include "dronav/runtime/map_io.hpp"
#include "dronav/runtime/protocol.hpp"

namespace dronav::runtime {

namespace {

std::string hex(std::uint64_t v) {
  char buf[17];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, 16);
  return std::string(buf, end);
}

std::uint64_t parse_hex(const std::string& s, const std::string& file, long line) {
  std::uint64_t v = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v, 16);
  if (ec != std::errc() || end != s.data() + s.size()) throw FormatError(file, line, 0, "bad hash '" + s + "'");
  return v;
}

nlohmann::json pose_json(const geom::Pose2D& p) { return {p.x, p.y, p.theta}; }

}  // namespace

void RunLog::write(const nlohmann::json& j) {
  out_ << j.dump() << '\n';
  out_.flush();
}

void RunLog::attach(Sim& sim, const std::string& scenario_dir) {
  sim_ = &sim;
  const auto& sc = sim.scenario();
  write({{"type", "header"},
         {"v", kProtocolVersion},
         {"scenario", sc.source_text},
         {"dir", std::filesystem::absolute(scenario_dir.empty() ? "." : scenario_dir).string()},
         {"seed", sc.seed}});
  sim.on_command = [this](std::uint64_t step, const Command& cmd, const CommandResult& res) {
    Command logged = cmd;
    // relative map paths would be resolved against the replayer's cwd otherwise
    if (auto* m = std::get_if<SetMode>(&logged); m && m->map_path)
      m->map_path = std::filesystem::absolute(*m->map_path).string();
    write({{"type", "command"}, {"step", step}, {"cmd", command_to_json(logged)}, {"ok", res.ok}});
  };
  sim.on_sensor_tick = [this](const SimSnapshot& s) {
    nlohmann::json j{{"type", "tick"},
                     {"step", s.steps},
                     {"t", s.time},
                     {"hash", hex(s.hash)},
                     {"truth", {s.truth.position.x, s.truth.position.y, s.truth.attitude.z}},
                     {"est", s.estimate ? pose_json(*s.estimate) : nlohmann::json()},
                     {"nav", nav::to_string(s.nav.state)}};
    write(j);
  };
}

void RunLog::finish(const MetricsReport& report) {
  nlohmann::json j{{"type", "summary"}, {"report", report.to_json()}};
  if (sim_) {
    j["step"] = sim_->clock().steps;
    j["hash"] = hex(sim_->hash());
    sim_->on_command = nullptr;
    sim_->on_sensor_tick = nullptr;
  }
  write(j);
}

ReplayResult replay_log(std::istream& in, const std::string& file) {
  ReplayResult r;
  std::optional<Sim> sim;
  std::string text;
  long line = 0;
  auto advance_to = [&](std::uint64_t step) {
    if (step < sim->clock().steps) throw FormatError(file, line, 0, "step goes backwards");
    sim->step(step - sim->clock().steps);
  };
  while (std::getline(in, text)) {
    ++line;
    if (text.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError(file, line, static_cast<long>(e.byte), e.what());
    }
    try {
      const std::string type = j.at("type").get<std::string>();
      if (type == "header") {
        if (sim) throw FormatError(file, line, 0, "second header");
        auto sc = parse_scenario(j.at("scenario").get<std::string>(), j.at("dir").get<std::string>());
        sc.seed = j.at("seed").get<std::uint64_t>();
        sim.emplace(std::move(sc));
        continue;
      }
      if (!sim) throw FormatError(file, line, 0, "missing header");
      if (type == "command") {
        advance_to(j.at("step").get<std::uint64_t>());
        const auto cmd = command_from_json(j.at("cmd"));
        ++r.commands;
        if (std::holds_alternative<SaveMap>(cmd)) continue;
        sim->apply(cmd);
      } else if (type == "tick") {
        const auto step = j.at("step").get<std::uint64_t>();
        advance_to(step);
        ++r.ticks_checked;
        if (sim->hash() != parse_hex(j.at("hash").get<std::string>(), file, line)) {
          ++r.mismatches;
          if (!r.first_mismatch_step) r.first_mismatch_step = step;
        }
      } else if (type == "summary") {
        if (j.contains("step")) advance_to(j.at("step").get<std::uint64_t>());
        if (j.contains("hash")) r.logged_final_hash = parse_hex(j.at("hash").get<std::string>(), file, line);
      } else {
        throw FormatError(file, line, 0, "unknown line type '" + type + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(file, line, 0, e.what());
    } catch (const ProtocolError& e) {
      throw FormatError(file, line, 0, e.what());
    }
  }
  if (!sim) throw FormatError(file, line, 0, "empty log");
  r.final_hash = sim->hash();
  if (r.logged_final_hash && *r.logged_final_hash != r.final_hash) {
    ++r.mismatches;
    if (!r.first_mismatch_step) r.first_mismatch_step = sim->clock().steps;
  }
  return r;
}

}  // namespace dronav::runtime

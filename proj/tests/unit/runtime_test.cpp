#include <gtest/gtest.h>

#include <cmath>
#include <deque>
#include <random>
#include <sstream>

#include "dronav/runtime/bus.hpp"
#include "dronav/runtime/clock.hpp"
#include "dronav/runtime/headless.hpp"
#include "dronav/runtime/map_io.hpp"
#include "dronav/runtime/protocol.hpp"
#include "dronav/runtime/run_log.hpp"
#include "dronav/runtime/scenario.hpp"
#include "dronav/runtime/sim.hpp"
#include "runtime_fixtures.hpp"
#include "worlds.hpp"

using namespace dronav;
using namespace dronav::runtime;
using dronav::testing::NavScenarioText;
using dronav::testing::SampleScenarioText;
using dronav::testing::TempDir;
using dronav::testing::WriteSampleMap;
using mapping::CellState;
using mapping::OccupancyGrid;

namespace {

std::string ExpectValidationError(const std::string& yaml) {
  try {
    parse_scenario(yaml);
  } catch (const ValidationError& e) {
    return e.what();
  }
  ADD_FAILURE() << "no ValidationError for:\n" << yaml;
  return {};
}

void RunUntil(Sim& sim, double limit, const std::function<bool()>& done) {
  const double end = sim.clock().now() + limit;
  while (!done() && sim.clock().now() < end) sim.step(sim.clock().control_div);
}

}  // namespace

// --- bus ---------------------------------------------------------------

TEST(Bus, SecondPublisherRejected) {
  Topic<int> t("scan");
  t.claim("lidar");
  t.claim("lidar");
  EXPECT_THROW(t.claim("other"), MultiplePublisherError);
  Topic<int> shared("twist_cmd", true);
  shared.claim("teleop");
  EXPECT_NO_THROW(shared.claim("nav"));
}

TEST(Bus, SimTopicsHaveOwners) {
  Sim sim(parse_scenario(SampleScenarioText()));
  EXPECT_THROW(sim.bus().scan.claim("intruder"), MultiplePublisherError);
  EXPECT_NO_THROW(sim.bus().twist_cmd.claim("joystick"));
}

TEST(Bus, StalledSubscriberDropsOldest) {
  Topic<int> t("x");
  auto slow = t.subscribe(4);
  auto fast = t.subscribe(64);
  for (int i = 0; i < 10; ++i) t.publish(i);
  EXPECT_EQ(slow->dropped(), 6u);
  EXPECT_EQ(fast->dropped(), 0u);
  EXPECT_EQ(t.dropped(), 6u);
  EXPECT_EQ(t.published(), 10u);
  for (int want = 6; want < 10; ++want) EXPECT_EQ(*slow->poll(), want);
  EXPECT_FALSE(slow->poll().has_value());
  EXPECT_EQ(*t.latest(), 9);
}

TEST(Bus, QueueMatchesDequeModel) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t cap = 1 + rng() % 8;
    Topic<int> t("x");
    auto sub = t.subscribe(cap);
    std::deque<int> model;
    std::uint64_t dropped = 0;
    for (int op = 0; op < 100; ++op) {
      if (rng() % 3 != 0) {
        const int v = static_cast<int>(rng() % 1000);
        t.publish(v);
        model.push_back(v);
        if (model.size() > cap) {
          model.pop_front();
          ++dropped;
        }
      } else {
        const auto got = sub->poll();
        if (model.empty()) {
          ASSERT_FALSE(got.has_value());
        } else {
          ASSERT_EQ(*got, model.front());
          model.pop_front();
        }
      }
      ASSERT_EQ(sub->dropped(), dropped);
      ASSERT_EQ(sub->size(), model.size());
    }
  }
}

TEST(Bus, UnsubscribedQueueStopsFilling) {
  Topic<int> t("x");
  auto s = t.subscribe(2);
  t.unsubscribe(s);
  for (int i = 0; i < 5; ++i) t.publish(i);
  EXPECT_EQ(s->size(), 0u);
  EXPECT_EQ(t.dropped(), 0u);
}

// --- clock -------------------------------------------------------------

TEST(Clock, TicksInOneSecond) {
  SimClock c;
  int control = 0, sensor = 0;
  for (int i = 0; i < 500; ++i) {
    control += c.control_tick();
    sensor += c.sensor_tick_after();
    c.advance();
  }
  EXPECT_EQ(control, 50);
  EXPECT_EQ(sensor, 10);
  EXPECT_NEAR(c.now(), 1.0, 1e-12);
}

TEST(Clock, SimSensorTicksAfterOneSecond) {
  Sim sim(parse_scenario(SampleScenarioText()));
  sim.run_for(1.0);
  EXPECT_EQ(sim.sensor_ticks(), 10u);
  EXPECT_EQ(sim.clock().steps, 500u);
}

TEST(Clock, FnvKnownVector) {
  Fnv1a h;
  h.bytes("a", 1);
  EXPECT_EQ(h.value(), 0xaf63dc4c8601ec8cULL);
}

// --- scenario ----------------------------------------------------------

TEST(Scenario, MinimalWorldGetsDefaults) {
  const auto s = parse_scenario("world:\n  bounds: [0, 0, 5, 4]\n");
  EXPECT_EQ(s.world.bounds.max_x, 5.0);
  EXPECT_EQ(s.world.bounds.max_y, 4.0);
  EXPECT_TRUE(s.world.obstacles.empty());
  EXPECT_EQ(s.vehicle.mass, vehicle::VehicleParams{}.mass);
  EXPECT_EQ(s.lidar.num_beams, sensing::LidarSpec{}.num_beams);
  EXPECT_EQ(s.clock.control_div, 10);
  EXPECT_EQ(s.clock.sensor_div, 50);
  EXPECT_EQ(s.mode, Mode::kMapping);
  EXPECT_FALSE(s.map_path.has_value());
  EXPECT_TRUE(validate(s).empty());
}

TEST(Scenario, NegativeMassNamesKey) {
  const auto msg = ExpectValidationError("world: {bounds: [0, 0, 5, 5]}\nvehicle: {mass: -1.0}\n");
  EXPECT_NE(msg.find("vehicle.mass"), std::string::npos) << msg;
}

TEST(Scenario, NavigationNeedsMapPath) {
  const auto msg = ExpectValidationError("world: {bounds: [0, 0, 5, 5]}\nmode: NAVIGATION\n");
  EXPECT_NE(msg.find("map_path"), std::string::npos) << msg;
}

TEST(Scenario, ProblemsAreAggregated) {
  const auto msg = ExpectValidationError(
      "world: {bounds: [0, 0, 5, 5]}\nvehicle: {mass: -1.0}\nlidar: {num_beams: 0}\nbogus: 3\n");
  EXPECT_NE(msg.find("vehicle.mass"), std::string::npos) << msg;
  EXPECT_NE(msg.find("lidar.num_beams"), std::string::npos) << msg;
  EXPECT_NE(msg.find("bogus"), std::string::npos) << msg;
}

TEST(Scenario, UnknownNestedKeyNamesPath) {
  const auto msg = ExpectValidationError("world: {bounds: [0, 0, 5, 5]}\nnav:\n  dwa: {vmax: 1}\n");
  EXPECT_NE(msg.find("nav.dwa.vmax"), std::string::npos) << msg;
}

TEST(Scenario, WrongTypeReported) {
  const auto msg = ExpectValidationError("world: {bounds: [0, 0, 5, 5]}\nseed: banana\n");
  EXPECT_NE(msg.find("seed"), std::string::npos) << msg;
}

TEST(Scenario, StartMustBeFree) {
  const auto msg = ExpectValidationError(
      "world:\n  bounds: [0, 0, 5, 5]\n  obstacles:\n    - {type: circle, center: [1, 1], radius: 0.5}\nstart: [1, 1, 0]\n");
  EXPECT_NE(msg.find("start"), std::string::npos) << msg;
}

TEST(Scenario, SampleWorldLoads) {
  const auto s = load_scenario(std::string(DRONAV_SOURCE_DIR) + "/scenarios/sample_world.yaml");
  EXPECT_EQ(s.name, "sample_world");
  EXPECT_EQ(s.seed, 7u);
  EXPECT_EQ(s.world.obstacles.size(), 6u);
  EXPECT_DOUBLE_EQ(s.start.x, 2.5);
}

TEST(Scenario, MapPathResolvedAgainstScenarioDir) {
  const auto s = parse_scenario("world: {bounds: [0, 0, 5, 5]}\nmode: NAVIGATION\nmap_path: maps/a.yaml\n", "/data/run");
  ASSERT_TRUE(s.map_path.has_value());
  EXPECT_EQ(*s.map_path, "/data/run/maps/a.yaml");
}

TEST(Scenario, MissingFileIsIoError) { EXPECT_THROW(load_scenario("/nonexistent/s.yaml"), Error); }

// --- map files ---------------------------------------------------------

TEST(MapIo, FixtureDecodes) {
  const auto m = load_map(std::string(DRONAV_SOURCE_DIR) + "/tests/fixtures/tiny.yaml");
  ASSERT_EQ(m.grid.geometry.width, 3);
  ASSERT_EQ(m.grid.geometry.height, 3);
  EXPECT_DOUBLE_EQ(m.grid.geometry.resolution, 0.1);
  EXPECT_DOUBLE_EQ(m.grid.geometry.origin.x, -1.0);
  EXPECT_DOUBLE_EQ(m.grid.geometry.origin.y, 2.0);
  // File rows run top-down; grid row 0 is the bottom.
  using C = CellState;
  const C want[3][3] = {{C::kFree, C::kFree, C::kUnknown},
                        {C::kOccupied, C::kOccupied, C::kFree},
                        {C::kFree, C::kOccupied, C::kUnknown}};
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 3; ++x) EXPECT_EQ(m.grid.at({x, y}), want[y][x]) << x << "," << y;
}

TEST(MapIo, OriginIsLowerLeftCorner) {
  const auto m = load_map(std::string(DRONAV_SOURCE_DIR) + "/tests/fixtures/tiny.yaml");
  const auto& g = m.grid.geometry;
  EXPECT_EQ(g.cell_of({-0.999, 2.001}), (mapping::CellIndex{0, 0}));
  EXPECT_EQ(g.cell_of({-0.701, 2.299}), (mapping::CellIndex{2, 2}));
  EXPECT_NEAR(g.center_of({0, 0}).x, -0.95, 1e-12);
  EXPECT_NEAR(g.center_of({0, 0}).y, 2.05, 1e-12);
}

TEST(MapIo, WrittenBytesFollowConvention) {
  TempDir dir("mapbytes");
  OccupancyGrid g({0.05, 2, 2, {1.5, -0.25}}, CellState::kUnknown);
  g.set({0, 0}, CellState::kFree);
  g.set({1, 1}, CellState::kOccupied);
  save_map(g, dir / "m");
  const auto bytes = dronav::testing::ReadFile(dir / "m.pgm");
  ASSERT_EQ(bytes.substr(0, 3), "P5\n");
  ASSERT_EQ(bytes.size() - 4, bytes.find("2 2\n255\n") + 8) << "comments only before the size line";
  const auto* px = reinterpret_cast<const unsigned char*>(bytes.data() + bytes.size() - 4);
  EXPECT_EQ(px[0], 205);  // (0,1)
  EXPECT_EQ(px[1], 0);    // (1,1)
  EXPECT_EQ(px[2], 255);  // (0,0)
  EXPECT_EQ(px[3], 205);  // (1,0)
  const auto yaml = dronav::testing::ReadFile(dir / "m.yaml");
  EXPECT_NE(yaml.find("image: m.pgm"), std::string::npos) << yaml;
  EXPECT_NE(yaml.find("origin: [1.5, -0.25, 0]"), std::string::npos) << yaml;
}

TEST(MapIo, RoundTripProperty) {
  TempDir dir("roundtrip");
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> dim(1, 40), state(0, 2);
  std::uniform_real_distribution<double> org(-20.0, 20.0);
  const double resolutions[] = {0.01, 0.05, 0.1, 0.25, 1.0 / 3.0};
  for (int trial = 0; trial < 60; ++trial) {
    OccupancyGrid g({resolutions[trial % 5], dim(rng), dim(rng), {org(rng), org(rng)}});
    for (auto& c : g.cells) c = static_cast<CellState>(state(rng));
    save_map(g, dir / "m");
    const auto back = load_map(dir / "m.yaml").grid;
    ASSERT_EQ(back, g) << "trial " << trial;
  }
}

TEST(MapIo, LogOddsSavedAsThresholded) {
  TempDir dir("logodds");
  mapping::LogOddsGrid lg({0.05, 3, 1, {0, 0}});
  lg.set({0, 0}, 3.0);
  lg.set({1, 0}, -2.0);
  save_map(lg, dir / "m");
  const auto back = load_map(dir / "m.yaml").grid;
  EXPECT_EQ(back, mapping::to_occupancy(lg));
}

TEST(MapIo, BadMagicReportsPosition) {
  MapMetadata meta;
  try {
    decode_pgm("P2\n1 1\n255\n\x01", meta, "x.pgm");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.line(), 1);
    EXPECT_EQ(e.byte(), 0);
    EXPECT_NE(std::string(e.what()).find("x.pgm"), std::string::npos);
  }
}

TEST(MapIo, TruncatedPixelsRejected) {
  MapMetadata meta;
  EXPECT_THROW(decode_pgm(std::string("P5\n2 2\n255\n\xff\xff", 13), meta), FormatError);
}

TEST(MapIo, MissingFileIsIoError) { EXPECT_THROW(load_map("/nonexistent/m.yaml"), IoError); }

TEST(MapIo, NegateInvertsProbability) {
  MapMetadata meta;
  meta.negate = 1;
  const std::string pgm = std::string("P5\n2 1\n255\n") + '\xff' + '\x00';
  const auto g = decode_pgm(pgm, meta);
  EXPECT_EQ(g.at({0, 0}), CellState::kOccupied);
  EXPECT_EQ(g.at({1, 0}), CellState::kFree);
}

// --- determinism -------------------------------------------------------

TEST(Determinism, SameSeedSameHash) {
  const auto s = parse_scenario(SampleScenarioText());
  Sim a(s), b(s);
  a.step(5000);
  b.step(5000);
  for (Sim* sim : {&a, &b}) sim->apply(TeleopTwist{control::Twist::planar(0.3, 0.4)});
  a.step(5000);
  b.step(5000);
  EXPECT_EQ(a.clock().steps, 10000u);
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_EQ(a.truth().position.x, b.truth().position.x);
}

TEST(Determinism, SeedChangesHash) {
  auto s = parse_scenario(SampleScenarioText());
  Sim a(s);
  s.seed = 8;
  Sim b(s);
  a.step(1000);
  b.step(1000);
  EXPECT_NE(a.hash(), b.hash());
}

TEST(Sim, HoversAfterTakeoff) {
  Sim sim(parse_scenario(SampleScenarioText()));
  RunUntil(sim, 20.0, [&] { return sim.hovering(); });
  ASSERT_TRUE(sim.hovering());
  const auto p0 = sim.truth().position;
  sim.run_for(10.0);
  const auto p1 = sim.truth().position;
  EXPECT_LT(std::hypot(p1.x - p0.x, p1.y - p0.y), 0.05);
  EXPECT_NEAR(p1.z, sim.scenario().controllers.hover_altitude, 0.05);
  EXPECT_EQ(sim.collisions(), 0);
}

// --- commands and arbitration -------------------------------------------

TEST(Sim, TeleopLatestWins) {
  Sim sim(parse_scenario(SampleScenarioText()));
  RunUntil(sim, 20.0, [&] { return sim.hovering(); });
  // 15 Hz teleop against a 50 Hz control tick: every tick sees the newest.
  const int div = sim.clock().control_div;
  int sent = 0;
  control::Twist last;
  for (int tick = 0; tick < 150; ++tick) {
    if (tick * 15 / 50 >= sent) {
      last = control::Twist::planar(0.01 * (sent % 7), 0.02 * (sent % 5));
      sim.apply(TeleopTwist{control::Twist::planar(9.0, 9.0)});
      sim.apply(TeleopTwist{last});
      ++sent;
    }
    sim.step(div);
    ASSERT_EQ(sim.twist_in_effect(), last) << "tick " << tick;
  }
}

TEST(Sim, NavOutputIgnoredInMapping) {
  Sim sim(parse_scenario(SampleScenarioText()));
  RunUntil(sim, 20.0, [&] { return sim.hovering(); });
  sim.bus().twist_cmd.publish({TwistSource::kNav, control::Twist::planar(0.4, 0.0), sim.clock().now()});
  sim.step(sim.clock().control_div);
  EXPECT_EQ(sim.twist_in_effect(), control::Twist{});
}

TEST(Sim, CommandsOutsideTheirMode) {
  Sim sim(parse_scenario(SampleScenarioText()));
  EXPECT_FALSE(sim.apply(SetGoal{{5, 5, 0}}).ok);
  EXPECT_FALSE(sim.apply(SetInitialPose{{5, 5, 0}, std::nullopt}).ok);
  const auto r = sim.apply(SetMode{Mode::kNavigation, std::nullopt});
  EXPECT_FALSE(r.ok);
  EXPECT_NE(r.message.find("ValidationError"), std::string::npos);
  EXPECT_EQ(sim.mode(), Mode::kMapping);
  EXPECT_FALSE(sim.apply(TeleopTwist{control::Twist::planar(NAN, 0)}).ok);
}

TEST(Sim, NavigationModeArbitration) {
  TempDir dir("navarb");
  Sim sim(parse_scenario(NavScenarioText(WriteSampleMap(dir))));
  ASSERT_EQ(sim.mode(), Mode::kNavigation);
  ASSERT_TRUE(sim.apply(SetInitialPose{sim.scenario().start, std::array<double, 3>{0.05, 0.05, 0.05}}).ok);

  // set_goal takes effect before the next control tick.
  ASSERT_TRUE(sim.apply(SetGoal{{7.5, 2.0, 0.0}}).ok);
  EXPECT_EQ(sim.navigator()->status().state, nav::NavState::kPlanning);
  sim.step(sim.clock().control_div);
  EXPECT_NE(sim.navigator()->status().state, nav::NavState::kIdle);

  RunUntil(sim, 30.0, [&] { return sim.navigator()->status().state == nav::NavState::kFollowing; });
  ASSERT_EQ(sim.navigator()->status().state, nav::NavState::kFollowing);
  const auto teleop = control::Twist::planar(0.0, 1.0);
  const auto r = sim.apply(TeleopTwist{teleop});
  EXPECT_TRUE(r.ok);
  EXPECT_NE(r.message.find("ignored"), std::string::npos);
  for (int i = 0; i < 10; ++i) {
    sim.step(sim.clock().control_div);
    ASSERT_NE(sim.twist_in_effect(), teleop);
  }
  EXPECT_TRUE(sim.apply(CancelGoal{}).ok);
  sim.apply(TeleopTwist{teleop});
  sim.step(sim.clock().control_div);
  EXPECT_EQ(sim.twist_in_effect(), teleop);
}

TEST(Sim, AddObstacleUpdatesCostmapAndReset) {
  TempDir dir("addobs");
  Sim sim(parse_scenario(NavScenarioText(WriteSampleMap(dir))));
  const auto v0 = sim.costmap_version();
  const mapping::CellIndex c = sim.costmap()->geometry().cell_of({8.0, 8.0});
  ASSERT_FALSE(sim.costmap()->blocked(c));
  ASSERT_TRUE(sim.apply(AddObstacle{vehicle::Circle{{8.0, 8.0}, 0.3}}).ok);
  EXPECT_GT(sim.costmap_version(), v0);
  EXPECT_TRUE(sim.costmap()->blocked(c));
  EXPECT_EQ(sim.world().obstacles.size(), 7u);
  ASSERT_TRUE(sim.apply(Reset{}).ok);
  EXPECT_FALSE(sim.costmap()->blocked(c));
  EXPECT_EQ(sim.world().obstacles.size(), 6u);
}

TEST(Sim, SaveMapThenNavigate) {
  TempDir dir("savenav");
  Sim sim(parse_scenario(SampleScenarioText()));
  sim.run_for(3.0);
  const auto r = sim.apply(SaveMap{dir / "m"});
  ASSERT_TRUE(r.ok) << r.message;
  EXPECT_TRUE(std::filesystem::exists(dir / "m.pgm"));
  ASSERT_TRUE(sim.apply(SetMode{Mode::kNavigation, dir / "m.yaml"}).ok);
  EXPECT_EQ(sim.mode(), Mode::kNavigation);
  EXPECT_NE(sim.static_map(), nullptr);
  EXPECT_EQ(sim.slam(), nullptr);
  EXPECT_FALSE(sim.apply(SaveMap{dir / "n"}).ok);
  // Back to the ground at the start pose.
  EXPECT_DOUBLE_EQ(sim.truth().position.x, sim.scenario().start.x);
  EXPECT_DOUBLE_EQ(sim.truth().position.z, 0.0);
}

// --- protocol ----------------------------------------------------------

TEST(Protocol, MalformedJsonMentionsParse) {
  for (const std::string bad : {"{", "nope", "[1,2]", "{\"v\":1}", "{\"v\":2,\"type\":\"reset\"}",
                                "{\"v\":1,\"type\":\"fly\"}", "{\"v\":1,\"type\":\"set_goal\",\"x\":\"a\",\"y\":0}",
                                "{\"v\":1,\"type\":\"teleop_twist\",\"vx\":1e999}"}) {
    try {
      decode_command(bad);
      ADD_FAILURE() << bad;
    } catch (const ProtocolError& e) {
      EXPECT_NE(std::string(e.what()).find("parse"), std::string::npos) << e.what();
    }
  }
}

TEST(Protocol, CommandsRoundTrip) {
  const std::vector<Command> cmds = {
      TeleopTwist{control::Twist::planar(0.25, -0.5)},
      SetGoal{{1.5, 2.5, -1.0}},
      CancelGoal{},
      SetInitialPose{{1, 2, 3}, std::nullopt},
      SetInitialPose{{1, 2, 3}, std::array<double, 3>{0.1, 0.2, 0.3}},
      SetMode{Mode::kNavigation, std::string("maps/x.yaml")},
      SetMode{Mode::kMapping, std::nullopt},
      SaveMap{"out/map"},
      Reset{},
      AddObstacle{vehicle::Rect{1, 2, 3, 4}},
      AddObstacle{vehicle::Circle{{1, 2}, 0.5}},
  };
  for (const auto& c : cmds) {
    const auto j = command_to_json(c);
    EXPECT_EQ(j.at("v"), kProtocolVersion);
    const auto back = decode_command(j.dump());
    EXPECT_EQ(command_to_json(back.command), j) << j.dump();
  }
}

TEST(Protocol, AckEchoesId) {
  const auto d = decode_command(R"({"v":1,"type":"reset","id":42})");
  ASSERT_TRUE(d.id.has_value());
  const auto ack = ack_message(d.command, {false, "nope"}, d.id);
  EXPECT_EQ(ack.at("type"), "ack");
  EXPECT_EQ(ack.at("id"), 42);
  EXPECT_EQ(ack.at("ok"), false);
  EXPECT_EQ(ack.at("command"), "reset");
}

TEST(Protocol, DeltaReplayReconstructsGrid) {
  std::mt19937_64 rng(3);
  GridDeltaEncoder enc("grid_delta");
  GridView view;
  mapping::GridGeometry geo{0.05, 30, 20, {0, 0}};
  std::vector<std::uint8_t> cur(geo.size(), kWireUnknown);
  const std::uint8_t vals[] = {kWireFree, kWireOccupied, kWireUnknown};
  std::uint64_t last_version = 0;
  for (int step = 0; step < 300; ++step) {
    if (step == 150) {  // geometry change forces a full frame
      geo = {0.05, 40, 25, {-0.5, -0.5}};
      cur.assign(geo.size(), kWireUnknown);
    }
    const int changes = static_cast<int>(rng() % 4) == 0 ? 0 : static_cast<int>(rng() % 30);
    for (int k = 0; k < changes; ++k) cur[rng() % cur.size()] = vals[rng() % 3];
    const auto msg = enc.encode(geo, cur);
    if (!msg) {
      EXPECT_EQ(view.values, cur);
      continue;
    }
    EXPECT_EQ(msg->at("v"), kProtocolVersion);
    EXPECT_GT(msg->at("version").get<std::uint64_t>(), last_version);
    last_version = msg->at("version").get<std::uint64_t>();
    apply_grid_delta(view, *msg);
    ASSERT_EQ(view.values, cur) << "step " << step;
    ASSERT_EQ(view.geometry, geo);
  }
}

TEST(Protocol, UnchangedGridSendsNothing) {
  GridDeltaEncoder enc("grid_delta");
  const mapping::GridGeometry geo{0.05, 4, 4, {0, 0}};
  std::vector<std::uint8_t> v(16, kWireFree);
  EXPECT_TRUE(enc.encode(geo, v).has_value());
  EXPECT_FALSE(enc.encode(geo, v).has_value());
  v[5] = kWireOccupied;
  const auto d = enc.encode(geo, v);
  ASSERT_TRUE(d.has_value());
  EXPECT_FALSE(d->at("full").get<bool>());
  EXPECT_EQ(d->at("runs"), nlohmann::json::parse("[[5,1,100]]"));
}

TEST(Protocol, DeltaOnWrongBaseRejected) {
  GridDeltaEncoder enc("grid_delta");
  const mapping::GridGeometry geo{0.05, 4, 4, {0, 0}};
  std::vector<std::uint8_t> v(16, kWireFree);
  GridView view;
  apply_grid_delta(view, *enc.encode(geo, v));
  v[0] = kWireOccupied;
  enc.encode(geo, v);  // lost in transit
  v[1] = kWireOccupied;
  EXPECT_THROW(apply_grid_delta(view, *enc.encode(geo, v)), ProtocolError);
}

TEST(Protocol, StreamerCoversStateTypes) {
  TempDir dir("streamer");
  Sim sim(parse_scenario(NavScenarioText(WriteSampleMap(dir))));
  sim.apply(SetInitialPose{sim.scenario().start, std::nullopt});
  sim.run_for(0.5);
  StateStreamer st;
  std::set<std::string> types;
  for (const auto& m : st.frame(sim)) {
    EXPECT_EQ(m.at("v"), kProtocolVersion);
    types.insert(m.at("type").get<std::string>());
  }
  for (const char* t : {"snapshot", "costmap_delta", "particles", "nav_status", "scan", "tf"})
    EXPECT_TRUE(types.count(t)) << t;
  // Second frame: the costmap has not changed.
  sim.run_for(0.05);
  for (const auto& m : st.frame(sim)) EXPECT_NE(m.at("type"), "costmap_delta");
}

TEST(Protocol, MappingStreamHasGrid) {
  Sim sim(parse_scenario(SampleScenarioText()));
  sim.run_for(1.0);
  StateStreamer st;
  bool grid = false;
  for (const auto& m : st.frame(sim)) grid |= m.at("type") == "grid_delta";
  EXPECT_TRUE(grid);
}

// --- scripts and headless runs ------------------------------------------

TEST(Headless, EmptyScriptReport) {
  const auto s = parse_scenario(SampleScenarioText());
  const auto report = run_headless(s, parse_script("steps: []\n"));
  EXPECT_EQ(report.commands, 0);
  EXPECT_EQ(report.goals_succeeded, 0);
  EXPECT_TRUE(report.goals.empty());
  const auto j = report.to_json();
  for (const char* k : {"scenario", "seed", "commands", "sim_time", "wall_time", "goals", "goals_succeeded",
                        "collisions", "crashed", "timed_out", "hash"})
    EXPECT_TRUE(j.contains(k)) << k;
  EXPECT_EQ(j.at("scenario"), "sample_world");
  EXPECT_EQ(nlohmann::json::parse(j.dump()), j);
}

TEST(Headless, ScriptErrorsNameSteps) {
  try {
    parse_script("steps:\n  - hold: 1\n  - teleop: {vx: 0.1, duration: -1}\n  - jump: 2\n");
    FAIL();
  } catch (const ValidationError& e) {
    const std::string m = e.what();
    EXPECT_NE(m.find("steps[1].teleop.duration"), std::string::npos) << m;
    EXPECT_NE(m.find("steps[2]"), std::string::npos) << m;
  }
}

TEST(Headless, TimeoutCarriesPartialReport) {
  const auto s = parse_scenario(SampleScenarioText());
  try {
    run_headless(s, parse_script("timeout: 2\nsteps:\n  - hold: 5\n"));
    FAIL();
  } catch (const TimeoutError& e) {
    EXPECT_TRUE(e.partial().timed_out);
    EXPECT_NEAR(e.partial().sim_time, 2.0, 0.05);
  }
}

TEST(Headless, TeleopScriptMovesAndMaps) {
  const auto s = parse_scenario(SampleScenarioText());
  Sim sim(s);
  const auto report = run_headless(
      sim, parse_script("steps:\n  - wait_hover: {}\n  - teleop: {vx: 0.3, duration: 2}\n  - hold: 1\n"));
  EXPECT_GE(report.commands, 2);
  EXPECT_GT(sim.truth().position.x, s.start.x + 0.3);
  ASSERT_TRUE(report.mapping.has_value());
  EXPECT_GT(report.mapping->occupied_cells, 0);
  EXPECT_EQ(report.collisions, 0);
}

// --- run log -----------------------------------------------------------

TEST(RunLog, ReplayMatches) {
  TempDir dir("replay");
  auto s = parse_scenario(SampleScenarioText());
  std::stringstream log;
  Sim sim(s);
  RunLog rec(log);
  rec.attach(sim, dir.path.string());
  const auto report = run_headless(
      sim, parse_script("steps:\n  - wait_hover: {}\n  - teleop: {vx: 0.2, wz: 0.3, duration: 1.5}\n"
                        "  - add_obstacle: {type: circle, center: [8, 8], radius: 0.2}\n  - hold: 0.5\n"));
  rec.finish(report);

  std::stringstream in(log.str());
  const auto r = replay_log(in);
  EXPECT_TRUE(r.ok());
  EXPECT_EQ(r.ticks_checked, sim.sensor_ticks());
  EXPECT_GE(r.commands, 3u);
  EXPECT_EQ(r.final_hash, sim.hash());
  ASSERT_TRUE(r.logged_final_hash.has_value());
  EXPECT_EQ(*r.logged_final_hash, sim.hash());
}

TEST(RunLog, TamperedTickDetected) {
  auto s = parse_scenario(SampleScenarioText());
  std::stringstream log;
  Sim sim(s);
  RunLog rec(log);
  rec.attach(sim, ".");
  sim.run_for(1.0);
  sim.apply(TeleopTwist{control::Twist::planar(0.2, 0.0)});
  sim.run_for(8.0);  // teleop only acts once hovering
  std::string text = log.str();
  // Drop the command: the run diverges after it.
  const auto a = text.find("{\"cmd\"");
  ASSERT_NE(a, std::string::npos);
  text.erase(a, text.find('\n', a) - a + 1);
  std::stringstream in(text);
  const auto r = replay_log(in);
  EXPECT_FALSE(r.ok());
  ASSERT_TRUE(r.first_mismatch_step.has_value());
  EXPECT_GT(*r.first_mismatch_step, 500u);
}

TEST(RunLog, GarbageLineIsFormatError) {
  std::stringstream in("{\"type\":\"header\"\n");
  EXPECT_THROW(replay_log(in), FormatError);
  std::stringstream in2("{\"type\":\"tick\",\"step\":5,\"hash\":\"0\"}\n");
  EXPECT_THROW(replay_log(in2), FormatError);
}

#include <gtest/gtest.h>

#include <atomic>
#include <future>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <nlohmann/json.hpp>

#include "dronav/runtime/protocol.hpp"
#include "dronav/runtime/server.hpp"
#include "runtime_fixtures.hpp"

using namespace dronav;
using namespace dronav::runtime;
using nlohmann::json;

namespace {

namespace beast = boost::beast;
namespace net = boost::asio;
using tcp = net::ip::tcp;

// Runs serve() on a background thread until destroyed.
class ServerThread {
 public:
  ServerThread(Sim& sim, ServeOptions opts) {
    std::promise<unsigned short> ready;
    auto port = ready.get_future();
    opts.bind = "127.0.0.1:0";
    opts.should_stop = [this] { return stop_.load(); };
    opts.on_listening = [&ready](unsigned short p) { ready.set_value(p); };
    thread_ = std::thread([this, &sim, opts] {
      try {
        stats_ = serve(sim, opts);
      } catch (...) {
        error_ = std::current_exception();
      }
    });
    if (port.wait_for(std::chrono::seconds(10)) != std::future_status::ready) ADD_FAILURE() << "server did not start";
    else port_ = port.get();
  }
  ~ServerThread() {
    stop_ = true;
    if (thread_.joinable()) thread_.join();
  }
  unsigned short port() const { return port_; }
  const ServeStats& stop() {
    stop_ = true;
    if (thread_.joinable()) thread_.join();
    if (error_) std::rethrow_exception(error_);
    return stats_;
  }

 private:
  std::atomic<bool> stop_{false};
  std::thread thread_;
  unsigned short port_ = 0;
  ServeStats stats_;
  std::exception_ptr error_;
};

class Client {
 public:
  explicit Client(unsigned short port) : ws_(io_) {
    tcp::resolver resolver(io_);
    net::connect(ws_.next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
    ws_.handshake("127.0.0.1", "/");
  }
  void send(const std::string& text) { ws_.write(net::buffer(text)); }
  json read() {
    beast::flat_buffer buf;
    ws_.read(buf);
    return json::parse(beast::buffers_to_string(buf.data()));
  }
  // First message satisfying `pred`, within `limit` messages.
  json read_until(const std::function<bool(const json&)>& pred, int limit = 5000) {
    for (int i = 0; i < limit; ++i) {
      auto m = read();
      if (pred(m)) return m;
    }
    ADD_FAILURE() << "message not seen";
    return {};
  }
  void close() { ws_.close(beast::websocket::close_code::normal); }

 private:
  net::io_context io_;
  beast::websocket::stream<tcp::socket> ws_;
};

auto of_type(const std::string& t) {
  return [t](const json& m) { return m.at("type") == t; };
}

}  // namespace

TEST(Server, HelloThenStateStream) {
  Sim sim(parse_scenario(dronav::testing::SampleScenarioText()));
  ServeOptions opts;
  opts.realtime_factor = 4.0;
  ServerThread server(sim, opts);
  Client c(server.port());
  const auto hello = c.read();
  EXPECT_EQ(hello.at("type"), "hello");
  EXPECT_EQ(hello.at("v"), kProtocolVersion);
  EXPECT_EQ(hello.at("mode"), "MAPPING");
  std::set<std::string> seen;
  double last_t = -1.0;
  double min_gap = 1e9;
  for (int i = 0; i < 400 && seen.size() < 5; ++i) {
    const auto m = c.read();
    seen.insert(m.at("type").get<std::string>());
    if (m.at("type") == "snapshot") {
      const double t = m.at("t").get<double>();
      if (last_t >= 0) min_gap = std::min(min_gap, t - last_t);
      last_t = t;
    }
  }
  for (const char* t : {"snapshot", "grid_delta", "scan", "tf"}) EXPECT_TRUE(seen.count(t)) << t;
  EXPECT_GE(min_gap, 0.05 - 1e-9);  // at most 20 Hz in sim time
  c.close();
  EXPECT_EQ(server.stop().connections, 1u);
}

TEST(Server, MalformedInputKeepsConnection) {
  Sim sim(parse_scenario(dronav::testing::SampleScenarioText()));
  ServerThread server(sim, ServeOptions{});
  Client c(server.port());
  c.read();  // hello
  c.send("{not json");
  const auto err = c.read_until(of_type("error"));
  EXPECT_NE(err.at("message").get<std::string>().find("parse"), std::string::npos) << err.dump();
  c.send(R"({"v":1,"type":"warp"})");
  EXPECT_NE(c.read_until(of_type("error")).at("message").get<std::string>().find("parse"), std::string::npos);

  c.send(R"({"v":1,"type":"teleop_twist","vx":0.1,"wz":0,"id":"t1"})");
  const auto ack = c.read_until(of_type("ack"));
  EXPECT_EQ(ack.at("id"), "t1");
  EXPECT_EQ(ack.at("ok"), true);
  c.close();
  const auto stats = server.stop();
  EXPECT_EQ(stats.parse_errors, 2u);
  EXPECT_EQ(stats.commands, 1u);
}

TEST(Server, SetGoalReachesPlanning) {
  dronav::testing::TempDir dir("serve_nav");
  Sim sim(parse_scenario(dronav::testing::NavScenarioText(dronav::testing::WriteSampleMap(dir))));
  ServerThread server(sim, ServeOptions{});
  Client c(server.port());
  EXPECT_EQ(c.read().at("mode"), "NAVIGATION");
  c.send(R"({"v":1,"type":"set_initial_pose","x":2.5,"y":2.5,"theta":0})");
  EXPECT_EQ(c.read_until(of_type("ack")).at("ok"), true);
  c.send(R"({"v":1,"type":"set_goal","x":7.5,"y":2.0,"theta":0})");
  EXPECT_EQ(c.read_until(of_type("ack")).at("ok"), true);
  const auto ns = c.read_until([](const json& m) { return m.at("type") == "nav_status" && m.at("state") != "IDLE"; });
  EXPECT_TRUE(ns.at("state") == "PLANNING" || ns.at("state") == "FOLLOWING") << ns.dump();
  c.send(R"({"v":1,"type":"set_mode","mode":"MAPPING"})");
  EXPECT_EQ(c.read_until(of_type("ack")).at("ok"), true);
  c.close();
}

TEST(Server, ModeSwitchWithoutMapIsValidationError) {
  Sim sim(parse_scenario(dronav::testing::SampleScenarioText()));
  ServerThread server(sim, ServeOptions{});
  Client c(server.port());
  c.read();
  c.send(R"({"v":1,"type":"set_mode","mode":"NAVIGATION"})");
  const auto ack = c.read_until(of_type("ack"));
  EXPECT_EQ(ack.at("ok"), false);
  EXPECT_NE(ack.at("message").get<std::string>().find("ValidationError"), std::string::npos);
  c.close();
}

TEST(Server, TwoClientsEachGetFullGrid) {
  Sim sim(parse_scenario(dronav::testing::SampleScenarioText()));
  ServeOptions opts;
  opts.realtime_factor = 4.0;
  ServerThread server(sim, opts);
  Client a(server.port());
  a.read_until(of_type("grid_delta"));
  Client b(server.port());
  const auto first = b.read_until(of_type("grid_delta"));
  EXPECT_TRUE(first.at("full").get<bool>());
  a.close();
  b.close();
  EXPECT_EQ(server.stop().connections, 2u);
}

TEST(Server, BadBindAddress) {
  Sim sim(parse_scenario(dronav::testing::SampleScenarioText()));
  ServeOptions opts;
  opts.bind = "no-port-here";
  EXPECT_THROW(serve(sim, opts), BindError);
  // Hold a port, then ask for it again. Binding fails before the sim is touched.
  ServerThread holder(sim, ServeOptions{});
  opts.bind = "127.0.0.1:" + std::to_string(holder.port());
  EXPECT_THROW(serve(sim, opts), BindError);
}

TEST(Server, MaxSimTimeStops) {
  Sim sim(parse_scenario(dronav::testing::SampleScenarioText()));
  ServeOptions opts;
  opts.bind = "127.0.0.1:0";
  opts.realtime_factor = 0.0;
  opts.max_sim_time = 2.0;
  serve(sim, opts);
  EXPECT_NEAR(sim.clock().now(), 2.0, 1e-9);
}

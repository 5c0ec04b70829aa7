#include "dronav/runtime/server.hpp"

#include <algorithm>
#include <chrono>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "dronav/runtime/protocol.hpp"

namespace dronav::runtime {

namespace {

namespace beast = boost::beast;
namespace websocket = boost::beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using Frame = std::shared_ptr<const std::string>;

class Session;

struct Inbound {
  std::uint64_t session = 0;
  std::string text;
};

// Everything the two threads share. Only strings and handles cross.
struct Exchange {
  std::mutex mutex;
  std::deque<Inbound> inbound;
  std::vector<std::pair<std::uint64_t, std::weak_ptr<Session>>> joined;  // not yet seen by the sim thread
  std::vector<std::weak_ptr<Session>> all;                               // for shutdown, io thread only
  std::size_t inbound_capacity = 256;
  std::size_t outbound_capacity = 512;
  std::atomic<std::uint64_t> inbound_dropped{0};
  std::atomic<std::uint64_t> outbound_dropped{0};
  std::atomic<std::uint64_t> next_id{1};
};

class Session : public std::enable_shared_from_this<Session> {
 public:
  Session(tcp::socket socket, Exchange& ex) : ws_(std::move(socket)), ex_(ex), id_(ex.next_id++) {}

  void start() {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.text(true);
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
      if (ec) return self->shut();
      {
        std::lock_guard lock(self->ex_.mutex);
        self->ex_.joined.emplace_back(self->id_, self);
      }
      self->read();
    });
  }

  /// Thread-safe: hops onto the io thread.
  void send(Frame f) {
    net::post(ws_.get_executor(), [self = shared_from_this(), f = std::move(f)]() mutable {
      if (self->closed_) return;
      auto& q = self->out_;
      if (q.size() >= self->ex_.outbound_capacity) {
        // the front may be mid-write
        q.erase(q.begin() + (self->writing_ ? 1 : 0));
        ++self->ex_.outbound_dropped;
      }
      q.push_back(std::move(f));
      if (!self->writing_) self->write();
    });
  }

  void close() {
    if (closed_) return;
    closed_ = true;
    beast::error_code ec;
    beast::get_lowest_layer(ws_).socket().shutdown(tcp::socket::shutdown_both, ec);
    beast::get_lowest_layer(ws_).close();
  }

  bool closed() const { return closed_; }

 private:
  void read() {
    ws_.async_read(buf_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->shut();
      Inbound msg{self->id_, beast::buffers_to_string(self->buf_.data())};
      self->buf_.consume(self->buf_.size());
      {
        std::lock_guard lock(self->ex_.mutex);
        if (self->ex_.inbound.size() >= self->ex_.inbound_capacity) {
          self->ex_.inbound.pop_front();
          ++self->ex_.inbound_dropped;
        }
        self->ex_.inbound.push_back(std::move(msg));
      }
      self->read();
    });
  }

  void write() {
    writing_ = true;
    ws_.async_write(net::buffer(*out_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->writing_ = false;
      if (ec) return self->shut();
      self->out_.pop_front();
      if (!self->out_.empty()) self->write();
    });
  }

  void shut() { closed_ = true; }

  websocket::stream<beast::tcp_stream> ws_;
  Exchange& ex_;
  std::uint64_t id_;
  beast::flat_buffer buf_;
  std::deque<Frame> out_;
  bool writing_ = false;
  std::atomic<bool> closed_{false};

};

struct Listener {
  net::io_context& io;
  tcp::acceptor acceptor;
  Exchange& ex;

  void accept() {
    acceptor.async_accept(net::make_strand(io), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;  // acceptor closed
      auto s = std::make_shared<Session>(std::move(socket), ex);
      ex.all.erase(std::remove_if(ex.all.begin(), ex.all.end(), [](const auto& w) { return w.expired(); }),
                   ex.all.end());
      ex.all.push_back(s);
      s->start();
      accept();
    });
  }
};

tcp::endpoint parse_bind(net::io_context& io, const std::string& bind) {
  const auto colon = bind.rfind(':');
  if (colon == std::string::npos) throw BindError("bind address '" + bind + "' is not host:port");
  std::string host = bind.substr(0, colon);
  const std::string port = bind.substr(colon + 1);
  if (host.size() >= 2 && host.front() == '[' && host.back() == ']') host = host.substr(1, host.size() - 2);
  beast::error_code ec;
  tcp::resolver resolver(io);
  const auto results = resolver.resolve(host, port, tcp::resolver::passive | tcp::resolver::numeric_service, ec);
  if (ec || results.empty()) throw BindError("cannot resolve '" + bind + "': " + ec.message());
  return results.begin()->endpoint();
}

std::string hello(const Sim& sim) {
  return nlohmann::json{{"v", kProtocolVersion},
                        {"type", "hello"},
                        {"scenario", sim.scenario().name},
                        {"mode", to_string(sim.mode())},
                        {"seed", sim.scenario().seed}}
      .dump();
}

struct Client {
  std::weak_ptr<Session> session;
  StateStreamer streamer;
};

}  // namespace

ServeStats serve(Sim& sim, const ServeOptions& options) {
  if (!(options.rate_hz > 0)) throw Error("serve: rate_hz must be > 0");
  ServeStats stats;
  net::io_context io;
  Exchange ex;
  ex.inbound_capacity = std::max<std::size_t>(1, options.inbound_capacity);
  ex.outbound_capacity = std::max<std::size_t>(1, options.outbound_capacity);

  Listener listener{io, tcp::acceptor(io), ex};
  try {
    const auto ep = parse_bind(io, options.bind);
    listener.acceptor.open(ep.protocol());
    listener.acceptor.set_option(net::socket_base::reuse_address(true));
    listener.acceptor.bind(ep);
    listener.acceptor.listen(net::socket_base::max_listen_connections);
  } catch (const boost::system::system_error& e) {
    throw BindError("cannot listen on '" + options.bind + "': " + e.code().message());
  }
  const unsigned short port = listener.acceptor.local_endpoint().port();
  listener.accept();

  auto guard = net::make_work_guard(io);
  std::thread net_thread([&io] { io.run(); });
  struct Joiner {
    net::io_context& io;
    Listener& listener;
    Exchange& ex;
    net::executor_work_guard<net::io_context::executor_type>& guard;
    std::thread& t;
    ~Joiner() {
      net::post(io, [this] {
        beast::error_code ec;
        listener.acceptor.close(ec);
        for (auto& w : ex.all)
          if (auto s = w.lock()) s->close();
      });
      guard.reset();
      t.join();
    }
  } joiner{io, listener, ex, guard, net_thread};

  if (options.on_listening) options.on_listening(port);

  std::map<std::uint64_t, Client> clients;
  const auto& clock = sim.clock();
  const double publish_period = 1.0 / std::min(options.rate_hz, 20.0);
  std::optional<double> last_publish;
  const double sim_start = clock.now();
  const auto wall_start = std::chrono::steady_clock::now();
  std::deque<Inbound> inbox;
  std::vector<std::pair<std::uint64_t, std::weak_ptr<Session>>> joined;

  auto send = [&](Client& c, std::string text) {
    if (auto s = c.session.lock()) s->send(std::make_shared<const std::string>(std::move(text)));
  };

  while (true) {
    if (options.should_stop && options.should_stop()) break;
    if (options.max_sim_time && clock.now() >= *options.max_sim_time - 1e-9) break;

    {
      std::lock_guard lock(ex.mutex);
      inbox.swap(ex.inbound);
      joined.swap(ex.joined);
    }
    for (auto& [id, w] : joined) {
      ++stats.connections;
      auto& c = clients[id];
      c.session = w;
      send(c, hello(sim));
    }
    joined.clear();
    for (auto& msg : inbox) {
      auto it = clients.find(msg.session);
      if (it == clients.end()) continue;
      try {
        const auto decoded = decode_command(msg.text);
        const auto res = sim.apply(decoded.command);
        ++stats.commands;
        send(it->second, ack_message(decoded.command, res, decoded.id).dump());
      } catch (const ProtocolError& e) {
        ++stats.parse_errors;
        send(it->second, error_message(e.what()).dump());
      }
    }
    inbox.clear();
    std::erase_if(clients, [](const auto& kv) {
      auto s = kv.second.session.lock();
      return !s || s->closed();
    });

    // spaced from the last publish so the rate never exceeds the cap
    if (!last_publish || clock.now() >= *last_publish + publish_period - 1e-9) {
      for (auto& [id, c] : clients)
        for (const auto& m : c.streamer.frame(sim)) send(c, m.dump());
      last_publish = clock.now();
    }

    const double before = clock.now();
    sim.step(clock.control_div);
    if (options.realtime_factor > 0) {
      const double sim_elapsed = clock.now() - sim_start;
      std::this_thread::sleep_until(wall_start + std::chrono::duration<double>(sim_elapsed / options.realtime_factor));
    }
    if (clock.now() == before) {
      // frozen after a crash: keep answering clients without spinning
      if (options.max_sim_time) break;
      std::this_thread::sleep_for(std::chrono::duration<double>(clock.control_period()));
    }
  }
  stats.inbound_dropped = ex.inbound_dropped;
  stats.outbound_dropped = ex.outbound_dropped;
  return stats;
}

}  // namespace dronav::runtime

#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "dronav/control/flight_controller.hpp"
#include "dronav/error.hpp"
#include "dronav/geom/transform_tree.hpp"
#include "dronav/localize/amcl.hpp"
#include "dronav/mapping/grid.hpp"
#include "dronav/nav/navigator.hpp"
#include "dronav/sensing/lidar.hpp"
#include "dronav/vehicle/quadrotor.hpp"

namespace dronav::runtime {

class MultiplePublisherError : public Error {
  using Error::Error;
};

/// Bounded FIFO fed by one topic. When full, the oldest message is dropped.
template <class T>
class Subscription {
 public:
  explicit Subscription(std::size_t capacity) : capacity_(capacity ? capacity : 1) {}

  std::optional<T> poll() {
    std::lock_guard lock(mu_);
    if (queue_.empty()) return std::nullopt;
    T v = std::move(queue_.front());
    queue_.pop_front();
    return v;
  }
  std::size_t size() const {
    std::lock_guard lock(mu_);
    return queue_.size();
  }
  std::uint64_t dropped() const {
    std::lock_guard lock(mu_);
    return dropped_;
  }

  void push(const T& v) {
    std::lock_guard lock(mu_);
    if (queue_.size() == capacity_) {
      queue_.pop_front();
      ++dropped_;
    }
    queue_.push_back(v);
  }

 private:
  std::size_t capacity_;
  mutable std::mutex mu_;
  std::deque<T> queue_;
  std::uint64_t dropped_ = 0;
};

template <class T>
class Topic {
 public:
  explicit Topic(std::string name, bool shared_publishers = false)
      : name_(std::move(name)), shared_(shared_publishers) {}

  const std::string& name() const { return name_; }

  /// Registers `who` as publisher. A second distinct publisher throws unless
  /// the topic was created with shared publishers.
  void claim(const std::string& who) {
    std::lock_guard lock(mu_);
    for (const auto& p : publishers_)
      if (p == who) return;
    if (!shared_ && !publishers_.empty())
      throw MultiplePublisherError("topic " + name_ + " already published by " + publishers_.front());
    publishers_.push_back(who);
  }

  void publish(const T& msg) {
    std::vector<std::shared_ptr<Subscription<T>>> subs;
    {
      std::lock_guard lock(mu_);
      latest_ = msg;
      ++count_;
      subs = subs_;
    }
    for (auto& s : subs) s->push(msg);
  }

  std::optional<T> latest() const {
    std::lock_guard lock(mu_);
    return latest_;
  }

  std::shared_ptr<Subscription<T>> subscribe(std::size_t capacity = 16) {
    auto s = std::make_shared<Subscription<T>>(capacity);
    std::lock_guard lock(mu_);
    subs_.push_back(s);
    return s;
  }

  void unsubscribe(const std::shared_ptr<Subscription<T>>& s) {
    std::lock_guard lock(mu_);
    std::erase(subs_, s);
  }

  std::uint64_t published() const {
    std::lock_guard lock(mu_);
    return count_;
  }
  std::uint64_t dropped() const {
    std::lock_guard lock(mu_);
    std::uint64_t n = 0;
    for (const auto& s : subs_) n += s->dropped();
    return n;
  }

 private:
  std::string name_;
  bool shared_;
  mutable std::mutex mu_;
  std::vector<std::string> publishers_;
  std::optional<T> latest_;
  std::vector<std::shared_ptr<Subscription<T>>> subs_;
  std::uint64_t count_ = 0;
};

enum class TwistSource : std::uint8_t { kTeleop, kNav };

struct TwistCommand {
  TwistSource source = TwistSource::kTeleop;
  control::Twist twist;
  double stamp = 0.0;
};

struct PoseMsg {
  double stamp = 0.0;
  geom::Pose2D pose;
};

struct AmclMsg {
  double stamp = 0.0;
  localize::PoseEstimate estimate;
  std::shared_ptr<const std::vector<localize::Particle>> particles;
};

struct GridSnapshot {
  double stamp = 0.0;
  std::uint64_t version = 0;
  mapping::OccupancyGrid grid;
};

struct CostmapSnapshot {
  double stamp = 0.0;
  std::uint64_t version = 0;
  mapping::GridGeometry geometry;
  std::vector<std::uint8_t> cost;  // effective cost per cell
};

struct PathMsg {
  double stamp = 0.0;
  std::vector<geom::Pose2D> waypoints;
  double cost = 0.0;
};

struct NavStatusMsg {
  double stamp = 0.0;
  nav::NavStatus status;
  int replans = 0;
};

struct TransformMsg {
  double stamp = 0.0;
  std::vector<geom::TransformEdge> edges;
};

struct TopicStats {
  std::string name;
  std::uint64_t published = 0;
  std::uint64_t dropped = 0;
};

/// In-process publish/subscribe hub. Every topic has one publisher except
/// twist_cmd, which teleop and nav share under the mode arbiter.
struct TopicBus {
  Topic<sensing::LaserScan> scan{"scan"};
  Topic<TwistCommand> twist_cmd{"twist_cmd", true};
  Topic<vehicle::RigidBodyState> truth_state{"truth_state"};
  Topic<PoseMsg> slam_pose{"slam_pose"};
  Topic<AmclMsg> amcl_pose{"amcl_pose"};
  Topic<std::shared_ptr<const GridSnapshot>> grid_snapshot{"grid_snapshot"};
  Topic<std::shared_ptr<const CostmapSnapshot>> costmap_snapshot{"costmap_snapshot"};
  Topic<std::shared_ptr<const PathMsg>> path{"path"};
  Topic<NavStatusMsg> nav_status{"nav_status"};
  Topic<TransformMsg> transform_updates{"transform_updates"};

  std::vector<TopicStats> stats() const;
};

}  // namespace dronav::runtime

// mtlplan/environment.hpp -- named regions, moving obstacles, labeling map
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "mtlplan/geometry.hpp"

namespace mtlplan {

class EnvironmentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Survey target: a named union of convex pieces.
struct Region {
  std::string name;
  std::vector<ConvexPolygon> members;

  bool contains(const Eigen::Vector2d& x, double tol = 0.0) const {
    for (const auto& m : members)
      if (m.contains(x, tol)) return true;
    return false;
  }
};

struct Keyframe {
  double time = 0.0;          // seconds
  Eigen::Vector2d offset{0, 0};
};

// Obstacle translating along a piecewise-linear keyframe path (no rotation).
class MovingObstacle {
 public:
  MovingObstacle(ConvexPolygon shape, std::vector<Keyframe> keyframes, bool hold_last = false)
      : shape_(std::move(shape)), keys_(std::move(keyframes)), hold_last_(hold_last) {
    if (keys_.empty()) throw EnvironmentError("moving obstacle needs at least one keyframe");
    if (keys_.front().time != 0.0)
      throw EnvironmentError("first obstacle keyframe must be at time 0");
    for (std::size_t i = 1; i < keys_.size(); ++i)
      if (!(keys_[i].time > keys_[i - 1].time))
        throw EnvironmentError("obstacle keyframe times must be strictly increasing");
  }

  const ConvexPolygon& shape() const { return shape_; }
  const std::vector<Keyframe>& keyframes() const { return keys_; }
  bool hold_last() const { return hold_last_; }
  double motion_end() const { return keys_.back().time; }

  Eigen::Vector2d offset_at(double time) const {
    if (time < 0.0) throw EnvironmentError("obstacle queried before time 0");
    if (time >= keys_.back().time) {
      if (time == keys_.back().time || hold_last_) return keys_.back().offset;
      throw EnvironmentError("obstacle motion undefined at time " + std::to_string(time) +
                             " s (last keyframe at " + std::to_string(keys_.back().time) +
                             " s and hold-last-pose not set)");
    }
    for (std::size_t i = 1; i < keys_.size(); ++i) {
      if (time > keys_[i].time) continue;
      const Keyframe& a = keys_[i - 1];
      const Keyframe& b = keys_[i];
      double w = (time - a.time) / (b.time - a.time);
      return a.offset + w * (b.offset - a.offset);
    }
    return keys_.back().offset;  // unreachable
  }

  ConvexPolygon at_time(double time) const { return shape_.translated(offset_at(time)); }

 private:
  ConvexPolygon shape_;
  std::vector<Keyframe> keys_;
  bool hold_last_;
};

inline ConvexPolygon obstacle_at(const MovingObstacle& o, int t, double dt) {
  return o.at_time(t * dt);
}

// Vehicle kinds a scenario can request.
enum class VehicleKind { Quadrotor, Car, Integrator };

struct VehicleConfig {
  VehicleKind kind = VehicleKind::Quadrotor;
  bool planar = false;       // quadrotor only: drop the vertical axis
  double mass = 1.0;         // kg
  double gravity = 9.81;     // m/s^2
  Eigen::Vector3d inertia{0.01, 0.01, 0.02};
  double u1_nominal = 1.0;   // car: forward speed linearization point
  int heading_modes = 8;     // car: number of heading sectors
  Eigen::VectorXd x0;
  Eigen::VectorXd x_lo, x_hi, u_lo, u_hi;
  double input_l1_cap = -1.0;  // integrator grids: per-step sum|u| cap, <0 = none
};

// Peak planar speed the bounds allow; drives the default inflation margin
// and the planner's travel-time estimates. Zero when bounds are absent.
inline double planar_speed_bound(const VehicleConfig& cfg) {
  auto mag = [&](const Eigen::VectorXd& lo, const Eigen::VectorXd& hi, int i) {
    if (i >= lo.size() || i >= hi.size()) return 0.0;
    return std::max(std::abs(lo[i]), std::abs(hi[i]));
  };
  switch (cfg.kind) {
    case VehicleKind::Quadrotor: {
      int vx = cfg.planar ? 2 : 3;
      return std::max(mag(cfg.x_lo, cfg.x_hi, vx), mag(cfg.x_lo, cfg.x_hi, vx + 1));
    }
    case VehicleKind::Car:
      return mag(cfg.u_lo, cfg.u_hi, 0);
    case VehicleKind::Integrator: {
      double m = 0.0;
      for (int i = 0; i < std::min(cfg.u_lo.size(), cfg.u_hi.size()); ++i)
        m = std::max(m, mag(cfg.u_lo, cfg.u_hi, i));
      return m;
    }
  }
  return 0.0;
}

struct Scenario {
  std::string name;
  Eigen::Vector2d ws_lo{0, 0}, ws_hi{1, 1};  // workspace bounding box
  double dt = 1.0;
  int horizon = -1;          // planning steps N, -1 = choose via CLI/search
  double inflation = 0.0;    // obstacle margin r in meters (loader defaults it
                             // to v_max*dt/2 when the file omits it)
  bool loop = false;         // require final position == initial position
  VehicleConfig vehicle;
  std::vector<Region> regions;
  std::vector<ConvexPolygon> static_obstacles;
  std::vector<MovingObstacle> moving_obstacles;
  std::string specification;                        // default formula text
  std::map<std::string, std::string> specifications;  // named alternatives

  const Region* find_region(const std::string& name) const {
    for (const auto& r : regions)
      if (r.name == name) return &r;
    return nullptr;
  }

  double workspace_diameter() const { return (ws_hi - ws_lo).norm(); }

  // every obstacle polygon active at step t, already inflated
  std::vector<ConvexPolygon> obstacles_at(int t) const {
    std::vector<ConvexPolygon> out;
    out.reserve(static_obstacles.size() + moving_obstacles.size());
    for (const auto& o : static_obstacles) out.push_back(o.inflated(inflation));
    for (const auto& o : moving_obstacles)
      out.push_back(obstacle_at(o, t, dt).inflated(inflation));
    return out;
  }
};

// Labeling map: names of regions containing x, plus "O" when x is inside any
// inflated obstacle at step t. Region membership gets a small tolerance so
// solver-boundary points still label; obstacle membership does not.
inline std::set<std::string> label(const Eigen::Vector2d& x, int t, const Scenario& s,
                                   double region_tol = 1e-6) {
  std::set<std::string> out;
  for (const auto& r : s.regions)
    if (r.contains(x, region_tol)) out.insert(r.name);
  for (const auto& o : s.obstacles_at(t)) {
    if (o.contains(x, 0.0)) {
      out.insert("O");
      break;
    }
  }
  return out;
}

}  // namespace mtlplan

// mtlplan/scenario_json.hpp -- scenario file loading and validation
//
// The on-disk format is JSON (see docs/formats.md). Every validation error
// names the offending field by its JSON pointer path so a broken file can be
// fixed without reading this header.
#pragma once

#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mtlplan/environment.hpp"

namespace mtlplan {

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

using njson = nlohmann::json;

[[noreturn]] inline void sc_fail(const std::string& path, const std::string& what) {
  throw ScenarioError("scenario error at " + (path.empty() ? "/" : path) + ": " + what);
}

inline const njson& member(const njson& j, const std::string& path, const char* key) {
  if (!j.is_object()) sc_fail(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) sc_fail(path + "/" + key, "missing required field");
  return *it;
}

inline const njson* opt_member(const njson& j, const std::string& path, const char* key) {
  if (!j.is_object()) sc_fail(path, "expected an object");
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

inline double number(const njson& j, const std::string& path) {
  if (!j.is_number()) sc_fail(path, "expected a number");
  return j.get<double>();
}

inline int integer(const njson& j, const std::string& path) {
  if (!j.is_number_integer()) sc_fail(path, "expected an integer");
  return j.get<int>();
}

inline bool boolean(const njson& j, const std::string& path) {
  if (!j.is_boolean()) sc_fail(path, "expected true or false");
  return j.get<bool>();
}

inline std::string text(const njson& j, const std::string& path) {
  if (!j.is_string()) sc_fail(path, "expected a string");
  return j.get<std::string>();
}

inline Eigen::Vector2d vec2(const njson& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2) sc_fail(path, "expected [x, y]");
  return {number(j[0], path + "/0"), number(j[1], path + "/1")};
}

inline Eigen::VectorXd vecn(const njson& j, const std::string& path, int want = -1) {
  if (!j.is_array()) sc_fail(path, "expected an array of numbers");
  if (want >= 0 && static_cast<int>(j.size()) != want)
    sc_fail(path, "expected " + std::to_string(want) + " numbers, got " +
                      std::to_string(j.size()));
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i)
    v[static_cast<int>(i)] = number(j[i], path + "/" + std::to_string(i));
  return v;
}

// A convex piece is written either as {"box": {"min": [..], "max": [..]}}
// or {"polygon": [[x, y], ...]} with counter-clockwise vertices.
inline ConvexPolygon convex_piece(const njson& j, const std::string& path) {
  if (!j.is_object()) sc_fail(path, "expected an object with 'box' or 'polygon'");
  const njson* box = opt_member(j, path, "box");
  const njson* poly = opt_member(j, path, "polygon");
  if (!!box == !!poly) sc_fail(path, "give exactly one of 'box' or 'polygon'");
  try {
    if (box) {
      Eigen::Vector2d lo = vec2(member(*box, path + "/box", "min"), path + "/box/min");
      Eigen::Vector2d hi = vec2(member(*box, path + "/box", "max"), path + "/box/max");
      if (!(lo.x() < hi.x() && lo.y() < hi.y())) sc_fail(path + "/box", "min must be below max");
      return ConvexPolygon::axis_aligned_box(lo, hi);
    }
    std::vector<Eigen::Vector2d> verts;
    for (std::size_t i = 0; i < poly->size(); ++i)
      verts.push_back(vec2((*poly)[i], path + "/polygon/" + std::to_string(i)));
    return ConvexPolygon(std::move(verts));
  } catch (const GeometryError& e) {
    sc_fail(path, e.what());
  }
}

inline VehicleKind vehicle_kind(const std::string& s, const std::string& path) {
  if (s == "quadrotor") return VehicleKind::Quadrotor;
  if (s == "car") return VehicleKind::Car;
  if (s == "integrator") return VehicleKind::Integrator;
  sc_fail(path, "unknown vehicle type '" + s + "' (quadrotor, car, integrator)");
}

inline int state_dim(const VehicleConfig& cfg) {
  switch (cfg.kind) {
    case VehicleKind::Quadrotor: return cfg.planar ? 8 : 10;
    case VehicleKind::Car: return 3;
    case VehicleKind::Integrator: return 2;
  }
  return 0;
}

inline int input_dim(const VehicleConfig& cfg) {
  switch (cfg.kind) {
    case VehicleKind::Quadrotor: return cfg.planar ? 2 : 3;
    case VehicleKind::Car: return 2;
    case VehicleKind::Integrator: return 2;
  }
  return 0;
}

// Region names double as atoms of the specification grammar, so they must
// lex as plain identifiers and must not shadow grammar keywords or the
// reserved obstacle atom.
inline void check_region_name(const std::string& name, const std::string& path) {
  static const std::set<std::string> reserved = {"O", "F", "G", "X", "U", "R", "true", "false"};
  if (name.empty()) sc_fail(path, "region name must not be empty");
  auto ident = [](const std::string& s) {
    if (!(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
    for (char c : s)
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
    return true;
  };
  if (!ident(name)) sc_fail(path, "region name '" + name + "' is not an identifier");
  if (reserved.count(name))
    sc_fail(path, "region name '" + name + "' is reserved by the specification grammar");
}

}  // namespace detail

inline Scenario scenario_from_json(const detail::njson& j) {
  using namespace detail;
  Scenario sc;
  if (!j.is_object()) sc_fail("", "scenario must be a JSON object");

  sc.name = text(member(j, "", "name"), "/name");
  const njson& ws = member(j, "", "workspace");
  sc.ws_lo = vec2(member(ws, "/workspace", "min"), "/workspace/min");
  sc.ws_hi = vec2(member(ws, "/workspace", "max"), "/workspace/max");
  if (!(sc.ws_lo.x() < sc.ws_hi.x() && sc.ws_lo.y() < sc.ws_hi.y()))
    sc_fail("/workspace", "min must be below max");

  sc.dt = number(member(j, "", "dt"), "/dt");
  if (!(sc.dt > 0.0)) sc_fail("/dt", "dt must be positive");
  if (const njson* h = opt_member(j, "", "horizon")) {
    sc.horizon = integer(*h, "/horizon");
    if (sc.horizon < 1) sc_fail("/horizon", "horizon must be at least 1 step");
  }
  if (const njson* l = opt_member(j, "", "loop")) sc.loop = boolean(*l, "/loop");

  // vehicle
  const njson& vj = member(j, "", "vehicle");
  VehicleConfig& cfg = sc.vehicle;
  cfg.kind = vehicle_kind(text(member(vj, "/vehicle", "type"), "/vehicle/type"), "/vehicle/type");
  if (const njson* p = opt_member(vj, "/vehicle", "planar"))
    cfg.planar = boolean(*p, "/vehicle/planar");
  if (const njson* m = opt_member(vj, "/vehicle", "mass")) {
    cfg.mass = number(*m, "/vehicle/mass");
    if (!(cfg.mass > 0.0)) sc_fail("/vehicle/mass", "mass must be positive");
  }
  if (const njson* g = opt_member(vj, "/vehicle", "gravity"))
    cfg.gravity = number(*g, "/vehicle/gravity");
  if (const njson* in = opt_member(vj, "/vehicle", "inertia")) {
    Eigen::VectorXd v = vecn(*in, "/vehicle/inertia", 3);
    if (!(v.minCoeff() > 0.0)) sc_fail("/vehicle/inertia", "inertia entries must be positive");
    cfg.inertia = v;
  }
  if (const njson* u1 = opt_member(vj, "/vehicle", "u1_nominal")) {
    cfg.u1_nominal = number(*u1, "/vehicle/u1_nominal");
    if (!(cfg.u1_nominal > 0.0)) sc_fail("/vehicle/u1_nominal", "nominal speed must be positive");
  }
  if (const njson* hm = opt_member(vj, "/vehicle", "heading_modes")) {
    cfg.heading_modes = integer(*hm, "/vehicle/heading_modes");
    if (cfg.heading_modes < 4) sc_fail("/vehicle/heading_modes", "need at least 4 heading modes");
  }
  if (const njson* cap = opt_member(vj, "/vehicle", "input_l1_cap")) {
    cfg.input_l1_cap = number(*cap, "/vehicle/input_l1_cap");
    if (!(cfg.input_l1_cap > 0.0)) sc_fail("/vehicle/input_l1_cap", "cap must be positive");
  }

  const int nx = state_dim(cfg), nu = input_dim(cfg);
  cfg.x0 = vecn(member(vj, "/vehicle", "x0"), "/vehicle/x0", nx);
  cfg.x_lo = vecn(member(vj, "/vehicle", "state_min"), "/vehicle/state_min", nx);
  cfg.x_hi = vecn(member(vj, "/vehicle", "state_max"), "/vehicle/state_max", nx);
  cfg.u_lo = vecn(member(vj, "/vehicle", "input_min"), "/vehicle/input_min", nu);
  cfg.u_hi = vecn(member(vj, "/vehicle", "input_max"), "/vehicle/input_max", nu);
  for (int i = 0; i < nx; ++i) {
    if (!(cfg.x_lo[i] <= cfg.x_hi[i])) sc_fail("/vehicle/state_min", "state bounds cross");
    if (!std::isfinite(cfg.x_lo[i]) || !std::isfinite(cfg.x_hi[i]))
      sc_fail("/vehicle/state_min", "state bounds must be finite");
    if (cfg.x0[i] < cfg.x_lo[i] || cfg.x0[i] > cfg.x_hi[i])
      sc_fail("/vehicle/x0", "initial state leaves its bounds at component " + std::to_string(i));
  }
  for (int i = 0; i < nu; ++i) {
    if (!(cfg.u_lo[i] <= cfg.u_hi[i])) sc_fail("/vehicle/input_min", "input bounds cross");
    if (!std::isfinite(cfg.u_lo[i]) || !std::isfinite(cfg.u_hi[i]))
      sc_fail("/vehicle/input_min", "input bounds must be finite");
  }

  if (const njson* r = opt_member(j, "", "inflation")) {
    sc.inflation = number(*r, "/inflation");
    if (sc.inflation < 0.0) sc_fail("/inflation", "inflation must be >= 0");
  } else {
    sc.inflation = 0.5 * planar_speed_bound(cfg) * sc.dt;
  }

  // regions
  if (const njson* rj = opt_member(j, "", "regions")) {
    if (!rj->is_array()) sc_fail("/regions", "expected an array");
    std::set<std::string> seen;
    for (std::size_t i = 0; i < rj->size(); ++i) {
      std::string path = "/regions/" + std::to_string(i);
      const njson& rr = (*rj)[i];
      Region reg;
      reg.name = text(member(rr, path, "name"), path + "/name");
      check_region_name(reg.name, path + "/name");
      if (!seen.insert(reg.name).second) sc_fail(path + "/name", "duplicate region name");
      if (const njson* members = opt_member(rr, path, "members")) {
        if (!members->is_array() || members->empty())
          sc_fail(path + "/members", "expected a non-empty array of convex pieces");
        for (std::size_t k = 0; k < members->size(); ++k)
          reg.members.push_back(
              convex_piece((*members)[k], path + "/members/" + std::to_string(k)));
      } else {
        reg.members.push_back(convex_piece(rr, path));
      }
      sc.regions.push_back(std::move(reg));
    }
  }

  // obstacles
  if (const njson* oj = opt_member(j, "", "static_obstacles")) {
    if (!oj->is_array()) sc_fail("/static_obstacles", "expected an array");
    for (std::size_t i = 0; i < oj->size(); ++i)
      sc.static_obstacles.push_back(
          convex_piece((*oj)[i], "/static_obstacles/" + std::to_string(i)));
  }
  if (const njson* mj = opt_member(j, "", "moving_obstacles")) {
    if (!mj->is_array()) sc_fail("/moving_obstacles", "expected an array");
    for (std::size_t i = 0; i < mj->size(); ++i) {
      std::string path = "/moving_obstacles/" + std::to_string(i);
      const njson& mo = (*mj)[i];
      ConvexPolygon shape = convex_piece(mo, path);
      const njson& kj = member(mo, path, "keyframes");
      if (!kj.is_array() || kj.empty()) sc_fail(path + "/keyframes", "expected a non-empty array");
      std::vector<Keyframe> keys;
      for (std::size_t k = 0; k < kj.size(); ++k) {
        std::string kp = path + "/keyframes/" + std::to_string(k);
        Keyframe kf;
        kf.time = number(member(kj[k], kp, "time"), kp + "/time");
        kf.offset = vec2(member(kj[k], kp, "offset"), kp + "/offset");
        keys.push_back(kf);
      }
      bool hold = false;
      if (const njson* h = opt_member(mo, path, "hold_last")) hold = boolean(*h, path + "/hold_last");
      try {
        sc.moving_obstacles.emplace_back(std::move(shape), std::move(keys), hold);
      } catch (const EnvironmentError& e) {
        sc_fail(path + "/keyframes", e.what());
      }
    }
  }

  // specification text; named alternatives are optional
  if (const njson* s = opt_member(j, "", "specification"))
    sc.specification = text(*s, "/specification");
  if (const njson* sj = opt_member(j, "", "specifications")) {
    if (!sj->is_object()) sc_fail("/specifications", "expected an object of name -> formula");
    for (auto it = sj->begin(); it != sj->end(); ++it)
      sc.specifications[it.key()] = text(it.value(), "/specifications/" + it.key());
  }
  if (sc.specification.empty() && sc.specifications.empty())
    sc_fail("/specification", "scenario needs a specification (or named specifications)");

  // the vehicle must start inside the workspace and clear of every inflated
  // obstacle; encoder-level probes that pin points deliberately inside
  // obstacles construct Scenario values directly and skip this gate
  Eigen::Vector2d p0 = cfg.x0.head<2>();
  if (p0.x() < sc.ws_lo.x() || p0.x() > sc.ws_hi.x() || p0.y() < sc.ws_lo.y() ||
      p0.y() > sc.ws_hi.y())
    sc_fail("/vehicle/x0", "initial position leaves the workspace");
  for (const auto& o : sc.obstacles_at(0))
    if (o.contains(p0, 0.0))
      sc_fail("/vehicle/x0", "initial position is inside an inflated obstacle at t=0");

  return sc;
}

inline Scenario parse_scenario(const std::string& text_in) {
  detail::njson j;
  try {
    j = detail::njson::parse(text_in);
  } catch (const detail::njson::parse_error& e) {
    throw ScenarioError(std::string("scenario is not valid JSON: ") + e.what());
  }
  return scenario_from_json(j);
}

inline Scenario load_scenario(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw ScenarioError("cannot open scenario file '" + file + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

}  // namespace mtlplan

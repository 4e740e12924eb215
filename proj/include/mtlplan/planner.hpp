// mtlplan/planner.hpp -- end-to-end planning: build, solve, decode, verify
//
// plan() is the library entry point: it compiles the scenario + formula into
// a MILP, solves it, and then re-derives everything the solver claimed from
// scratch -- inputs are re-simulated through the dynamics, positions are
// re-labeled, and the specification is re-evaluated by the reference MTL
// semantics. A solve that "succeeds" but fails this independent pass is a
// hard error, never a silently returned plan.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "mtlplan/branch_and_bound.hpp"
#include "mtlplan/encoder.hpp"
#include "mtlplan/parse.hpp"
#include "mtlplan/trace.hpp"

namespace mtlplan {

class PlannerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PlanOptions {
  double gap_tol = 1e-6;
  long node_limit = 0;      // 0 = unlimited
  double time_limit = 0.0;  // seconds; 0 = unlimited
  unsigned seed = 0;        // order shuffling when a mission has many targets
  bool route_warm_start = true;  // seed the search with a constructed trajectory
  bool rounding_hint = true;     // complete fractional relaxations geometrically
  bool with_cost = true;         // false: pure feasibility (horizon search)
};

struct VerificationReport {
  bool satisfied = false;
  double dynamics_residual = 0.0;
  int obstacle_contacts = 0;  // samples labeled inside any inflated obstacle
  // outside-distance to the nearest inflated obstacle, worst step; +inf when
  // the scenario has no obstacles
  double min_obstacle_clearance = std::numeric_limits<double>::infinity();
  std::map<std::string, int> dwell;         // longest consecutive run per region
  std::map<std::string, int> first_visit;   // earliest sample per region, -1 = never
  std::vector<std::set<std::string>> step_labels;
  std::optional<Violation> violation;
};

struct PlanResult {
  MilpStatus status = MilpStatus::Infeasible;
  int horizon = 0;
  double dt = 0.0;
  std::vector<Eigen::VectorXd> x;  // decoded states, 0..N (empty without a plan)
  std::vector<Eigen::VectorXd> u;  // decoded inputs, 0..N-1
  std::vector<std::string> state_names, input_names;
  double objective = std::numeric_limits<double>::infinity();
  double bound = -std::numeric_limits<double>::infinity();
  double gap = std::numeric_limits<double>::infinity();
  long nodes = 0;
  long lp_iterations = 0;
  double seconds = 0.0;
  int binaries = 0, variables = 0, constraints = 0;
  Formula prepared;  // step-domain formula the plan was checked against
  VerificationReport verification;

  bool has_plan() const {
    return status == MilpStatus::Optimal || status == MilpStatus::FeasibleGap;
  }
};

namespace detail {

// ---------------------------------------------------------------------------
// Mission shape recognition. The route warm start only fires when the whole
// top-level conjunction decomposes into patterns it knows how to schedule:
// reach-and-hold targets, plain visits, per-step stay/avoid duties, and
// visit-with-precedence. Anything else declines, and the solver runs with
// just the geometric rounding hint.

struct RouteGoal {
  std::string region;
  int settle_lo = 0, settle_hi = 0;  // window for the settle step j
  int hold_lo = 0, hold_hi = 0;      // membership on [j+hold_lo, j+hold_hi]
};

struct RouteDuty {
  std::string name;  // region name, or "O" for the obstacle union
  bool stay = false; // true: remain inside; false: remain outside
  int lo = 0, hi = 0;
};

// visit `goal` at its settle step j; lhs duty applies on [0, j)
struct RoutePrecedence {
  std::size_t goal_index;
  std::string lhs;
  bool lhs_stay = false;
};

struct RouteMission {
  std::vector<RouteGoal> goals;
  std::vector<RouteDuty> duties;
  std::vector<RoutePrecedence> precedences;
};

inline void flatten_and(const Formula& f, std::vector<Formula>& out) {
  if (f.kind() == Kind::And) {
    for (const auto& k : f.kids()) flatten_and(k, out);
  } else {
    out.push_back(f);
  }
}

inline std::optional<RouteMission> recognize_mission(const Formula& encoded) {
  RouteMission m;
  std::vector<Formula> conjuncts;
  flatten_and(encoded, conjuncts);
  for (const Formula& c : conjuncts) {
    switch (c.kind()) {
      case Kind::True: break;
      case Kind::Atom:
        m.duties.push_back({c.name(), true, 0, 0});
        break;
      case Kind::Not:
        if (c.kid(0).kind() != Kind::Atom) return std::nullopt;
        m.duties.push_back({c.kid(0).name(), false, 0, 0});
        break;
      case Kind::Always: {
        int a = c.window().lo_steps(), b = c.window().hi_steps();
        const Formula& k = c.kid(0);
        if (k.kind() == Kind::Atom)
          m.duties.push_back({k.name(), true, a, b});
        else if (k.kind() == Kind::Not && k.kid(0).kind() == Kind::Atom)
          m.duties.push_back({k.kid(0).name(), false, a, b});
        else
          return std::nullopt;
        break;
      }
      case Kind::Eventually: {
        int a = c.window().lo_steps(), b = c.window().hi_steps();
        const Formula& k = c.kid(0);
        if (k.kind() == Kind::Atom) {
          m.goals.push_back({k.name(), a, b, 0, 0});
        } else if (k.kind() == Kind::Always && k.kid(0).kind() == Kind::Atom) {
          m.goals.push_back({k.kid(0).name(), a, b, k.window().lo_steps(),
                             k.window().hi_steps()});
        } else {
          return std::nullopt;
        }
        break;
      }
      case Kind::Until: {
        int a = c.window().lo_steps(), b = c.window().hi_steps();
        const Formula& lhs = c.kid(0);
        const Formula& rhs = c.kid(1);
        if (rhs.kind() != Kind::Atom) return std::nullopt;
        m.goals.push_back({rhs.name(), a, b, 0, 0});
        if (lhs.kind() == Kind::True) break;
        RoutePrecedence p;
        p.goal_index = m.goals.size() - 1;
        if (lhs.kind() == Kind::Atom) {
          p.lhs = lhs.name();
          p.lhs_stay = true;
        } else if (lhs.kind() == Kind::Not && lhs.kid(0).kind() == Kind::Atom) {
          p.lhs = lhs.kid(0).name();
          p.lhs_stay = false;
        } else {
          return std::nullopt;
        }
        m.precedences.push_back(p);
        break;
      }
      default:
        return std::nullopt;  // Or / Next / Release / nested shapes
    }
  }
  if (m.goals.size() > 6) return std::nullopt;  // permutation space blows up
  return m;
}

// closest point of p to q, approximated by clamping into the bounding box
// (exact for the axis-aligned rectangles scenarios actually use)
inline Eigen::Vector2d closest_point_in(const ConvexPolygon& p, const Eigen::Vector2d& q) {
  auto [lo, hi] = p.bounding_box();
  Eigen::Vector2d c(std::clamp(q.x(), lo.x(), hi.x()), std::clamp(q.y(), lo.y(), hi.y()));
  if (p.contains(c, 1e-12)) return c;
  return p.centroid();
}

struct RouteStop {
  std::size_t goal;        // index into mission.goals
  const ConvexPolygon* member;
  int settle = 0;
  Eigen::Vector2d target{0, 0};
};

// candidate goal orders: travel-greedy first, then the remaining
// permutations (seed-shuffled when there are too many to enumerate)
inline std::vector<std::vector<std::size_t>> goal_orders(const RouteMission& m,
                                                         const Eigen::Vector2d& p0,
                                                         const Scenario& sc, unsigned seed) {
  std::vector<std::size_t> ids(m.goals.size());
  std::iota(ids.begin(), ids.end(), 0u);
  std::vector<std::vector<std::size_t>> orders;
  if (ids.empty()) {
    orders.push_back({});
    return orders;
  }

  std::vector<std::size_t> greedy;
  {
    std::vector<std::size_t> left = ids;
    Eigen::Vector2d at = p0;
    while (!left.empty()) {
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < left.size(); ++i) {
        const Region* r = sc.find_region(m.goals[left[i]].region);
        if (!r || r->members.empty()) return {};  // unknown region: no route
        double d = (closest_point_in(r->members.front(), at) - at).norm();
        // prefer tighter settle deadlines on near-ties
        d += 1e-3 * m.goals[left[i]].settle_hi;
        if (d < best_d) {
          best_d = d;
          best = i;
        }
      }
      at = closest_point_in(sc.find_region(m.goals[left[best]].region)->members.front(), at);
      greedy.push_back(left[best]);
      left.erase(left.begin() + static_cast<long>(best));
    }
  }
  orders.push_back(greedy);

  if (ids.size() <= 4) {
    std::vector<std::size_t> perm = ids;
    std::sort(perm.begin(), perm.end());
    do {
      if (perm != greedy) orders.push_back(perm);
    } while (std::next_permutation(perm.begin(), perm.end()));
  } else {
    std::mt19937 rng(seed);
    std::vector<std::size_t> perm = ids;
    for (int k = 0; k < 23; ++k) {
      std::shuffle(perm.begin(), perm.end(), rng);
      orders.push_back(perm);
    }
  }
  return orders;
}

// Time-expanded grid search for a reference path that honours the schedule:
// per-step displacement limited to what the speed bounds allow, avoid duties
// (including the moving obstacles at their per-step footprints) respected,
// hold windows pinned to the goal. The result is purely a side-picking guide
// for the convex program -- dynamics stay with the LP.
inline std::optional<std::vector<Eigen::Vector2d>> timed_reference(
    const EncodingContext& ctx, const RouteMission& m, const std::vector<RouteStop>& stops,
    double step_reach) {
  const Scenario& sc = *ctx.scenario;
  const int N = ctx.N;
  const VehicleConfig& cfg = sc.vehicle;

  Eigen::Vector2d lo = sc.ws_lo, hi = sc.ws_hi;
  if (cfg.x_lo.size() >= 2) {  // position lives in the first two state slots
    lo.x() = std::max(lo.x(), cfg.x_lo[0]);
    lo.y() = std::max(lo.y(), cfg.x_lo[1]);
    hi.x() = std::min(hi.x(), cfg.x_hi[0]);
    hi.y() = std::min(hi.y(), cfg.x_hi[1]);
  }
  double span_x = hi.x() - lo.x(), span_y = hi.y() - lo.y();
  if (!(span_x > 0.0) || !(span_y > 0.0)) return std::nullopt;

  auto axis_nodes = [&](double span) {
    int n = static_cast<int>(std::floor(span / std::max(1e-9, step_reach / 2.0))) + 1;
    return std::clamp(n, 2, 81);
  };
  const int nx = axis_nodes(span_x), ny = axis_nodes(span_y);
  const double px = span_x / (nx - 1), py = span_y / (ny - 1);
  // nearest-step rounding: a few percent over the physical reach is fine for
  // a side-picking guide, and the convex program re-checks the real dynamics
  const int rx = std::clamp(static_cast<int>(std::round(step_reach / px)), 1, nx - 1);
  const int ry = std::clamp(static_cast<int>(std::round(step_reach / py)), 1, ny - 1);
  auto node_pos = [&](int i, int j) { return Eigen::Vector2d(lo.x() + i * px, lo.y() + j * py); };

  bool need_obs = false;
  for (const auto& duty : m.duties)
    if (duty.name == "O" && !duty.stay) need_obs = true;
  std::vector<std::vector<ConvexPolygon>> obs_at(N + 1);
  if (need_obs)
    for (int t = 0; t <= N; ++t) obs_at[t] = sc.obstacles_at(t);

  // precedence avoid/stay windows, resolved against the concrete schedule
  struct Window {
    const Region* region;
    bool stay;
    int lo, hi;
  };
  std::vector<Window> windows;
  for (const auto& duty : m.duties) {
    if (duty.name == "O") continue;
    const Region* r = sc.find_region(duty.name);
    if (!r) return std::nullopt;
    windows.push_back({r, duty.stay, duty.lo, std::min(duty.hi, N)});
  }
  for (const auto& p : m.precedences) {
    int settle = -1;
    for (const auto& s : stops)
      if (s.goal == p.goal_index) settle = s.settle;
    if (settle < 0) return std::nullopt;
    if (settle == 0) continue;
    const Region* r = sc.find_region(p.lhs);
    if (!r) return std::nullopt;
    windows.push_back({r, p.lhs_stay, 0, settle - 1});
  }

  auto in_region = [](const Region& r, const Eigen::Vector2d& q, double tol) {
    for (const auto& mbr : r.members)
      if (mbr.contains(q, tol)) return true;
    return false;
  };
  auto allowed = [&](int i, int j, int t) {
    Eigen::Vector2d q = node_pos(i, j);
    if (need_obs)
      for (const auto& duty : m.duties)
        if (duty.name == "O" && !duty.stay && t >= duty.lo && t <= duty.hi)
          for (const auto& o : obs_at[t])
            if (o.contains(q, 0.0)) return false;
    for (const auto& w : windows) {
      if (t < w.lo || t > w.hi) continue;
      if (w.stay != in_region(*w.region, q, w.stay ? -1e-9 : 1e-9)) return false;
    }
    return true;
  };

  // node pinned through each hold window: nearest grid node to the target,
  // preferring nodes inside the member polygon
  std::vector<int> pin(stops.size(), -1);
  auto node_id = [&](int i, int j) { return i * ny + j; };
  for (std::size_t s = 0; s < stops.size(); ++s) {
    double best_in = std::numeric_limits<double>::infinity();
    double best_any = std::numeric_limits<double>::infinity();
    int id_in = -1, id_any = -1;
    for (int i = 0; i < nx; ++i)
      for (int j = 0; j < ny; ++j) {
        double dd = (node_pos(i, j) - stops[s].target).norm();
        if (dd < best_any) {
          best_any = dd;
          id_any = node_id(i, j);
        }
        if (dd < best_in && stops[s].member->contains(node_pos(i, j), 1e-9)) {
          best_in = dd;
          id_in = node_id(i, j);
        }
      }
    pin[s] = id_in >= 0 ? id_in : id_any;
  }
  auto pinned_at = [&](int t) -> int {
    for (std::size_t s = 0; s < stops.size(); ++s) {
      const RouteGoal& g = m.goals[stops[s].goal];
      if (t >= stops[s].settle + g.hold_lo && t <= stops[s].settle + g.hold_hi) return pin[s];
    }
    return -1;
  };

  // forward DP over (node, step); cost prefers short smooth paths
  const int n_nodes = nx * ny;
  const double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> cost_prev(n_nodes, kInf), cost_next(n_nodes, kInf);
  std::vector<int> parent(static_cast<std::size_t>(N + 1) * n_nodes, -1);

  int start = -1;
  {
    Eigen::Vector2d p0 = cfg.x0.head<2>();
    double best = kInf;
    for (int i = 0; i < nx; ++i)
      for (int j = 0; j < ny; ++j) {
        if (!allowed(i, j, 0)) continue;
        double dd = (node_pos(i, j) - p0).norm();
        if (dd < best) {
          best = dd;
          start = node_id(i, j);
        }
      }
    if (start < 0) return std::nullopt;
    int p0_pin = pinned_at(0);
    if (p0_pin >= 0 && p0_pin != start) return std::nullopt;
    cost_prev[start] = 0.0;
  }

  for (int t = 1; t <= N; ++t) {
    std::fill(cost_next.begin(), cost_next.end(), kInf);
    int pin_t = pinned_at(t);
    for (int i = 0; i < nx; ++i)
      for (int j = 0; j < ny; ++j) {
        int from = node_id(i, j);
        if (cost_prev[from] == kInf) continue;
        for (int di = -rx; di <= rx; ++di)
          for (int dj = -ry; dj <= ry; ++dj) {
            int ni = i + di, nj = j + dj;
            if (ni < 0 || ni >= nx || nj < 0 || nj >= ny) continue;
            int to = node_id(ni, nj);
            if (pin_t >= 0 && to != pin_t) continue;
            if (!allowed(ni, nj, t)) continue;
            double step = std::hypot(di * px, dj * py);
            double c = cost_prev[from] + step * (1.0 + step);  // mildly superlinear
            if (c < cost_next[to]) {
              cost_next[to] = c;
              parent[static_cast<std::size_t>(t) * n_nodes + to] = from;
            }
          }
      }
    cost_prev.swap(cost_next);
    if (std::all_of(cost_prev.begin(), cost_prev.end(), [&](double c) { return c == kInf; }))
      return std::nullopt;
  }

  int goal = -1;
  if (sc.loop) {
    if (cost_prev[start] == kInf) return std::nullopt;
    goal = start;
  } else {
    double best = kInf;
    for (int id = 0; id < n_nodes; ++id)
      if (cost_prev[id] < best) {
        best = cost_prev[id];
        goal = id;
      }
    if (goal < 0) return std::nullopt;
  }

  std::vector<Eigen::Vector2d> ref(static_cast<std::size_t>(N) + 1);
  int at = goal;
  for (int t = N; t >= 1; --t) {
    ref[t] = node_pos(at / ny, at % ny);
    at = parent[static_cast<std::size_t>(t) * n_nodes + at];
    if (at < 0) return std::nullopt;
  }
  ref[0] = cfg.x0.head<2>();  // side picks at t=0 use the true start
  return ref;
}

// Convex warm-start program: true dynamics plus hard linear membership /
// separation rows for one concrete schedule. No binaries anywhere, so one LP
// decides the candidate.
inline std::optional<Eigen::VectorXd> route_candidate(const EncodingContext& ctx,
                                                      const RouteMission& mission,
                                                      const std::vector<RouteStop>& stops,
                                                      std::vector<Eigen::Vector2d> ref) {
  const Scenario& sc = *ctx.scenario;
  const LinearSystem& d = ctx.sys;
  const int N = ctx.N;
  // both margins clear the indicator exclusion band with room to spare
  const double inset = 2.0 * ctx.eps;
  const double outset = 2.0 * ctx.eps;

  EncodingContext lp;
  lp.scenario = &sc;
  lp.dt = ctx.dt;
  lp.eps = ctx.eps;
  encode_dynamics(lp, d, sc.vehicle.x0, N, sc.loop);
  encode_cost(lp);

  int next_row = 0;
  auto pos_terms = [&](int t, const Eigen::Vector2d& h) {
    std::vector<LinTerm> terms;
    Eigen::RowVectorXd w = h.x() * d.C.row(0) + h.y() * d.C.row(1);
    for (int j = 0; j < d.n_states(); ++j)
      if (w[j] != 0.0) terms.push_back({lp.x[t][j], w[j]});
    return terms;
  };
  auto add_inside = [&](int t, const ConvexPolygon& poly) {
    for (const auto& hs : poly.halfspaces())
      lp.model.add_row("route" + std::to_string(next_row++), pos_terms(t, hs.h), RowSense::LE,
                       hs.k - inset);
  };
  auto add_outside = [&](int t, const ConvexPolygon& poly, const Eigen::Vector2d& ref) {
    const Halfspace* side = nullptr;
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& hs : poly.halfspaces()) {
      double v = hs.violation(ref);
      if (v > best) {
        best = v;
        side = &hs;
      }
    }
    lp.model.add_row("route" + std::to_string(next_row++), pos_terms(t, side->h), RowSense::GE,
                     side->k + outset);
  };

  // hold the reference inside each goal region across its membership window
  for (const auto& s : stops) {
    const RouteGoal& g = mission.goals[s.goal];
    for (int t = s.settle + g.hold_lo; t <= s.settle + g.hold_hi; ++t) {
      if (t > N) return std::nullopt;
      add_inside(t, *s.member);
      ref[t] = s.target;
    }
  }

  auto member_near = [&](const Region& r, const Eigen::Vector2d& q) -> const ConvexPolygon& {
    const ConvexPolygon* best = &r.members.front();
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& mbr : r.members) {
      double dd = (closest_point_in(mbr, q) - q).norm();
      if (dd < best_d) {
        best_d = dd;
        best = &mbr;
      }
    }
    return *best;
  };

  auto apply_duty = [&](const RouteDuty& duty, int lo, int hi) -> bool {
    if (duty.name == "O") {
      if (duty.stay) return false;  // "stay inside the obstacles" is not a route
      for (int t = lo; t <= hi && t <= N; ++t)
        for (const auto& o : sc.obstacles_at(t)) add_outside(t, o, ref[t]);
      return true;
    }
    const Region* r = sc.find_region(duty.name);
    if (!r) return false;
    for (int t = lo; t <= hi && t <= N; ++t) {
      if (duty.stay)
        add_inside(t, member_near(*r, ref[t]));
      else
        for (const auto& mbr : r->members) add_outside(t, mbr, ref[t]);
    }
    return true;
  };

  for (const auto& duty : mission.duties)
    if (!apply_duty(duty, duty.lo, duty.hi)) return std::nullopt;

  for (const auto& p : mission.precedences) {
    int settle = -1;
    for (const auto& s : stops)
      if (s.goal == p.goal_index) settle = s.settle;
    if (settle < 0) return std::nullopt;
    RouteDuty duty{p.lhs, p.lhs_stay, 0, settle - 1};
    if (settle > 0 && !apply_duty(duty, 0, settle - 1)) return std::nullopt;
  }

  MilpResult lp_res = branch_and_bound(lp.model);
  if (lp_res.status != MilpStatus::Optimal) return std::nullopt;

  // re-simulate the inputs through the exact dynamics, then let the
  // geometric completion fill indicators and formula levels
  std::vector<Eigen::VectorXd> u = lp.decode_inputs(lp_res.x);
  std::vector<Eigen::VectorXd> xs;
  try {
    xs = simulate(d, sc.vehicle.x0, u, 1e-7);
  } catch (const DynamicsError&) {
    return std::nullopt;
  }
  Eigen::VectorXd v = Eigen::VectorXd::Zero(ctx.model.n_vars());
  for (int t = 0; t <= N; ++t)
    for (int i = 0; i < d.n_states(); ++i) v[ctx.x[t][i]] = xs[t][i];
  for (int t = 0; t < N; ++t)
    for (int i = 0; i < d.n_inputs(); ++i) v[ctx.u[t][i]] = u[t][i];
  std::optional<Eigen::VectorXd> cand = integralize(ctx, v);
  if (!cand || !ctx.model.is_feasible(*cand, 1e-6)) return std::nullopt;
  return cand;
}

// Schedule + solve one warm-start trajectory for the mission, trying goal
// orders (and a little settle padding) until one convex program succeeds.
inline std::optional<Eigen::VectorXd> route_warm_start(const EncodingContext& ctx,
                                                       unsigned seed) {
  if (ctx.pwa || ctx.grid_pitch > 0.0) return std::nullopt;  // LTI missions only
  const Scenario& sc = *ctx.scenario;
  std::optional<RouteMission> mission = recognize_mission(ctx.encoded);
  if (!mission) return std::nullopt;

  const LinearSystem& d = ctx.sys;
  Eigen::Vector2d p0 = d.C.block(0, 0, 2, d.n_states()) * sc.vehicle.x0;
  double step_reach = planar_speed_bound(sc.vehicle) * ctx.dt;
  if (!(step_reach > 0.0)) step_reach = sc.workspace_diameter() / std::max(1, ctx.N);

  for (const auto& order : goal_orders(*mission, p0, sc, seed)) {
    for (int pad : {0, 2, 4, 6, 8, 10}) {
      std::vector<RouteStop> stops;
      Eigen::Vector2d at = p0;
      int t_free = 0;
      bool ok = true;
      for (std::size_t gi : order) {
        const RouteGoal& g = mission->goals[gi];
        const Region* r = sc.find_region(g.region);
        if (!r || r->members.empty()) {
          ok = false;
          break;
        }
        const ConvexPolygon* best = nullptr;
        double best_d = std::numeric_limits<double>::infinity();
        for (const auto& mbr : r->members) {
          double dd = (closest_point_in(mbr, at) - at).norm();
          if (dd < best_d) {
            best_d = dd;
            best = &mbr;
          }
        }
        // +1 absorbs the acceleration ramp the straight-line estimate ignores
        int travel = static_cast<int>(std::ceil(best_d / step_reach)) + 1 + pad;
        int settle = std::max(g.settle_lo, t_free + travel);
        if (settle > g.settle_hi || settle + g.hold_hi > ctx.N) {
          ok = false;
          break;
        }
        Eigen::Vector2d target = closest_point_in(*best, at);
        stops.push_back({gi, best, settle, target});
        at = target;
        t_free = settle + g.hold_hi + 1;
      }
      if (!ok) continue;

      // a precedence settle must come before any stay/avoid conflict window
      bool consistent = true;
      for (const auto& p : mission->precedences) {
        int settle = -1;
        for (const auto& s : stops)
          if (s.goal == p.goal_index) settle = s.settle;
        if (settle < 0 || settle < mission->goals[p.goal_index].settle_lo) consistent = false;
        if (p.lhs_stay) continue;
        for (const auto& s : stops) {
          const RouteGoal& g = mission->goals[s.goal];
          if (g.region == p.lhs && s.settle + g.hold_lo < settle) consistent = false;
        }
      }
      if (!consistent) continue;

      auto ref = timed_reference(ctx, *mission, stops, step_reach);
      if (!ref) continue;
      if (auto cand = route_candidate(ctx, *mission, stops, std::move(*ref))) return cand;
    }
  }
  return std::nullopt;
}

}  // namespace detail

// Independent post-solve verification of a decoded trajectory. `prepared`
// must already be in step windows (prepare_for_horizon output).
inline VerificationReport verify_trajectory(const Scenario& sc, const Formula& prepared,
                                            const std::vector<Eigen::VectorXd>& xs,
                                            const std::vector<Eigen::VectorXd>& us,
                                            const LinearSystem& d,
                                            const std::optional<PwaSystem>& pwa) {
  VerificationReport rep;
  const int N = static_cast<int>(xs.size()) - 1;

  std::vector<Eigen::VectorXd> sim =
      pwa ? simulate(*pwa, xs[0], us, 1e-5) : simulate(d, xs[0], us, 1e-5);
  for (int t = 0; t <= N; ++t)
    rep.dynamics_residual =
        std::max(rep.dynamics_residual, (sim[t] - xs[t]).lpNorm<Eigen::Infinity>());

  Trace trace(N + 1);
  for (int t = 0; t <= N; ++t) {
    trace.set("O", t, false);
    for (const auto& r : sc.regions) trace.set(r.name, t, false);
  }
  bool any_obstacle = !sc.static_obstacles.empty() || !sc.moving_obstacles.empty();
  for (int t = 0; t <= N; ++t) {
    Eigen::Vector2d p = d.C.block(0, 0, 2, d.n_states()) * xs[t];
    std::set<std::string> at = label(p, t, sc);
    rep.step_labels.push_back(at);
    for (const auto& a : at) trace.set(a, t, true);
    if (at.count("O")) ++rep.obstacle_contacts;
    if (any_obstacle) {
      double clear = std::numeric_limits<double>::infinity();
      for (const auto& o : sc.obstacles_at(t))
        clear = std::min(clear, o.signed_distance_bound(p));
      rep.min_obstacle_clearance = std::min(rep.min_obstacle_clearance, clear);
    }
  }

  for (const auto& r : sc.regions) {
    int best = 0, run = 0, first = -1;
    for (int t = 0; t <= N; ++t) {
      if (rep.step_labels[t].count(r.name)) {
        if (first < 0) first = t;
        best = std::max(best, ++run);
      } else {
        run = 0;
      }
    }
    rep.dwell[r.name] = best;
    rep.first_visit[r.name] = first;
  }

  rep.satisfied = evaluate(prepared, trace, 0);
  if (rep.satisfied != evaluate_by_progression(prepared, trace, 0))
    throw PlannerError("internal error: the two reference MTL evaluators disagree");
  if (!rep.satisfied) rep.violation = diagnose(prepared, trace, 0);
  return rep;
}

// Compile, solve, decode, verify. Throws PlannerError when a claimed-feasible
// solve fails verification (that is an encoder bug, not a planning result).
inline PlanResult plan(const Scenario& sc, const Formula& spec, int N, PlanOptions opt = {}) {
  Formula prepared = prepare_for_horizon(spec, sc.dt, N);

  EncodeOptions eo;
  eo.with_cost = opt.with_cost;
  EncodingContext ctx = build(sc, spec, N, eo);

  // scenario invariant: the vehicle starts inside the workspace, clear of
  // every inflated obstacle
  Eigen::Vector2d p0 = ctx.output_system().C.block(0, 0, 2, ctx.output_system().C.cols()) *
                       sc.vehicle.x0;
  if (p0.x() < sc.ws_lo.x() || p0.x() > sc.ws_hi.x() || p0.y() < sc.ws_lo.y() ||
      p0.y() > sc.ws_hi.y())
    throw PlannerError("initial position leaves the workspace");
  for (const auto& o : sc.obstacles_at(0))
    if (o.contains(p0, 0.0))
      throw PlannerError("initial position is inside an inflated obstacle at t=0");

  BnbOptions bo;
  bo.gap_tol = opt.gap_tol;
  bo.node_limit = opt.node_limit;
  bo.time_limit = opt.time_limit;
  bo.branch_rule = BranchRule::LowestIndex;  // staged binaries dive better in time order
  if (opt.rounding_hint)
    bo.primal_hint = [&ctx](const Eigen::VectorXd& relax) { return integralize(ctx, relax); };
  if (opt.route_warm_start) bo.warm_start = detail::route_warm_start(ctx, opt.seed);

  MilpResult res = branch_and_bound(ctx.model, bo);

  PlanResult out;
  out.status = res.status;
  out.horizon = N;
  out.dt = sc.dt;
  out.bound = res.bound;
  out.gap = res.gap();
  out.nodes = res.nodes;
  out.lp_iterations = res.lp_iterations;
  out.seconds = res.seconds;
  out.variables = ctx.model.n_vars();
  out.constraints = static_cast<int>(ctx.model.rows().size());
  for (const auto& v : ctx.model.vars())
    if (v.kind == VarKind::Binary) ++out.binaries;
  out.prepared = prepared;
  if (ctx.pwa) {
    out.state_names = ctx.pwa->state_names;
    out.input_names = ctx.pwa->input_names;
  } else {
    out.state_names = ctx.sys.state_names;
    out.input_names = ctx.sys.input_names;
  }
  if (!out.has_plan()) return out;

  out.objective = res.objective;
  out.x = ctx.decode_states(res.x);
  out.u = ctx.decode_inputs(res.x);
  out.verification = verify_trajectory(sc, prepared, out.x, out.u, ctx.sys, ctx.pwa);

  if (!out.verification.satisfied) {
    std::string why = out.verification.violation ? out.verification.violation->detail
                                                 : "specification evaluates to false";
    throw PlannerError("solver returned a trajectory that fails independent verification: " +
                       why);
  }
  if (out.verification.dynamics_residual > 1e-6)
    throw PlannerError("solver trajectory drifts from the dynamics by " +
                       std::to_string(out.verification.dynamics_residual));
  if (opt.with_cost) {
    double sum = 0.0;
    for (const auto& ut : out.u) sum += ut.lpNorm<1>();
    if (std::abs(sum - out.objective) > 1e-6)
      throw PlannerError("reported objective disagrees with the decoded inputs");
  }
  return out;
}

inline PlanResult plan(const Scenario& sc, int N, PlanOptions opt = {}) {
  return plan(sc, parse_formula(sc.specification), N, opt);
}

// Smallest feasible horizon in [2, n_max], scanning upward with pure
// feasibility solves (no objective, so the first incumbent settles each N).
// nullopt = infeasible for every horizon in range.
inline std::optional<int> find_min_horizon(const Scenario& sc, const Formula& spec, int n_max,
                                           PlanOptions opt = {}) {
  opt.with_cost = false;
  for (int n = 2; n <= n_max; ++n) {
    EncodingContext ctx;
    try {
      EncodeOptions eo;
      eo.with_cost = false;
      ctx = build(sc, spec, n, eo);
    } catch (const FormulaError&) {
      continue;  // formula horizon does not fit yet
    }
    BnbOptions bo;
    bo.node_limit = opt.node_limit;
    bo.time_limit = opt.time_limit;
    bo.branch_rule = BranchRule::LowestIndex;
    if (opt.rounding_hint)
      bo.primal_hint = [&ctx](const Eigen::VectorXd& relax) { return integralize(ctx, relax); };
    if (opt.route_warm_start) bo.warm_start = detail::route_warm_start(ctx, opt.seed);
    MilpResult res = branch_and_bound(ctx.model, bo);
    if (res.status == MilpStatus::Optimal || res.status == MilpStatus::FeasibleGap) return n;
  }
  return std::nullopt;
}

inline std::optional<int> find_min_horizon(const Scenario& sc, int n_max, PlanOptions opt = {}) {
  return find_min_horizon(sc, parse_formula(sc.specification), n_max, opt);
}

// ---------------------------------------------------------------------------
// Exhaustive oracle for tiny grid instances: dynamic programming over
// (cell, residual-formula) states with unit move cost. Deliberately limited
// to instances small enough that exactness is cheap to trust.

struct GridPlan {
  bool feasible = false;
  double cost = 0.0;  // number of moves (stay steps are free)
};

inline GridPlan brute_force_plan(const Scenario& sc, const Formula& spec, int N) {
  const VehicleConfig& cfg = sc.vehicle;
  if (cfg.kind != VehicleKind::Integrator || !(cfg.input_l1_cap > 0.0))
    throw PlannerError("the exhaustive oracle needs an integrator vehicle on a move grid");
  if (N > 12) throw PlannerError("instance too large for the exhaustive oracle (N > 12)");
  const double pitch = cfg.input_l1_cap;

  Eigen::Vector2d p0 = cfg.x0.head<2>();
  auto steps_down = [&](double lo, double at) {
    return static_cast<int>(std::ceil((lo - at) / pitch - 1e-9));
  };
  auto steps_up = [&](double hi, double at) {
    return static_cast<int>(std::floor((hi - at) / pitch + 1e-9));
  };
  int i_lo = steps_down(cfg.x_lo[0], p0.x()), i_hi = steps_up(cfg.x_hi[0], p0.x());
  int j_lo = steps_down(cfg.x_lo[1], p0.y()), j_hi = steps_up(cfg.x_hi[1], p0.y());
  int nx = i_hi - i_lo + 1, ny = j_hi - j_lo + 1;
  if (nx < 1 || ny < 1) throw PlannerError("initial cell violates the state bounds");
  if (nx > 8 || ny > 8)
    throw PlannerError("instance too large for the exhaustive oracle (grid over 8x8)");

  Formula prepared;
  try {
    prepared = prepare_for_horizon(spec, sc.dt, N);
  } catch (const FormulaError&) {
    return {};  // horizon too short for the formula
  }

  auto cell_pos = [&](int i, int j) {
    return Eigen::Vector2d(p0.x() + i * pitch, p0.y() + j * pitch);
  };
  auto labels = [&](int i, int j, int t) { return label(cell_pos(i, j), t, sc); };

  // key: cell id * residual formula text; value: fewest moves so far
  auto cell_id = [&](int i, int j) { return (i - i_lo) * ny + (j - j_lo); };
  std::map<std::pair<int, std::string>, std::pair<double, Formula>> layer;
  double best = std::numeric_limits<double>::infinity();

  Formula r0 = progress(prepared, labels(0, 0, 0));
  if (r0.kind() == Kind::True)
    best = 0.0;
  else if (r0.kind() != Kind::False)
    layer[{cell_id(0, 0), to_string(r0)}] = {0.0, r0};

  static const int dx[5] = {0, 1, -1, 0, 0};
  static const int dy[5] = {0, 0, 0, 1, -1};
  std::map<int, std::pair<int, int>> cells;  // id -> (i, j) for the current layer
  cells[cell_id(0, 0)] = {0, 0};

  for (int t = 1; t <= N && !layer.empty(); ++t) {
    std::map<std::pair<int, std::string>, std::pair<double, Formula>> next;
    std::map<int, std::pair<int, int>> next_cells;
    for (const auto& [key, val] : layer) {
      auto [i, j] = cells[key.first];
      for (int mv = 0; mv < 5; ++mv) {
        int ni = i + dx[mv], nj = j + dy[mv];
        if (ni < i_lo || ni > i_hi || nj < j_lo || nj > j_hi) continue;
        double cost = val.first + (mv == 0 ? 0.0 : 1.0);
        if (cost >= best) continue;
        Formula res = progress(val.second, labels(ni, nj, t));
        if (res.kind() == Kind::False) continue;
        if (res.kind() == Kind::True) {
          best = std::min(best, cost);
          continue;
        }
        std::pair<int, std::string> nk{cell_id(ni, nj), to_string(res)};
        auto it = next.find(nk);
        if (it == next.end() || cost < it->second.first) {
          next[nk] = {cost, res};
          next_cells[nk.first] = {ni, nj};
        }
      }
    }
    layer = std::move(next);
    cells = std::move(next_cells);
  }

  GridPlan out;
  if (std::isfinite(best)) {
    out.feasible = true;
    out.cost = best;
  }
  return out;
}

inline GridPlan brute_force_plan(const Scenario& sc, int N) {
  return brute_force_plan(sc, parse_formula(sc.specification), N);
}

// minimal feasible horizon per the exhaustive oracle; the comparison target
// for find_min_horizon on grid scenarios
inline std::optional<int> brute_force_min_horizon(const Scenario& sc, const Formula& spec,
                                                  int n_max) {
  for (int n = 2; n <= n_max; ++n)
    if (brute_force_plan(sc, spec, n).feasible) return n;
  return std::nullopt;
}

}  // namespace mtlplan

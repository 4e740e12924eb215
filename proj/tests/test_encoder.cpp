// MILP encoding: indicator semantics, formula levels vs the trace oracle,
// dynamics consistency, and decode exactness.
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <set>

#include "mtlplan/branch_and_bound.hpp"
#include "mtlplan/encoder.hpp"
#include "mtlplan/parse.hpp"
#include "test_support.hpp"

using namespace mtlplan;

namespace {

Scenario base_scenario() {
  Scenario sc;
  sc.name = "encoder-test";
  sc.ws_lo = {0, 0};
  sc.ws_hi = {10, 10};
  sc.dt = 1.0;
  sc.inflation = 0.0;
  Region a;
  a.name = "A";
  a.members.push_back(ConvexPolygon::axis_aligned_box({1, 1}, {4, 4}));
  Region b;
  b.name = "B";
  b.members.push_back(ConvexPolygon::axis_aligned_box({5.5, 5.5}, {8.5, 8.5}));
  sc.regions = {a, b};
  sc.static_obstacles.push_back(ConvexPolygon::axis_aligned_box({5, 1}, {7, 3}));
  sc.vehicle.kind = VehicleKind::Integrator;
  sc.vehicle.x0 = Eigen::Vector2d(0.5, 0.5);
  sc.vehicle.u_lo = Eigen::Vector2d(-20, -20);
  sc.vehicle.u_hi = Eigen::Vector2d(20, 20);
  return sc;
}

void pin_state(EncodingContext& ctx, int t, const Eigen::Vector2d& p) {
  ctx.model.add_row("pin" + std::to_string(t) + "x", {{ctx.x[t][0], 1.0}}, RowSense::EQ, p.x());
  ctx.model.add_row("pin" + std::to_string(t) + "y", {{ctx.x[t][1], 1.0}}, RowSense::EQ, p.y());
}

// solve for the extreme values a [0,1] level can take; a forced level has
// min == max
std::pair<double, double> level_range(const MilpModel& model, int var) {
  MilpModel lo = model, hi = model;
  lo.add_objective_term(var, 1.0);
  hi.add_objective_term(var, -1.0);
  MilpResult rl = branch_and_bound(lo);
  MilpResult rh = branch_and_bound(hi);
  REQUIRE(rl.status == MilpStatus::Optimal);
  REQUIRE(rh.status == MilpStatus::Optimal);
  return {rl.objective, -rh.objective};
}

void check_forced(const MilpModel& model, int var, double want) {
  auto [lo, hi] = level_range(model, var);
  CHECK(lo == Catch::Approx(want).margin(1e-6));
  CHECK(hi == Catch::Approx(want).margin(1e-6));
}

bool feasible(const MilpModel& model) {
  MilpResult r = branch_and_bound(model);
  if (r.status == MilpStatus::Optimal) return true;
  REQUIRE(r.status == MilpStatus::Infeasible);
  return false;
}

}  // namespace

TEST_CASE("halfspace indicators decode membership and exclude the band", "[encoder][halfspace]") {
  Scenario sc = base_scenario();
  Formula top = Formula::constant(true);

  Halfspace hs{{1, 0}, 2.0};  // x <= 2

  SECTION("pinned inside forces z = 1") {
    EncodingContext ctx = build(sc, top, 2, {.with_cost = false});
    pin_state(ctx, 1, {0.0, 5.0});
    int z = encode_halfspace(ctx, 1, hs);
    check_forced(ctx.model, z, 1.0);
  }
  SECTION("pinned outside forces z = 0") {
    EncodingContext ctx = build(sc, top, 2, {.with_cost = false});
    pin_state(ctx, 1, {3.0, 5.0});
    int z = encode_halfspace(ctx, 1, hs);
    check_forced(ctx.model, z, 0.0);
  }
  SECTION("points in the open epsilon band are infeasible for both values") {
    EncodingContext ctx = build(sc, top, 2, {.with_cost = false});
    pin_state(ctx, 1, {2.0 + 0.5 * ctx.eps, 5.0});
    encode_halfspace(ctx, 1, hs);
    CHECK_FALSE(feasible(ctx.model));
  }
  SECTION("band points just past epsilon stay feasible") {
    EncodingContext ctx = build(sc, top, 2, {.with_cost = false});
    pin_state(ctx, 1, {2.0 + 2.0 * ctx.eps, 5.0});
    int z = encode_halfspace(ctx, 1, hs);
    check_forced(ctx.model, z, 0.0);
  }
  SECTION("indicators are memoized per step") {
    EncodingContext ctx = build(sc, top, 2, {.with_cost = false});
    int z1 = encode_halfspace(ctx, 1, hs);
    int before = ctx.model.n_vars();
    int z2 = encode_halfspace(ctx, 1, hs);
    CHECK(z1 == z2);
    CHECK(ctx.model.n_vars() == before);
    CHECK(encode_halfspace(ctx, 2, hs) != z1);
  }
}

TEST_CASE("region levels are forced by pinned positions", "[encoder][region]") {
  Scenario sc = base_scenario();
  Region ell;  // non-convex L: two overlapping boxes
  ell.name = "L";
  ell.members.push_back(ConvexPolygon::axis_aligned_box({0.2, 6.0}, {2.2, 7.0}));
  ell.members.push_back(ConvexPolygon::axis_aligned_box({0.2, 6.0}, {1.2, 9.0}));
  sc.regions.push_back(ell);
  Formula top = Formula::constant(true);

  auto probe = [&](const Eigen::Vector2d& p, const std::string& region, double want) {
    EncodingContext ctx = build(sc, top, 1, {.with_cost = false});
    pin_state(ctx, 1, p);
    int lvl = encode_region(ctx, 1, *sc.find_region(region));
    check_forced(ctx.model, lvl, want);
  };

  probe({2.0, 2.0}, "A", 1.0);   // inside
  probe({4.5, 2.0}, "A", 0.0);   // outside, right of A
  probe({2.0, 6.5}, "L", 1.0);   // first member only
  probe({0.7, 8.5}, "L", 1.0);   // second member only
  probe({0.7, 6.5}, "L", 1.0);   // overlap
  probe({2.0, 8.5}, "L", 0.0);   // notch of the L
}

TEST_CASE("obstacle atom unions all active obstacles", "[encoder][region]") {
  Scenario sc = base_scenario();
  MovingObstacle mo(ConvexPolygon::axis_aligned_box({0, 0}, {1, 1}),
                    {{0.0, {9.0, 9.0}}, {4.0, {9.0, 5.0}}}, true);
  sc.moving_obstacles.push_back(mo);
  Formula top = Formula::constant(true);

  auto probe_o = [&](int t, const Eigen::Vector2d& p, double want) {
    EncodingContext ctx = build(sc, top, 4, {.with_cost = false});
    pin_state(ctx, t, p);
    Region obst;
    obst.name = "O";
    obst.members = sc.obstacles_at(t);
    int lvl = encode_region(ctx, t, obst);
    check_forced(ctx.model, lvl, want);
  };

  probe_o(1, {6.0, 2.0}, 1.0);  // static obstacle
  probe_o(1, {9.5, 8.5}, 1.0);  // mover a quarter of the way down
  probe_o(4, {9.5, 5.5}, 1.0);  // mover at its final keyframe
  probe_o(4, {9.5, 8.5}, 0.0);  // vacated spot
  probe_o(1, {2.0, 8.0}, 0.0);  // free space
}

TEST_CASE("operator pockets match strict step semantics", "[encoder][formula]") {
  Scenario sc = base_scenario();
  const Eigen::Vector2d in_a{2.0, 2.0}, in_b{7.0, 7.0}, out{2.0, 8.0};

  // pin a 5-sample trajectory and test satisfiability of the root
  auto run = [&](const std::string& text, const std::vector<Eigen::Vector2d>& pts) {
    Scenario local = sc;
    local.vehicle.x0 = pts[0];
    EncodingContext ctx = build(local, parse_formula(text), 4, {.with_cost = false});
    for (int t = 1; t <= 4; ++t) pin_state(ctx, t, pts[t]);
    return feasible(ctx.model);
  };

  CHECK(run("F[0,4] B", {out, out, out, out, in_b}));
  CHECK_FALSE(run("F[0,3] B", {out, out, out, out, in_b}));
  CHECK(run("G[1,3] A", {out, in_a, in_a, in_a, out}));
  CHECK_FALSE(run("G[1,3] A", {out, in_a, out, in_a, out}));
  CHECK(run("X A", {out, in_a, out, out, out}));
  CHECK_FALSE(run("X A", {in_a, out, out, out, out}));

  // strict until: the settle step releases the holding obligation, and no
  // holding is needed when the settle happens immediately
  CHECK(run("!B U A", {in_a, out, out, out, out}));
  CHECK(run("!B U A", {out, out, in_a, out, out}));
  CHECK_FALSE(run("!B U A", {out, in_b, in_a, out, out}));
  CHECK(run("B U A", {in_a, out, out, out, out}));  // immediate settle, empty prefix
  CHECK(run("A U[2,4] B", {in_a, in_a, in_b, out, out}));
  CHECK_FALSE(run("A U[2,4] B", {in_a, out, in_b, out, out}));

  // release arrives through its eventually/always expansion; the released
  // operand must still hold AT the settle step (A and B are disjoint here,
  // so stepping into A cannot rescue the same step's B obligation)
  CHECK(run("A R[0,4] B", {in_b, in_b, in_b, in_b, in_b}));
  CHECK_FALSE(run("A R[0,4] B", {in_b, in_b, in_a, out, out}));
  CHECK_FALSE(run("A R[0,4] B", {in_b, in_b, out, in_a, out}));
  CHECK(run("B R[0,4] !A", {out, out, in_b, in_a, in_a}));  // B at 2 frees steps 3+
  CHECK(run("A R[2,3] B", {out, in_a, out, out, out}));  // released before the window

  // obstacle avoidance and nesting
  CHECK(run("G !O", {out, out, out, out, out}));
  CHECK_FALSE(run("G !O", {out, out, {6.0, 2.0}, out, out}));
  CHECK(run("F (A & F[1,2] B)", {out, in_a, out, in_b, out}));
  CHECK_FALSE(run("F (A & F[1,1] B)", {out, in_a, out, in_b, out}));
}

TEST_CASE("random formulas agree with the trace oracle on pinned runs", "[encoder][oracle]") {
  Scenario sc = base_scenario();
  MovingObstacle mo(ConvexPolygon::axis_aligned_box({0, 0}, {1, 1}),
                    {{0.0, {8.5, 8.5}}, {8.0, {8.5, 0.5}}}, true);
  sc.moving_obstacles.push_back(mo);
  const int n_steps = 8;

  std::mt19937 rng(611953);
  testsupport::FormulaGenOptions gopt;
  gopt.atoms = {"A", "B", "O"};
  gopt.max_depth = 3;
  gopt.max_window_hi = 4;

  // all halfspaces a sample must keep clear of, per step
  std::vector<std::vector<Halfspace>> walls(n_steps + 1);
  for (int t = 0; t <= n_steps; ++t) {
    for (const auto& r : sc.regions)
      for (const auto& m : r.members)
        for (const auto& h : m.halfspaces()) walls[t].push_back(h);
    for (const auto& o : sc.obstacles_at(t))
      for (const auto& h : o.halfspaces()) walls[t].push_back(h);
  }

  auto sample_point = [&](int t) {
    std::uniform_real_distribution<double> ux(0.0, 10.0);
    std::uniform_int_distribution<int> mode(0, 5);
    for (;;) {
      Eigen::Vector2d p;
      int m = mode(rng);
      if (m <= 1) {  // bias towards region A / B interiors
        std::uniform_real_distribution<double> dx(1.2, 3.8), bx(5.7, 8.3);
        p = m == 0 ? Eigen::Vector2d(dx(rng), dx(rng)) : Eigen::Vector2d(bx(rng), bx(rng));
      } else if (m == 2) {  // inside the static obstacle
        std::uniform_real_distribution<double> ox(5.2, 6.8), oy(1.2, 2.8);
        p = {ox(rng), oy(rng)};
      } else {
        p = {ux(rng), ux(rng)};
      }
      bool clear = true;
      for (const auto& h : walls[t])
        if (std::abs(h.h.dot(p) - h.k) < 0.05) clear = false;
      if (clear) return p;
    }
  };

  int checked = 0, satisfied = 0;
  while (checked < 220) {
    Formula f = testsupport::random_formula(rng, gopt);
    Formula g;
    try {
      g = prepare_for_horizon(f, sc.dt, n_steps);
    } catch (const FormulaError&) {
      continue;  // horizon too long for the pinned run; redraw
    }

    std::vector<Eigen::Vector2d> pts;
    for (int t = 0; t <= n_steps; ++t) pts.push_back(sample_point(t));

    Trace tr(n_steps + 1);
    for (const char* a : {"A", "B", "O"})
      for (int t = 0; t <= n_steps; ++t) tr.set(a, t, false);
    for (int t = 0; t <= n_steps; ++t)
      for (const auto& name : label(pts[t], t, sc)) tr.set(name, t, true);
    bool want = evaluate(g, tr, 0);

    Scenario local = sc;
    local.vehicle.x0 = pts[0];
    EncodingContext ctx = build(local, f, n_steps, {.with_cost = false});
    for (int t = 1; t <= n_steps; ++t) pin_state(ctx, t, pts[t]);
    bool got = feasible(ctx.model);

    INFO("formula: " << to_string(f));
    REQUIRE(got == want);
    ++checked;
    if (want) ++satisfied;
  }
  // the harness must exercise both verdicts
  CHECK(satisfied >= 30);
  CHECK(checked - satisfied >= 30);
}

TEST_CASE("formula levels are memoized by node and step", "[encoder][memo]") {
  Scenario sc = base_scenario();
  Formula f = parse_formula("F[0,3] A | F[0,3] A");
  EncodingContext ctx = build(sc, f, 5, {.with_cost = false});

  int vars_before = ctx.model.n_vars();
  std::size_t rows_before = ctx.model.rows().size();
  int again = encode_formula(ctx, ctx.encoded, *ctx.scenario);
  CHECK(again == ctx.root_p);
  CHECK(ctx.model.n_vars() == vars_before);
  CHECK(ctx.model.rows().size() == rows_before);

  // the duplicated disjunct reuses every level of the first one: one extra
  // variable for the or itself over encoding the branch alone
  Scenario sc2 = base_scenario();
  EncodingContext single = build(sc2, parse_formula("F[0,3] A"), 5, {.with_cost = false});
  CHECK(ctx.model.n_vars() == single.model.n_vars() + 1);
}

TEST_CASE("binary count is one indicator per distinct halfspace per step", "[encoder][memo]") {
  Scenario sc = base_scenario();
  // every step references both A (4 edges) and the obstacle (4 edges), but A
  // and the obstacle share the supporting line y >= 1, so each step carries
  // 7 distinct indicators and the shared one is reused
  EncodingContext ctx = build(sc, parse_formula("G (A | !O)"), 6, {.with_cost = false});
  int binaries = 0;
  for (const auto& v : ctx.model.vars())
    if (v.kind == VarKind::Binary) ++binaries;
  CHECK(binaries == 7 * 7);
  CHECK(ctx.z_entries.size() == 7u * 7u);
}

TEST_CASE("indicators decode membership on random pinned runs", "[encoder][decode]") {
  Scenario sc = base_scenario();
  MovingObstacle mo(ConvexPolygon::axis_aligned_box({0, 0}, {1.5, 1.5}),
                    {{0.0, {8.0, 8.0}}, {8.0, {1.0, 8.0}}}, true);
  sc.moving_obstacles.push_back(mo);
  const int n_steps = 8;
  std::mt19937 rng(445566);

  int checked_entries = 0;
  for (int rep = 0; rep < 15; ++rep) {
    // halfspace pool per step for the band filter
    std::vector<std::vector<Halfspace>> walls(n_steps + 1);
    for (int t = 0; t <= n_steps; ++t) {
      for (const auto& r : sc.regions)
        for (const auto& m : r.members)
          for (const auto& h : m.halfspaces()) walls[t].push_back(h);
      for (const auto& o : sc.obstacles_at(t))
        for (const auto& h : o.halfspaces()) walls[t].push_back(h);
    }

    Scenario local = sc;
    std::vector<Eigen::Vector2d> pts;
    std::uniform_real_distribution<double> ux(0.0, 10.0);
    double eps = 1e-4 * sc.workspace_diameter();
    for (int t = 0; t <= n_steps; ++t) {
      for (;;) {
        Eigen::Vector2d p{ux(rng), ux(rng)};
        bool clear = true;
        for (const auto& h : walls[t])
          if (std::abs(h.h.dot(p) - h.k) < 1.5 * eps) clear = false;
        if (clear) {
          pts.push_back(p);
          break;
        }
      }
    }

    local.vehicle.x0 = pts[0];
    EncodingContext ctx = build(local, Formula::constant(true), n_steps, {.with_cost = false});
    for (int t = 1; t <= n_steps; ++t) pin_state(ctx, t, pts[t]);
    for (int t = 0; t <= n_steps; ++t) {
      for (const auto& r : local.regions) encode_region(ctx, t, r);
      Region obst;
      obst.name = "O";
      obst.members = local.obstacles_at(t);
      encode_region(ctx, t, obst);
    }

    MilpResult res = branch_and_bound(ctx.model);
    REQUIRE(res.status == MilpStatus::Optimal);
    for (const auto& ze : ctx.z_entries) {
      double margin = ze.hs.h.dot(pts[ze.t]) - ze.hs.k;
      if (std::abs(margin) <= ctx.eps) continue;  // documented exclusion band
      double got = res.x[ze.var];
      CHECK(got == Catch::Approx(margin <= 0.0 ? 1.0 : 0.0).margin(1e-6));
      ++checked_entries;
    }
  }
  CHECK(checked_entries >= 1000);
}

TEST_CASE("decoded trajectories replay through the dynamics", "[encoder][dynamics]") {
  Scenario sc;
  sc.name = "quad";
  sc.ws_lo = {0, 0};
  sc.ws_hi = {10, 10};
  sc.dt = 0.5;
  Region a;
  a.name = "A";
  a.members.push_back(ConvexPolygon::axis_aligned_box({2, 2}, {4, 4}));
  sc.regions = {a};
  sc.vehicle.kind = VehicleKind::Quadrotor;
  sc.vehicle.planar = true;
  sc.vehicle.x0 = Eigen::VectorXd::Zero(8);
  sc.vehicle.x0[0] = 0.5;
  sc.vehicle.x0[1] = 0.5;
  Eigen::VectorXd xl(8), xh(8);
  xl << 0, 0, -2, -2, -0.6, -0.6, -3, -3;
  xh << 10, 10, 2, 2, 0.6, 0.6, 3, 3;
  sc.vehicle.x_lo = xl;
  sc.vehicle.x_hi = xh;
  sc.vehicle.u_lo = Eigen::Vector2d(-0.02, -0.02);
  sc.vehicle.u_hi = Eigen::Vector2d(0.02, 0.02);

  SECTION("trivial specification hovers for free") {
    EncodingContext ctx = build(sc, Formula::constant(true), 6);
    MilpResult r = branch_and_bound(ctx.model);
    REQUIRE(r.status == MilpStatus::Optimal);
    CHECK(r.objective == Catch::Approx(0.0).margin(1e-9));
    auto xs = ctx.decode_states(r.x);
    for (const auto& x : xs) CHECK((x - sc.vehicle.x0).lpNorm<Eigen::Infinity>() < 1e-7);
  }

  SECTION("reach task replays exactly") {
    EncodingContext ctx = build(sc, parse_formula("F[0,5] A"), 10);
    MilpResult r = branch_and_bound(ctx.model);
    REQUIRE(r.status == MilpStatus::Optimal);
    // moving 1.5 m over 5 s through the attitude chain needs only tiny
    // torques; anything visibly nonzero means the maneuver was paid for
    CHECK(r.objective > 1e-5);
    auto xs = ctx.decode_states(r.x);
    auto us = ctx.decode_inputs(r.x);
    auto sim = simulate(ctx.sys, sc.vehicle.x0, us);
    REQUIRE(sim.size() == xs.size());
    for (std::size_t t = 0; t < xs.size(); ++t)
      CHECK((sim[t] - xs[t]).lpNorm<Eigen::Infinity>() < 1e-6);
    // the eventually window [0, 5s] spans steps 0..10 at dt = 0.5
    bool hit = false;
    for (const auto& x : xs)
      hit = hit || (x[0] >= 2.0 - 1e-9 && x[0] <= 4.0 + 1e-9 && x[1] >= 2.0 - 1e-9 &&
                    x[1] <= 4.0 + 1e-9);
    CHECK(hit);
  }
}

TEST_CASE("loop closure ties the final position to the start", "[encoder][dynamics]") {
  Scenario sc = base_scenario();
  sc.loop = true;
  sc.vehicle.u_lo = Eigen::Vector2d(-2, -2);
  sc.vehicle.u_hi = Eigen::Vector2d(2, 2);
  Region mid;
  mid.name = "M";
  mid.members.push_back(ConvexPolygon::axis_aligned_box({2.3, 0.3}, {3.5, 0.7}));
  sc.regions.push_back(mid);

  EncodingContext ctx = build(sc, parse_formula("F[2,2] M"), 4);
  MilpResult r = branch_and_bound(ctx.model);
  REQUIRE(r.status == MilpStatus::Optimal);
  auto xs = ctx.decode_states(r.x);
  CHECK((xs.back() - xs.front()).lpNorm<Eigen::Infinity>() < 1e-6);
  CHECK(xs[2].x() >= 2.3 - 1e-6);
  // out and back: twice the distance from start to the region's near edge
  CHECK(r.objective == Catch::Approx(2.0 * (2.3 - 0.5)).margin(1e-5));
}

TEST_CASE("cost is the l1 norm of the inputs", "[encoder][cost]") {
  Scenario sc = base_scenario();
  EncodingContext ctx = build(sc, Formula::constant(true), 2);
  pin_state(ctx, 1, {0.5 + 2.0, 0.5});
  pin_state(ctx, 2, {0.5, 0.5 - 0.25});
  MilpResult r = branch_and_bound(ctx.model);
  REQUIRE(r.status == MilpStatus::Optimal);
  CHECK(r.objective == Catch::Approx(2.0 + 2.0 + 0.25).margin(1e-7));
}

TEST_CASE("unreachable regions come back infeasible", "[encoder]") {
  Scenario sc = base_scenario();
  sc.vehicle.u_lo = Eigen::Vector2d(-1, -1);
  sc.vehicle.u_hi = Eigen::Vector2d(1, 1);
  EncodingContext ctx = build(sc, parse_formula("F[0,2] B"), 2, {.with_cost = false});
  CHECK_FALSE(feasible(ctx.model));
}

TEST_CASE("grid moves restrict the integrator to unit steps", "[encoder][grid]") {
  Scenario sc;
  sc.name = "grid";
  sc.ws_lo = {0, 0};
  sc.ws_hi = {8, 8};
  sc.dt = 1.0;
  Region a;
  a.name = "A";
  double d = 1e-3;
  a.members.push_back(ConvexPolygon::axis_aligned_box({3 + d, 1 + d}, {4 - d, 2 - d}));
  sc.regions = {a};
  sc.vehicle.kind = VehicleKind::Integrator;
  sc.vehicle.x0 = Eigen::Vector2d(0.5, 0.5);
  sc.vehicle.u_lo = Eigen::Vector2d(-1, -1);
  sc.vehicle.u_hi = Eigen::Vector2d(1, 1);
  sc.vehicle.input_l1_cap = 1.0;

  EncodingContext ctx = build(sc, parse_formula("F[0,6] A"), 6);
  REQUIRE_FALSE(ctx.move.empty());
  MilpResult r = branch_and_bound(ctx.model);
  REQUIRE(r.status == MilpStatus::Optimal);
  // cell (3,1) from cell (0,0): manhattan distance 4 at unit cost
  CHECK(r.objective == Catch::Approx(4.0).margin(1e-6));
  auto us = ctx.decode_inputs(r.x);
  for (const auto& u : us) {
    double ax = std::abs(u[0]), ay = std::abs(u[1]);
    CHECK(std::min(ax, ay) < 1e-6);                      // axis aligned
    CHECK((std::abs(ax + ay - 1.0) < 1e-6 || ax + ay < 1e-6));  // unit step or stay
  }
  auto xs = ctx.decode_states(r.x);
  for (const auto& x : xs) {  // cell centers stay cell centers
    CHECK(std::abs(x[0] - std::floor(x[0]) - 0.5) < 1e-6);
    CHECK(std::abs(x[1] - std::floor(x[1]) - 0.5) < 1e-6);
  }
}

TEST_CASE("trajectory rounding completes relaxations into incumbents", "[encoder][hint]") {
  Scenario sc = base_scenario();
  EncodingContext ctx = build(sc, parse_formula("F[0,3] A & G !O"), 4);
  BnbOptions opt;
  opt.primal_hint = [&ctx](const Eigen::VectorXd& xr) { return integralize(ctx, xr); };
  MilpResult r = branch_and_bound(ctx.model, opt);
  REQUIRE(r.status == MilpStatus::Optimal);

  // hint on vs off must agree on the optimum
  MilpResult plain = branch_and_bound(ctx.model);
  CHECK(r.objective == Catch::Approx(plain.objective).margin(1e-6));

  // a solved integral point is a fixed point of the rounding
  auto back = integralize(ctx, r.x);
  REQUIRE(back.has_value());
  CHECK((*back - r.x).lpNorm<Eigen::Infinity>() < 1e-6);

  // geometry that misses the mission rounds to nothing
  Eigen::VectorXd off = r.x;
  for (int t = 0; t <= ctx.N; ++t) {
    off[ctx.x[t][0]] = 9.9;
    off[ctx.x[t][1]] = 9.9;
  }
  CHECK_FALSE(integralize(ctx, off).has_value());
}

TEST_CASE("pwa car picks modes consistent with its heading", "[encoder][pwa]") {
  Scenario sc;
  sc.name = "car";
  sc.ws_lo = {0, 0};
  sc.ws_hi = {12, 10};
  sc.dt = 0.5;
  Region a;
  a.name = "A";
  a.members.push_back(ConvexPolygon::axis_aligned_box({4.0, 4.0}, {6.0, 6.0}));
  sc.regions = {a};
  sc.vehicle.kind = VehicleKind::Car;
  sc.vehicle.heading_modes = 6;
  sc.vehicle.u1_nominal = 1.0;
  sc.vehicle.x0 = Eigen::Vector3d(1.0, 5.0, 0.0);
  sc.vehicle.u_lo = Eigen::Vector2d(0.0, -1.0);
  sc.vehicle.u_hi = Eigen::Vector2d(2.0, 1.0);

  EncodingContext ctx = build(sc, parse_formula("F[0,3] A"), 6);
  REQUIRE(ctx.pwa.has_value());
  BnbOptions bo;
  bo.branch_rule = BranchRule::LowestIndex;  // mode selectors first, in time order
  MilpResult r = branch_and_bound(ctx.model, bo);
  REQUIRE(r.status == MilpStatus::Optimal);
  auto xs = ctx.decode_states(r.x);
  auto us = ctx.decode_inputs(r.x);

  for (int t = 0; t < ctx.N; ++t) {
    int active = -1;
    for (std::size_t j = 0; j < ctx.mode[t].size(); ++j)
      if (r.x[ctx.mode[t][j]] > 0.5) {
        CHECK(active == -1);
        active = static_cast<int>(j);
      }
    REQUIRE(active >= 0);
    const PwaMode& md = ctx.pwa->modes[active];
    CHECK(xs[t][2] >= md.theta_lo - 1e-6);
    CHECK(xs[t][2] <= md.theta_hi + 1e-6);
    // the step must follow the active mode's affine map
    Eigen::VectorXd pred = md.sys.A * xs[t] + md.sys.B * us[t] + md.sys.c;
    CHECK((xs[t + 1] - pred).lpNorm<Eigen::Infinity>() < 1e-5);
  }

  SECTION("forcing one mode reduces to that mode's linear dynamics") {
    Scenario straight = sc;
    EncodingContext fixed = build(straight, parse_formula("F[0,3] A"), 6);
    int j0 = fixed.pwa->mode_for(0.0);
    for (int t = 0; t < fixed.N; ++t)
      fixed.model.add_row("fix" + std::to_string(t), {{fixed.mode[t][j0], 1.0}}, RowSense::EQ,
                          1.0);
    MilpResult rf = branch_and_bound(fixed.model);
    REQUIRE(rf.status == MilpStatus::Optimal);
    auto xsf = fixed.decode_states(rf.x);
    auto usf = fixed.decode_inputs(rf.x);
    auto sim = simulate(fixed.pwa->modes[j0].sys, straight.vehicle.x0, usf);
    for (std::size_t t = 0; t < xsf.size(); ++t)
      CHECK((sim[t] - xsf[t]).lpNorm<Eigen::Infinity>() < 1e-6);
  }
}

TEST_CASE("encoder rejects malformed inputs", "[encoder]") {
  Scenario sc = base_scenario();
  using Catch::Matchers::ContainsSubstring;

  CHECK_THROWS_WITH(build(sc, parse_formula("F D"), 3), ContainsSubstring("unknown region"));
  CHECK_THROWS_WITH(build(sc, parse_formula("G[0,99] A"), 3),
                    ContainsSubstring("longer trajectory"));
  {
    Scenario bad = sc;
    bad.vehicle.u_lo = Eigen::VectorXd();
    bad.vehicle.u_hi = Eigen::VectorXd();
    CHECK_THROWS_WITH(build(bad, parse_formula("F A"), 3), ContainsSubstring("input bounds"));
  }
  {
    Scenario bad = sc;
    bad.vehicle.x0 = Eigen::Vector2d(50, 50);  // outside the workspace box
    CHECK_THROWS_WITH(build(bad, parse_formula("F A"), 3), ContainsSubstring("bound"));
  }
  {
    Scenario bad = sc;
    bad.vehicle.x0 = Eigen::Vector3d(1, 1, 0);
    CHECK_THROWS_WITH(build(bad, parse_formula("F A"), 3), ContainsSubstring("dimension"));
  }
  CHECK_THROWS_WITH(build(sc, parse_formula("F A"), 0), ContainsSubstring("horizon"));
}

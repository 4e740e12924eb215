// mtlplan/encoder.hpp -- compile dynamics, specification, and cost to a MILP
//
// Variable scheme: states x{t}_{name}, inputs u{t}_{name}, cost lifts
// s{t}_{name}, halfspace indicators z{n} (binary), formula satisfaction
// levels and until auxiliaries P{n} (continuous in [0,1]), PWA mode
// selectors m{t}_{j} and grid move selectors mv{t}_{dir} (binary).
// With every binary integral, each P is forced to the exact truth value of
// its subformula at its step, so the root row P = 1 is feasible iff the
// specification holds on the decoded trajectory.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mtlplan/detail/numfmt.hpp"
#include "mtlplan/dynamics.hpp"
#include "mtlplan/environment.hpp"
#include "mtlplan/formula.hpp"
#include "mtlplan/milp_model.hpp"

namespace mtlplan {

class EncodingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EncodeOptions {
  bool with_cost = true;  // horizon search suppresses the objective
};

struct EncodingContext {
  const Scenario* scenario = nullptr;
  MilpModel model;
  int N = 0;
  double dt = 0.0;
  double eps = 0.0;        // indicator exclusion band
  double big_m_max = 0.0;  // largest constant used, for diagnostics

  LinearSystem sys;             // discrete dynamics (LTI path)
  std::optional<PwaSystem> pwa; // discrete modes (car path)

  std::vector<std::vector<int>> x;     // x[t][i], t = 0..N
  std::vector<std::vector<int>> u;     // u[t][i], t = 0..N-1
  std::vector<std::vector<int>> s;     // cost lift per input, when costed
  std::vector<std::vector<int>> mode;  // mode[t][j] PWA selectors
  std::vector<std::vector<int>> move;  // move[t][d] grid selectors
  int root_p = -1;
  Formula encoded;  // step-domain NNF, release eliminated

  std::map<std::string, int> p_memo;  // canonical formula text @ step -> P id
  std::map<std::string, int> z_memo;  // halfspace @ step -> z id

  struct ZEntry {
    int var;
    int t;
    Halfspace hs;
  };
  std::vector<ZEntry> z_entries;

  // Recipe per formula level, in creation order (operands precede users),
  // so a full assignment can be replayed bottom-up from the indicators.
  struct PDef {
    enum class Op { Min, Max, OneMinus, Copy } op;
    int var;
    std::vector<int> args;
  };
  std::vector<PDef> p_defs;

  int theta_index = -1;     // heading state slot when PWA modes are encoded
  double grid_pitch = 0.0;  // > 0 when grid move selectors are encoded

  // per-step enclosure of the output position (propagated bounds cut with
  // the workspace); keeps the indicator big-M constants step-local
  std::vector<Eigen::Vector2d> pos_lo, pos_hi;

  int next_p = 0, next_z = 0;

  const LinearSystem& output_system() const {
    return pwa ? pwa->modes.front().sys : sys;
  }

  std::vector<Eigen::VectorXd> decode_states(const Eigen::VectorXd& sol) const {
    std::vector<Eigen::VectorXd> out(x.size());
    for (std::size_t t = 0; t < x.size(); ++t) {
      out[t].resize(x[t].size());
      for (std::size_t i = 0; i < x[t].size(); ++i) out[t][static_cast<int>(i)] = sol[x[t][i]];
    }
    return out;
  }

  std::vector<Eigen::VectorXd> decode_inputs(const Eigen::VectorXd& sol) const {
    std::vector<Eigen::VectorXd> out(u.size());
    for (std::size_t t = 0; t < u.size(); ++t) {
      out[t].resize(u[t].size());
      for (std::size_t i = 0; i < u[t].size(); ++i) out[t][static_cast<int>(i)] = sol[u[t][i]];
    }
    return out;
  }
};

namespace detail {

constexpr double enc_inf = std::numeric_limits<double>::infinity();

// range of sum_j a_j v_j + b over the box [vl, vh]
inline std::pair<double, double> affine_range(const Eigen::VectorXd& a, const Eigen::VectorXd& vl,
                                              const Eigen::VectorXd& vh, double b) {
  double lo = b, hi = b;
  for (int j = 0; j < a.size(); ++j) {
    if (a[j] >= 0) {
      lo += a[j] * vl[j];
      hi += a[j] * vh[j];
    } else {
      lo += a[j] * vh[j];
      hi += a[j] * vl[j];
    }
  }
  return {lo, hi};
}

// one interval-arithmetic step of x(t+1) = A x + B u + c
inline void interval_step(const LinearSystem& d, const Eigen::VectorXd& xl,
                          const Eigen::VectorXd& xh, const Eigen::VectorXd& ul,
                          const Eigen::VectorXd& uh, Eigen::VectorXd& yl, Eigen::VectorXd& yh) {
  int n = d.n_states();
  yl.resize(n);
  yh.resize(n);
  for (int i = 0; i < n; ++i) {
    auto [xlo, xhi] = affine_range(d.A.row(i).transpose(), xl, xh, d.c[i]);
    auto [ulo, uhi] = affine_range(d.B.row(i).transpose(), ul, uh, 0.0);
    yl[i] = xlo + ulo;
    yh[i] = xhi + uhi;
  }
}

struct BoundPlan {
  std::vector<Eigen::VectorXd> lo, hi;  // per step 0..N
};

// Static bounds: user limits intersected with the workspace box on position
// states (when the output projection is a plain selector). Then forward
// interval propagation from x0 under the input box; the result over-covers
// the reachable set, so it never cuts feasible trajectories.
inline BoundPlan propagate_bounds(const Scenario& sc, const std::vector<const LinearSystem*>& modes,
                                  const Eigen::VectorXd& x0, int N, bool* selector_output) {
  const LinearSystem& d0 = *modes.front();
  int n = d0.n_states();
  Eigen::VectorXd sl = d0.x_lo.size() ? d0.x_lo : Eigen::VectorXd::Constant(n, -enc_inf);
  Eigen::VectorXd sh = d0.x_hi.size() ? d0.x_hi : Eigen::VectorXd::Constant(n, enc_inf);

  *selector_output = true;
  for (int r = 0; r < d0.C.rows(); ++r) {
    int nz = -1;
    bool selector = true;
    for (int j = 0; j < d0.C.cols(); ++j) {
      if (d0.C(r, j) == 0.0) continue;
      if (nz >= 0 || d0.C(r, j) != 1.0) selector = false;
      nz = j;
    }
    if (selector && nz >= 0) {
      sl[nz] = std::max(sl[nz], r == 0 ? sc.ws_lo.x() : sc.ws_lo.y());
      sh[nz] = std::min(sh[nz], r == 0 ? sc.ws_hi.x() : sc.ws_hi.y());
    } else {
      *selector_output = false;  // caller adds explicit workspace rows
    }
  }

  for (int i = 0; i < n; ++i)
    if (x0[i] < sl[i] - 1e-9 || x0[i] > sh[i] + 1e-9)
      throw EncodingError("initial state violates bound on '" + d0.state_names[i] + "'");

  BoundPlan plan;
  plan.lo.assign(N + 1, Eigen::VectorXd());
  plan.hi.assign(N + 1, Eigen::VectorXd());
  plan.lo[0] = plan.hi[0] = x0;
  for (int t = 1; t <= N; ++t) {
    Eigen::VectorXd best_lo, best_hi;
    for (const LinearSystem* d : modes) {
      Eigen::VectorXd yl, yh;
      interval_step(*d, plan.lo[t - 1], plan.hi[t - 1], d->u_lo, d->u_hi, yl, yh);
      if (best_lo.size() == 0) {
        best_lo = yl;
        best_hi = yh;
      } else {
        best_lo = best_lo.cwiseMin(yl);
        best_hi = best_hi.cwiseMax(yh);
      }
    }
    plan.lo[t] = best_lo.cwiseMax(sl);
    plan.hi[t] = best_hi.cwiseMin(sh);
    for (int i = 0; i < n; ++i) {
      if (plan.lo[t][i] > plan.hi[t][i] + 1e-12)
        throw EncodingError("state '" + d0.state_names[i] + "' has an empty feasible range at step " +
                            std::to_string(t) + " (check state and input bounds)");
      plan.lo[t][i] = std::min(plan.lo[t][i], plan.hi[t][i]);
    }
  }
  return plan;
}

inline void check_input_box(const LinearSystem& d) {
  int m = d.n_inputs();
  if (d.u_lo.size() != m || d.u_hi.size() != m)
    throw EncodingError("planning requires explicit input bounds");
  for (int i = 0; i < m; ++i)
    if (std::isinf(d.u_lo[i]) || std::isinf(d.u_hi[i]))
      throw EncodingError("planning requires finite input bounds ('" + d.input_names[i] + "')");
}

// state and input variables for steps 0..N plus explicit workspace rows when
// the output projection is not a plain coordinate selector
inline void make_signal_vars(EncodingContext& ctx, const LinearSystem& d, const BoundPlan& plan,
                             bool selector_output) {
  int n = d.n_states(), m = d.n_inputs();
  ctx.x.assign(ctx.N + 1, {});
  ctx.u.assign(ctx.N, {});
  for (int t = 0; t <= ctx.N; ++t)
    for (int i = 0; i < n; ++i)
      ctx.x[t].push_back(ctx.model.add_variable("x" + std::to_string(t) + "_" + d.state_names[i],
                                                VarKind::Continuous, plan.lo[t][i], plan.hi[t][i]));
  for (int t = 0; t < ctx.N; ++t)
    for (int i = 0; i < m; ++i)
      ctx.u[t].push_back(ctx.model.add_variable("u" + std::to_string(t) + "_" + d.input_names[i],
                                                VarKind::Continuous, d.u_lo[i], d.u_hi[i]));
  if (!selector_output) {
    for (int t = 0; t <= ctx.N; ++t)
      for (int r = 0; r < d.C.rows(); ++r) {
        std::vector<LinTerm> terms;
        for (int j = 0; j < n; ++j)
          if (d.C(r, j) != 0.0) terms.push_back({ctx.x[t][j], d.C(r, j)});
        double lo = r == 0 ? ctx.scenario->ws_lo.x() : ctx.scenario->ws_lo.y();
        double hi = r == 0 ? ctx.scenario->ws_hi.x() : ctx.scenario->ws_hi.y();
        ctx.model.add_row("ws" + std::to_string(t) + "_" + std::to_string(r) + "lo", terms,
                          RowSense::GE, lo);
        ctx.model.add_row("ws" + std::to_string(t) + "_" + std::to_string(r) + "hi", terms,
                          RowSense::LE, hi);
      }
  }
  ctx.pos_lo.assign(ctx.N + 1, ctx.scenario->ws_lo);
  ctx.pos_hi.assign(ctx.N + 1, ctx.scenario->ws_hi);
  for (int t = 0; t <= ctx.N; ++t)
    for (int r = 0; r < 2; ++r) {
      auto [lo, hi] = affine_range(d.C.row(r).transpose(), plan.lo[t], plan.hi[t], 0.0);
      ctx.pos_lo[t][r] = std::max(ctx.pos_lo[t][r], lo);
      ctx.pos_hi[t][r] = std::min(ctx.pos_hi[t][r], hi);
    }
}

inline void add_loop_rows(EncodingContext& ctx, const LinearSystem& d, const Eigen::VectorXd& x0) {
  for (int r = 0; r < d.C.rows(); ++r) {
    std::vector<LinTerm> terms;
    double rhs = 0.0;
    for (int j = 0; j < d.n_states(); ++j) {
      if (d.C(r, j) == 0.0) continue;
      terms.push_back({ctx.x[ctx.N][j], d.C(r, j)});
      rhs += d.C(r, j) * x0[j];
    }
    ctx.model.add_row("loop" + std::to_string(r), terms, RowSense::EQ, rhs);
  }
}

}  // namespace detail

// Equality dynamics x(t+1) = Ad x(t) + Bd u(t) + c for one linear system,
// with x(0) pinned through its bounds and per-step boxes from interval
// propagation. `loop` additionally ties the final position to the initial.
inline void encode_dynamics(EncodingContext& ctx, const LinearSystem& d, const Eigen::VectorXd& x0,
                            int N, bool loop) {
  if (!d.discrete) throw EncodingError("dynamics must be discretized before encoding");
  d.check_dimensions();
  if (x0.size() != d.n_states()) throw EncodingError("initial state dimension mismatch");
  detail::check_input_box(d);

  ctx.sys = d;
  ctx.pwa.reset();
  ctx.N = N;
  bool selector = false;
  detail::BoundPlan plan = detail::propagate_bounds(*ctx.scenario, {&d}, x0, N, &selector);
  detail::make_signal_vars(ctx, d, plan, selector);

  for (int t = 0; t < N; ++t)
    for (int i = 0; i < d.n_states(); ++i) {
      std::vector<LinTerm> terms{{ctx.x[t + 1][i], -1.0}};
      for (int j = 0; j < d.n_states(); ++j)
        if (d.A(i, j) != 0.0) terms.push_back({ctx.x[t][j], d.A(i, j)});
      for (int k = 0; k < d.n_inputs(); ++k)
        if (d.B(i, k) != 0.0) terms.push_back({ctx.u[t][k], d.B(i, k)});
      ctx.model.add_row("dyn" + std::to_string(t) + "_" + d.state_names[i], terms, RowSense::EQ,
                        -d.c[i]);
    }
  if (loop) detail::add_loop_rows(ctx, d, x0);
}

// Mode-selected dynamics: one binary per (step, mode), exactly one active,
// big-M relaxed equalities per mode, and the heading pinned to the active
// mode's sector. Big-M constants come from the propagated signal boxes.
inline void encode_pwa_dynamics(EncodingContext& ctx, const PwaSystem& pwa,
                                const Eigen::VectorXd& x0, int N) {
  if (pwa.modes.empty()) throw EncodingError("piecewise system has no modes");
  std::vector<const LinearSystem*> mode_ptrs;
  for (const auto& m : pwa.modes) {
    if (!m.sys.discrete) throw EncodingError("dynamics must be discretized before encoding");
    m.sys.check_dimensions();
    detail::check_input_box(m.sys);
    mode_ptrs.push_back(&m.sys);
  }
  const LinearSystem& d0 = pwa.modes.front().sys;
  if (x0.size() != d0.n_states()) throw EncodingError("initial state dimension mismatch");

  int theta = -1;
  for (std::size_t i = 0; i < pwa.state_names.size(); ++i)
    if (pwa.state_names[i] == "theta") theta = static_cast<int>(i);
  if (theta < 0) throw EncodingError("piecewise system has no heading state");

  ctx.pwa = pwa;
  ctx.sys = d0;
  ctx.N = N;
  ctx.theta_index = theta;
  bool selector = false;
  detail::BoundPlan plan = detail::propagate_bounds(*ctx.scenario, mode_ptrs, x0, N, &selector);
  detail::make_signal_vars(ctx, d0, plan, selector);

  int n = d0.n_states(), nm = static_cast<int>(pwa.modes.size());
  ctx.mode.assign(N, {});
  for (int t = 0; t < N; ++t) {
    std::vector<LinTerm> pick;
    for (int j = 0; j < nm; ++j) {
      // sectors the propagated heading range cannot reach at this step are
      // fixed out structurally; early steps keep only a couple of live modes
      bool live = pwa.modes[j].theta_hi >= plan.lo[t][theta] - 1e-9 &&
                  pwa.modes[j].theta_lo <= plan.hi[t][theta] + 1e-9;
      int mv = ctx.model.add_variable("m" + std::to_string(t) + "_" + std::to_string(j),
                                      VarKind::Binary, 0.0, live ? 1.0 : 0.0);
      ctx.mode[t].push_back(mv);
      pick.push_back({mv, 1.0});
    }
    ctx.model.add_row("mode" + std::to_string(t), pick, RowSense::EQ, 1.0);

    for (int j = 0; j < nm; ++j) {
      const PwaMode& md = pwa.modes[j];
      for (int i = 0; i < n; ++i) {
        // defect range of Aj x + Bj u + cj - x(t+1) over the step boxes
        auto [alo, ahi] = detail::affine_range(md.sys.A.row(i).transpose(), plan.lo[t], plan.hi[t],
                                               md.sys.c[i]);
        auto [blo, bhi] =
            detail::affine_range(md.sys.B.row(i).transpose(), md.sys.u_lo, md.sys.u_hi, 0.0);
        double dlo = alo + blo - plan.hi[t + 1][i];
        double dhi = ahi + bhi - plan.lo[t + 1][i];
        double m_up = std::max(dhi, 0.0) * 1.05 + 1e-9;
        double m_dn = std::max(-dlo, 0.0) * 1.05 + 1e-9;
        ctx.big_m_max = std::max({ctx.big_m_max, m_up, m_dn});

        std::vector<LinTerm> terms{{ctx.x[t + 1][i], -1.0}};
        for (int k = 0; k < n; ++k)
          if (md.sys.A(i, k) != 0.0) terms.push_back({ctx.x[t][k], md.sys.A(i, k)});
        for (int k = 0; k < d0.n_inputs(); ++k)
          if (md.sys.B(i, k) != 0.0) terms.push_back({ctx.u[t][k], md.sys.B(i, k)});
        std::string base =
            "pdyn" + std::to_string(t) + "_" + std::to_string(j) + "_" + d0.state_names[i];
        std::vector<LinTerm> up = terms;
        up.push_back({ctx.mode[t][j], m_up});
        ctx.model.add_row(base + "u", up, RowSense::LE, -md.sys.c[i] + m_up);
        std::vector<LinTerm> dn = terms;
        dn.push_back({ctx.mode[t][j], -m_dn});
        ctx.model.add_row(base + "l", dn, RowSense::GE, -md.sys.c[i] - m_dn);
      }
      // heading must sit in the active sector
      double th_lo = plan.lo[t][theta], th_hi = plan.hi[t][theta];
      double m_hi = std::max(th_hi - md.theta_hi, 0.0) * 1.05 + 1e-9;
      double m_lo = std::max(md.theta_lo - th_lo, 0.0) * 1.05 + 1e-9;
      ctx.big_m_max = std::max({ctx.big_m_max, m_hi, m_lo});
      std::string base = "sec" + std::to_string(t) + "_" + std::to_string(j);
      ctx.model.add_row(base + "u", {{ctx.x[t][theta], 1.0}, {ctx.mode[t][j], m_hi}}, RowSense::LE,
                        md.theta_hi + m_hi);
      ctx.model.add_row(base + "l", {{ctx.x[t][theta], 1.0}, {ctx.mode[t][j], -m_lo}}, RowSense::GE,
                        md.theta_lo - m_lo);
    }
  }
}

// Grid stepping for the integrator vehicle: per step one of five binary
// moves (stay or one axis step of length `pitch`), tied to u by equalities.
// Makes the reachable set exactly the 4-neighborhood grid walk.
inline void encode_grid_moves(EncodingContext& ctx, double pitch) {
  if (!(pitch > 0.0)) throw EncodingError("grid pitch must be positive");
  static const char* dir[5] = {"stay", "px", "nx", "py", "ny"};
  ctx.grid_pitch = pitch;
  ctx.move.assign(ctx.N, {});
  for (int t = 0; t < ctx.N; ++t) {
    std::vector<LinTerm> pick;
    for (int d = 0; d < 5; ++d) {
      int mv = ctx.model.add_variable("mv" + std::to_string(t) + "_" + dir[d], VarKind::Binary,
                                      0.0, 1.0);
      ctx.move[t].push_back(mv);
      pick.push_back({mv, 1.0});
    }
    ctx.model.add_row("mvsum" + std::to_string(t), pick, RowSense::EQ, 1.0);
    ctx.model.add_row("mvx" + std::to_string(t),
                      {{ctx.u[t][0], 1.0}, {ctx.move[t][1], -pitch}, {ctx.move[t][2], pitch}},
                      RowSense::EQ, 0.0);
    ctx.model.add_row("mvy" + std::to_string(t),
                      {{ctx.u[t][1], 1.0}, {ctx.move[t][3], -pitch}, {ctx.move[t][4], pitch}},
                      RowSense::EQ, 0.0);
  }
}

// Indicator pair for one halfspace at one step:
//   h.pos(t) <= k + M(1-z)   and   h.pos(t) >= k - M z + eps
// so z = 1 exactly when the position satisfies h.pos <= k (points in the
// open band (k, k+eps) are infeasible for either value and excluded).
inline int encode_halfspace(EncodingContext& ctx, int t, const Halfspace& hs) {
  std::string key = std::to_string(t) + "|" + detail::format_double(hs.h.x()) + "|" +
                    detail::format_double(hs.h.y()) + "|" + detail::format_double(hs.k);
  if (auto it = ctx.z_memo.find(key); it != ctx.z_memo.end()) return it->second;
  if (t < 0 || t >= static_cast<int>(ctx.x.size()))
    throw EncodingError("halfspace step outside the horizon");

  // big-M pair from the step-local position enclosure: h.pos ranges over
  // [mlo, mhi] there, so M_in >= mhi - k and M_out >= k + eps - mlo suffice
  // (workspace-wide constants would be far looser at early steps)
  double mlo = 0.0, mhi = 0.0;
  for (int r = 0; r < 2; ++r) {
    double h = r == 0 ? hs.h.x() : hs.h.y();
    mlo += h * (h >= 0 ? ctx.pos_lo[t][r] : ctx.pos_hi[t][r]);
    mhi += h * (h >= 0 ? ctx.pos_hi[t][r] : ctx.pos_lo[t][r]);
  }
  double m_in = std::max(mhi - hs.k, 0.0) * 1.05 + 1e-9;
  double m_out = std::max(hs.k + ctx.eps - mlo, 0.0) * 1.05 + 1e-9;
  ctx.big_m_max = std::max({ctx.big_m_max, m_in, m_out});

  const LinearSystem& d = ctx.output_system();
  std::vector<LinTerm> pos;
  for (int j = 0; j < d.n_states(); ++j) {
    double w = hs.h.x() * d.C(0, j) + hs.h.y() * d.C(1, j);
    if (w != 0.0) pos.push_back({ctx.x[t][j], w});
  }

  int z = ctx.model.add_variable("z" + std::to_string(ctx.next_z++), VarKind::Binary, 0.0, 1.0);
  std::vector<LinTerm> in = pos, out = pos;
  in.push_back({z, m_in});
  out.push_back({z, m_out});
  const std::string zn = ctx.model.vars()[z].name;
  ctx.model.add_row(zn + "_in", in, RowSense::LE, hs.k + m_in);
  ctx.model.add_row(zn + "_out", out, RowSense::GE, hs.k + ctx.eps);
  ctx.z_memo.emplace(std::move(key), z);
  ctx.z_entries.push_back({z, t, hs});
  return z;
}

namespace detail {

// conjunction level: p forced to min of the operand levels once integral
inline int encode_conjunction(EncodingContext& ctx, const std::vector<int>& ops) {
  int p = ctx.model.add_variable("P" + std::to_string(ctx.next_p++), VarKind::Continuous, 0, 1);
  const std::string pn = ctx.model.vars()[p].name;
  std::vector<LinTerm> all{{p, 1.0}};
  for (std::size_t i = 0; i < ops.size(); ++i) {
    ctx.model.add_row(pn + "_u" + std::to_string(i), {{p, 1.0}, {ops[i], -1.0}}, RowSense::LE, 0.0);
    all.push_back({ops[i], -1.0});
  }
  ctx.model.add_row(pn + "_l", all, RowSense::GE, 1.0 - static_cast<double>(ops.size()));
  ctx.p_defs.push_back({EncodingContext::PDef::Op::Min, p, ops});
  return p;
}

// disjunction level: p forced to max of the operand levels once integral
inline int encode_disjunction(EncodingContext& ctx, const std::vector<int>& ops) {
  int p = ctx.model.add_variable("P" + std::to_string(ctx.next_p++), VarKind::Continuous, 0, 1);
  const std::string pn = ctx.model.vars()[p].name;
  std::vector<LinTerm> all{{p, 1.0}};
  for (std::size_t i = 0; i < ops.size(); ++i) {
    ctx.model.add_row(pn + "_l" + std::to_string(i), {{p, 1.0}, {ops[i], -1.0}}, RowSense::GE, 0.0);
    all.push_back({ops[i], -1.0});
  }
  ctx.model.add_row(pn + "_u", all, RowSense::LE, 0.0);
  ctx.p_defs.push_back({EncodingContext::PDef::Op::Max, p, ops});
  return p;
}

inline int constant_p(EncodingContext& ctx, bool v) {
  return ctx.model.add_variable("P" + std::to_string(ctx.next_p++), VarKind::Continuous, v ? 1 : 0,
                                v ? 1 : 0);
}

}  // namespace detail

// Membership level for a (possibly non-convex) named region at one step:
// conjunction of edge indicators per convex member, disjunction across
// members. An empty member list encodes constant false.
inline int encode_region(EncodingContext& ctx, int t, const Region& r) {
  std::string key = "region|" + r.name + "|" + std::to_string(t);
  if (auto it = ctx.p_memo.find(key); it != ctx.p_memo.end()) return it->second;

  std::vector<int> members;
  for (const auto& poly : r.members) {
    std::vector<int> zs;
    for (const auto& hs : poly.halfspaces()) zs.push_back(encode_halfspace(ctx, t, hs));
    members.push_back(detail::encode_conjunction(ctx, zs));
  }
  int p;
  if (members.empty())
    p = detail::constant_p(ctx, false);
  else if (members.size() == 1)
    p = members[0];
  else
    p = detail::encode_disjunction(ctx, members);
  ctx.p_memo.emplace(std::move(key), p);
  return p;
}

namespace detail {

inline int encode_node(EncodingContext& ctx, const Formula& f, const Scenario& sc, int t);

inline int atom_level(EncodingContext& ctx, const std::string& name, const Scenario& sc, int t) {
  if (name == "O") {
    Region obst;
    obst.name = "O";
    try {
      obst.members = sc.obstacles_at(t);
    } catch (const EnvironmentError& e) {
      throw EncodingError("obstacle atom unavailable at step " + std::to_string(t) + ": " +
                          e.what());
    }
    return encode_region(ctx, t, obst);
  }
  const Region* r = sc.find_region(name);
  if (!r) throw EncodingError("specification references unknown region '" + name + "'");
  return encode_region(ctx, t, *r);
}

inline int encode_node(EncodingContext& ctx, const Formula& f, const Scenario& sc, int t) {
  std::string key = to_string(f) + "@" + std::to_string(t);
  if (auto it = ctx.p_memo.find(key); it != ctx.p_memo.end()) return it->second;
  if (t < 0 || t > ctx.N) throw EncodingError("formula step outside the horizon");

  int p = -1;
  switch (f.kind()) {
    case Kind::True:
      p = constant_p(ctx, true);
      break;
    case Kind::False:
      p = constant_p(ctx, false);
      break;
    case Kind::Atom:
      p = atom_level(ctx, f.name(), sc, t);
      break;
    case Kind::Not: {
      if (f.kid(0).kind() != Kind::Atom)
        throw EncodingError("encoder requires negation normal form");
      int pc = encode_node(ctx, f.kid(0), sc, t);
      p = ctx.model.add_variable("P" + std::to_string(ctx.next_p++), VarKind::Continuous, 0, 1);
      ctx.model.add_row(ctx.model.vars()[p].name + "_neg", {{p, 1.0}, {pc, 1.0}}, RowSense::EQ,
                        1.0);
      ctx.p_defs.push_back({EncodingContext::PDef::Op::OneMinus, p, {pc}});
      break;
    }
    case Kind::And:
    case Kind::Or: {
      std::vector<int> ops;
      for (const auto& k : f.kids()) ops.push_back(encode_node(ctx, k, sc, t));
      p = f.kind() == Kind::And ? encode_conjunction(ctx, ops) : encode_disjunction(ctx, ops);
      break;
    }
    case Kind::Next: {
      int pc = encode_node(ctx, f.kid(0), sc, t + 1);
      p = ctx.model.add_variable("P" + std::to_string(ctx.next_p++), VarKind::Continuous, 0, 1);
      ctx.model.add_row(ctx.model.vars()[p].name + "_nx", {{p, 1.0}, {pc, -1.0}}, RowSense::EQ,
                        0.0);
      ctx.p_defs.push_back({EncodingContext::PDef::Op::Copy, p, {pc}});
      break;
    }
    case Kind::Eventually:
    case Kind::Always: {
      int a = f.window().lo_steps(), b = f.window().hi_steps();
      std::vector<int> ops;
      for (int tau = t + a; tau <= t + b; ++tau) ops.push_back(encode_node(ctx, f.kid(0), sc, tau));
      p = f.kind() == Kind::Eventually ? encode_disjunction(ctx, ops)
                                       : encode_conjunction(ctx, ops);
      break;
    }
    case Kind::Until: {
      // one auxiliary per candidate settle step j: the rhs holds at j and
      // the lhs holds on every step from t up to j-1
      int a = f.window().lo_steps(), b = f.window().hi_steps();
      std::vector<int> settles;
      for (int j = t + a; j <= t + b; ++j) {
        std::vector<int> ops{encode_node(ctx, f.kid(1), sc, j)};
        for (int k = t; k < j; ++k) ops.push_back(encode_node(ctx, f.kid(0), sc, k));
        settles.push_back(encode_conjunction(ctx, ops));
      }
      p = encode_disjunction(ctx, settles);
      break;
    }
    case Kind::Release:
      throw EncodingError("release must be eliminated before encoding");
  }
  ctx.p_memo.emplace(std::move(key), p);
  return p;
}

}  // namespace detail

// Satisfaction level of the whole (step-domain, NNF, release-free) formula
// at step 0. Atoms resolve to region membership; "O" is the union of all
// inflated obstacles active at the step.
inline int encode_formula(EncodingContext& ctx, const Formula& f, const Scenario& sc) {
  return detail::encode_node(ctx, f, sc, 0);
}

// Absolute-value lift of every input sample: s >= u, s >= -u, minimize sum s.
inline void encode_cost(EncodingContext& ctx) {
  const LinearSystem& d = ctx.pwa ? ctx.pwa->modes.front().sys : ctx.sys;
  ctx.s.assign(ctx.N, {});
  for (int t = 0; t < ctx.N; ++t)
    for (int i = 0; i < d.n_inputs(); ++i) {
      double cap = std::max(std::abs(d.u_lo[i]), std::abs(d.u_hi[i]));
      int sv = ctx.model.add_variable("s" + std::to_string(t) + "_" + d.input_names[i],
                                      VarKind::Continuous, 0.0, cap);
      ctx.s[t].push_back(sv);
      const std::string sn = ctx.model.vars()[sv].name;
      ctx.model.add_row(sn + "_p", {{ctx.u[t][i], 1.0}, {sv, -1.0}}, RowSense::LE, 0.0);
      ctx.model.add_row(sn + "_n", {{ctx.u[t][i], -1.0}, {sv, -1.0}}, RowSense::LE, 0.0);
      ctx.model.add_objective_term(sv, 1.0);
    }
}

// Trajectory rounding: completes a (fractional) relaxation point into a full
// candidate assignment by re-deriving every discrete variable from the
// continuous trajectory it carries -- indicators from the geometry, mode
// selectors from the heading, grid moves from the input pattern, formula
// levels bottom-up from their recipes, cost lifts snapped to |u|. Returns
// nullopt when the trajectory cannot support an integral completion. Meant
// as a BnbOptions::primal_hint; the search independently re-checks the
// candidate against the model, so a guess that breaks a big-M row (for
// piecewise dynamics the blended relaxation usually does, until the mode
// selectors are themselves integral) is dropped there, not here.
inline std::optional<Eigen::VectorXd> integralize(const EncodingContext& ctx,
                                                  const Eigen::VectorXd& relax) {
  if (relax.size() != static_cast<Eigen::Index>(ctx.model.vars().size())) return std::nullopt;
  Eigen::VectorXd v = relax;

  const LinearSystem& d = ctx.output_system();
  std::vector<Eigen::Vector2d> pos(ctx.x.size());
  Eigen::VectorXd xs(d.n_states());
  for (std::size_t t = 0; t < ctx.x.size(); ++t) {
    for (int i = 0; i < d.n_states(); ++i) xs[i] = v[ctx.x[t][i]];
    pos[t] = d.C * xs;
  }

  for (const auto& ze : ctx.z_entries)
    v[ze.var] = ze.hs.h.dot(pos[ze.t]) <= ze.hs.k ? 1.0 : 0.0;

  if (ctx.pwa) {
    const auto& modes = ctx.pwa->modes;
    for (int t = 0; t < ctx.N; ++t) {
      double th = v[ctx.x[t][ctx.theta_index]];
      // keep a committed (near-integral) selector whose sector covers the
      // heading; otherwise scan -- sectors are closed at both ends here
      int j = -1;
      for (std::size_t jj = 0; jj < modes.size(); ++jj)
        if (j < 0 || v[ctx.mode[t][jj]] > v[ctx.mode[t][j]]) j = static_cast<int>(jj);
      if (!(v[ctx.mode[t][j]] >= 0.5 && th >= modes[j].theta_lo && th <= modes[j].theta_hi)) {
        j = -1;
        for (std::size_t jj = 0; jj < modes.size(); ++jj)
          if (th >= modes[jj].theta_lo && th <= modes[jj].theta_hi) {
            j = static_cast<int>(jj);
            break;
          }
        if (j < 0) return std::nullopt;
      }
      for (std::size_t jj = 0; jj < modes.size(); ++jj)
        v[ctx.mode[t][jj]] = static_cast<int>(jj) == j ? 1.0 : 0.0;
    }
  }

  if (ctx.grid_pitch > 0.0) {
    const double p = ctx.grid_pitch;
    const double tol = 1e-7 * std::max(1.0, p);
    for (int t = 0; t < ctx.N; ++t) {
      double ux = v[ctx.u[t][0]], uy = v[ctx.u[t][1]];
      int pick = -1;
      if (std::abs(ux) <= tol && std::abs(uy) <= tol) pick = 0;
      else if (std::abs(ux - p) <= tol && std::abs(uy) <= tol) pick = 1;
      else if (std::abs(ux + p) <= tol && std::abs(uy) <= tol) pick = 2;
      else if (std::abs(ux) <= tol && std::abs(uy - p) <= tol) pick = 3;
      else if (std::abs(ux) <= tol && std::abs(uy + p) <= tol) pick = 4;
      if (pick < 0) return std::nullopt;  // u is not a grid move
      for (int dd = 0; dd < 5; ++dd) v[ctx.move[t][dd]] = dd == pick ? 1.0 : 0.0;
    }
  }

  for (const auto& pd : ctx.p_defs) {
    double val = 0.0;
    switch (pd.op) {
      case EncodingContext::PDef::Op::Min:
        val = 1.0;
        for (int a : pd.args) val = std::min(val, v[a]);
        break;
      case EncodingContext::PDef::Op::Max:
        val = 0.0;
        for (int a : pd.args) val = std::max(val, v[a]);
        break;
      case EncodingContext::PDef::Op::OneMinus:
        val = 1.0 - v[pd.args[0]];
        break;
      case EncodingContext::PDef::Op::Copy:
        val = v[pd.args[0]];
        break;
    }
    v[pd.var] = val;
  }
  if (ctx.root_p >= 0 && v[ctx.root_p] < 0.5) return std::nullopt;

  for (std::size_t t = 0; t < ctx.s.size(); ++t)
    for (std::size_t i = 0; i < ctx.s[t].size(); ++i)
      v[ctx.s[t][i]] = std::abs(v[ctx.u[t][i]]);
  return v;
}

namespace detail {

inline std::string model_name_for(const Scenario& sc) {
  std::string n = sc.name.empty() ? "PLAN" : sc.name;
  for (char& c : n)
    if (std::isspace(static_cast<unsigned char>(c)) || c == '\'' || c == '"') c = '_';
  return n.size() > 255 ? n.substr(0, 255) : n;
}

inline void apply_config_bounds(LinearSystem& d, const VehicleConfig& cfg) {
  auto fit = [&](const Eigen::VectorXd& v, int want, const char* what) {
    if (v.size() && v.size() != want)
      throw EncodingError(std::string(what) + " bound dimension mismatch");
    return v;
  };
  if (cfg.x_lo.size()) d.x_lo = fit(cfg.x_lo, d.n_states(), "state");
  if (cfg.x_hi.size()) d.x_hi = fit(cfg.x_hi, d.n_states(), "state");
  if (cfg.u_lo.size()) d.u_lo = fit(cfg.u_lo, d.n_inputs(), "input");
  if (cfg.u_hi.size()) d.u_hi = fit(cfg.u_hi, d.n_inputs(), "input");
}

}  // namespace detail

// Whole-problem compilation: dynamics, specification (seconds-domain, run
// through the normalization pipeline here), cost, and the root requirement
// that the specification holds at step 0.
inline EncodingContext build(const Scenario& sc, const Formula& spec, int N,
                             EncodeOptions opt = {}) {
  if (N < 1) throw EncodingError("planning horizon must be at least 1 step");
  if (!(sc.dt > 0.0)) throw EncodingError("scenario needs dt > 0");

  EncodingContext ctx;
  ctx.scenario = &sc;
  ctx.dt = sc.dt;
  ctx.eps = 1e-4 * sc.workspace_diameter();
  ctx.model.name = detail::model_name_for(sc);

  const VehicleConfig& cfg = sc.vehicle;
  if (cfg.x0.size() == 0) throw EncodingError("scenario needs an initial state");

  if (cfg.kind == VehicleKind::Car) {
    PwaSystem pwa = discretize(car_pwa(cfg.heading_modes, cfg.u1_nominal), sc.dt);
    for (auto& m : pwa.modes) detail::apply_config_bounds(m.sys, cfg);
    encode_pwa_dynamics(ctx, pwa, cfg.x0, N);
    if (sc.loop) detail::add_loop_rows(ctx, pwa.modes.front().sys, cfg.x0);
  } else {
    LinearSystem d;
    if (cfg.kind == VehicleKind::Quadrotor) {
      LinearSystem cont = cfg.planar ? planar_quadrotor_lti(cfg.gravity, cfg.inertia)
                                     : quadrotor_lti(cfg.gravity, cfg.mass, cfg.inertia);
      d = discretize(cont, sc.dt);
    } else {
      d = integrator_system();
      d.dt = sc.dt;
    }
    detail::apply_config_bounds(d, cfg);
    encode_dynamics(ctx, d, cfg.x0, N, sc.loop);
    if (cfg.kind == VehicleKind::Integrator && cfg.input_l1_cap > 0.0)
      encode_grid_moves(ctx, cfg.input_l1_cap);
  }

  Formula g = prepare_for_horizon(spec, sc.dt, N);
  g = eliminate_release(g);
  ctx.encoded = g;
  ctx.root_p = encode_formula(ctx, g, sc);
  ctx.model.add_row("root", {{ctx.root_p, 1.0}}, RowSense::EQ, 1.0);

  if (opt.with_cost) encode_cost(ctx);
  return ctx;
}

}  // namespace mtlplan

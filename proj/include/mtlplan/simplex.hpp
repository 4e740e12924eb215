// mtlplan/simplex.hpp -- bounded-variable revised simplex over sparse models
//
// Internal form: structural variables 0..n-1 plus one slack per row,
//   a_i . x + s_i = rhs_i,   s_i in [0,inf) / {0} / (-inf,0] by row sense.
// Cold solves run a composite phase-1 primal (no big-M) followed by a
// Dantzig-priced phase-2 primal with a Bland fallback against cycling.
// Warm re-solves after bound changes run the dual simplex from the last
// basis, which branch and bound relies on.
#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "mtlplan/milp_model.hpp"

namespace mtlplan {

enum class LpStatus { Optimal, Infeasible, Unbounded };

inline const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
  }
  return "?";
}

struct LpOptions {
  double tol_feas = 1e-7;   // bound/row feasibility
  double tol_opt = 1e-9;    // reduced-cost optimality
  long max_iters = 0;       // 0 = scale with problem size
  int refactor_every = 60;  // eta updates between basis refactorizations
};

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  Eigen::VectorXd x;  // structural variables only
  double objective = 0.0;
  long iterations = 0;
};

class SimplexSolver {
 public:
  explicit SimplexSolver(const MilpModel& model, LpOptions opt = {})
      : model_(&model), opt_(opt), n_(model.n_vars()), m_(model.n_rows()), total_(n_ + m_) {
    // structural columns in CSC order
    std::vector<std::vector<std::pair<int, double>>> cols(n_);
    for (int i = 0; i < m_; ++i)
      for (const auto& t : model.rows()[i].terms) cols[t.var].push_back({i, t.coef});
    col_ptr_.assign(n_ + 1, 0);
    for (int j = 0; j < n_; ++j) col_ptr_[j + 1] = col_ptr_[j] + static_cast<int>(cols[j].size());
    row_idx_.resize(col_ptr_[n_]);
    val_.resize(col_ptr_[n_]);
    for (int j = 0; j < n_; ++j) {
      int k = col_ptr_[j];
      for (const auto& [r, v] : cols[j]) {
        row_idx_[k] = r;
        val_[k++] = v;
      }
    }
    cost_ = Eigen::VectorXd::Zero(total_);
    for (const auto& t : model.objective()) cost_[t.var] = t.coef;
    rhs_.resize(m_);
    slack_lo_.resize(m_);
    slack_hi_.resize(m_);
    for (int i = 0; i < m_; ++i) {
      const Row& r = model.rows()[i];
      rhs_[i] = r.rhs;
      switch (r.sense) {
        case RowSense::LE: slack_lo_[i] = 0.0; slack_hi_[i] = kInf; break;
        case RowSense::GE: slack_lo_[i] = -kInf; slack_hi_[i] = 0.0; break;
        case RowSense::EQ: slack_lo_[i] = 0.0; slack_hi_[i] = 0.0; break;
      }
    }
    lo_.resize(total_);
    hi_.resize(total_);
    x_ = Eigen::VectorXd::Zero(total_);
    if (opt_.max_iters <= 0) opt_.max_iters = 20000 + 100L * total_;
  }

  // Cold solve: slack basis, composite phase 1, then phase 2.
  // lo/hi are structural bounds; pass the model's own bounds for a plain solve.
  LpResult solve(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
    set_bounds(lo, hi);
    cold_start();
    LpResult res;
    Outcome p1 = phase1(res.iterations);
    if (p1 == Outcome::Infeasible) return finish(res, LpStatus::Infeasible);
    if (p1 != Outcome::Done) numerical_failure("phase 1 stalled");
    Outcome p2 = phase2(res.iterations);
    if (p2 == Outcome::Unbounded) return finish(res, LpStatus::Unbounded);
    if (p2 != Outcome::Done) numerical_failure("phase 2 stalled");
    cleanup_and_verify(res.iterations);
    return finish(res, LpStatus::Optimal);
  }

  LpResult solve() { return solve(model_lo(), model_hi()); }

  // Warm re-solve after bound changes, from the last basis via dual simplex.
  // Falls back to a cold solve when no basis exists or the dual run stalls.
  LpResult resolve(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
    if (!have_basis_) return solve(lo, hi);
    set_bounds(lo, hi);
    snap_nonbasic();
    if (!refactor(true)) return solve(lo, hi);
    LpResult res;
    Outcome d = dual(res.iterations);
    if (d == Outcome::Infeasible) return finish(res, LpStatus::Infeasible);
    if (d != Outcome::Done) return solve(lo, hi);
    // polish: dual drift can leave mild reduced-cost infeasibility
    Outcome p2 = phase2(res.iterations);
    if (p2 == Outcome::Unbounded) return finish(res, LpStatus::Unbounded);
    if (p2 != Outcome::Done) return solve(lo, hi);
    if (max_bound_violation() > 10 * opt_.tol_feas) {
      Outcome p1 = phase1(res.iterations);
      if (p1 == Outcome::Infeasible) return finish(res, LpStatus::Infeasible);
      if (p1 != Outcome::Done) return solve(lo, hi);
      p2 = phase2(res.iterations);
      if (p2 == Outcome::Unbounded) return finish(res, LpStatus::Unbounded);
      if (p2 != Outcome::Done) return solve(lo, hi);
    }
    cleanup_and_verify(res.iterations);
    return finish(res, LpStatus::Optimal);
  }

  bool has_basis() const { return have_basis_; }

  Eigen::VectorXd model_lo() const {
    Eigen::VectorXd lo(n_);
    for (int j = 0; j < n_; ++j) lo[j] = model_->vars()[j].lo;
    return lo;
  }
  Eigen::VectorXd model_hi() const {
    Eigen::VectorXd hi(n_);
    for (int j = 0; j < n_; ++j) hi[j] = model_->vars()[j].hi;
    return hi;
  }

 private:
  static constexpr double kInf = std::numeric_limits<double>::infinity();
  enum class Outcome { Done, Infeasible, Unbounded, Stalled };
  enum : std::int8_t { kLower = 0, kUpper = 1, kBasic = 2 };
  struct Eta {
    int r;
    double pivot;
    std::vector<std::pair<int, double>> nz;  // off-pivot entries
  };

  template <class F>
  void for_col(int j, F&& f) const {
    if (j < n_) {
      for (int k = col_ptr_[j]; k < col_ptr_[j + 1]; ++k) f(row_idx_[k], val_[k]);
    } else {
      f(j - n_, 1.0);
    }
  }

  void set_bounds(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
    if (lo.size() != n_ || hi.size() != n_)
      throw MilpError("bound vectors must cover all structural variables");
    lo_.head(n_) = lo;
    hi_.head(n_) = hi;
    lo_.tail(m_) = slack_lo_;
    hi_.tail(m_) = slack_hi_;
    for (int j = 0; j < total_; ++j)
      if (lo_[j] > hi_[j])
        throw MilpError("variable " + var_name(j) + " has crossed bounds in solve");
  }

  std::string var_name(int j) const {
    if (j < n_) return "'" + model_->vars()[j].name + "'";
    return "slack('" + model_->rows()[j - n_].name + "')";
  }

  void cold_start() {
    basic_.resize(m_);
    vstat_.assign(total_, kLower);
    for (int j = 0; j < n_; ++j) {
      // cost-aware start keeps the initial point dual feasible
      bool at_lo = cost_[j] >= 0.0;
      if (at_lo && std::isinf(lo_[j])) at_lo = std::isinf(hi_[j]);  // free stays at 0
      if (!at_lo && std::isinf(hi_[j])) at_lo = true;
      if (at_lo) {
        vstat_[j] = kLower;
        x_[j] = std::isinf(lo_[j]) ? 0.0 : lo_[j];
      } else {
        vstat_[j] = kUpper;
        x_[j] = hi_[j];
      }
    }
    for (int i = 0; i < m_; ++i) {
      basic_[i] = n_ + i;
      vstat_[n_ + i] = kBasic;
    }
    have_basis_ = true;
    if (!refactor(true)) numerical_failure("initial basis factorization failed");
  }

  // Nonbasic variables sit exactly on their (possibly moved) bounds.
  void snap_nonbasic() {
    for (int j = 0; j < total_; ++j) {
      if (vstat_[j] == kBasic) continue;
      if (vstat_[j] == kUpper && std::isinf(hi_[j])) vstat_[j] = kLower;
      if (vstat_[j] == kLower && std::isinf(lo_[j]) && !std::isinf(hi_[j])) vstat_[j] = kUpper;
      if (vstat_[j] == kLower) {
        if (!std::isinf(lo_[j])) x_[j] = lo_[j];  // free variables keep their value
      } else {
        x_[j] = hi_[j];
      }
    }
  }

  // Rebuild the LU factorization of the basis; recompute basic values when
  // asked. Returns false if the basis matrix is numerically singular.
  bool refactor(bool recompute_basics) {
    if (m_ > 0) {
      Eigen::SparseMatrix<double> B(m_, m_);
      std::vector<Eigen::Triplet<double>> trips;
      trips.reserve(static_cast<size_t>(m_) * 2);
      for (int i = 0; i < m_; ++i)
        for_col(basic_[i], [&](int r, double v) { trips.emplace_back(r, i, v); });
      B.setFromTriplets(trips.begin(), trips.end());
      lu_.compute(B);
      if (lu_.info() != Eigen::Success) return false;
    }
    etas_.clear();
    if (recompute_basics) compute_basics();
    return true;
  }

  void compute_basics() {
    if (m_ == 0) return;
    Eigen::VectorXd r = rhs_;
    for (int j = 0; j < total_; ++j) {
      if (vstat_[j] == kBasic || x_[j] == 0.0) continue;
      double xj = x_[j];
      for_col(j, [&](int row, double v) { r[row] -= v * xj; });
    }
    ftran(r);
    for (int i = 0; i < m_; ++i) x_[basic_[i]] = r[i];
  }

  void ftran(Eigen::VectorXd& v) const {
    if (m_ == 0) return;
    v = lu_.solve(v);
    for (const Eta& e : etas_) {
      double p = v[e.r] / e.pivot;
      if (p != 0.0)
        for (const auto& [i, w] : e.nz) v[i] -= w * p;
      v[e.r] = p;
    }
  }

  void btran(Eigen::VectorXd& y) {  // non-const: SparseLU::transpose() is non-const in Eigen 3.4
    if (m_ == 0) return;
    for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
      double s = y[it->r];
      for (const auto& [i, w] : it->nz) s -= w * y[i];
      y[it->r] = s / it->pivot;
    }
    y = lu_.transpose().solve(y);
  }

  void push_eta(int r, const Eigen::VectorXd& w) {
    Eta e;
    e.r = r;
    e.pivot = w[r];
    for (int i = 0; i < m_; ++i)
      if (i != r && std::abs(w[i]) > 1e-13) e.nz.push_back({i, w[i]});
    etas_.push_back(std::move(e));
  }

  double max_bound_violation() const {
    double worst = 0.0;
    for (int i = 0; i < m_; ++i) {
      int j = basic_[i];
      worst = std::max(worst, std::max(lo_[j] - x_[j], x_[j] - hi_[j]));
    }
    return worst;
  }

  // ---- primal simplex ----------------------------------------------------

  // y = B^-T c_B once per iteration; phase-1 costs live on out-of-bound
  // basics only.
  void basic_costs(bool phase_one, Eigen::VectorXd& y) const {
    y.setZero(m_);
    for (int i = 0; i < m_; ++i) {
      int j = basic_[i];
      if (phase_one) {
        if (x_[j] < lo_[j] - opt_.tol_feas)
          y[i] = -1.0;
        else if (x_[j] > hi_[j] + opt_.tol_feas)
          y[i] = 1.0;
      } else {
        y[i] = cost_[j];
      }
    }
  }

  double infeasibility_sum() const {
    double f = 0.0;
    for (int i = 0; i < m_; ++i) {
      int j = basic_[i];
      f += std::max(0.0, lo_[j] - x_[j]) + std::max(0.0, x_[j] - hi_[j]);
    }
    return f;
  }

  Outcome phase1(long& iters) { return primal(true, iters); }
  Outcome phase2(long& iters) { return primal(false, iters); }

  Outcome primal(bool phase_one, long& iters) {
    Eigen::VectorXd y(m_), w(m_);
    bool bland = false;
    long stall = 0;
    const long stall_limit = 500 + total_ / 4;
    double last_merit = kInf;
    for (long it = 0; it < opt_.max_iters; ++it, ++iters) {
      if (static_cast<int>(etas_.size()) >= opt_.refactor_every)
        if (!refactor(true)) numerical_failure("basis refactorization failed");
      if (phase_one && max_bound_violation() <= opt_.tol_feas) return Outcome::Done;

      basic_costs(phase_one, y);
      btran(y);

      // pricing: Dantzig by |reduced cost|, Bland when anti-cycling
      int enter = -1, enter_dir = 0;
      double best = 0.0;
      for (int j = 0; j < total_; ++j) {
        if (vstat_[j] == kBasic || lo_[j] == hi_[j]) continue;
        double d = phase_one ? 0.0 : cost_[j];
        for_col(j, [&](int r, double v) { d -= y[r] * v; });
        bool free_var = std::isinf(lo_[j]) && std::isinf(hi_[j]);
        int dir = 0;
        if (free_var) {
          if (std::abs(d) > opt_.tol_opt) dir = d < 0 ? 1 : -1;
        } else if (vstat_[j] == kLower && d < -opt_.tol_opt) {
          dir = 1;
        } else if (vstat_[j] == kUpper && d > opt_.tol_opt) {
          dir = -1;
        }
        if (!dir) continue;
        if (bland) {
          enter = j;
          enter_dir = dir;
          break;
        }
        if (std::abs(d) > best) {
          best = std::abs(d);
          enter = j;
          enter_dir = dir;
        }
      }
      if (enter < 0) {
        if (!phase_one) return Outcome::Done;
        return max_bound_violation() <= opt_.tol_feas ? Outcome::Done : Outcome::Infeasible;
      }

      w.setZero(m_);
      for_col(enter, [&](int r, double v) { w[r] = v; });
      ftran(w);
      const double sigma = enter_dir;

      // ratio test: first blocking bound among basics, or the entering
      // variable's own opposite bound (bound flip)
      double t_self = hi_[enter] - lo_[enter];  // inf for unbounded ranges
      double t_best = kInf;
      int leave_pos = -1;
      double leave_w = 0.0;
      std::int8_t leave_to = kLower;
      for (int i = 0; i < m_; ++i) {
        double swi = sigma * w[i];
        // near-zero entries never block: selecting one as the pivot row
        // wrecks the basis conditioning (each eta would amplify error by
        // 1/|pivot|), while skipping moves the basic variable by at most
        // ~1e-7 per unit step, inside the end-of-solve feasibility check
        if (std::abs(swi) <= 1e-7) continue;
        int j = basic_[i];
        double target;
        std::int8_t to;
        if (swi > 0) {  // basic decreases
          if (phase_one && x_[j] > hi_[j] + opt_.tol_feas) {
            target = hi_[j];
            to = kUpper;
          } else if (x_[j] >= lo_[j] - opt_.tol_feas) {
            target = lo_[j];
            to = kLower;
          } else {
            continue;  // below its lower bound and falling: slope constant
          }
        } else {  // basic increases
          if (phase_one && x_[j] < lo_[j] - opt_.tol_feas) {
            target = lo_[j];
            to = kLower;
          } else if (x_[j] <= hi_[j] + opt_.tol_feas) {
            target = hi_[j];
            to = kUpper;
          } else {
            continue;
          }
        }
        if (std::isinf(target)) continue;
        double t = (x_[j] - target) / swi;
        if (t < 0) t = 0;  // degenerate / drift
        bool take = false;
        if (leave_pos < 0 || t < t_best - 1e-12) {
          take = true;
        } else if (t <= t_best + 1e-12) {
          if (bland)
            take = j < basic_[leave_pos];
          else if (std::abs(w[i]) > std::abs(leave_w) * (1 + 1e-12))
            take = true;
          else if (std::abs(w[i]) >= std::abs(leave_w) * (1 - 1e-12))
            take = j < basic_[leave_pos];
        }
        if (take) {
          t_best = std::min(t, t_best);
          leave_pos = i;
          leave_w = w[i];
          leave_to = to;
        }
      }

      if (leave_pos < 0 && std::isinf(t_self)) {
        if (phase_one) numerical_failure("phase-1 direction unblocked");
        last_unbounded_ = enter;
        return Outcome::Unbounded;
      }

      if (leave_pos < 0 || t_self <= t_best + 1e-12) {
        // bound flip, no basis change
        for (int i = 0; i < m_; ++i)
          if (w[i] != 0.0) x_[basic_[i]] -= sigma * t_self * w[i];
        vstat_[enter] = vstat_[enter] == kLower ? kUpper : kLower;
        x_[enter] = vstat_[enter] == kLower ? lo_[enter] : hi_[enter];
      } else {
        double piv = w[leave_pos];
        if (std::abs(piv) < 1e-7 && !etas_.empty()) {
          // suspicious pivot through stale etas: refactorize and retry
          if (!refactor(true)) numerical_failure("basis refactorization failed");
          --it, --iters;
          continue;
        }
        if (std::abs(piv) < 5e-11)
          numerical_failure("pivot " + std::to_string(piv) + " below tolerance at iteration " +
                            std::to_string(it));
        double from = vstat_[enter] == kUpper ? hi_[enter]
                      : std::isinf(lo_[enter]) ? x_[enter]
                                                : lo_[enter];
        for (int i = 0; i < m_; ++i)
          if (w[i] != 0.0) x_[basic_[i]] -= sigma * t_best * w[i];
        int leave = basic_[leave_pos];
        x_[enter] = from + sigma * t_best;
        x_[leave] = leave_to == kLower ? lo_[leave] : hi_[leave];
        vstat_[leave] = leave_to;
        basic_[leave_pos] = enter;
        vstat_[enter] = kBasic;
        push_eta(leave_pos, w);
      }

      double merit = phase_one ? infeasibility_sum() : current_objective();
      if (merit < last_merit - 1e-12 * (1.0 + std::abs(last_merit))) {
        last_merit = merit;
        stall = 0;
        bland = false;
      } else if (++stall > stall_limit) {
        bland = true;  // anti-cycling from here on
      }
    }
    return Outcome::Stalled;
  }

  // ---- dual simplex ------------------------------------------------------

  Outcome dual(long& iters) {
    Eigen::VectorXd y(m_), rho(m_), w(m_);
    long stall = 0;
    const long stall_limit = 1000 + total_ / 2;
    double last_inf = kInf;
    for (long it = 0; it < opt_.max_iters; ++it, ++iters) {
      if (static_cast<int>(etas_.size()) >= opt_.refactor_every)
        if (!refactor(true)) return Outcome::Stalled;

      // leaving: worst bound violation among basics; ties to lowest var id
      int leave_pos = -1;
      double worst = opt_.tol_feas;
      bool below = false;
      for (int i = 0; i < m_; ++i) {
        int j = basic_[i];
        double v_lo = lo_[j] - x_[j];
        double v_hi = x_[j] - hi_[j];
        double v = std::max(v_lo, v_hi);
        bool take = v > worst * (1 + 1e-12) ||
                    (leave_pos >= 0 && v >= worst * (1 - 1e-12) && j < basic_[leave_pos]);
        if (take) {
          worst = std::max(v, worst);
          leave_pos = i;
          below = v_lo >= v_hi;
        }
      }
      if (leave_pos < 0) return Outcome::Done;

      double total_inf = infeasibility_sum();
      if (total_inf < last_inf - 1e-12 * (1.0 + std::abs(last_inf))) {
        last_inf = total_inf;
        stall = 0;
      } else if (++stall > stall_limit) {
        return Outcome::Stalled;  // caller falls back to a cold solve
      }

      basic_costs(false, y);
      btran(y);
      rho.setZero(m_);
      rho[leave_pos] = 1.0;
      btran(rho);

      // entering: dual ratio test over sign-eligible nonbasics
      int enter = -1;
      double best_ratio = kInf;
      double best_alpha = 0.0;
      for (int j = 0; j < total_; ++j) {
        if (vstat_[j] == kBasic || lo_[j] == hi_[j]) continue;
        double alpha = 0.0;
        for_col(j, [&](int r, double v) { alpha += rho[r] * v; });
        if (std::abs(alpha) <= 1e-9) continue;  // keep the pivot well-conditioned
        bool free_var = std::isinf(lo_[j]) && std::isinf(hi_[j]);
        bool ok;
        if (below)
          ok = free_var || (vstat_[j] == kLower && alpha < 0) || (vstat_[j] == kUpper && alpha > 0);
        else
          ok = free_var || (vstat_[j] == kLower && alpha > 0) || (vstat_[j] == kUpper && alpha < 0);
        if (!ok) continue;
        double d = cost_[j];
        for_col(j, [&](int r, double v) { d -= y[r] * v; });
        double dhat = free_var ? std::abs(d) : (vstat_[j] == kLower ? d : -d);
        if (dhat < 0) dhat = 0;  // tolerate dual drift
        double ratio = dhat / std::abs(alpha);
        bool take = false;
        if (enter < 0 || ratio < best_ratio - 1e-12) {
          take = true;
        } else if (ratio <= best_ratio + 1e-12) {
          if (std::abs(alpha) > std::abs(best_alpha) * (1 + 1e-12))
            take = true;
          else if (std::abs(alpha) >= std::abs(best_alpha) * (1 - 1e-12))
            take = j < enter;
        }
        if (take) {
          best_ratio = std::min(ratio, best_ratio);
          enter = j;
          best_alpha = alpha;
        }
      }
      if (enter < 0) return Outcome::Infeasible;  // violated row admits no dual direction

      w.setZero(m_);
      for_col(enter, [&](int r, double v) { w[r] = v; });
      ftran(w);
      double piv = w[leave_pos];
      bool mismatch = std::abs(piv - best_alpha) > 1e-6 * std::max(1.0, std::abs(best_alpha));
      if ((mismatch || std::abs(piv) < 1e-7) && !etas_.empty()) {
        if (!refactor(true)) return Outcome::Stalled;
        --it, --iters;
        continue;
      }
      // a tiny pivot on fresh factors would poison the eta file; hand the
      // node to a cold primal solve instead
      if (std::abs(piv) < 1e-7) return Outcome::Stalled;

      int leave = basic_[leave_pos];
      double target = below ? lo_[leave] : hi_[leave];
      double delta = (x_[leave] - target) / piv;
      for (int i = 0; i < m_; ++i)
        if (w[i] != 0.0) x_[basic_[i]] -= delta * w[i];
      x_[enter] += delta;
      x_[leave] = target;
      vstat_[leave] = below ? kLower : kUpper;
      basic_[leave_pos] = enter;
      vstat_[enter] = kBasic;
      push_eta(leave_pos, w);
    }
    return Outcome::Stalled;
  }

  // ---- wrap-up -----------------------------------------------------------

  double current_objective() const {
    double obj = 0.0;
    for (int j = 0; j < n_; ++j)
      if (cost_[j] != 0.0) obj += cost_[j] * x_[j];
    return obj;
  }

  void cleanup_and_verify(long& iters) {
    if (!refactor(true)) numerical_failure("final refactorization failed");
    // eta-free recomputation can surface drift; repair residual infeasibility
    if (max_bound_violation() > opt_.tol_feas) {
      if (phase1(iters) != Outcome::Done || phase2(iters) != Outcome::Done)
        numerical_failure("post-cleanup repair failed");
      if (!refactor(true)) numerical_failure("final refactorization failed");
    }
    double scale = 1.0 + (m_ > 0 ? rhs_.lpNorm<Eigen::Infinity>() : 0.0);
    double resid = row_residual();
    double bviol = max_bound_violation();
    if (resid > 1e-6 * scale || bviol > 1e-5)
      numerical_failure("solution residual " + std::to_string(resid) + ", bound violation " +
                        std::to_string(bviol));
  }

  double row_residual() const {
    if (m_ == 0) return 0.0;
    Eigen::VectorXd act = Eigen::VectorXd::Zero(m_);
    for (int j = 0; j < total_; ++j) {
      if (x_[j] == 0.0) continue;
      double xj = x_[j];
      for_col(j, [&](int r, double v) { act[r] += v * xj; });
    }
    return (act - rhs_).lpNorm<Eigen::Infinity>();
  }

  LpResult finish(LpResult& res, LpStatus status) {
    res.status = status;
    res.x = x_.head(n_);
    res.objective = status == LpStatus::Optimal ? current_objective() : 0.0;
    return res;
  }

  [[noreturn]] void numerical_failure(const std::string& what) const {
    throw MilpError("numerical failure in simplex: " + what + " (rows " + std::to_string(m_) +
                    ", vars " + std::to_string(n_) + ", etas " + std::to_string(etas_.size()) +
                    (last_unbounded_ >= 0 ? ", direction " + var_name(last_unbounded_) : "") + ")");
  }

  const MilpModel* model_;
  LpOptions opt_;
  int n_, m_, total_;
  std::vector<int> col_ptr_, row_idx_;
  std::vector<double> val_;
  Eigen::VectorXd cost_, rhs_, slack_lo_, slack_hi_, lo_, hi_, x_;
  std::vector<int> basic_;
  std::vector<std::int8_t> vstat_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
  std::vector<Eta> etas_;
  bool have_basis_ = false;
  int last_unbounded_ = -1;
};

// Solves the LP relaxation of the model (binaries kept in their [lo, hi]
// boxes but not required integral).
inline LpResult solve_lp(const MilpModel& model, LpOptions opt = {}) {
  SimplexSolver s(model, opt);
  return s.solve();
}

}  // namespace mtlplan

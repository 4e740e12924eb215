// mtlplan/dynamics.hpp -- vehicle models, exact ZOH discretization, simulation
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace mtlplan {

class DynamicsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One (affine) linear system, continuous or discrete:
//   continuous: xdot = A x + B u + c
//   discrete:   x(t+1) = A x(t) + B u(t) + c
struct LinearSystem {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::VectorXd c;   // affine offset, zero for plain LTI
  bool discrete = false;
  double dt = 0.0;     // valid when discrete
  Eigen::MatrixXd C;   // planar position output: pos = C x
  Eigen::VectorXd x_lo, x_hi, u_lo, u_hi;
  std::vector<std::string> state_names, input_names;

  int n_states() const { return static_cast<int>(A.rows()); }
  int n_inputs() const { return static_cast<int>(B.cols()); }

  void check_dimensions() const {
    if (A.rows() != A.cols()) throw DynamicsError("state matrix must be square");
    if (B.rows() != A.rows()) throw DynamicsError("input matrix row count must match states");
    if (c.size() != A.rows()) throw DynamicsError("affine offset size must match states");
    if (C.size() > 0 && C.cols() != A.rows())
      throw DynamicsError("output projection columns must match states");
  }
};

// Hover-linearized quadrotor with yaw and yaw-rate removed: ten states
// (x, y, z, vx, vy, vz, roll, pitch, p, q), inputs (F, u1, u2).
// Position integrates velocity, lateral acceleration comes from attitude
// ((g*pitch, -g*roll)), vertical from thrust, attitude integrates body rates,
// and torques drive the rates through the inverse inertia.
inline LinearSystem quadrotor_lti(double g = 9.81, double m = 1.0,
                                  const Eigen::Vector3d& J = {0.01, 0.01, 0.02}) {
  if (!(m > 0.0)) throw DynamicsError("quadrotor mass must be positive");
  if (!(J.x() > 0.0 && J.y() > 0.0 && J.z() > 0.0))
    throw DynamicsError("quadrotor inertia must be positive");
  LinearSystem s;
  s.A = Eigen::MatrixXd::Zero(10, 10);
  s.A.block<3, 3>(0, 3).setIdentity();            // position <- velocity
  s.A(3, 7) = g;                                  // vx <- pitch
  s.A(4, 6) = -g;                                 // vy <- roll
  s.A.block<2, 2>(6, 8).setIdentity();            // attitude <- body rates
  s.B = Eigen::MatrixXd::Zero(10, 3);
  s.B(5, 0) = 1.0 / m;                            // vz <- thrust
  s.B(8, 1) = 1.0 / J.x();                        // p <- roll torque
  s.B(9, 2) = 1.0 / J.y();                        // q <- pitch torque
  s.c = Eigen::VectorXd::Zero(10);
  s.C = Eigen::MatrixXd::Zero(2, 10);
  s.C(0, 0) = 1.0;
  s.C(1, 1) = 1.0;
  s.state_names = {"x", "y", "z", "vx", "vy", "vz", "roll", "pitch", "p", "q"};
  s.input_names = {"F", "u1", "u2"};
  return s;
}

// Planar reduction of the quadrotor: the vertical axis and thrust input drop
// out, leaving (x, y, vx, vy, roll, pitch, p, q) driven by the two torques.
inline LinearSystem planar_quadrotor_lti(double g = 9.81,
                                         const Eigen::Vector3d& J = {0.01, 0.01, 0.02}) {
  if (!(J.x() > 0.0 && J.y() > 0.0))
    throw DynamicsError("quadrotor inertia must be positive");
  LinearSystem s;
  s.A = Eigen::MatrixXd::Zero(8, 8);
  s.A.block<2, 2>(0, 2).setIdentity();
  s.A(2, 5) = g;
  s.A(3, 4) = -g;
  s.A.block<2, 2>(4, 6).setIdentity();
  s.B = Eigen::MatrixXd::Zero(8, 2);
  s.B(6, 0) = 1.0 / J.x();
  s.B(7, 1) = 1.0 / J.y();
  s.c = Eigen::VectorXd::Zero(8);
  s.C = Eigen::MatrixXd::Zero(2, 8);
  s.C(0, 0) = 1.0;
  s.C(1, 1) = 1.0;
  s.state_names = {"x", "y", "vx", "vy", "roll", "pitch", "p", "q"};
  s.input_names = {"u1", "u2"};
  return s;
}

// Direct position integrator x(t+1) = x(t) + u(t): the simplest vehicle,
// used for grid-world scenarios and oracle cross-checks. Already discrete;
// the planner stamps the scenario dt on it.
inline LinearSystem integrator_system() {
  LinearSystem s;
  s.A = Eigen::MatrixXd::Identity(2, 2);
  s.B = Eigen::MatrixXd::Identity(2, 2);
  s.c = Eigen::VectorXd::Zero(2);
  s.discrete = true;
  s.dt = 1.0;
  s.C = Eigen::MatrixXd::Identity(2, 2);
  s.state_names = {"x", "y"};
  s.input_names = {"ux", "uy"};
  return s;
}

// One heading sector of the piecewise-affine car.
struct PwaMode {
  LinearSystem sys;
  double theta_lo = 0.0;  // validity interval [theta_lo, theta_hi)
  double theta_hi = 0.0;
  double theta_hat = 0.0; // linearization heading
};

struct PwaSystem {
  std::vector<PwaMode> modes;
  std::vector<std::string> state_names{"x", "y", "theta"};
  std::vector<std::string> input_names{"u1", "u2"};

  // index of the unique mode whose sector contains theta (wrapped to [-pi,pi))
  int mode_for(double theta) const {
    double two_pi = 2.0 * std::numbers::pi;
    double w = std::fmod(theta + std::numbers::pi, two_pi);
    if (w < 0) w += two_pi;
    w -= std::numbers::pi;
    for (std::size_t i = 0; i < modes.size(); ++i)
      if (w >= modes[i].theta_lo && w < modes[i].theta_hi) return static_cast<int>(i);
    throw DynamicsError("no heading sector contains theta=" + std::to_string(theta));
  }
};

// Unicycle car (xdot = u1 cos(theta), ydot = u1 sin(theta), thetadot = u2)
// linearized at each given heading about forward speed u1_nom. Sector
// boundaries sit midway between adjacent headings, wrapping at +-pi.
inline PwaSystem car_pwa(std::vector<double> theta_nodes, double u1_nom) {
  if (theta_nodes.size() < 4) throw DynamicsError("car model needs at least 4 heading nodes");
  if (!(u1_nom > 0.0)) throw DynamicsError("car nominal speed must be positive");
  std::sort(theta_nodes.begin(), theta_nodes.end());
  const double pi = std::numbers::pi;
  for (double th : theta_nodes)
    if (th < -pi || th >= pi) throw DynamicsError("heading nodes must lie in [-pi, pi)");

  auto make_mode = [&](double th, double lo, double hi) {
    PwaMode m;
    m.theta_hat = th;
    m.theta_lo = lo;
    m.theta_hi = hi;
    LinearSystem& s = m.sys;
    s.A = Eigen::MatrixXd::Zero(3, 3);
    s.A(0, 2) = -u1_nom * std::sin(th);
    s.A(1, 2) = u1_nom * std::cos(th);
    s.B = Eigen::MatrixXd::Zero(3, 2);
    s.B(0, 0) = std::cos(th);
    s.B(1, 0) = std::sin(th);
    s.B(2, 1) = 1.0;
    // offset makes the mode exact at (x=(0,0,th), u=(u1_nom,0)):
    // c = f(xhat,uhat) - A xhat - B uhat
    s.c = Eigen::Vector3d(u1_nom * th * std::sin(th), -u1_nom * th * std::cos(th), 0.0);
    s.C = Eigen::MatrixXd::Zero(2, 3);
    s.C(0, 0) = 1.0;
    s.C(1, 1) = 1.0;
    s.state_names = {"x", "y", "theta"};
    s.input_names = {"u1", "u2"};
    return m;
  };

  PwaSystem pwa;
  std::size_t n = theta_nodes.size();
  for (std::size_t i = 0; i < n; ++i) {
    double th = theta_nodes[i];
    double prev = theta_nodes[(i + n - 1) % n];
    double next = theta_nodes[(i + 1) % n];
    // sector boundaries at circular midpoints; the first/last pair meets
    // across the -pi/pi seam
    double lo = (i == 0) ? 0.5 * (prev - 2 * pi + th) : 0.5 * (prev + th);
    double hi = (i == n - 1) ? 0.5 * (th + next + 2 * pi) : 0.5 * (th + next);
    if (lo < -pi && hi <= pi) {
      // sector straddles the seam from below: split into a tail piece near
      // +pi and a head piece starting at -pi
      pwa.modes.push_back(make_mode(th, lo + 2 * pi, pi));
      pwa.modes.push_back(make_mode(th, -pi, hi));
    } else if (hi > pi && lo >= -pi) {
      pwa.modes.push_back(make_mode(th, lo, pi));
      pwa.modes.push_back(make_mode(th, -pi, hi - 2 * pi));
    } else {
      pwa.modes.push_back(make_mode(th, std::max(lo, -pi), std::min(hi, pi)));
    }
  }
  return pwa;
}

inline PwaSystem car_pwa(int n_modes, double u1_nom) {
  if (n_modes < 4) throw DynamicsError("car model needs at least 4 heading nodes");
  std::vector<double> nodes(n_modes);
  const double pi = std::numbers::pi;
  for (int k = 0; k < n_modes; ++k)
    nodes[k] = -pi + (k + 0.5) * 2.0 * pi / n_modes;
  return car_pwa(std::move(nodes), u1_nom);
}

namespace detail {

// exp(M) by scaling-and-squaring on a Taylor series, term tolerance 1e-12
inline Eigen::MatrixXd expm(const Eigen::MatrixXd& M) {
  double norm = M.lpNorm<Eigen::Infinity>();
  int squarings = 0;
  if (norm > 0.5) squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm / 0.5))));
  Eigen::MatrixXd S = M / std::pow(2.0, squarings);
  Eigen::MatrixXd result = Eigen::MatrixXd::Identity(M.rows(), M.cols());
  Eigen::MatrixXd term = result;
  for (int k = 1; k <= 40; ++k) {
    term = (term * S) / static_cast<double>(k);
    result += term;
    if (term.lpNorm<Eigen::Infinity>() <= 1e-12 * std::max(1.0, result.lpNorm<Eigen::Infinity>()))
      break;
  }
  for (int i = 0; i < squarings; ++i) result = result * result;
  return result;
}

}  // namespace detail

// Exact zero-order-hold discretization:
//   Ad = exp(A dt), [Bd cd] = integral_0^dt exp(A tau) dtau * [B c],
// via the matrix exponential of the augmented block matrix
//   [[A, B, c], [0, 0, 0]] * dt.
inline LinearSystem discretize(const LinearSystem& sys, double dt) {
  if (sys.discrete) throw DynamicsError("system is already discrete");
  if (!(dt > 0.0)) throw DynamicsError("discretization step must be positive");
  sys.check_dimensions();
  int n = sys.n_states(), m = sys.n_inputs();
  Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(n + m + 1, n + m + 1);
  aug.topLeftCorner(n, n) = sys.A;
  aug.block(0, n, n, m) = sys.B;
  aug.block(0, n + m, n, 1) = sys.c;
  Eigen::MatrixXd E = detail::expm(aug * dt);
  LinearSystem out = sys;
  out.A = E.topLeftCorner(n, n);
  out.B = E.block(0, n, n, m);
  out.c = E.block(0, n + m, n, 1);
  out.discrete = true;
  out.dt = dt;
  return out;
}

inline PwaSystem discretize(const PwaSystem& pwa, double dt) {
  PwaSystem out = pwa;
  for (auto& m : out.modes) m.sys = discretize(m.sys, dt);
  return out;
}

namespace detail {

inline void check_bounds(const Eigen::VectorXd& v, const Eigen::VectorXd& lo,
                         const Eigen::VectorXd& hi, const std::vector<std::string>& names,
                         const char* what, int step, double tol) {
  if (lo.size() == 0 && hi.size() == 0) return;
  for (int i = 0; i < v.size(); ++i) {
    double l = lo.size() ? lo[i] : -std::numeric_limits<double>::infinity();
    double h = hi.size() ? hi[i] : std::numeric_limits<double>::infinity();
    if (v[i] < l - tol || v[i] > h + tol) {
      std::string name = i < static_cast<int>(names.size()) ? names[i] : std::to_string(i);
      throw DynamicsError(std::string(what) + " bound violated at step " + std::to_string(step) +
                          ": " + name + " = " + std::to_string(v[i]) + " outside [" +
                          std::to_string(l) + ", " + std::to_string(h) + "]");
    }
  }
}

}  // namespace detail

// Roll the discrete system forward; returns N+1 states for N inputs.
// Bound violations raise instead of being clipped.
inline std::vector<Eigen::VectorXd> simulate(const LinearSystem& sys, const Eigen::VectorXd& x0,
                                             const std::vector<Eigen::VectorXd>& u_seq,
                                             double bound_tol = 1e-6) {
  if (!sys.discrete) throw DynamicsError("simulate requires a discrete system");
  if (x0.size() != sys.n_states()) throw DynamicsError("initial state dimension mismatch");
  std::vector<Eigen::VectorXd> xs{x0};
  detail::check_bounds(x0, sys.x_lo, sys.x_hi, sys.state_names, "state", 0, bound_tol);
  for (std::size_t t = 0; t < u_seq.size(); ++t) {
    if (u_seq[t].size() != sys.n_inputs()) throw DynamicsError("input dimension mismatch");
    detail::check_bounds(u_seq[t], sys.u_lo, sys.u_hi, sys.input_names, "input",
                         static_cast<int>(t), bound_tol);
    Eigen::VectorXd x = sys.A * xs.back() + sys.B * u_seq[t] + sys.c;
    detail::check_bounds(x, sys.x_lo, sys.x_hi, sys.state_names, "state",
                         static_cast<int>(t + 1), bound_tol);
    xs.push_back(std::move(x));
  }
  return xs;
}

// PWA simulation: the active mode is chosen by the current heading.
inline std::vector<Eigen::VectorXd> simulate(const PwaSystem& pwa, const Eigen::VectorXd& x0,
                                             const std::vector<Eigen::VectorXd>& u_seq,
                                             double bound_tol = 1e-6) {
  std::vector<Eigen::VectorXd> xs{x0};
  for (std::size_t t = 0; t < u_seq.size(); ++t) {
    const LinearSystem& sys = pwa.modes[pwa.mode_for(xs.back()[2])].sys;
    if (!sys.discrete) throw DynamicsError("simulate requires a discrete system");
    detail::check_bounds(u_seq[t], sys.u_lo, sys.u_hi, pwa.input_names, "input",
                         static_cast<int>(t), bound_tol);
    Eigen::VectorXd x = sys.A * xs.back() + sys.B * u_seq[t] + sys.c;
    detail::check_bounds(x, sys.x_lo, sys.x_hi, pwa.state_names, "state",
                         static_cast<int>(t + 1), bound_tol);
    xs.push_back(std::move(x));
  }
  return xs;
}

}  // namespace mtlplan

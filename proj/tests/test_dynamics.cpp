#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "mtlplan/dynamics.hpp"
#include "oracles.hpp"

using namespace mtlplan;
using Eigen::MatrixXd;
using Eigen::Vector3d;
using Eigen::VectorXd;

namespace {

LinearSystem double_integrator() {
  LinearSystem s;
  s.A = MatrixXd::Zero(2, 2);
  s.A(0, 1) = 1.0;
  s.B = MatrixXd::Zero(2, 1);
  s.B(1, 0) = 1.0;
  s.c = VectorXd::Zero(2);
  s.C = MatrixXd::Zero(1, 2);
  s.C(0, 0) = 1.0;
  s.state_names = {"x", "v"};
  s.input_names = {"u"};
  return s;
}

}  // namespace

TEST_CASE("quadrotor linearization has the hover block structure", "[dynamics]") {
  const double g = 9.81;
  LinearSystem s = quadrotor_lti(g, 1.0, {0.01, 0.01, 0.02});
  REQUIRE(s.A.rows() == 10);
  REQUIRE(s.B.cols() == 3);
  // position integrates velocity
  REQUIRE((s.A.block<3, 3>(0, 3) - MatrixXd::Identity(3, 3)).norm() == 0.0);
  // lateral acceleration from attitude: [[0, g], [-g, 0], [0, 0]]
  MatrixXd va(3, 2);
  va << 0, g, -g, 0, 0, 0;
  REQUIRE((s.A.block<3, 2>(3, 6) - va).norm() == 0.0);
  // attitude integrates body rates
  REQUIRE((s.A.block<2, 2>(6, 8) - MatrixXd::Identity(2, 2)).norm() == 0.0);
  // everything else in A is zero
  REQUIRE(s.A.norm() == Catch::Approx(std::sqrt(3.0 + 2.0 * g * g + 2.0)));
  // thrust only reaches vz, scaled by 1/m
  LinearSystem s2 = quadrotor_lti(g, 2.0, {0.01, 0.01, 0.02});
  REQUIRE(s2.B.col(0).norm() == Catch::Approx(0.5));
  REQUIRE(s2.B(5, 0) == Catch::Approx(0.5));
  // torques scale by inverse inertia
  REQUIRE(s.B(8, 1) == Catch::Approx(100.0));
  REQUIRE(s.B(9, 2) == Catch::Approx(100.0));

  REQUIRE_THROWS_AS(quadrotor_lti(g, 0.0, {0.01, 0.01, 0.02}), DynamicsError);
  REQUIRE_THROWS_AS(quadrotor_lti(g, 1.0, {0.0, 0.01, 0.02}), DynamicsError);
}

TEST_CASE("planar quadrotor is the lateral sub-block", "[dynamics]") {
  LinearSystem full = quadrotor_lti();
  LinearSystem flat = planar_quadrotor_lti();
  REQUIRE(flat.A.rows() == 8);
  REQUIRE(flat.B.cols() == 2);
  // same x-axis chain: x <- vx <- pitch <- q, with matching coefficients
  REQUIRE(flat.A(0, 2) == full.A(0, 3));
  REQUIRE(flat.A(2, 5) == full.A(3, 7));
  REQUIRE(flat.A(4, 6) == 1.0);
  REQUIRE(flat.B(6, 0) == full.B(8, 1));
}

TEST_CASE("car modes linearize the unicycle at each heading", "[dynamics]") {
  PwaSystem car = car_pwa(8, 1.0);
  REQUIRE(car.modes.size() == 8);

  // sectors partition [-pi, pi): every heading hits exactly one mode
  std::mt19937 rng(37);
  std::uniform_real_distribution<double> d(-std::numbers::pi, std::numbers::pi);
  for (int i = 0; i < 2000; ++i) {
    double th = d(rng);
    int hits = 0;
    for (const auto& m : car.modes)
      if (th >= m.theta_lo && th < m.theta_hi) ++hits;
    REQUIRE(hits == 1);
    REQUIRE(car.mode_for(th) >= 0);
  }

  // explicit heading-zero mode via custom nodes
  PwaSystem axes = car_pwa(std::vector<double>{0.0, std::numbers::pi / 2, -std::numbers::pi,
                                               -std::numbers::pi / 2},
                           2.0);
  const PwaMode& east = axes.modes[axes.mode_for(0.0)];
  REQUIRE(east.theta_hat == 0.0);
  MatrixXd b_east(3, 2);
  b_east << 1, 0, 0, 0, 0, 1;
  REQUIRE((east.sys.B - b_east).norm() < 1e-12);
  REQUIRE((east.sys.A.col(2) - Vector3d(0, 2.0, 0)).norm() < 1e-12);
  REQUIRE(east.sys.c.norm() < 1e-12);

  const PwaMode& north = axes.modes[axes.mode_for(std::numbers::pi / 2)];
  MatrixXd b_north(3, 2);
  b_north << 0, 0, 1, 0, 0, 1;
  REQUIRE((north.sys.B - b_north).norm() < 1e-12);

  // at its linearization point every mode reproduces the nonlinear model
  for (const auto& m : car.modes) {
    double u1 = 1.0;
    Vector3d xhat(0, 0, m.theta_hat);
    Eigen::Vector2d uhat(u1, 0);
    Vector3d f(u1 * std::cos(m.theta_hat), u1 * std::sin(m.theta_hat), 0.0);
    Vector3d lin = m.sys.A * xhat + m.sys.B * uhat + m.sys.c;
    REQUIRE((lin - f).norm() < 1e-12);
  }

  REQUIRE_THROWS_AS(car_pwa(3, 1.0), DynamicsError);
  REQUIRE_THROWS_AS(car_pwa(8, 0.0), DynamicsError);
}

TEST_CASE("zero-order-hold discretization is exact", "[dynamics]") {
  // A = 0: Ad = I, Bd = B*dt
  LinearSystem still;
  still.A = MatrixXd::Zero(2, 2);
  still.B = MatrixXd::Identity(2, 2);
  still.c = VectorXd::Zero(2);
  still.C = MatrixXd::Identity(2, 2);
  LinearSystem stilld = discretize(still, 0.25);
  REQUIRE((stilld.A - MatrixXd::Identity(2, 2)).norm() == 0.0);
  REQUIRE((stilld.B - 0.25 * MatrixXd::Identity(2, 2)).norm() == 0.0);

  // double integrator at dt = 0.5: closed form, bit-exact
  LinearSystem di = discretize(double_integrator(), 0.5);
  REQUIRE(di.A(0, 0) == 1.0);
  REQUIRE(di.A(0, 1) == 0.5);
  REQUIRE(di.A(1, 0) == 0.0);
  REQUIRE(di.A(1, 1) == 1.0);
  REQUIRE(di.B(0, 0) == 0.125);
  REQUIRE(di.B(1, 0) == 0.5);

  // quadrotor: nilpotent chains, matches a plain 20-term series oracle
  LinearSystem q = quadrotor_lti();
  LinearSystem qd = discretize(q, 0.5);
  int n = 10, m = 3;
  MatrixXd aug = MatrixXd::Zero(n + m, n + m);
  aug.topLeftCorner(n, n) = q.A;
  aug.block(0, n, n, m) = q.B;
  MatrixXd E = oracles::series_expm_20(aug * 0.5);
  REQUIRE((qd.A - E.topLeftCorner(n, n)).lpNorm<Eigen::Infinity>() < 1e-9);
  REQUIRE((qd.B - E.block(0, n, n, m)).lpNorm<Eigen::Infinity>() < 1e-9);

  REQUIRE_THROWS_AS(discretize(qd, 0.5), DynamicsError);   // already discrete
  REQUIRE_THROWS_AS(discretize(q, 0.0), DynamicsError);
}

TEST_CASE("discretization obeys the semigroup property", "[dynamics]") {
  std::mt19937 rng(41);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    LinearSystem s;
    s.A = MatrixXd::NullaryExpr(4, 4, [&]() { return d(rng); });
    s.B = MatrixXd::NullaryExpr(4, 2, [&]() { return d(rng); });
    s.c = VectorXd::Zero(4);
    s.C = MatrixXd::Identity(2, 4);
    double dt1 = 0.3, dt2 = 0.45;
    MatrixXd lhs = discretize(s, dt1 + dt2).A;
    MatrixXd rhs = discretize(s, dt1).A * discretize(s, dt2).A;
    REQUIRE((lhs - rhs).lpNorm<Eigen::Infinity>() < 1e-9);
  }
}

TEST_CASE("simulation iterates the discrete map and enforces bounds", "[dynamics]") {
  LinearSystem di = discretize(double_integrator(), 0.5);

  // zero input from zero state stays at zero
  std::vector<VectorXd> zeros(5, VectorXd::Zero(1));
  auto rest = simulate(di, VectorXd::Zero(2), zeros);
  REQUIRE(rest.size() == 6);
  for (const auto& x : rest) REQUIRE(x.norm() == 0.0);

  // unit acceleration for two steps: x(2) = (0.5, 1.0) exactly
  std::vector<VectorXd> ones(2, VectorXd::Ones(1));
  auto ramp = simulate(di, VectorXd::Zero(2), ones);
  REQUIRE(ramp[2](0) == 0.5);
  REQUIRE(ramp[2](1) == 1.0);

  // superposition on random (x0, u) pairs
  std::mt19937 rng(43);
  std::uniform_real_distribution<double> d(-2.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    VectorXd xa = VectorXd::NullaryExpr(2, [&]() { return d(rng); });
    VectorXd xb = VectorXd::NullaryExpr(2, [&]() { return d(rng); });
    std::vector<VectorXd> ua(4), ub(4), usum(4);
    for (int t = 0; t < 4; ++t) {
      ua[t] = VectorXd::NullaryExpr(1, [&]() { return d(rng); });
      ub[t] = VectorXd::NullaryExpr(1, [&]() { return d(rng); });
      usum[t] = ua[t] + ub[t];
    }
    auto xs_a = simulate(di, xa, ua);
    auto xs_b = simulate(di, xb, ub);
    auto xs_sum = simulate(di, xa + xb, usum);
    for (int t = 0; t <= 4; ++t)
      REQUIRE((xs_sum[t] - xs_a[t] - xs_b[t]).lpNorm<Eigen::Infinity>() < 1e-9);
  }

  // bound checks raise instead of clipping
  LinearSystem bounded = di;
  bounded.u_lo = VectorXd::Constant(1, -1.0);
  bounded.u_hi = VectorXd::Constant(1, 1.0);
  bounded.x_lo = VectorXd::Constant(2, -0.4);
  bounded.x_hi = VectorXd::Constant(2, 0.4);
  std::vector<VectorXd> too_big(1, VectorXd::Constant(1, 2.0));
  REQUIRE_THROWS_AS(simulate(bounded, VectorXd::Zero(2), too_big), DynamicsError);
  std::vector<VectorXd> drives_out(3, VectorXd::Constant(1, 1.0));
  try {
    simulate(bounded, VectorXd::Zero(2), drives_out);
    FAIL("expected a state bound violation");
  } catch (const DynamicsError& e) {
    REQUIRE(std::string(e.what()).find("state bound violated at step") != std::string::npos);
  }
}

TEST_CASE("pwa simulation follows the heading sector", "[dynamics]") {
  // heading 0 is a sector center here, so driving east is exact
  PwaSystem axes = discretize(car_pwa(std::vector<double>{0.0, std::numbers::pi / 2,
                                                          -std::numbers::pi,
                                                          -std::numbers::pi / 2},
                                      1.0),
                              0.5);
  VectorXd x0 = Vector3d(0, 0, 0);
  std::vector<VectorXd> u(6, Eigen::Vector2d(1.0, 0.0));
  auto xs = simulate(axes, x0, u);
  REQUIRE(xs.size() == 7);
  REQUIRE(xs.back()(0) == Catch::Approx(3.0).margin(1e-9));
  REQUIRE(std::abs(xs.back()(1)) < 1e-9);

  // turning input integrates heading exactly (theta = sum u2*dt) and moves
  // the simulation across sectors
  PwaSystem car = discretize(car_pwa(8, 1.0), 0.5);
  std::vector<VectorXd> turn(8, Eigen::Vector2d(1.0, 0.5));
  auto ys = simulate(car, x0, turn);
  REQUIRE(ys.back()(2) == Catch::Approx(8 * 0.5 * 0.5).margin(1e-9));
  REQUIRE(car.mode_for(ys.back()(2)) != car.mode_for(0.0));
}

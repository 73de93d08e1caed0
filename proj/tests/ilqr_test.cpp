#include "via/ilqr.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "via/pendulum.hpp"
#include "via/simulate.hpp"

namespace {

using via::BrakingScheme;
using via::CostExpansion;
using via::CostSpec;
using via::DampingModuleParams;
using via::PendulumParams;
using via::PendulumPlant;
using via::SolverOptions;

constexpr double kPi = std::numbers::pi;

DampingModuleParams ToyDamping() { return DampingModuleParams::from_limits(50.0, 0.5, 0.5); }

CostSpec PendulumCost() {
  CostSpec spec;
  spec.w1 = 1000.0;
  spec.w2 = 1.0;
  spec.w3 = 1.0;
  spec.w4 = 0.01;
  spec.q_star = kPi / 3;
  spec.t_f = 1.0;
  spec.control_freq = 50.0;
  return spec;
}

TEST(RunningCost, VanishesAtTarget) {
  const auto spec = PendulumCost();
  Eigen::VectorXd x(2);
  x << spec.q_star, 0.0;
  const Eigen::Vector3d u(spec.q_star, 0.0, 0.0);
  EXPECT_DOUBLE_EQ(
      via::running_cost(x, u, spec, BrakingScheme::hybrid(), ToyDamping()), 0.0);
}

TEST(RunningCost, TaskTermDominatesAtStart) {
  const auto spec = PendulumCost();
  Eigen::VectorXd x(2);
  x << 0.0, 0.0;
  const Eigen::Vector3d u(kPi / 3, 0.0, 0.0);
  EXPECT_NEAR(via::running_cost(x, u, spec, BrakingScheme::hybrid(), ToyDamping()),
              1000.0 * (kPi / 3) * (kPi / 3), 1e-9);
}

TEST(RunningCost, DynamicSchemeHasNoHarvestTerm) {
  const auto spec = PendulumCost();
  Eigen::VectorXd x(2);
  x << 0.2, 5.0;
  for (double u3 : {0.0, 0.3, 0.7, 1.0}) {
    const Eigen::Vector3d u(kPi / 3, 0.4, u3);
    const double with_u3 =
        via::running_cost(x, u, spec, BrakingScheme::dynamic(), ToyDamping());
    const Eigen::Vector3d u_zero(kPi / 3, 0.4, 0.0);
    const double without =
        via::running_cost(x, u_zero, spec, BrakingScheme::dynamic(), ToyDamping());
    EXPECT_DOUBLE_EQ(with_u3, without);
  }
}

TEST(Linearize, RecoversLinearSystem) {
  Eigen::MatrixXd a(2, 2), b(2, 1);
  a << 0.9, 0.2, -0.1, 1.05;
  b << 0.05, 0.3;
  const auto f = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
    return Eigen::VectorXd(a * x + b * u);
  };
  Eigen::VectorXd x(2), u(1);
  x << 0.4, -0.7;
  u << 0.2;
  const auto [a_est, b_est] = via::linearize(f, x, u);
  EXPECT_LT((a_est - a).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LT((b_est - b).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Linearize, PendulumStiffnessEntry) {
  PendulumPlant plant(PendulumParams{}, BrakingScheme::hybrid(), ToyDamping());
  const auto f = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
    return plant.deriv(x, Eigen::Vector3d(u[0], u[1], u[2]));
  };
  Eigen::VectorXd x(2), u(3);
  x << kPi / 3, 0.0;
  u << kPi / 3, 0.5, 0.3;
  const auto [a, b] = via::linearize(f, x, u);
  // d qddot / d q = -k / (m l^2) = -100 at u2 = 0.5.
  EXPECT_NEAR(a(1, 0), -100.0, 1e-5);
  (void)b;
}

TEST(Linearize, ZeroDynamicsGivesIdentity) {
  const auto step = [](const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
    const auto zero = [](const Eigen::VectorXd& s, const Eigen::Vector3d&) {
      return Eigen::VectorXd(Eigen::VectorXd::Zero(s.size()));
    };
    return via::rk4_step(zero, x, Eigen::Vector3d(u[0], u[1], u[2]), 0.02);
  };
  Eigen::VectorXd x(2), u(3);
  x << 0.3, -0.1;
  u << 0.0, 0.0, 0.0;
  const auto [a, b] = via::linearize(step, x, u);
  EXPECT_LT((a - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT(b.cwiseAbs().maxCoeff(), 1e-9);
}

// Linear-quadratic problem used to compare the solver against the Riccati
// recursion.
struct LqProblem {
  Eigen::MatrixXd a, b, q, r;
  int n_steps = 30;

  int state_size() const { return static_cast<int>(a.rows()); }
  int control_size() const { return static_cast<int>(b.cols()); }
  int horizon() const { return n_steps; }

  Eigen::VectorXd step(const Eigen::VectorXd& x, const Eigen::VectorXd& u, int) const {
    return a * x + b * u;
  }
  double stage_cost(const Eigen::VectorXd& x, const Eigen::VectorXd& u, int) const {
    return x.dot(q * x) + u.dot(r * u);
  }
  CostExpansion cost_expansion(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                               int k) const {
    CostExpansion ce;
    ce.value = stage_cost(x, u, k);
    ce.x = 2.0 * q * x;
    ce.u = 2.0 * r * u;
    ce.xx = 2.0 * q;
    ce.uu = 2.0 * r;
    ce.ux = Eigen::MatrixXd::Zero(control_size(), state_size());
    return ce;
  }
};

LqProblem DoubleIntegrator() {
  LqProblem p;
  const double dt = 0.1;
  p.a.resize(2, 2);
  p.a << 1.0, dt, 0.0, 1.0;
  p.b.resize(2, 1);
  p.b << 0.5 * dt * dt, dt;
  p.q = Eigen::Vector2d(1.0, 0.1).asDiagonal();
  p.r = Eigen::MatrixXd::Constant(1, 1, 0.01);
  return p;
}

// Finite-horizon Riccati recursion for stage cost x'Qx + u'Ru, no terminal.
double RiccatiOptimalCost(const LqProblem& p, const Eigen::VectorXd& x0) {
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(p.state_size(), p.state_size());
  for (int k = p.n_steps - 1; k >= 0; --k) {
    const Eigen::MatrixXd bvb = p.r + p.b.transpose() * v * p.b;
    const Eigen::MatrixXd bva = p.b.transpose() * v * p.a;
    v = p.q + p.a.transpose() * v * p.a - bva.transpose() * bvb.llt().solve(bva);
    v = 0.5 * (v + v.transpose()).eval();
  }
  return x0.dot(v * x0);
}

TEST(IlqrSolve, MatchesDiscreteLqr) {
  const auto prob = DoubleIntegrator();
  Eigen::VectorXd x0(2);
  x0 << 1.0, 0.0;
  const std::vector<Eigen::VectorXd> u_init(prob.n_steps, Eigen::VectorXd::Zero(1));
  SolverOptions opts;
  opts.lambda_init = opts.lambda_min;  // smooth LQ problem: no damping needed
  const auto result = via::ilqr_solve(prob, x0, u_init, opts);
  const double optimal = RiccatiOptimalCost(prob, x0);
  EXPECT_TRUE(result.converged);
  EXPECT_LE(result.iterations, 2);
  EXPECT_NEAR(result.cost, optimal, 1e-8 * optimal);
  for (size_t i = 1; i < result.cost_history.size(); ++i) {
    EXPECT_LE(result.cost_history[i], result.cost_history[i - 1]);
  }
}

TEST(IlqrSolve, StationaryPointReturnsInitial) {
  auto prob = DoubleIntegrator();
  prob.q.setZero();  // no task term: zero controls already optimal
  Eigen::VectorXd x0(2);
  x0 << 1.0, 0.0;
  const std::vector<Eigen::VectorXd> u_init(prob.n_steps, Eigen::VectorXd::Zero(1));
  const auto result = via::ilqr_solve(prob, x0, u_init, SolverOptions{});
  EXPECT_TRUE(result.converged);
  EXPECT_DOUBLE_EQ(result.cost, 0.0);
  for (const auto& u : result.controls) {
    EXPECT_DOUBLE_EQ(u[0], 0.0);
  }
}

TEST(CostGradient, MatchesFiniteDifferences) {
  PendulumPlant plant(PendulumParams{}, BrakingScheme::hybrid(), ToyDamping());
  CostSpec spec = PendulumCost();
  spec.t_f = 0.2;  // 10-step instance
  const via::ReachingProblem problem(plant, spec);
  ASSERT_EQ(problem.horizon(), 10);

  Eigen::VectorXd x0 = plant.rest_state();
  std::vector<Eigen::VectorXd> us;
  for (int k = 0; k < 10; ++k) {
    Eigen::VectorXd u(3);
    u << kPi / 3 - 0.05 * k / 10.0, 0.4 + 0.02 * k / 10.0, 0.30 + 0.008 * k;
    us.push_back(u);
  }

  const auto analytic = via::cost_gradient(problem, x0, us);

  const auto total_cost = [&](const std::vector<Eigen::VectorXd>& controls) {
    std::vector<Eigen::VectorXd> xs{x0};
    double cost = 0.0;
    for (int k = 0; k < problem.horizon(); ++k) {
      cost += problem.stage_cost(xs.back(), controls[k], k);
      xs.push_back(problem.step(xs.back(), controls[k], k));
    }
    return cost;
  };

  const double h = 1e-5;
  double num = 0.0, denom = 0.0;
  for (int k = 0; k < 10; ++k) {
    for (int j = 0; j < 3; ++j) {
      auto up = us, um = us;
      up[k][j] += h;
      um[k][j] -= h;
      const double fd = (total_cost(up) - total_cost(um)) / (2.0 * h);
      num += (analytic[k][j] - fd) * (analytic[k][j] - fd);
      denom += fd * fd;
    }
  }
  ASSERT_GT(denom, 0.0);
  EXPECT_LT(std::sqrt(num / denom), 1e-4);
}

SolverOptions PendulumOptions(const PendulumPlant& plant, double fixed_u1) {
  SolverOptions opts;
  opts.u_lower = plant.control_lower();
  opts.u_upper = plant.control_upper();
  opts.u_lower[0] = fixed_u1;  // equilibrium command pinned
  opts.u_upper[0] = fixed_u1;
  return opts;
}

TEST(IlqrSolve, PendulumHybridReachesTarget) {
  PendulumPlant plant(PendulumParams{}, BrakingScheme::hybrid(), ToyDamping());
  const CostSpec spec = PendulumCost();
  const via::ReachingProblem problem(plant, spec);
  const auto opts = PendulumOptions(plant, spec.q_star);

  std::vector<Eigen::VectorXd> u_init(problem.horizon(),
                                      Eigen::Vector3d(spec.q_star, 0.5, 0.5));
  const auto result = via::ilqr_solve(problem, plant.rest_state(), u_init, opts);
  EXPECT_TRUE(result.converged);

  std::vector<Eigen::Vector3d> controls;
  for (const auto& u : result.controls) {
    controls.emplace_back(u[0], u[1], u[2]);
    EXPECT_GE(u[2], 0.0);
    EXPECT_LE(u[2], 1.0);
    EXPECT_DOUBLE_EQ(u[0], spec.q_star);
  }
  const auto traj = via::simulate(plant, controls, plant.rest_state(), spec.t_f);
  const double reach_error = std::abs(traj.samples.back().state[0] - spec.q_star);
  double overshoot = 0.0;
  for (const auto& s : traj.samples) {
    overshoot = std::max(overshoot, s.state[0] - spec.q_star);
  }
  EXPECT_LT(reach_error, 0.02);
  EXPECT_LT(overshoot, 0.01);

  for (size_t i = 1; i < result.cost_history.size(); ++i) {
    EXPECT_LE(result.cost_history[i], result.cost_history[i - 1]);
  }
}

}  // namespace

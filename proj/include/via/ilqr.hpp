#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <concepts>
#include <limits>
#include <stdexcept>
#include <vector>

#include "via/damping.hpp"
#include "via/errors.hpp"
#include "via/integrate.hpp"
#include "via/simulate.hpp"

namespace via {

/// Weights and horizon of the reaching cost
///
///   J = int_0^tf [ w1 (q - q*)^2 + w2 (u1 - q*)^2 + w3 u2^2 - w4 P_rege ] dt
struct CostSpec {
  double w1 = 1000.0;
  double w2 = 1.0;
  double w3 = 1.0;
  double w4 = 0.01;
  double q_star = 0.0;       // rad
  double t_f = 1.0;          // s
  double control_freq = 50;  // Hz

  void validate() const {
    if (!(w1 > 0.0)) throw std::invalid_argument("w1 must be > 0");
    if (!(w2 >= 0.0 && w3 >= 0.0 && w4 >= 0.0))
      throw std::invalid_argument("cost weights must be >= 0");
    if (!(t_f > 0.0)) throw std::invalid_argument("t_f must be > 0");
    if (!(control_freq > 0.0)) throw std::invalid_argument("control_freq must be > 0");
  }
};

/// Instantaneous cost rate of the reaching task under the given scheme.
inline double running_cost(const Eigen::VectorXd& x, const Eigen::Vector3d& u,
                           const CostSpec& spec, const BrakingScheme& scheme,
                           const DampingModuleParams& dmp) {
  const double q_err = x[0] - spec.q_star;
  const double u1_err = u[0] - spec.q_star;
  return spec.w1 * q_err * q_err + spec.w2 * u1_err * u1_err + spec.w3 * u[1] * u[1] -
         spec.w4 * regen_power_from_u(scheme, dmp, u[2], x[1]);
}

struct SolverOptions {
  int max_iterations = 200;
  double tolerance = 1e-6;      // relative cost decrease at an accepted step
  double lambda_init = 1e-3;
  double lambda_growth = 10.0;
  double lambda_shrink = 0.1;
  double lambda_min = 1e-9;
  double lambda_max = 1e9;
  double backtrack_factor = 0.5;
  int max_backtracks = 12;
  double armijo_ratio = 0.05;   // accept a step only if actual/expected decrease exceeds this
  double fd_step = 1e-6;        // dynamics Jacobian perturbation
  Eigen::VectorXd u_lower;      // empty = unbounded
  Eigen::VectorXd u_upper;

  void validate(int control_size) const {
    if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance must be > 0");
    if (max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
    if (!(lambda_min >= 1e-9 && lambda_max <= 1e9 && lambda_min < lambda_max))
      throw std::invalid_argument("lambda bounds must lie within [1e-9, 1e9]");
    if (!(fd_step > 0.0)) throw std::invalid_argument("fd_step must be > 0");
    const bool has_bounds = u_lower.size() > 0 || u_upper.size() > 0;
    if (has_bounds && (u_lower.size() != control_size || u_upper.size() != control_size))
      throw std::invalid_argument("control bound size mismatch");
  }
};

struct IlqrResult {
  std::vector<Eigen::VectorXd> controls;
  std::vector<Eigen::VectorXd> states;  // rollout under `controls`, size N+1
  bool converged = false;
  double cost = std::numeric_limits<double>::infinity();
  std::vector<double> cost_history;  // initial cost plus every accepted iterate
  int iterations = 0;
};

/// Quadratic expansion of one stage cost around (x, u).
struct CostExpansion {
  double value = 0.0;
  Eigen::VectorXd x;   // d l / dx
  Eigen::VectorXd u;   // d l / du
  Eigen::MatrixXd xx;
  Eigen::MatrixXd uu;
  Eigen::MatrixXd ux;  // d^2 l / du dx
};

/// Central-difference Jacobians (A, B) of an arbitrary map f(x, u).
template <typename F>
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> linearize(F&& f, const Eigen::VectorXd& x,
                                                      const Eigen::VectorXd& u,
                                                      double h = 1e-6) {
  if (!(h > 0.0)) throw std::invalid_argument("linearize: h must be > 0");
  const Eigen::VectorXd fx = f(x, u);
  Eigen::MatrixXd a(fx.size(), x.size());
  Eigen::MatrixXd b(fx.size(), u.size());
  Eigen::VectorXd xp = x, xm = x, up = u, um = u;
  for (int j = 0; j < x.size(); ++j) {
    xp[j] += h;
    xm[j] -= h;
    a.col(j) = (f(xp, u) - f(xm, u)) / (2.0 * h);
    xp[j] = x[j];
    xm[j] = x[j];
  }
  for (int j = 0; j < u.size(); ++j) {
    up[j] += h;
    um[j] -= h;
    b.col(j) = (f(x, up) - f(x, um)) / (2.0 * h);
    up[j] = u[j];
    um[j] = u[j];
  }
  if (!a.allFinite() || !b.allFinite()) {
    throw LinearizationFailed("linearize produced non-finite Jacobian entries");
  }
  return {std::move(a), std::move(b)};
}

/// A discrete-time optimal control problem: step map, stage cost and its
/// quadratic expansion over a fixed horizon.
template <typename T>
concept TrajectoryProblem = requires(const T& p, const Eigen::VectorXd& x,
                                     const Eigen::VectorXd& u, int k) {
  { p.state_size() } -> std::convertible_to<int>;
  { p.control_size() } -> std::convertible_to<int>;
  { p.horizon() } -> std::convertible_to<int>;
  { p.step(x, u, k) } -> std::convertible_to<Eigen::VectorXd>;
  { p.stage_cost(x, u, k) } -> std::convertible_to<double>;
  { p.cost_expansion(x, u, k) } -> std::convertible_to<CostExpansion>;
};

namespace detail {

inline Eigen::VectorXd clamp_control(const Eigen::VectorXd& u, const SolverOptions& opts) {
  if (opts.u_lower.size() == 0) return u;
  return u.cwiseMax(opts.u_lower).cwiseMin(opts.u_upper);
}

template <TrajectoryProblem P>
bool rollout(const P& prob, const Eigen::VectorXd& x0,
             const std::vector<Eigen::VectorXd>& us, std::vector<Eigen::VectorXd>& xs,
             double& cost) {
  const int n = prob.horizon();
  xs.assign(1, x0);
  xs.reserve(n + 1);
  cost = 0.0;
  for (int k = 0; k < n; ++k) {
    cost += prob.stage_cost(xs.back(), us[k], k);
    Eigen::VectorXd next;
    try {
      next = prob.step(xs.back(), us[k], k);
    } catch (const IntegrationDiverged&) {
      return false;
    }
    if (!next.allFinite()) return false;
    xs.push_back(std::move(next));
  }
  return std::isfinite(cost);
}

}  // namespace detail

/// Gradient of the total cost with respect to each control, computed with the
/// adjoint recursion over the finite-difference linearisation. Used as a
/// first-order diagnostic of the backward pass.
template <TrajectoryProblem P>
std::vector<Eigen::VectorXd> cost_gradient(const P& prob, const Eigen::VectorXd& x0,
                                           const std::vector<Eigen::VectorXd>& us,
                                           double fd_step = 1e-6) {
  const int n = prob.horizon();
  std::vector<Eigen::VectorXd> xs;
  double cost = 0.0;
  if (!detail::rollout(prob, x0, us, xs, cost)) {
    throw IntegrationDiverged("cost_gradient: rollout diverged");
  }
  const auto step = [&prob](const Eigen::VectorXd& x, const Eigen::VectorXd& u, int k) {
    return prob.step(x, u, k);
  };
  std::vector<Eigen::VectorXd> grads(n);
  Eigen::VectorXd adjoint = Eigen::VectorXd::Zero(prob.state_size());
  for (int k = n - 1; k >= 0; --k) {
    const auto [a, b] = linearize(
        [&](const Eigen::VectorXd& x, const Eigen::VectorXd& u) { return step(x, u, k); },
        xs[k], us[k], fd_step);
    const CostExpansion ce = prob.cost_expansion(xs[k], us[k], k);
    grads[k] = ce.u + b.transpose() * adjoint;
    adjoint = ce.x + a.transpose() * adjoint;
  }
  return grads;
}

/// Iterative LQR with a Levenberg-regularised backward pass, backtracking
/// line search and box-clamped controls. Returns the best iterate found;
/// `converged` marks termination by small relative cost decrease (or a
/// vanishing expected improvement) rather than iteration/regularisation
/// exhaustion.
template <TrajectoryProblem P>
IlqrResult ilqr_solve(const P& prob, const Eigen::VectorXd& x0,
                      const std::vector<Eigen::VectorXd>& u_init,
                      const SolverOptions& opts) {
  const int n_steps = prob.horizon();
  const int nx = prob.state_size();
  const int nu = prob.control_size();
  opts.validate(nu);
  if (static_cast<int>(u_init.size()) != n_steps) {
    throw std::invalid_argument("ilqr_solve: u_init length must equal the horizon");
  }

  IlqrResult result;
  result.controls.reserve(n_steps);
  for (const auto& u : u_init) {
    result.controls.push_back(detail::clamp_control(u, opts));
  }
  double cost = 0.0;
  if (!detail::rollout(prob, x0, result.controls, result.states, cost)) {
    throw IntegrationDiverged("ilqr_solve: initial rollout diverged");
  }
  result.cost = cost;
  result.cost_history.push_back(cost);

  std::vector<Eigen::VectorXd> gains_ff(n_steps);
  std::vector<Eigen::MatrixXd> gains_fb(n_steps);
  double lambda = opts.lambda_init;

  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    result.iterations = iter + 1;

    // Expansions along the current nominal trajectory.
    std::vector<Eigen::MatrixXd> a_mats(n_steps), b_mats(n_steps);
    std::vector<CostExpansion> expansions(n_steps);
    for (int k = 0; k < n_steps; ++k) {
      std::tie(a_mats[k], b_mats[k]) = linearize(
          [&](const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
            return prob.step(x, u, k);
          },
          result.states[k], result.controls[k], opts.fd_step);
      expansions[k] = prob.cost_expansion(result.states[k], result.controls[k], k);
    }

    // Backward pass; grow lambda until every control Hessian factorises.
    double d1 = 0.0, d2 = 0.0;
    bool pass_ok = false;
    while (!pass_ok) {
      pass_ok = true;
      d1 = d2 = 0.0;
      Eigen::VectorXd vx = Eigen::VectorXd::Zero(nx);
      Eigen::MatrixXd vxx = Eigen::MatrixXd::Zero(nx, nx);
      for (int k = n_steps - 1; k >= 0 && pass_ok; --k) {
        const auto& a = a_mats[k];
        const auto& b = b_mats[k];
        const auto& ce = expansions[k];
        const Eigen::VectorXd qx = ce.x + a.transpose() * vx;
        const Eigen::VectorXd qu = ce.u + b.transpose() * vx;
        const Eigen::MatrixXd qxx = ce.xx + a.transpose() * vxx * a;
        const Eigen::MatrixXd quu = ce.uu + b.transpose() * vxx * b;
        const Eigen::MatrixXd qux = ce.ux + b.transpose() * vxx * a;
        Eigen::MatrixXd quu_reg = quu;
        quu_reg.diagonal().array() += lambda;
        const Eigen::LLT<Eigen::MatrixXd> llt(quu_reg);
        if (llt.info() != Eigen::Success) {
          pass_ok = false;
          break;
        }
        gains_ff[k] = -llt.solve(qu);
        gains_fb[k] = -llt.solve(qux);
        d1 += gains_ff[k].dot(qu);
        d2 += gains_ff[k].dot(quu * gains_ff[k]);
        vx = qx + gains_fb[k].transpose() * quu * gains_ff[k] +
             gains_fb[k].transpose() * qu + qux.transpose() * gains_ff[k];
        vxx = qxx + gains_fb[k].transpose() * quu * gains_fb[k] +
              gains_fb[k].transpose() * qux + qux.transpose() * gains_fb[k];
        vxx = 0.5 * (vxx + vxx.transpose()).eval();
      }
      if (!pass_ok) {
        lambda *= opts.lambda_growth;
        if (lambda > opts.lambda_max) {
          return result;  // regularisation exhausted; best iterate, not converged
        }
      }
    }

    // Terminate once the trust region offers less than a tolerance-sized
    // improvement: the iterate is stationary at the model's resolution.
    const double expected_full = -(d1 + 0.5 * d2);
    if (expected_full <= opts.tolerance * std::max(std::abs(result.cost), 1.0)) {
      result.converged = true;
      return result;
    }

    // Line search over an alpha ladder on the clamped forward rollout;
    // among the sufficiently decreasing candidates the cheapest one wins.
    bool accepted = false;
    {
      std::vector<Eigen::VectorXd> best_controls;
      std::vector<Eigen::VectorXd> best_states;
      double best_cost = result.cost;
      double alpha = 1.0;
      for (int ls = 0; ls < opts.max_backtracks; ++ls, alpha *= opts.backtrack_factor) {
        std::vector<Eigen::VectorXd> new_controls(n_steps);
        std::vector<Eigen::VectorXd> new_states;
        new_states.reserve(n_steps + 1);
        new_states.push_back(x0);
        double new_cost = 0.0;
        bool feasible = true;
        for (int k = 0; k < n_steps; ++k) {
          const Eigen::VectorXd du =
              alpha * gains_ff[k] + gains_fb[k] * (new_states.back() - result.states[k]);
          new_controls[k] = detail::clamp_control(result.controls[k] + du, opts);
          new_cost += prob.stage_cost(new_states.back(), new_controls[k], k);
          Eigen::VectorXd next;
          try {
            next = prob.step(new_states.back(), new_controls[k], k);
          } catch (const IntegrationDiverged&) {
            feasible = false;
            break;
          }
          if (!next.allFinite()) {
            feasible = false;
            break;
          }
          new_states.push_back(std::move(next));
        }
        const double expected = -(alpha * d1 + 0.5 * alpha * alpha * d2);
        const bool sufficient =
            feasible && std::isfinite(new_cost) &&
            (result.cost - new_cost) > opts.armijo_ratio * std::max(expected, 0.0);
        if (sufficient && new_cost < best_cost) {
          best_cost = new_cost;
          best_controls = std::move(new_controls);
          best_states = std::move(new_states);
        }
      }
      if (best_cost < result.cost) {
        const double rel_decrease =
            (result.cost - best_cost) / std::max(std::abs(result.cost), 1e-12);
        result.controls = std::move(best_controls);
        result.states = std::move(best_states);
        result.cost = best_cost;
        result.cost_history.push_back(best_cost);
        lambda = std::max(lambda * opts.lambda_shrink, opts.lambda_min);
        accepted = true;
        if (rel_decrease < opts.tolerance) {
          result.converged = true;
          return result;
        }
      }
    }

    if (!accepted) {
      lambda *= opts.lambda_growth;
      if (lambda > opts.lambda_max) {
        return result;  // no acceptable step at any regularisation
      }
    }
  }
  return result;
}

/// Reaching task wrapped as a discrete problem: the step map integrates the
/// plant over one control period with RK4 substeps, the stage cost is the
/// rectangle rule over the same period. Controls are clamped to the plant's
/// admissible box inside the step so finite differences see the same
/// saturation the simulator applies.
template <Plant PlantT>
class ReachingProblem {
 public:
  ReachingProblem(const PlantT& plant, const CostSpec& spec, double dt = 1e-3)
      : plant_(plant), spec_(spec), dt_(dt) {
    spec_.validate();
    const double steps = std::round(spec_.t_f * spec_.control_freq);
    if (std::abs(spec_.t_f * spec_.control_freq - steps) > 1e-9) {
      throw std::invalid_argument("horizon t_f * control_freq must be an integer");
    }
    horizon_ = static_cast<int>(steps);
    const double hold = 1.0 / spec_.control_freq;
    substeps_ = static_cast<int>(std::lround(hold / dt_));
    if (substeps_ < 1 || std::abs(hold / dt_ - substeps_) > 1e-9 * substeps_) {
      throw std::invalid_argument("control period must be an integer number of dt steps");
    }
  }

  int state_size() const { return plant_.state_size(); }
  int control_size() const { return 3; }
  int horizon() const { return horizon_; }
  double control_period() const { return 1.0 / spec_.control_freq; }
  const PlantT& plant() const { return plant_; }
  const CostSpec& spec() const { return spec_; }
  double dt() const { return dt_; }

  Eigen::VectorXd step(const Eigen::VectorXd& x, const Eigen::VectorXd& u, int) const {
    const Eigen::Vector3d uc = plant_.clamp_control(u.head<3>());
    Eigen::VectorXd state = x;
    const auto deriv = [this](const Eigen::VectorXd& s, const Eigen::Vector3d& c) {
      return plant_.deriv(s, c);
    };
    for (int i = 0; i < substeps_; ++i) {
      state = rk4_step(deriv, state, uc, dt_);
    }
    return state;
  }

  double stage_cost(const Eigen::VectorXd& x, const Eigen::VectorXd& u, int) const {
    const Eigen::Vector3d uc = plant_.clamp_control(u.head<3>());
    return control_period() *
           running_cost(x, uc, spec_, plant_.scheme(), plant_.damping_params());
  }

  CostExpansion cost_expansion(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                               int k) const {
    const Eigen::Vector3d uc = plant_.clamp_control(u.head<3>());
    const int nx = plant_.state_size();
    const double dt_c = control_period();
    const double qdot = x[1];

    // P_rege = qdot^2 * g(u3); piecewise-linear g with the kink at the
    // crossover treated as stationary.
    const auto [g, g_slope] = regen_factor(uc[2]);

    CostExpansion ce;
    ce.value = stage_cost(x, u, k);
    ce.x = Eigen::VectorXd::Zero(nx);
    ce.x[0] = dt_c * 2.0 * spec_.w1 * (x[0] - spec_.q_star);
    ce.x[1] = dt_c * -2.0 * spec_.w4 * qdot * g;
    ce.u = Eigen::VectorXd::Zero(3);
    ce.u[0] = dt_c * 2.0 * spec_.w2 * (uc[0] - spec_.q_star);
    ce.u[1] = dt_c * 2.0 * spec_.w3 * uc[1];
    ce.u[2] = dt_c * -spec_.w4 * qdot * qdot * g_slope;
    ce.xx = Eigen::MatrixXd::Zero(nx, nx);
    ce.xx(0, 0) = dt_c * 2.0 * spec_.w1;
    ce.xx(1, 1) = dt_c * -2.0 * spec_.w4 * g;
    ce.uu = Eigen::MatrixXd::Zero(3, 3);
    ce.uu(0, 0) = dt_c * 2.0 * spec_.w2;
    ce.uu(1, 1) = dt_c * 2.0 * spec_.w3;
    ce.ux = Eigen::MatrixXd::Zero(3, nx);
    ce.ux(2, 1) = dt_c * -2.0 * spec_.w4 * qdot * g_slope;
    return ce;
  }

 private:
  // g(u) with P_rege = qdot^2 g(u), and its slope.
  std::pair<double, double> regen_factor(double u) const {
    const auto& dmp = plant_.damping_params();
    const double peak = dmp.load_power_fraction() * dmp.max_regen_damping();
    switch (plant_.scheme().kind()) {
      case BrakingScheme::Kind::Regenerative:
        return {peak * u, peak};
      case BrakingScheme::Kind::Hybrid: {
        const double ur = dmp.crossover();
        if (u < ur) return {peak * u / ur, peak / ur};
        if (u > ur) return {peak * (1.0 - (u - ur) / (1.0 - ur)), -peak / (1.0 - ur)};
        return {peak, 0.0};
      }
      default:
        return {0.0, 0.0};
    }
  }

  PlantT plant_;
  CostSpec spec_;
  double dt_;
  int horizon_ = 0;
  int substeps_ = 0;
};

}  // namespace via

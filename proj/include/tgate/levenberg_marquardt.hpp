#pragma once

#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace tgate {

struct LmOptions {
  int max_iterations = 200;
  double relative_tolerance = 1e-10;  // on the cost decrease of an accepted step
  double initial_lambda = 1e-3;
};

enum class LmStatus { converged, max_iterations };

struct LmResult {
  LmStatus status = LmStatus::max_iterations;
  int iterations = 0;
  double cost = 0.0;  // half the squared residual norm
};

/// Damped Gauss-Newton (Levenberg-Marquardt with Marquardt's diagonal
/// scaling) on a least-squares problem.
///
/// Problem must provide
///   Eigen::Index residual_count() const;
///   void residuals(const Eigen::VectorXd& p, Eigen::VectorXd& r) const;
///   void jacobian(const Eigen::VectorXd& p, Eigen::MatrixXd& J) const;
/// `params` holds the start point on entry and the best iterate on exit.
template <typename Problem>
LmResult levenberg_marquardt(const Problem& problem, Eigen::VectorXd& params,
                             const LmOptions& opt = {}) {
  const Eigen::Index m = problem.residual_count();
  const Eigen::Index n = params.size();
  Eigen::VectorXd r(m);
  Eigen::VectorXd r_trial(m);
  Eigen::MatrixXd J(m, n);

  problem.residuals(params, r);
  double cost = 0.5 * r.squaredNorm();
  const double floor = 1e-30 * std::max(1.0, cost);
  double lambda = opt.initial_lambda;
  LmResult result;

  bool fresh = true;
  Eigen::MatrixXd A(n, n);
  Eigen::VectorXd g(n);
  for (int it = 1; it <= opt.max_iterations; ++it) {
    result.iterations = it;
    if (fresh) {
      problem.jacobian(params, J);
      A.noalias() = J.transpose() * J;
      g.noalias() = J.transpose() * r;
      fresh = false;
    }
    Eigen::MatrixXd damped = A;
    damped.diagonal() += lambda * A.diagonal().cwiseMax(1e-12 * A.diagonal().maxCoeff());
    const Eigen::VectorXd step = damped.ldlt().solve(-g);
    const Eigen::VectorXd trial = params + step;
    problem.residuals(trial, r_trial);
    const double trial_cost = 0.5 * r_trial.squaredNorm();

    if (std::isfinite(trial_cost) && trial_cost < cost) {
      const double decrease = cost - trial_cost;
      params = trial;
      r.swap(r_trial);
      const double previous = cost;
      cost = trial_cost;
      lambda = std::max(lambda / 10.0, 1e-15);
      fresh = true;
      if (cost <= floor || decrease <= opt.relative_tolerance * previous) {
        result.status = LmStatus::converged;
        break;
      }
    } else {
      lambda *= 10.0;
      // No descent direction left at machine precision: a stationary point.
      if (lambda > 1e20 || step.norm() <= 1e-15 * (params.norm() + 1e-15)) {
        result.status = LmStatus::converged;
        break;
      }
    }
  }
  result.cost = cost;
  return result;
}

}  // namespace tgate

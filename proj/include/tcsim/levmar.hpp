#pragma once

#include <Eigen/Dense>
#include <functional>

namespace tcsim {

struct FitOptions {
  int max_iterations = 200;
  double cost_tolerance = 1e-12;   // relative cost decrease
  double step_tolerance = 1e-10;   // relative parameter step
  double initial_lambda = 1e-3;
};

struct FitOutcome {
  Eigen::VectorXd parameters;
  Eigen::MatrixXd covariance;  // sigma^2 (J^T J)^-1 at the solution
  double residual_norm = 0.0;  // ||r||
  int iterations = 0;
  bool converged = false;
};

// Damped Gauss-Newton with a forward-difference Jacobian. Parameters are
// scaled internally by their initial magnitudes, so wildly different units
// (farads next to decibels) stay well conditioned.
FitOutcome levenberg_marquardt(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residuals,
    Eigen::VectorXd initial, const FitOptions& options = {});

}  // namespace tcsim

#include "tcsim/levmar.hpp"

#include <cmath>
#include <stdexcept>

namespace tcsim {

FitOutcome levenberg_marquardt(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residuals,
    Eigen::VectorXd initial, const FitOptions& options) {
  const Eigen::Index n_params = initial.size();
  Eigen::VectorXd scale(n_params);
  for (Eigen::Index j = 0; j < n_params; ++j) {
    // A parameter starting at exactly zero gets a neutral scale; anything
    // else would freeze it numerically.
    scale(j) = initial(j) != 0.0 ? std::abs(initial(j)) : 1.0;
  }

  const auto eval = [&](const Eigen::VectorXd& y) {
    return residuals(scale.cwiseProduct(y).eval());
  };

  Eigen::VectorXd y = initial.cwiseQuotient(scale);
  Eigen::VectorXd r = eval(y);
  const Eigen::Index n_res = r.size();
  if (n_res <= n_params)
    throw std::invalid_argument("levenberg_marquardt: fewer residuals than parameters");
  double cost = 0.5 * r.squaredNorm();

  double lambda = options.initial_lambda;
  FitOutcome out;
  out.converged = false;

  Eigen::MatrixXd jac(n_res, n_params);
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    out.iterations = iter + 1;
    for (Eigen::Index j = 0; j < n_params; ++j) {
      const double h = 1e-7 * std::max(std::abs(y(j)), 1.0);
      Eigen::VectorXd yj = y;
      yj(j) += h;
      jac.col(j) = (eval(yj) - r) / h;
    }
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd jtr = jac.transpose() * r;

    bool stepped = false;
    for (int tries = 0; tries < 12; ++tries) {
      Eigen::MatrixXd damped = jtj;
      damped.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
      const Eigen::VectorXd step = damped.ldlt().solve(-jtr);
      const Eigen::VectorXd y_new = y + step;
      const Eigen::VectorXd r_new = eval(y_new);
      const double cost_new = 0.5 * r_new.squaredNorm();
      if (std::isfinite(cost_new) && cost_new < cost) {
        const double cost_drop = (cost - cost_new) / std::max(cost, 1e-300);
        const double step_size = step.norm() / std::max(y.norm(), 1e-300);
        y = y_new;
        r = r_new;
        cost = cost_new;
        lambda = std::max(lambda * 0.3, 1e-12);
        stepped = true;
        if (cost_drop < options.cost_tolerance || step_size < options.step_tolerance)
          out.converged = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!stepped) {
      // No downhill step found at any damping: local minimum to tolerance.
      out.converged = true;
      break;
    }
    if (out.converged) break;
  }

  out.parameters = scale.cwiseProduct(y);
  out.residual_norm = r.norm();

  // Covariance in original units: sigma^2 S (J_y^T J_y)^-1 S.
  for (Eigen::Index j = 0; j < n_params; ++j) {
    const double h = 1e-7 * std::max(std::abs(y(j)), 1.0);
    Eigen::VectorXd yj = y;
    yj(j) += h;
    jac.col(j) = (eval(yj) - r) / h;
  }
  const double dof = static_cast<double>(n_res - n_params);
  const double sigma2 = r.squaredNorm() / dof;
  Eigen::MatrixXd jtj = jac.transpose() * jac;
  jtj.diagonal() += Eigen::VectorXd::Constant(n_params, 1e-300);
  const Eigen::MatrixXd inv = jtj.ldlt().solve(Eigen::MatrixXd::Identity(n_params, n_params));
  out.covariance = sigma2 * scale.asDiagonal() * inv * scale.asDiagonal();
  return out;
}

}  // namespace tcsim

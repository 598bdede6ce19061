#include "agesynth/svr.hpp"

#include <algorithm>
#include <cmath>

#include "agesynth/error.hpp"

namespace agesynth {

void SvrConfig::validate() const {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!positive(epsilon) || !positive(C) || !positive(tolerance) || !positive(bias_scale) || max_iterations <= 0) {
    fail(ErrorCode::InvalidConfig, "SVR epsilon, C, tolerance, bias_scale and max_iterations must be positive");
  }
}

double svr_primal_objective(const Matrix& features, std::span<const double> targets, const Vector& weights,
                            double bias, const SvrConfig& cfg) {
  double loss = 0.0;
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    const double residual = targets[static_cast<std::size_t>(i)] - bias - features.row(i).dot(weights);
    loss += std::max(0.0, std::abs(residual) - cfg.epsilon);
  }
  const double scaled_bias = bias / cfg.bias_scale;
  return 0.5 * weights.squaredNorm() + 0.5 * scaled_bias * scaled_bias + cfg.C * loss;
}

LinearSvrSolution solve_linear_svr(const Matrix& features, std::span<const double> targets, const SvrConfig& cfg) {
  cfg.validate();
  const auto n = features.rows();
  const auto dim = features.cols();
  if (static_cast<std::size_t>(n) != targets.size()) fail(ErrorCode::DimensionMismatch, "feature/label count differ");

  const double bias_feature = cfg.bias_scale;
  const double upper = cfg.C;
  const double p = cfg.epsilon;

  Vector w = Vector::Zero(dim);
  double w_bias = 0.0;  // weight of the constant feature
  Vector beta = Vector::Zero(n);
  Vector diag(n);
  for (Eigen::Index i = 0; i < n; ++i) diag(i) = features.row(i).squaredNorm() + bias_feature * bias_feature;

  LinearSvrSolution sol;
  long iter = 0;
  double max_violation = 0.0;
  while (iter < cfg.max_iterations) {
    max_violation = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double y = targets[static_cast<std::size_t>(i)];
      const double g = features.row(i).dot(w) + w_bias * bias_feature - y;
      const double gp = g + p;
      const double gn = g - p;
      const double b = beta(i);

      // Violation of the optimality conditions of the L1-regularized box-constrained dual.
      double violation = 0.0;
      if (b == 0.0) {
        if (gp < 0.0) violation = -gp;
        else if (gn > 0.0) violation = gn;
      } else if (b >= upper) {
        if (gp > 0.0) violation = gp;
      } else if (b <= -upper) {
        if (gn < 0.0) violation = -gn;
      } else if (b > 0.0) {
        violation = std::abs(gp);
      } else {
        violation = std::abs(gn);
      }
      max_violation = std::max(max_violation, violation);

      const double h = diag(i);
      if (h <= 0.0) continue;
      double d;
      if (gp < h * b) d = -gp / h;
      else if (gn > h * b) d = -gn / h;
      else d = -b;
      if (std::abs(d) < 1e-15) continue;

      const double updated = std::clamp(b + d, -upper, upper);
      d = updated - b;
      if (d == 0.0) continue;
      beta(i) = updated;
      w.noalias() += d * features.row(i).transpose();
      w_bias += d * bias_feature;
    }
    ++iter;
    if (max_violation <= cfg.tolerance) break;
  }

  sol.weights = std::move(w);
  sol.bias = w_bias * bias_feature;
  sol.iterations = iter;
  sol.max_violation = max_violation;
  sol.converged = max_violation <= cfg.tolerance;
  sol.primal_objective = svr_primal_objective(features, targets, sol.weights, sol.bias, cfg);
  double dual = -0.5 * (sol.weights.squaredNorm() + w_bias * w_bias);
  for (Eigen::Index i = 0; i < n; ++i) {
    dual += targets[static_cast<std::size_t>(i)] * beta(i) - p * std::abs(beta(i));
  }
  sol.dual_objective = dual;
  sol.duals = std::move(beta);
  return sol;
}

}  // namespace agesynth

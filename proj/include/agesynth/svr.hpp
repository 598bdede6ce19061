#pragma once

#include <span>

#include "agesynth/latent_set.hpp"

namespace agesynth {

struct SvrConfig {
  double epsilon = 0.1;  ///< half-width of the insensitive tube, in label units (years)
  double C = 1.0;
  long max_iterations = 10000;  ///< full sweeps over the samples
  double tolerance = 1e-3;      ///< max projected-gradient violation in a sweep, in years
  /// The bias is learned as the weight of a constant feature of this value, so the
  /// solver regularizes (b / bias_scale)^2 / 2. Large values approach an unpenalized bias.
  double bias_scale = 10.0;

  void validate() const;
};

struct LinearSvrSolution {
  Vector weights;
  double bias = 0.0;
  Vector duals;  ///< one per sample, in [-C, C]
  long iterations = 0;
  double max_violation = 0.0;
  bool converged = false;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
};

/// Epsilon-insensitive L1-loss linear SVR, solved in the dual by cyclic coordinate
/// descent with exact one-variable updates (no shuffling, no shrinking), so the
/// result depends only on the inputs.
LinearSvrSolution solve_linear_svr(const Matrix& features, std::span<const double> targets, const SvrConfig& cfg);

/// 1/2 ||w||^2 + 1/2 (b/bias_scale)^2 + C * sum max(0, |y - b - w.x| - eps)
double svr_primal_objective(const Matrix& features, std::span<const double> targets, const Vector& weights,
                            double bias, const SvrConfig& cfg);

}  // namespace agesynth

#pragma once

#include <span>

#include "agesynth/component_masks.hpp"
#include "agesynth/latent_set.hpp"
#include "agesynth/svr.hpp"

namespace agesynth {

struct DirectionTrainMeta {
  std::size_t n = 0;
  std::size_t dim = 0;
  double epsilon = 0.0;
  double C = 0.0;
  double bias_scale = 0.0;
  long iterations = 0;
  double final_objective = 0.0;
  double max_violation = 0.0;
  bool converged = false;
};

/// Age hyperplane age = bias + lambda_raw . w, plus its unit direction.
struct AgeDirection {
  double bias = 0.0;
  Vector lambda_raw;
  Vector lambda_hat;
  DirectionTrainMeta train_meta;

  [[nodiscard]] std::size_t dim() const noexcept { return static_cast<std::size_t>(lambda_hat.size()); }
};

/// Builds a direction from hyperplane parameters; lambda_hat = lambda_raw / ||lambda_raw||.
AgeDirection make_direction(double bias, Vector lambda_raw, DirectionTrainMeta meta = {});

/// Fits the linear SVR age hyperplane on a standardized set whose samples all carry
/// age_years. A run that exhausts max_iterations still returns the direction, with
/// train_meta.converged == false.
AgeDirection fit_age_direction(const LatentSet& set, const SvrConfig& cfg = {});

double predict_age(const AgeDirection& dir, const Eigen::Ref<const Vector>& w);

/// w0 + s * lambda_hat, one fused multiply-add per component.
Vector edit_latent(const Eigen::Ref<const Vector>& w0, double s, const AgeDirection& dir);

/// w0 + phi (elementwise) s * lambda_hat. Components with a zero weight are copied unchanged.
Vector edit_latent_weighted(const Eigen::Ref<const Vector>& w0, double s, const AgeDirection& dir,
                            const PhiWeights& phi);

/// Row-wise weighted edit in place: row i moves by scalars[i].
void edit_rows_weighted(Matrix& rows, std::span<const double> scalars, const AgeDirection& dir, const PhiWeights& phi);

}  // namespace agesynth

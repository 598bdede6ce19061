#include "agesynth/age_direction.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "agesynth/error.hpp"

namespace agesynth {

namespace {

constexpr double kMinDirectionNorm = 1e-10;

// Shared kernel for both edit forms. `weight` may be null for the unweighted edit.
void apply_edit(const double* w0, double* out, std::size_t dim, double s, const double* lambda_hat,
                const double* weight) {
  for (std::size_t i = 0; i < dim; ++i) {
    // weight * s is exact for unit weights, so an all-ones phi reproduces the plain edit.
    const double scale = weight == nullptr ? s : weight[i] * s;
    out[i] = (scale == 0.0 || lambda_hat[i] == 0.0) ? w0[i] : std::fma(scale, lambda_hat[i], w0[i]);
  }
}

void check_dims(std::size_t got, const AgeDirection& dir) {
  if (got != dir.dim()) {
    fail(ErrorCode::DimensionMismatch,
         "latent dim " + std::to_string(got) + " != direction dim " + std::to_string(dir.dim()));
  }
}

}  // namespace

AgeDirection make_direction(double bias, Vector lambda_raw, DirectionTrainMeta meta) {
  const double norm = lambda_raw.norm();
  if (!(norm >= kMinDirectionNorm) || !std::isfinite(norm)) {
    fail(ErrorCode::NoAgeSignal, "hyperplane coefficients have norm below 1e-10");
  }
  AgeDirection dir;
  dir.bias = bias;
  dir.lambda_hat = lambda_raw / norm;
  dir.lambda_raw = std::move(lambda_raw);
  dir.train_meta = meta;
  return dir;
}

AgeDirection fit_age_direction(const LatentSet& set, const SvrConfig& cfg) {
  cfg.validate();
  if (!set.standardized()) fail(ErrorCode::NotStandardized, "age direction requires standardized latents");
  if (set.size() < 2) fail(ErrorCode::TooFewSamples, "age direction needs at least 2 samples");

  std::vector<double> ages;
  ages.reserve(set.size());
  for (const auto& m : set.meta()) {
    if (!m.age_years) fail(ErrorCode::MissingAge, "sample '" + m.sample_id + "' has no age label");
    ages.push_back(*m.age_years);
  }
  if (std::all_of(ages.begin(), ages.end(), [&](double a) { return a == ages.front(); })) {
    fail(ErrorCode::NoAgeSignal, "all age labels are equal");
  }

  const LinearSvrSolution sol = solve_linear_svr(set.vectors(), ages, cfg);
  DirectionTrainMeta meta;
  meta.n = set.size();
  meta.dim = set.dim();
  meta.epsilon = cfg.epsilon;
  meta.C = cfg.C;
  meta.bias_scale = cfg.bias_scale;
  meta.iterations = sol.iterations;
  meta.final_objective = sol.primal_objective;
  meta.max_violation = sol.max_violation;
  meta.converged = sol.converged;
  return make_direction(sol.bias, sol.weights, meta);
}

double predict_age(const AgeDirection& dir, const Eigen::Ref<const Vector>& w) {
  check_dims(static_cast<std::size_t>(w.size()), dir);
  return dir.bias + dir.lambda_raw.dot(w);
}

Vector edit_latent(const Eigen::Ref<const Vector>& w0, double s, const AgeDirection& dir) {
  check_dims(static_cast<std::size_t>(w0.size()), dir);
  if (!std::isfinite(s)) fail(ErrorCode::InvalidConfig, "scalar step must be finite");
  const Vector src = w0;
  Vector out(src.size());
  apply_edit(src.data(), out.data(), dir.dim(), s, dir.lambda_hat.data(), nullptr);
  return out;
}

Vector edit_latent_weighted(const Eigen::Ref<const Vector>& w0, double s, const AgeDirection& dir,
                            const PhiWeights& phi) {
  check_dims(static_cast<std::size_t>(w0.size()), dir);
  check_dims(phi.dim(), dir);
  if (!std::isfinite(s)) fail(ErrorCode::InvalidConfig, "scalar step must be finite");
  const Vector src = w0;
  Vector out(src.size());
  apply_edit(src.data(), out.data(), dir.dim(), s, dir.lambda_hat.data(), phi.weights.data());
  return out;
}

void edit_rows_weighted(Matrix& rows, std::span<const double> scalars, const AgeDirection& dir, const PhiWeights& phi) {
  check_dims(static_cast<std::size_t>(rows.cols()), dir);
  check_dims(phi.dim(), dir);
  if (scalars.size() != static_cast<std::size_t>(rows.rows())) {
    fail(ErrorCode::DimensionMismatch, "one scalar per row required");
  }
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    const double s = scalars[static_cast<std::size_t>(i)];
    if (!std::isfinite(s)) fail(ErrorCode::InvalidConfig, "scalar step must be finite");
    double* row = rows.row(i).data();
    apply_edit(row, row, dir.dim(), s, dir.lambda_hat.data(), phi.weights.data());
  }
}

}  // namespace agesynth

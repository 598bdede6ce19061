#include <algorithm>
#include <cmath>

#include "agesynth/error.hpp"
#include "agesynth/feature_select.hpp"

namespace agesynth {

std::size_t select_by_cumulative_fraction(const Vector& descending, double threshold) {
  if (!(threshold > 0.0) || !std::isfinite(threshold)) fail(ErrorCode::InvalidConfig, "threshold must be in (0, 1]");
  const auto n = static_cast<std::size_t>(descending.size());
  if (threshold >= 1.0) return n;
  const double total = descending.cwiseMax(0.0).sum();
  if (!(total > 0.0)) fail(ErrorCode::DegenerateScatter, "spectrum has zero total mass");
  double cumulative = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    cumulative += std::max(0.0, descending(static_cast<Eigen::Index>(k)));
    if (cumulative >= threshold * total) return k + 1;
  }
  return n;
}

PcaSpectrum pca_spectrum(const Matrix& data) {
  if (data.rows() < 2) fail(ErrorCode::TooFewSamples, "PCA needs at least 2 samples");
  const Eigen::RowVectorXd mean = data.colwise().mean();
  const Eigen::MatrixXd centered = data.rowwise() - mean;
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(data.rows());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) fail(ErrorCode::DegenerateScatter, "covariance eigen-decomposition failed");

  // Eigen returns ascending order.
  const auto dim = cov.rows();
  PcaSpectrum out{Vector(dim), Eigen::MatrixXd(dim, dim)};
  for (Eigen::Index k = 0; k < dim; ++k) {
    out.eigenvalues(k) = std::max(0.0, solver.eigenvalues()(dim - 1 - k));
    out.eigenvectors.col(k) = solver.eigenvectors().col(dim - 1 - k);
  }
  return out;
}

ComponentMask pca_mask(const LatentSet& v_id, double variance_threshold, PcaMaskMode mode) {
  if (!v_id.standardized()) fail(ErrorCode::NotStandardized, "PCA mask requires standardized latents");
  if (!(variance_threshold > 0.0 && variance_threshold <= 1.0)) {
    fail(ErrorCode::InvalidConfig, "variance threshold must be in (0, 1]");
  }
  const PcaSpectrum spectrum = pca_spectrum(v_id.vectors());
  const std::size_t keep = select_by_cumulative_fraction(spectrum.eigenvalues, variance_threshold);

  ComponentMask mask{std::vector<std::uint8_t>(v_id.dim(), 0), MaskProvenance::PcaId, std::nullopt};
  if (mode == PcaMaskMode::RankIndex) {
    for (std::size_t i = 0; i < keep; ++i) mask.bits[i] = 1;
    return mask;
  }

  const Eigen::MatrixXd axes = spectrum.eigenvectors.leftCols(static_cast<Eigen::Index>(keep));
  const Matrix projected = v_id.vectors() * axes * axes.transpose();
  return threshold_mask(component_distances(v_id.vectors(), projected, DistanceMetric::Mse), MaskProvenance::PcaId);
}

}  // namespace agesynth

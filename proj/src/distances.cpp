#include <algorithm>
#include <cmath>
#include <vector>

#include "agesynth/error.hpp"
#include "agesynth/feature_select.hpp"

namespace agesynth {

double wasserstein_1d(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) fail(ErrorCode::ShapeMismatch, "Wasserstein inputs must have equal size");
  if (u.empty()) return 0.0;
  std::vector<double> a(u.begin(), u.end());
  std::vector<double> b(v.begin(), v.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) total += std::abs(a[i] - b[i]);
  return total / static_cast<double>(a.size());
}

DistanceProfile component_distances(const Matrix& original, const Matrix& reconstructed, DistanceMetric metric) {
  if (original.rows() != reconstructed.rows() || original.cols() != reconstructed.cols()) {
    fail(ErrorCode::ShapeMismatch, "original and reconstruction shapes differ");
  }
  if (original.rows() == 0) fail(ErrorCode::ShapeMismatch, "distance profile needs at least one sample");
  const auto n = original.rows();
  const double inv_n = 1.0 / static_cast<double>(n);

  DistanceProfile profile;
  profile.metric = metric;
  profile.psi.resize(original.cols());
  std::vector<double> a(static_cast<std::size_t>(n));
  std::vector<double> b(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < original.cols(); ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      a[static_cast<std::size_t>(i)] = original(i, j);
      b[static_cast<std::size_t>(i)] = reconstructed(i, j);
    }
    double value = 0.0;
    switch (metric) {
      case DistanceMetric::Mse:
        for (std::size_t i = 0; i < a.size(); ++i) value += (a[i] - b[i]) * (a[i] - b[i]);
        value *= inv_n;
        break;
      case DistanceMetric::Wasserstein:
        value = wasserstein_1d(a, b);
        break;
      case DistanceMetric::Covariance: {
        double mean_a = 0.0;
        double mean_b = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
          mean_a += a[i];
          mean_b += b[i];
        }
        mean_a *= inv_n;
        mean_b *= inv_n;
        for (std::size_t i = 0; i < a.size(); ++i) value += (a[i] - mean_a) * (b[i] - mean_b);
        value *= inv_n;
        break;
      }
    }
    profile.psi(j) = value;
  }
  if (!profile.psi.allFinite()) fail(ErrorCode::NonFiniteValue, "distance profile not finite");
  profile.mu_psi = profile.psi.mean();
  return profile;
}

ComponentMask threshold_mask(const DistanceProfile& profile, MaskProvenance provenance) {
  ComponentMask mask{std::vector<std::uint8_t>(static_cast<std::size_t>(profile.psi.size()), 0), provenance,
                     profile.metric};
  const bool keep_high = profile.metric == DistanceMetric::Covariance;
  for (Eigen::Index i = 0; i < profile.psi.size(); ++i) {
    const double v = profile.psi(i);
    mask.bits[static_cast<std::size_t>(i)] = keep_high ? (v > profile.mu_psi) : (v < profile.mu_psi);
  }
  return mask;
}

}  // namespace agesynth

#include "agesynth/component_masks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "agesynth/error.hpp"

namespace agesynth {

std::string_view to_string(MaskProvenance p) noexcept {
  switch (p) {
    case MaskProvenance::PcaId: return "PCA_ID";
    case MaskProvenance::LdaId: return "LDA_ID";
    case MaskProvenance::LdaAge: return "LDA_AGE";
    case MaskProvenance::CombinedAgeOnly: return "COMBINED_AGE_ONLY";
    case MaskProvenance::CombinedIdOnly: return "COMBINED_ID_ONLY";
    case MaskProvenance::CombinedBoth: return "COMBINED_BOTH";
  }
  return "UNKNOWN";
}

std::string_view to_string(DistanceMetric m) noexcept {
  switch (m) {
    case DistanceMetric::Mse: return "MSE";
    case DistanceMetric::Wasserstein: return "WASSERSTEIN";
    case DistanceMetric::Covariance: return "COVARIANCE";
  }
  return "UNKNOWN";
}

MaskProvenance parse_provenance(std::string_view text) {
  for (auto p : {MaskProvenance::PcaId, MaskProvenance::LdaId, MaskProvenance::LdaAge, MaskProvenance::CombinedAgeOnly,
                 MaskProvenance::CombinedIdOnly, MaskProvenance::CombinedBoth}) {
    if (to_string(p) == text) return p;
  }
  fail(ErrorCode::FormatError, "unknown mask provenance '" + std::string(text) + "'");
}

DistanceMetric parse_metric(std::string_view text) {
  std::string upper(text);
  std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
  for (auto m : {DistanceMetric::Mse, DistanceMetric::Wasserstein, DistanceMetric::Covariance}) {
    if (to_string(m) == upper) return m;
  }
  fail(ErrorCode::InvalidConfig, "unknown distance metric '" + std::string(text) + "'");
}

std::size_t ComponentMask::count() const noexcept {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

PhiWeights PhiWeights::ones(std::size_t dim) {
  PhiWeights phi;
  phi.weights = Vector::Ones(static_cast<Eigen::Index>(dim));
  return phi;
}

CombinedMasks combine_masks(const ComponentMask& id_star, const ComponentMask& age_star) {
  if (id_star.dim() != age_star.dim()) fail(ErrorCode::DimensionMismatch, "mask dims differ");
  const std::size_t dim = id_star.dim();
  CombinedMasks out{{std::vector<std::uint8_t>(dim), MaskProvenance::CombinedAgeOnly, age_star.metric},
                    {std::vector<std::uint8_t>(dim), MaskProvenance::CombinedIdOnly, id_star.metric},
                    {std::vector<std::uint8_t>(dim), MaskProvenance::CombinedBoth, age_star.metric}};
  for (std::size_t i = 0; i < dim; ++i) {
    const bool id = id_star.bits[i] != 0;
    const bool age = age_star.bits[i] != 0;
    out.both.bits[i] = id && age;
    out.age_only.bits[i] = age && !id;
    out.id_only.bits[i] = id && !age;
  }
  return out;
}

PhiWeights compose_phi(const ComponentMask& age_only, const ComponentMask& both, double alpha, double beta) {
  if (age_only.dim() != both.dim()) fail(ErrorCode::DimensionMismatch, "mask dims differ");
  if (!std::isfinite(alpha) || !std::isfinite(beta) || alpha < 0.0 || beta < 0.0) {
    fail(ErrorCode::InvalidConfig, "alpha and beta must be finite and non-negative");
  }
  PhiWeights phi;
  phi.alpha = alpha;
  phi.beta = beta;
  phi.sources = {age_only.provenance, both.provenance};
  phi.weights = Vector::Zero(static_cast<Eigen::Index>(age_only.dim()));
  for (std::size_t i = 0; i < age_only.dim(); ++i) {
    if (age_only.bits[i] && both.bits[i]) {
      fail(ErrorCode::OverlappingMasks, "component " + std::to_string(i) + " set in both masks");
    }
    const auto k = static_cast<Eigen::Index>(i);
    if (age_only.bits[i]) phi.weights(k) = alpha;
    if (both.bits[i]) phi.weights(k) = beta;
  }
  return phi;
}

}  // namespace agesynth

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "agesynth/latent_set.hpp"

namespace agesynth {

enum class MaskProvenance { PcaId, LdaId, LdaAge, CombinedAgeOnly, CombinedIdOnly, CombinedBoth };
enum class DistanceMetric { Mse, Wasserstein, Covariance };

std::string_view to_string(MaskProvenance p) noexcept;
std::string_view to_string(DistanceMetric m) noexcept;
MaskProvenance parse_provenance(std::string_view text);
DistanceMetric parse_metric(std::string_view text);

/// Binary selection over latent components.
struct ComponentMask {
  std::vector<std::uint8_t> bits;
  MaskProvenance provenance = MaskProvenance::PcaId;
  std::optional<DistanceMetric> metric;

  [[nodiscard]] std::size_t dim() const noexcept { return bits.size(); }
  [[nodiscard]] std::size_t count() const noexcept;
  friend bool operator==(const ComponentMask&, const ComponentMask&) = default;
};

/// Non-negative per-component edit weights.
struct PhiWeights {
  Vector weights;
  double alpha = 1.0;
  double beta = 1.0;
  std::vector<MaskProvenance> sources;

  /// All-ones weights: the weighted edit then equals the plain linear edit.
  static PhiWeights ones(std::size_t dim);
  [[nodiscard]] std::size_t dim() const noexcept { return static_cast<std::size_t>(weights.size()); }
};

struct CombinedMasks {
  ComponentMask age_only;
  ComponentMask id_only;
  ComponentMask both;
};

/// both = id* AND age*, age_only = age* AND NOT id*, id_only = id* AND NOT age*.
CombinedMasks combine_masks(const ComponentMask& id_star, const ComponentMask& age_star);

/// Phi = alpha * age_only + beta * both. The two masks must be disjoint.
PhiWeights compose_phi(const ComponentMask& age_only, const ComponentMask& both, double alpha, double beta);

}  // namespace agesynth

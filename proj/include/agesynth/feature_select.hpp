#pragma once

#include <span>
#include <string>
#include <vector>

#include "agesynth/component_masks.hpp"
#include "agesynth/latent_set.hpp"

namespace agesynth {

/// Smallest k such that the first k entries of a descending, non-negative spectrum
/// carry at least `threshold` of its total. A threshold of 1 (or more) keeps everything.
std::size_t select_by_cumulative_fraction(const Vector& descending, double threshold);

// ---------------------------------------------------------------------------
// PCA identity mask
// ---------------------------------------------------------------------------

enum class PcaMaskMode {
  /// Eigen-rank index i selects latent component i.
  RankIndex,
  /// Project onto the retained principal axes, reconstruct, and keep components whose
  /// per-component MSE is below the mean MSE.
  Reconstruction,
};

struct PcaSpectrum {
  Vector eigenvalues;            ///< descending, clamped to >= 0
  Eigen::MatrixXd eigenvectors;  ///< columns match eigenvalues
};

/// Eigen-decomposition of the dim x dim population covariance of the rows.
PcaSpectrum pca_spectrum(const Matrix& data);

ComponentMask pca_mask(const LatentSet& v_id, double variance_threshold = 0.95,
                       PcaMaskMode mode = PcaMaskMode::RankIndex);

// ---------------------------------------------------------------------------
// LDA projection / reconstruction
// ---------------------------------------------------------------------------

struct LdaBasis {
  Vector eigenvalues;              ///< descending
  Eigen::MatrixXd basis;           ///< unit-norm discriminant directions, one per column
  Eigen::MatrixXd reduced;         ///< basis with non-retained columns zeroed
  Eigen::MatrixXd pseudoinverse;   ///< Moore-Penrose pseudoinverse of `reduced`
  std::size_t retained = 0;
  std::size_t class_count = 0;
  double regularization = 0.0;     ///< gamma added to the within-class scatter diagonal

  [[nodiscard]] std::size_t dim() const noexcept { return static_cast<std::size_t>(basis.rows()); }
};

/// Discriminant basis from the eigenproblem S_b v = a (S_w + gamma I) v with
/// gamma = 1e-6 * trace(S_w) / dim. All components are retained.
LdaBasis lda_basis(const Matrix& data, std::span<const std::size_t> class_of_row);

enum class LdaLabel { Identity, AgeGroup };

/// Uses identity_id or age_group from the metadata as class labels. Requires a standardized set.
LdaBasis lda_basis(const LatentSet& set, LdaLabel label);

/// Keeps the leading components covering `threshold` of the discriminability
/// (eigenvalue mass) and recomputes the pseudoinverse.
LdaBasis reduce_basis(const LdaBasis& basis, double discriminability_threshold = 0.95);

/// V* = (V * reduced) * pseudoinverse.
Matrix reconstruct(const Matrix& data, const LdaBasis& basis);

// ---------------------------------------------------------------------------
// Per-component distances and thresholding
// ---------------------------------------------------------------------------

struct DistanceProfile {
  Vector psi;
  DistanceMetric metric = DistanceMetric::Mse;
  double mu_psi = 0.0;
};

DistanceProfile component_distances(const Matrix& original, const Matrix& reconstructed, DistanceMetric metric);

/// Empirical 1-D Wasserstein distance between two equal-size samples.
double wasserstein_1d(std::span<const double> u, std::span<const double> v);

/// MSE / Wasserstein: bit = psi_i < mu; Covariance: bit = psi_i > mu. Ties give 0.
ComponentMask threshold_mask(const DistanceProfile& profile, MaskProvenance provenance);

struct LdaMasks {
  ComponentMask id_star;
  ComponentMask age_star;
  LdaBasis id_basis;
  LdaBasis age_basis;
  DistanceProfile id_profile;
  DistanceProfile age_profile;
};

/// Runs basis -> reduction -> reconstruction -> distances -> threshold for the identity
/// set (identity_id labels) and the age set (age_group labels).
LdaMasks lda_masks(const LatentSet& v_id, const LatentSet& v_age, DistanceMetric metric,
                   double discriminability_threshold = 0.95);

}  // namespace agesynth

#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "agesynth/age_groups.hpp"

namespace agesynth {

/// Latent vectors are stored one per row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

inline constexpr double kDefaultStdEpsilon = 1e-12;

struct SampleMeta {
  std::string sample_id;
  std::optional<double> age_years;
  std::optional<std::string> identity_id;
  std::optional<std::size_t> age_group;

  friend bool operator==(const SampleMeta&, const SampleMeta&) = default;
};

/// Per-column affine standardization with population statistics.
class Scaler {
 public:
  Scaler(Vector mean, Vector std, double epsilon = kDefaultStdEpsilon);

  /// Fits mean and population std (1/n) per column; std below epsilon is clamped up to epsilon.
  static Scaler fit(const Matrix& data, double epsilon = kDefaultStdEpsilon);

  [[nodiscard]] Matrix transform(const Matrix& data) const;
  [[nodiscard]] Matrix inverse_transform(const Matrix& data) const;

  [[nodiscard]] const Vector& mean() const noexcept { return mean_; }
  [[nodiscard]] const Vector& std() const noexcept { return std_; }
  [[nodiscard]] double epsilon() const noexcept { return epsilon_; }
  [[nodiscard]] std::size_t dim() const noexcept { return static_cast<std::size_t>(mean_.size()); }

 private:
  Vector mean_;
  Vector std_;
  double epsilon_;
};

/// n x dim latent matrix with per-row metadata. Immutable once built; the
/// constructor validates row/meta counts, finiteness and sample-id uniqueness.
class LatentSet {
 public:
  explicit LatentSet(std::size_t dim);
  LatentSet(Matrix vectors, std::vector<SampleMeta> meta, std::optional<Scaler> scaler = std::nullopt);

  /// Builds a set with sample ids "0".."n-1" and no labels.
  static LatentSet from_matrix(Matrix vectors);

  [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(vectors_.rows()); }
  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
  [[nodiscard]] const Matrix& vectors() const noexcept { return vectors_; }
  [[nodiscard]] const std::vector<SampleMeta>& meta() const noexcept { return meta_; }
  [[nodiscard]] bool standardized() const noexcept { return scaler_.has_value(); }
  [[nodiscard]] const std::optional<Scaler>& scaler() const noexcept { return scaler_; }

  [[nodiscard]] LatentSet with_vectors(Matrix vectors) const;
  [[nodiscard]] LatentSet with_meta(std::vector<SampleMeta> meta) const;
  [[nodiscard]] LatentSet with_scaler(std::optional<Scaler> scaler) const;

 private:
  std::size_t dim_;
  Matrix vectors_;
  std::vector<SampleMeta> meta_;
  std::optional<Scaler> scaler_;
};

/// Standardizes with statistics of this set alone. Requires n >= 2.
std::pair<LatentSet, Scaler> standardize(const LatentSet& set, double epsilon = kDefaultStdEpsilon);

struct JointStandardization {
  LatentSet first;
  LatentSet second;
  Scaler scaler;
};

/// Standardizes two sets with statistics pooled over both.
JointStandardization standardize_jointly(const LatentSet& first, const LatentSet& second,
                                         double epsilon = kDefaultStdEpsilon);

/// Undoes the attached scaler; the result carries no scaler.
LatentSet destandardize(const LatentSet& set);

/// Sets age_group from age_years for every sample. Throws MissingAge if any age is absent.
LatentSet assign_groups(const LatentSet& set, const AgeGroupScheme& scheme);

std::vector<std::size_t> group_histogram(const LatentSet& set, const AgeGroupScheme& scheme);

}  // namespace agesynth

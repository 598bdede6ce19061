#include "agesynth/latent_set.hpp"

#include <cmath>
#include <string>
#include <unordered_set>

#include "agesynth/error.hpp"

namespace agesynth {

Scaler::Scaler(Vector mean, Vector std, double epsilon)
    : mean_(std::move(mean)), std_(std::move(std)), epsilon_(epsilon) {
  if (mean_.size() != std_.size()) fail(ErrorCode::DimensionMismatch, "scaler mean/std length differ");
  if (!(epsilon_ > 0.0) || !std::isfinite(epsilon_)) fail(ErrorCode::InvalidConfig, "scaler epsilon must be positive");
  if (!mean_.allFinite() || !std_.allFinite()) fail(ErrorCode::NonFiniteValue, "scaler statistics not finite");
  std_ = std_.cwiseMax(epsilon_);
}

Scaler Scaler::fit(const Matrix& data, double epsilon) {
  if (data.rows() < 2) fail(ErrorCode::TooFewSamples, "standardization needs at least 2 samples");
  const double n = static_cast<double>(data.rows());
  Vector mean = data.colwise().sum().transpose() / n;
  Vector var(data.cols());
  for (Eigen::Index j = 0; j < data.cols(); ++j) {
    var(j) = (data.col(j).array() - mean(j)).square().sum() / n;
  }
  return {std::move(mean), var.cwiseSqrt(), epsilon};
}

Matrix Scaler::transform(const Matrix& data) const {
  if (static_cast<std::size_t>(data.cols()) != dim()) fail(ErrorCode::DimensionMismatch, "scaler dim mismatch");
  Matrix out(data.rows(), data.cols());
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    out.row(i) = (data.row(i) - mean_.transpose()).cwiseQuotient(std_.transpose());
  }
  return out;
}

Matrix Scaler::inverse_transform(const Matrix& data) const {
  if (static_cast<std::size_t>(data.cols()) != dim()) fail(ErrorCode::DimensionMismatch, "scaler dim mismatch");
  Matrix out(data.rows(), data.cols());
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    out.row(i) = data.row(i).cwiseProduct(std_.transpose()) + mean_.transpose();
  }
  return out;
}

LatentSet::LatentSet(std::size_t dim) : dim_(dim), vectors_(0, static_cast<Eigen::Index>(dim)) {
  if (dim == 0) fail(ErrorCode::DimensionMismatch, "dim must be positive");
}

LatentSet::LatentSet(Matrix vectors, std::vector<SampleMeta> meta, std::optional<Scaler> scaler)
    : dim_(static_cast<std::size_t>(vectors.cols())),
      vectors_(std::move(vectors)),
      meta_(std::move(meta)),
      scaler_(std::move(scaler)) {
  if (dim_ == 0) fail(ErrorCode::DimensionMismatch, "dim must be positive");
  if (static_cast<std::size_t>(vectors_.rows()) != meta_.size()) {
    fail(ErrorCode::MetadataMismatch, "row count " + std::to_string(vectors_.rows()) + " != metadata count " +
                                          std::to_string(meta_.size()));
  }
  if (!vectors_.allFinite()) fail(ErrorCode::NonFiniteValue, "latent matrix contains non-finite values");
  if (scaler_ && scaler_->dim() != dim_) fail(ErrorCode::DimensionMismatch, "scaler dim differs from set dim");
  std::unordered_set<std::string> seen;
  seen.reserve(meta_.size());
  for (const auto& m : meta_) {
    if (!seen.insert(m.sample_id).second) fail(ErrorCode::DuplicateSampleId, "duplicate sample_id '" + m.sample_id + "'");
    if (m.age_years && (!std::isfinite(*m.age_years) || *m.age_years < 0.0)) {
      fail(ErrorCode::InvalidAge, "sample '" + m.sample_id + "' has invalid age");
    }
  }
}

LatentSet LatentSet::from_matrix(Matrix vectors) {
  std::vector<SampleMeta> meta(static_cast<std::size_t>(vectors.rows()));
  for (std::size_t i = 0; i < meta.size(); ++i) meta[i].sample_id = std::to_string(i);
  return {std::move(vectors), std::move(meta)};
}

LatentSet LatentSet::with_vectors(Matrix vectors) const { return {std::move(vectors), meta_, scaler_}; }
LatentSet LatentSet::with_meta(std::vector<SampleMeta> meta) const { return {vectors_, std::move(meta), scaler_}; }
LatentSet LatentSet::with_scaler(std::optional<Scaler> scaler) const { return {vectors_, meta_, std::move(scaler)}; }

std::pair<LatentSet, Scaler> standardize(const LatentSet& set, double epsilon) {
  Scaler scaler = Scaler::fit(set.vectors(), epsilon);
  LatentSet out(scaler.transform(set.vectors()), set.meta(), scaler);
  return {std::move(out), std::move(scaler)};
}

JointStandardization standardize_jointly(const LatentSet& first, const LatentSet& second, double epsilon) {
  if (first.dim() != second.dim()) fail(ErrorCode::DimensionMismatch, "joint standardization needs equal dims");
  Matrix pooled(first.vectors().rows() + second.vectors().rows(), first.vectors().cols());
  pooled << first.vectors(), second.vectors();
  Scaler scaler = Scaler::fit(pooled, epsilon);
  return {LatentSet(scaler.transform(first.vectors()), first.meta(), scaler),
          LatentSet(scaler.transform(second.vectors()), second.meta(), scaler), scaler};
}

LatentSet destandardize(const LatentSet& set) {
  if (!set.scaler()) fail(ErrorCode::NotStandardized, "set has no scaler attached");
  return {set.scaler()->inverse_transform(set.vectors()), set.meta(), std::nullopt};
}

LatentSet assign_groups(const LatentSet& set, const AgeGroupScheme& scheme) {
  std::vector<SampleMeta> meta = set.meta();
  for (auto& m : meta) {
    if (!m.age_years) fail(ErrorCode::MissingAge, "sample '" + m.sample_id + "' has no age");
    m.age_group = scheme.group_of(*m.age_years);
  }
  return set.with_meta(std::move(meta));
}

std::vector<std::size_t> group_histogram(const LatentSet& set, const AgeGroupScheme& scheme) {
  std::vector<std::size_t> counts(scheme.group_count(), 0);
  for (const auto& m : set.meta()) {
    if (!m.age_years) fail(ErrorCode::MissingAge, "sample '" + m.sample_id + "' has no age");
    ++counts[scheme.group_of(*m.age_years)];
  }
  return counts;
}

}  // namespace agesynth

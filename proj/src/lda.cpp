#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include "agesynth/error.hpp"
#include "agesynth/feature_select.hpp"

namespace agesynth {

namespace {

Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& m) {
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(m);
  return cod.pseudoInverse();
}

}  // namespace

LdaBasis lda_basis(const Matrix& data, std::span<const std::size_t> class_of_row) {
  const auto n = data.rows();
  const auto dim = data.cols();
  if (static_cast<std::size_t>(n) != class_of_row.size()) fail(ErrorCode::DimensionMismatch, "one label per row required");

  // Dense relabelling in ascending label order.
  std::map<std::size_t, Eigen::Index> dense;
  for (auto c : class_of_row) dense.emplace(c, 0);
  if (dense.size() < 2) fail(ErrorCode::SingleClass, "LDA needs at least two classes");
  Eigen::Index next = 0;
  for (auto& [label, index] : dense) index = next++;
  const auto classes = static_cast<Eigen::Index>(dense.size());

  Eigen::MatrixXd class_sum = Eigen::MatrixXd::Zero(classes, dim);
  Eigen::VectorXd class_count = Eigen::VectorXd::Zero(classes);
  std::vector<Eigen::Index> row_class(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto c = dense.at(class_of_row[static_cast<std::size_t>(i)]);
    row_class[static_cast<std::size_t>(i)] = c;
    class_sum.row(c) += data.row(i);
    class_count(c) += 1.0;
  }
  const Eigen::MatrixXd class_mean = class_sum.array().colwise() / class_count.array();
  const Eigen::RowVectorXd overall_mean = data.colwise().mean();

  Eigen::MatrixXd within_dev(n, dim);
  for (Eigen::Index i = 0; i < n; ++i) within_dev.row(i) = data.row(i) - class_mean.row(row_class[static_cast<std::size_t>(i)]);
  Eigen::MatrixXd scatter_within = within_dev.transpose() * within_dev;

  Eigen::MatrixXd between_dev(classes, dim);
  for (Eigen::Index c = 0; c < classes; ++c) {
    between_dev.row(c) = std::sqrt(class_count(c)) * (class_mean.row(c) - overall_mean);
  }
  const Eigen::MatrixXd scatter_between = between_dev.transpose() * between_dev;

  const double trace_w = scatter_within.trace();
  const double trace_b = scatter_between.trace();
  if (!(trace_b > 1e-12 * (trace_w + trace_b))) fail(ErrorCode::DegenerateScatter, "between-class scatter is zero");

  // With a single sample per class S_w vanishes; fall back to a unit-scale ridge.
  double gamma = 1e-6 * trace_w / static_cast<double>(dim);
  if (!(gamma > 0.0)) gamma = 1e-6;
  scatter_within.diagonal().array() += gamma;

  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(scatter_between, scatter_within);
  if (solver.info() != Eigen::Success) fail(ErrorCode::DegenerateScatter, "LDA eigen-decomposition failed");

  LdaBasis out;
  out.eigenvalues.resize(dim);
  out.basis.resize(dim, dim);
  for (Eigen::Index k = 0; k < dim; ++k) {
    const Eigen::Index src = dim - 1 - k;
    out.eigenvalues(k) = solver.eigenvalues()(src);
    Eigen::VectorXd v = solver.eigenvectors().col(src);
    v.normalize();
    Eigen::Index pivot = 0;
    v.cwiseAbs().maxCoeff(&pivot);
    if (v(pivot) < 0.0) v = -v;
    out.basis.col(k) = v;
  }
  if (!out.eigenvalues.allFinite() || !out.basis.allFinite()) {
    fail(ErrorCode::DegenerateScatter, "LDA eigen-decomposition produced non-finite values");
  }
  out.reduced = out.basis;
  out.pseudoinverse = pseudo_inverse(out.reduced);
  out.retained = static_cast<std::size_t>(dim);
  out.class_count = static_cast<std::size_t>(classes);
  out.regularization = gamma;
  return out;
}

LdaBasis lda_basis(const LatentSet& set, LdaLabel label) {
  if (!set.standardized()) fail(ErrorCode::NotStandardized, "LDA requires standardized latents");
  std::vector<std::size_t> classes;
  classes.reserve(set.size());
  std::unordered_map<std::string, std::size_t> identity_index;
  for (const auto& m : set.meta()) {
    if (label == LdaLabel::Identity) {
      if (!m.identity_id) fail(ErrorCode::MetadataMismatch, "sample '" + m.sample_id + "' has no identity_id");
      auto [it, inserted] = identity_index.emplace(*m.identity_id, identity_index.size());
      classes.push_back(it->second);
    } else {
      if (!m.age_group) fail(ErrorCode::MetadataMismatch, "sample '" + m.sample_id + "' has no age_group");
      classes.push_back(*m.age_group);
    }
  }
  return lda_basis(set.vectors(), classes);
}

LdaBasis reduce_basis(const LdaBasis& basis, double discriminability_threshold) {
  if (!(discriminability_threshold > 0.0 && discriminability_threshold <= 1.0)) {
    fail(ErrorCode::InvalidConfig, "discriminability threshold must be in (0, 1]");
  }
  const Vector clamped = basis.eigenvalues.cwiseMax(0.0);
  const std::size_t keep = select_by_cumulative_fraction(clamped, discriminability_threshold);

  LdaBasis out = basis;
  out.eigenvalues = clamped;
  out.reduced = basis.basis;
  const auto dim = static_cast<Eigen::Index>(basis.dim());
  const auto kept = static_cast<Eigen::Index>(keep);
  if (kept < dim) out.reduced.rightCols(dim - kept).setZero();
  out.pseudoinverse = pseudo_inverse(out.reduced);
  out.retained = keep;
  return out;
}

Matrix reconstruct(const Matrix& data, const LdaBasis& basis) {
  if (static_cast<std::size_t>(data.cols()) != basis.dim()) {
    fail(ErrorCode::DimensionMismatch, "data columns differ from basis dim");
  }
  const Eigen::MatrixXd projected = data * basis.reduced;
  return projected * basis.pseudoinverse;
}

LdaMasks lda_masks(const LatentSet& v_id, const LatentSet& v_age, DistanceMetric metric,
                   double discriminability_threshold) {
  if (v_id.dim() != v_age.dim()) fail(ErrorCode::DimensionMismatch, "identity and age sets differ in dim");
  LdaMasks out;
  out.id_basis = reduce_basis(lda_basis(v_id, LdaLabel::Identity), discriminability_threshold);
  out.age_basis = reduce_basis(lda_basis(v_age, LdaLabel::AgeGroup), discriminability_threshold);
  out.id_profile = component_distances(v_id.vectors(), reconstruct(v_id.vectors(), out.id_basis), metric);
  out.age_profile = component_distances(v_age.vectors(), reconstruct(v_age.vectors(), out.age_basis), metric);
  out.id_star = threshold_mask(out.id_profile, MaskProvenance::LdaId);
  out.age_star = threshold_mask(out.age_profile, MaskProvenance::LdaAge);
  return out;
}

}  // namespace agesynth

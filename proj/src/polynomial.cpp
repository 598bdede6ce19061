#include "agesynth/polynomial.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "agesynth/error.hpp"

namespace agesynth::poly {

double evaluate(std::span<const double> coeffs, double x) {
  double acc = 0.0;
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * x + *it;
  return acc;
}

double derivative(std::span<const double> coeffs, double x) {
  double acc = 0.0;
  for (std::size_t k = coeffs.size(); k-- > 1;) acc = acc * x + static_cast<double>(k) * coeffs[k];
  return acc;
}

std::vector<double> fit_least_squares(std::span<const double> xs, std::span<const double> ys, int degree) {
  if (degree < 0) fail(ErrorCode::InvalidConfig, "degree must be non-negative");
  if (xs.size() != ys.size()) fail(ErrorCode::DimensionMismatch, "x/y sizes differ");
  const auto n = static_cast<Eigen::Index>(xs.size());
  const auto terms = static_cast<Eigen::Index>(degree) + 1;
  if (n < terms) fail(ErrorCode::InsufficientPoints, "fewer points than coefficients");

  double center = 0.0;
  for (double x : xs) center += x;
  center /= static_cast<double>(n);
  double scale = 0.0;
  for (double x : xs) scale = std::max(scale, std::abs(x - center));
  if (!(scale > 0.0)) scale = 1.0;

  Eigen::MatrixXd design(n, terms);
  Eigen::VectorXd rhs(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = (xs[static_cast<std::size_t>(i)] - center) / scale;
    double power = 1.0;
    for (Eigen::Index k = 0; k < terms; ++k) {
      design(i, k) = power;
      power *= t;
    }
    rhs(i) = ys[static_cast<std::size_t>(i)];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-12);
  if (qr.rank() < terms) fail(ErrorCode::RankDeficientFit, "design matrix is rank deficient");
  const Eigen::VectorXd local = qr.solve(rhs);

  // sum_k a_k ((x - m)/h)^k expanded into powers of x.
  std::vector<double> out(static_cast<std::size_t>(terms), 0.0);
  for (Eigen::Index k = 0; k < terms; ++k) {
    const double a = local(k) / std::pow(scale, static_cast<double>(k));
    double binom = 1.0;  // C(k, j)
    for (Eigen::Index j = 0; j <= k; ++j) {
      out[static_cast<std::size_t>(j)] += a * binom * std::pow(-center, static_cast<double>(k - j));
      binom = binom * static_cast<double>(k - j) / static_cast<double>(j + 1);
    }
  }
  for (double c : out) {
    if (!std::isfinite(c)) fail(ErrorCode::RankDeficientFit, "fitted coefficients not finite");
  }
  return out;
}

std::vector<std::complex<double>> roots(std::span<const double> coeffs) {
  std::size_t degree = coeffs.size();
  double largest = 0.0;
  for (double c : coeffs) largest = std::max(largest, std::abs(c));
  while (degree > 0 && std::abs(coeffs[degree - 1]) <= 1e-14 * largest) --degree;
  if (degree <= 1) return {};
  degree -= 1;

  const double lead = coeffs[degree];
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(degree), static_cast<Eigen::Index>(degree));
  for (std::size_t k = 1; k < degree; ++k) companion(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k - 1)) = 1.0;
  for (std::size_t k = 0; k < degree; ++k) {
    companion(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(degree - 1)) = -coeffs[k] / lead;
  }
  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
  if (solver.info() != Eigen::Success) fail(ErrorCode::NoSolution, "companion eigen-decomposition failed");
  std::vector<std::complex<double>> out(solver.eigenvalues().begin(), solver.eigenvalues().end());
  return out;
}

std::vector<double> real_roots_in_range(std::span<const double> coeffs, double lo, double hi) {
  std::vector<double> found;
  for (const auto& r : roots(coeffs)) {
    if (std::abs(r.imag()) > 1e-8 * (1.0 + std::abs(r.real()))) continue;
    double x = r.real();
    for (int step = 0; step < 4; ++step) {
      const double slope = derivative(coeffs, x);
      if (slope == 0.0) break;
      const double next = x - evaluate(coeffs, x) / slope;
      if (!std::isfinite(next)) break;
      if (std::abs(evaluate(coeffs, next)) > std::abs(evaluate(coeffs, x))) break;
      x = next;
    }
    if (x < lo || x > hi) continue;
    found.push_back(x);
  }
  std::sort(found.begin(), found.end());
  std::vector<double> unique;
  for (double x : found) {
    if (!unique.empty() && std::abs(x - unique.back()) <= 1e-7 * (1.0 + std::abs(x))) continue;
    unique.push_back(x);
  }
  return unique;
}

}  // namespace agesynth::poly

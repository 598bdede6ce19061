#pragma once

#include <complex>
#include <span>
#include <vector>

namespace agesynth::poly {

/// Coefficients are in ascending degree order: c[0] + c[1] x + ... + c[d] x^d.
double evaluate(std::span<const double> coeffs, double x);
double derivative(std::span<const double> coeffs, double x);

/// Least-squares polynomial of the given degree. The abscissae are centered and
/// scaled before a column-pivoting QR solve, then mapped back to plain powers of x.
/// Throws RankDeficientFit when the design matrix loses rank.
std::vector<double> fit_least_squares(std::span<const double> xs, std::span<const double> ys, int degree);

/// All complex roots via the eigenvalues of the companion matrix. Leading
/// coefficients that are negligible relative to the largest are dropped first.
std::vector<std::complex<double>> roots(std::span<const double> coeffs);

/// Real roots of coeffs(x) = 0 inside [lo, hi]. A root counts as real when
/// |Im| <= 1e-8 (1 + |Re|); real roots are polished by Newton steps and
/// near-duplicates are merged.
std::vector<double> real_roots_in_range(std::span<const double> coeffs, double lo, double hi);

}  // namespace agesynth::poly

#include "agesynth/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "agesynth/csv.hpp"
#include "agesynth/error.hpp"
#include "agesynth/polynomial.hpp"

namespace agesynth {

namespace {

LinearFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys) {
  const auto c = poly::fit_least_squares(xs, ys, 1);
  return {c[1], c[0]};
}

std::size_t distinct_count(const std::vector<double>& xs) { return std::set<double>(xs.begin(), xs.end()).size(); }

}  // namespace

double GroupCurve::age_at(double s) const { return poly::evaluate(coeffs, s); }

const GroupCurve& CalibrationModel::curve(std::size_t group) const {
  for (const auto& g : groups) {
    if (g.group == group) return g;
  }
  fail(ErrorCode::GroupMissing, "no calibration curve for group " + std::to_string(group));
}

bool CalibrationModel::has_group(std::size_t group) const noexcept {
  return std::any_of(groups.begin(), groups.end(), [&](const GroupCurve& g) { return g.group == group; });
}

CalibrationModel fit_group_curves(std::span<const CalibrationSample> samples, const AgeGroupScheme& scheme, int degree,
                                  ScalarRange range) {
  if (degree < kMinCalibrationDegree || degree > kMaxCalibrationDegree) {
    fail(ErrorCode::InvalidConfig, "polynomial degree must be in [1, 6]");
  }
  if (!(range.min < 0.0 && range.max > 0.0) || !std::isfinite(range.min) || !std::isfinite(range.max)) {
    fail(ErrorCode::InvalidRange, "scalar range must satisfy min < 0 < max");
  }

  std::map<std::size_t, std::pair<std::vector<double>, std::vector<double>>> by_group;
  for (const auto& s : samples) {
    if (!std::isfinite(s.scalar_s) || !std::isfinite(s.estimated_age)) {
      fail(ErrorCode::NonFiniteValue, "calibration sample not finite");
    }
    if (s.group >= scheme.group_count()) {
      fail(ErrorCode::InvalidScheme, "group " + std::to_string(s.group) + " outside scheme '" + scheme.name() + "'");
    }
    by_group[s.group].first.push_back(s.scalar_s);
    by_group[s.group].second.push_back(s.estimated_age);
  }

  CalibrationModel model{scheme, {}};
  for (const auto& [group, data] : by_group) {
    const auto& [xs, ys] = data;
    if (distinct_count(xs) < static_cast<std::size_t>(degree) + 1) {
      fail(ErrorCode::InsufficientPoints, "group " + std::to_string(group) + " needs at least " +
                                              std::to_string(degree + 1) + " distinct scalars");
    }
    GroupCurve curve;
    curve.group = group;
    curve.label = scheme.label(group);
    curve.degree = degree;
    curve.range = range;
    curve.sample_count = xs.size();
    curve.coeffs = poly::fit_least_squares(xs, ys, degree);

    double sse = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double r = curve.age_at(xs[i]) - ys[i];
      sse += r * r;
    }
    curve.rmse = std::sqrt(sse / static_cast<double>(xs.size()));

    std::vector<double> pos_x, pos_y, neg_x, neg_y;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (xs[i] >= 0.0) {
        pos_x.push_back(xs[i]);
        pos_y.push_back(ys[i]);
      }
      if (xs[i] <= 0.0) {
        neg_x.push_back(xs[i]);
        neg_y.push_back(ys[i]);
      }
    }
    // A side with fewer than two distinct scalars borrows the all-points line.
    const LinearFit overall = fit_line(xs, ys);
    curve.aging = distinct_count(pos_x) >= 2 ? fit_line(pos_x, pos_y) : overall;
    curve.deaging = distinct_count(neg_x) >= 2 ? fit_line(neg_x, neg_y) : overall;
    model.groups.push_back(std::move(curve));
  }
  return model;
}

ScalarSolution solve_scalar_for_age(const CalibrationModel& model, std::size_t group, double target_age) {
  const GroupCurve& curve = model.curve(group);
  if (!std::isfinite(target_age)) fail(ErrorCode::InvalidAge, "target age must be finite");

  std::vector<double> shifted = curve.coeffs;
  shifted[0] -= target_age;
  const auto roots = poly::real_roots_in_range(shifted, curve.range.min, curve.range.max);
  if (roots.size() == 1) return {roots.front(), false, false};

  const LinearFit& line = target_age >= curve.age_at(0.0) ? curve.aging : curve.deaging;
  if (!(std::abs(line.slope) >= 1e-12)) {
    fail(ErrorCode::NoSolution, "linear fallback slope is zero for group " + std::to_string(group));
  }
  const double raw = (target_age - line.intercept) / line.slope;
  const double clamped = std::clamp(raw, curve.range.min, curve.range.max);
  return {clamped, true, clamped != raw};
}

ScalarOffset scalar_offset(const CalibrationModel& model, std::size_t group, double original_age, double desired_age) {
  ScalarOffset out;
  out.original = solve_scalar_for_age(model, group, original_age);
  out.desired = solve_scalar_for_age(model, group, desired_age);
  out.delta = out.desired.scalar - out.original.scalar;
  return out;
}

std::vector<CalibrationSample> load_calibration_samples(const std::filesystem::path& path) {
  const auto rows = csv::read_file(path);
  if (rows.empty()) fail(ErrorCode::FormatError, "calibration CSV has no header");
  const csv::Header header(rows.front());
  const auto g = header.index("group");
  const auto s = header.index("scalar");
  const auto a = header.index("estimated_age");
  std::vector<CalibrationSample> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() <= std::max({g, s, a})) fail(ErrorCode::FormatError, "short row " + std::to_string(r));
    const long long group = csv::parse_int(row[g], "group");
    if (group < 0) fail(ErrorCode::FormatError, "negative group");
    out.push_back({static_cast<std::size_t>(group), csv::parse_double(row[s], "scalar"),
                   csv::parse_double(row[a], "estimated_age")});
  }
  return out;
}

}  // namespace agesynth

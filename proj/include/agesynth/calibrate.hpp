#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "agesynth/age_groups.hpp"

namespace agesynth {

struct CalibrationSample {
  std::size_t group = 0;
  double scalar_s = 0.0;
  double estimated_age = 0.0;
};

struct ScalarRange {
  double min = -30.0;
  double max = 30.0;
};

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Scalar -> apparent-age curve of one age group.
struct GroupCurve {
  std::size_t group = 0;
  std::string label;
  std::vector<double> coeffs;  ///< ascending degree
  int degree = 0;
  ScalarRange range;
  double rmse = 0.0;
  LinearFit aging;    ///< fit on s >= 0
  LinearFit deaging;  ///< fit on s <= 0
  std::size_t sample_count = 0;

  [[nodiscard]] double age_at(double s) const;
};

struct CalibrationModel {
  AgeGroupScheme scheme = AgeGroupScheme::four();
  std::vector<GroupCurve> groups;

  [[nodiscard]] const GroupCurve& curve(std::size_t group) const;
  [[nodiscard]] bool has_group(std::size_t group) const noexcept;
};

inline constexpr int kMinCalibrationDegree = 1;
inline constexpr int kMaxCalibrationDegree = 6;

/// Least-squares polynomial per group plus sign-split linear fallbacks. Groups with
/// no samples are left out of the model.
CalibrationModel fit_group_curves(std::span<const CalibrationSample> samples, const AgeGroupScheme& scheme,
                                  int degree = 3, ScalarRange range = {});

struct ScalarSolution {
  double scalar = 0.0;
  bool fallback_used = false;
  bool clamped = false;  ///< fallback result was pulled back into the scalar range
};

/// Unique real root of p(s) = target inside the group's range; otherwise the
/// linear fallback on the side of p(0) the target lies on.
ScalarSolution solve_scalar_for_age(const CalibrationModel& model, std::size_t group, double target_age);

struct ScalarOffset {
  double delta = 0.0;
  ScalarSolution original;
  ScalarSolution desired;
};

ScalarOffset scalar_offset(const CalibrationModel& model, std::size_t group, double original_age, double desired_age);

/// CSV with columns group,scalar,estimated_age.
std::vector<CalibrationSample> load_calibration_samples(const std::filesystem::path& path);

}  // namespace agesynth

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace agesynth {

enum class EditDirection { Aging, Deaging };

std::string_view to_string(EditDirection d) noexcept;

struct EvaluationRecord {
  std::string sample_id;
  double scalar_s = 0.0;
  double fr_score = 0.0;  ///< similarity: higher means more alike
  double estimated_age = 0.0;
  double original_age = 0.0;
  std::size_t group = 0;
};

struct Verification {
  double rate = 0.0;
  std::vector<std::uint8_t> verified;
};

/// A record is verified when fr_score >= threshold.
Verification verification_rate(std::span<const EvaluationRecord> records, double threshold);

struct AgeGain {
  double mean = 0.0;
  double std = 0.0;  ///< population standard deviation
  std::size_t count = 0;
  EditDirection direction = EditDirection::Aging;
};

/// Mean and spread of estimated_age - original_age over the verified records.
AgeGain age_gain(std::span<const EvaluationRecord> records, std::span<const std::uint8_t> verified,
                 EditDirection direction);

struct GainPoint {
  double scalar = 0.0;
  double verified_rate = 0.0;
  double gain_mean = 0.0;
  double gain_std = 0.0;
};

struct GainCurve {
  std::vector<GainPoint> points;
  EditDirection direction = EditDirection::Aging;
};

using RecordsByScalar = std::map<double, std::vector<EvaluationRecord>>;

RecordsByScalar group_by_scalar(std::span<const EvaluationRecord> records);

struct SweepOptions {
  /// Drop scalars where nothing verifies instead of failing with NoVerifiedSamples.
  bool skip_unverified = false;
};

/// One point per scalar on the direction's side of zero (zero included), ordered
/// away from zero: ascending for aging, descending for de-aging.
GainCurve sweep_curve(const RecordsByScalar& records_by_scalar, double threshold, EditDirection direction,
                      SweepOptions options = {});

struct GainAtRate {
  double gain_mean = 0.0;
  double gain_std = 0.0;
  double scalar = 0.0;  ///< interpolated scalar where the curve reaches the rate
};

/// Piecewise-linear interpolation of the gain against the verified rate. When the
/// rate is reached more than once, the crossing at the largest |scalar| wins.
GainAtRate gain_at_rate(const GainCurve& curve, double target_rate);

/// Reads sample_id,scalar,fr_score,estimated_age,original_age,group. A file that has an
/// fr_distance column instead of fr_score is converted with similarity = 1 - distance.
std::vector<EvaluationRecord> load_records(const std::filesystem::path& path);

struct CurveReport {
  std::optional<std::size_t> group;  ///< empty when pooled
  GainCurve curve;
  std::optional<GainAtRate> at_cutoff;
  std::string note;  ///< why at_cutoff is absent, or why the curve is empty
};

struct EvaluationReport {
  double threshold = 0.0;
  double cutoff = 0.75;
  bool pooled = false;
  std::vector<CurveReport> curves;
};

/// Builds aging and de-aging curves per group (or pooled) and the gain at the cutoff rate.
EvaluationReport evaluate_records(std::span<const EvaluationRecord> records, double threshold, double cutoff,
                                  bool pooled, SweepOptions options = {});

std::string curve_to_csv(const GainCurve& curve);

}  // namespace agesynth

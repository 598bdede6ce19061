#include "agesynth/age_groups.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "agesynth/csv.hpp"
#include "agesynth/error.hpp"

namespace agesynth {

AgeGroupScheme::AgeGroupScheme(std::string name, std::vector<double> boundaries, std::vector<std::string> labels)
    : name_(std::move(name)), boundaries_(std::move(boundaries)), labels_(std::move(labels)) {
  for (std::size_t i = 0; i < boundaries_.size(); ++i) {
    if (!std::isfinite(boundaries_[i]) || boundaries_[i] <= 0.0) {
      fail(ErrorCode::InvalidScheme, "boundaries must be finite and positive");
    }
    if (i > 0 && boundaries_[i] <= boundaries_[i - 1]) {
      fail(ErrorCode::InvalidScheme, "boundaries must be strictly increasing");
    }
  }
  if (labels_.empty()) {
    for (std::size_t g = 0; g < group_count(); ++g) {
      const std::string lo = g == 0 ? "0" : csv::format_double(boundaries_[g - 1]);
      const std::string hi = g + 1 == group_count() ? "inf" : csv::format_double(boundaries_[g]);
      labels_.push_back("[" + lo + "," + hi + ")");
    }
  }
  if (labels_.size() != group_count()) {
    fail(ErrorCode::InvalidScheme, "label count must equal boundary count + 1");
  }
}

AgeGroupScheme AgeGroupScheme::nine() {
  return {"nine",
          {8, 13, 18, 25, 35, 45, 55, 65},
          {"<8", "[8,13)", "[13,18)", "[18,25)", "[25,35)", "[35,45)", "[45,55)", "[55,65)", ">65"}};
}

AgeGroupScheme AgeGroupScheme::four() {
  return {"four", {18, 35, 65}, {"children", "young adults", "middle aged", "senior"}};
}

AgeGroupScheme AgeGroupScheme::preset(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "four" || lower == "4") return four();
  if (lower == "nine" || lower == "9") return nine();
  fail(ErrorCode::InvalidScheme, "unknown age-group scheme '" + std::string(name) + "'");
}

std::size_t AgeGroupScheme::group_of(double age_years) const {
  if (!std::isfinite(age_years) || age_years < 0.0) {
    fail(ErrorCode::InvalidAge, "age must be finite and non-negative, got " + csv::format_double(age_years));
  }
  // upper_bound: the first boundary strictly greater than the age, so a
  // boundary value falls into the bin it opens.
  auto it = std::upper_bound(boundaries_.begin(), boundaries_.end(), age_years);
  return static_cast<std::size_t>(it - boundaries_.begin());
}

const std::string& AgeGroupScheme::label(std::size_t group) const {
  if (group >= labels_.size()) fail(ErrorCode::InvalidScheme, "group index out of range");
  return labels_[group];
}

}  // namespace agesynth

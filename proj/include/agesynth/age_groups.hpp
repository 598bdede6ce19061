#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace agesynth {

/// Partition of [0, inf) into half-open age bins [lo, hi). A boundary age
/// belongs to the upper bin.
class AgeGroupScheme {
 public:
  AgeGroupScheme(std::string name, std::vector<double> boundaries, std::vector<std::string> labels = {});

  /// Nine bins: <8, [8,13), [13,18), [18,25), [25,35), [35,45), [45,55), [55,65), >65.
  static AgeGroupScheme nine();
  /// Four bins: children <18, young adults [18,35), middle aged [35,65), senior >65.
  static AgeGroupScheme four();
  /// "four" or "nine" (case-insensitive).
  static AgeGroupScheme preset(std::string_view name);

  [[nodiscard]] std::size_t group_of(double age_years) const;
  [[nodiscard]] std::size_t group_count() const noexcept { return boundaries_.size() + 1; }
  [[nodiscard]] const std::string& label(std::size_t group) const;
  [[nodiscard]] const std::string& name() const noexcept { return name_; }
  [[nodiscard]] const std::vector<double>& boundaries() const noexcept { return boundaries_; }
  [[nodiscard]] const std::vector<std::string>& labels() const noexcept { return labels_; }

  friend bool operator==(const AgeGroupScheme&, const AgeGroupScheme&) = default;

 private:
  std::string name_;
  std::vector<double> boundaries_;
  std::vector<std::string> labels_;
};

}  // namespace agesynth

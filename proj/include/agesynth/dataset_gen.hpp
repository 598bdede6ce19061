#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "agesynth/age_direction.hpp"
#include "agesynth/calibrate.hpp"
#include "agesynth/component_masks.hpp"
#include "agesynth/latent_set.hpp"

namespace agesynth {

/// Ten target ages spanning childhood to old age.
std::vector<double> default_target_ages();

struct PlannedEdit {
  std::size_t row = 0;  ///< row in the identity set
  double target_age = 0.0;
  double scalar = 0.0;
  bool fallback = false;
};

struct PlanFailure {
  std::size_t row = 0;
  double target_age = 0.0;
  std::string reason;
};

/// Scalar offsets for every (identity, target age) pair. Row r of target t is
/// edits[t][k] for the k-th successful identity; failures are listed separately.
struct DatasetPlan {
  std::vector<double> target_ages;
  std::vector<std::vector<PlannedEdit>> edits;  ///< one list per target age
  std::vector<PlanFailure> failures;
  std::vector<double> original_ages;
  std::vector<bool> original_age_predicted;  ///< age_years absent; hyperplane prediction used
};

/// Picks each identity's curve from its original age (the labeled age, or the
/// hyperplane prediction when unlabeled) and solves the offset to every target.
DatasetPlan plan_dataset(const LatentSet& identities, const AgeDirection& dir, const CalibrationModel& calibration,
                         const std::vector<double>& target_ages);

/// Applies the weighted edit for one target age.
LatentSet render_target(const LatentSet& identities, const DatasetPlan& plan, std::size_t target_index,
                        const AgeDirection& dir, const PhiWeights& phi, const AgeGroupScheme& scheme);

struct DatasetGenOptions {
  std::vector<double> target_ages = default_target_ages();
  std::size_t jobs = 1;
  /// Stops after this many target files have been written (0 = no limit). Used to
  /// exercise resumption.
  std::size_t max_new_outputs = 0;
};

struct DatasetGenResult {
  std::size_t written = 0;
  std::size_t skipped = 0;  ///< outputs already present with matching hashes
  std::size_t rows = 0;
  std::size_t failures = 0;
  bool complete = false;
  std::filesystem::path manifest;
};

std::string target_file_name(double target_age);

/// Writes age_<target>.latw per target age, index.csv, and gen_manifest.json into
/// out_dir. `fingerprint` identifies the inputs and settings; outputs recorded in an
/// existing manifest with the same fingerprint and matching hashes are kept.
DatasetGenResult generate_dataset(const LatentSet& identities, const AgeDirection& dir, const PhiWeights& phi,
                                  const CalibrationModel& calibration, const DatasetGenOptions& options,
                                  const std::filesystem::path& out_dir, const std::string& fingerprint);

}  // namespace agesynth

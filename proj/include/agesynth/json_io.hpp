#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "agesynth/age_direction.hpp"
#include "agesynth/age_groups.hpp"
#include "agesynth/calibrate.hpp"
#include "agesynth/component_masks.hpp"
#include "agesynth/evaluate.hpp"
#include "agesynth/latent_set.hpp"

namespace agesynth {

using json = nlohmann::json;

json read_json_file(const std::filesystem::path& path);
/// Two-space indented JSON with a trailing newline. Keys are sorted, so output is stable.
std::string dump_json(const json& value);

/// {mean, std, epsilon, convention: "population"}
json to_json(const Scaler& scaler);
Scaler scaler_from_json(const json& j);

/// {bias, lambda_raw, lambda_hat, train_meta}
json to_json(const AgeDirection& dir);
AgeDirection direction_from_json(const json& j);

/// {bits, provenance, metric, thresholds}
json to_json(const ComponentMask& mask, const json& thresholds = json::object());
ComponentMask mask_from_json(const json& j);

/// {weights, provenance, alpha, beta, thresholds}
json to_json(const PhiWeights& phi, const json& thresholds = json::object());
PhiWeights phi_from_json(const json& j);

json to_json(const AgeGroupScheme& scheme);
AgeGroupScheme scheme_from_json(const json& j);

/// {scheme, groups: [{label, group, coeffs, degree, range, rmse, linear_aging, linear_deaging}]}
json to_json(const CalibrationModel& model);
CalibrationModel calibration_from_json(const json& j);

json to_json(const EvaluationReport& report);

}  // namespace agesynth

#include "agesynth/dataset_gen.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <sstream>
#include <thread>

#include "agesynth/csv.hpp"
#include "agesynth/error.hpp"
#include "agesynth/hashing.hpp"
#include "agesynth/json_io.hpp"
#include "agesynth/latent_io.hpp"

namespace agesynth {

namespace {

constexpr const char* kManifestName = "gen_manifest.json";
constexpr const char* kIndexName = "index.csv";

std::string identity_of(const SampleMeta& m) { return m.identity_id.value_or(m.sample_id); }

}  // namespace

std::vector<double> default_target_ages() { return {5, 10, 15, 20, 30, 40, 50, 60, 70, 80}; }

std::string target_file_name(double target_age) { return "age_" + csv::format_double(target_age) + ".latw"; }

DatasetPlan plan_dataset(const LatentSet& identities, const AgeDirection& dir, const CalibrationModel& calibration,
                         const std::vector<double>& target_ages) {
  if (identities.dim() != dir.dim()) fail(ErrorCode::DimensionMismatch, "identity latents and direction differ in dim");
  if (target_ages.empty()) fail(ErrorCode::InvalidConfig, "at least one target age required");
  for (double t : target_ages) {
    if (!std::isfinite(t) || t < 0.0) fail(ErrorCode::InvalidAge, "target ages must be finite and non-negative");
  }

  DatasetPlan plan;
  plan.target_ages = target_ages;
  plan.edits.resize(target_ages.size());
  const std::size_t n = identities.size();
  plan.original_ages.resize(n);
  plan.original_age_predicted.resize(n);

  for (std::size_t r = 0; r < n; ++r) {
    const SampleMeta& m = identities.meta()[r];
    double original = 0.0;
    if (m.age_years) {
      original = *m.age_years;
    } else {
      original = std::max(0.0, predict_age(dir, identities.vectors().row(static_cast<Eigen::Index>(r)).transpose()));
      plan.original_age_predicted[r] = true;
    }
    plan.original_ages[r] = original;

    std::optional<ScalarSolution> start;
    std::size_t group = 0;
    std::string failure;
    try {
      group = calibration.scheme.group_of(original);
      start = solve_scalar_for_age(calibration, group, original);
    } catch (const Error& e) {
      failure = e.what();
    }
    for (std::size_t t = 0; t < target_ages.size(); ++t) {
      if (!start) {
        plan.failures.push_back({r, target_ages[t], failure});
        continue;
      }
      try {
        const ScalarSolution desired = solve_scalar_for_age(calibration, group, target_ages[t]);
        plan.edits[t].push_back({r, target_ages[t], desired.scalar - start->scalar,
                                 start->fallback_used || desired.fallback_used});
      } catch (const Error& e) {
        plan.failures.push_back({r, target_ages[t], e.what()});
      }
    }
  }
  return plan;
}

LatentSet render_target(const LatentSet& identities, const DatasetPlan& plan, std::size_t target_index,
                        const AgeDirection& dir, const PhiWeights& phi, const AgeGroupScheme& scheme) {
  const auto& edits = plan.edits.at(target_index);
  Matrix rows(static_cast<Eigen::Index>(edits.size()), static_cast<Eigen::Index>(identities.dim()));
  std::vector<double> scalars(edits.size());
  std::vector<SampleMeta> meta(edits.size());
  const double target = plan.target_ages[target_index];
  const std::size_t target_group = scheme.group_of(target);
  for (std::size_t k = 0; k < edits.size(); ++k) {
    const auto& e = edits[k];
    rows.row(static_cast<Eigen::Index>(k)) = identities.vectors().row(static_cast<Eigen::Index>(e.row));
    scalars[k] = e.scalar;
    const SampleMeta& src = identities.meta()[e.row];
    meta[k] = {src.sample_id, target, identity_of(src), target_group};
  }
  edit_rows_weighted(rows, scalars, dir, phi);
  return {std::move(rows), std::move(meta), identities.scaler()};
}

DatasetGenResult generate_dataset(const LatentSet& identities, const AgeDirection& dir, const PhiWeights& phi,
                                  const CalibrationModel& calibration, const DatasetGenOptions& options,
                                  const std::filesystem::path& out_dir, const std::string& fingerprint) {
  if (phi.dim() != dir.dim()) fail(ErrorCode::DimensionMismatch, "phi and direction differ in dim");
  std::filesystem::create_directories(out_dir);
  const DatasetPlan plan = plan_dataset(identities, dir, calibration, options.target_ages);

  const std::filesystem::path manifest_path = out_dir / kManifestName;
  json manifest = {{"fingerprint", fingerprint}, {"outputs", json::object()}, {"complete", false}};
  if (std::filesystem::exists(manifest_path)) {
    json previous = read_json_file(manifest_path);
    if (previous.value("fingerprint", std::string{}) == fingerprint && previous.contains("outputs")) {
      manifest["outputs"] = previous["outputs"];
    }
  }

  DatasetGenResult result;
  result.manifest = manifest_path;
  std::vector<std::size_t> pending;
  for (std::size_t t = 0; t < plan.target_ages.size(); ++t) {
    const std::string name = target_file_name(plan.target_ages[t]);
    const auto& outputs = manifest["outputs"];
    const auto file = out_dir / name;
    bool done = false;
    if (outputs.contains(name) && std::filesystem::exists(file) && std::filesystem::exists(meta_sidecar_path(file))) {
      done = outputs[name].value("sha256", std::string{}) == sha256_file(file) &&
             outputs[name].value("meta_sha256", std::string{}) == sha256_file(meta_sidecar_path(file));
    }
    if (done) {
      ++result.skipped;
    } else {
      manifest["outputs"].erase(name);
      pending.push_back(t);
    }
  }
  if (options.max_new_outputs > 0 && pending.size() > options.max_new_outputs) pending.resize(options.max_new_outputs);

  std::mutex manifest_mutex;
  std::atomic<std::size_t> written{0};
  std::exception_ptr first_error;
  auto worker = [&](std::size_t worker_id, std::size_t workers) {
    try {
      for (std::size_t k = worker_id; k < pending.size(); k += workers) {
        const std::size_t t = pending[k];
        const LatentSet rendered = render_target(identities, plan, t, dir, phi, calibration.scheme);
        const auto file = out_dir / target_file_name(plan.target_ages[t]);
        save_latents(rendered, file);
        const std::string latw_hash = sha256_file(file);
        const std::string meta_hash = sha256_file(meta_sidecar_path(file));
        std::lock_guard lock(manifest_mutex);
        manifest["outputs"][target_file_name(plan.target_ages[t])] = {
            {"target_age", plan.target_ages[t]}, {"rows", rendered.size()}, {"sha256", latw_hash},
            {"meta_sha256", meta_hash}};
        write_file_atomic(manifest_path, dump_json(manifest));
        ++written;
      }
    } catch (...) {
      std::lock_guard lock(manifest_mutex);
      if (!first_error) first_error = std::current_exception();
    }
  };

  const std::size_t workers = std::max<std::size_t>(1, std::min(options.jobs, std::max<std::size_t>(1, pending.size())));
  if (workers == 1) {
    worker(0, 1);
  } else {
    std::vector<std::jthread> threads;
    for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(worker, w, workers);
  }
  if (first_error) std::rethrow_exception(first_error);
  result.written = written.load();

  for (const auto& edits : plan.edits) result.rows += edits.size();
  result.failures = plan.failures.size();
  result.complete = result.written + result.skipped == plan.target_ages.size();

  if (result.complete) {
    std::ostringstream index;
    csv::write_row(index, {"identity_id", "target_age", "scalar_used", "fallback_flag"});
    for (const auto& edits : plan.edits) {
      for (const auto& e : edits) {
        csv::write_row(index, {identity_of(identities.meta()[e.row]), csv::format_double(e.target_age),
                               csv::format_double(e.scalar), e.fallback ? "1" : "0"});
      }
    }
    write_file_atomic(out_dir / kIndexName, index.str());

    json failures = json::array();
    for (const auto& f : plan.failures) {
      failures.push_back({{"identity_id", identity_of(identities.meta()[f.row])},
                          {"target_age", f.target_age},
                          {"reason", f.reason}});
    }
    std::size_t predicted = 0;
    for (bool p : plan.original_age_predicted) predicted += p;
    manifest["failures"] = failures;
    manifest["rows"] = result.rows;
    manifest["identities"] = identities.size();
    manifest["original_ages_predicted"] = predicted;
    manifest["index_sha256"] = sha256_file(out_dir / kIndexName);
    manifest["complete"] = true;
    write_file_atomic(manifest_path, dump_json(manifest));
  }
  return result;
}

}  // namespace agesynth

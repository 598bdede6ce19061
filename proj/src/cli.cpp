#include "agesynth/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"

#include "agesynth/age_direction.hpp"
#include "agesynth/calibrate.hpp"
#include "agesynth/csv.hpp"
#include "agesynth/dataset_gen.hpp"
#include "agesynth/error.hpp"
#include "agesynth/evaluate.hpp"
#include "agesynth/feature_select.hpp"
#include "agesynth/hashing.hpp"
#include "agesynth/json_io.hpp"
#include "agesynth/latent_io.hpp"

namespace agesynth::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kToolVersion = "1.0.0";

// Inputs and outputs of one run, with content hashes. No timestamps, so identical
// runs produce identical manifests.
class RunManifest {
 public:
  explicit RunManifest(std::string command) : command_(std::move(command)) {}

  void config(const std::string& key, json value) { config_[key] = std::move(value); }

  void input(const fs::path& path) {
    inputs_.push_back({{"path", path.string()}, {"sha256", sha256_file(path)}});
  }

  /// Records a latent file together with whichever sidecars exist.
  void latent_input(const fs::path& path, const std::optional<fs::path>& meta = std::nullopt) {
    input(path);
    const fs::path m = meta.value_or(meta_sidecar_path(path));
    if (fs::exists(m)) input(m);
    if (fs::exists(scaler_sidecar_path(path))) input(scaler_sidecar_path(path));
  }

  void output(const fs::path& path) {
    outputs_.push_back({{"path", path.string()}, {"sha256", sha256_file(path)}});
  }

  void latent_output(const fs::path& path) {
    output(path);
    output(meta_sidecar_path(path));
    if (fs::exists(scaler_sidecar_path(path))) output(scaler_sidecar_path(path));
  }

  [[nodiscard]] json to_json() const {
    return {{"command", command_},
            {"tool_version", kToolVersion},
            {"config", config_},
            {"inputs", inputs_},
            {"outputs", outputs_}};
  }

 private:
  std::string command_;
  json config_ = json::object();
  json inputs_ = json::array();
  json outputs_ = json::array();
};

struct Common {
  std::string config_path;
  std::string manifest_path;
};

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(csv::parse_double(item, "number list"));
  }
  return out;
}

std::optional<fs::path> optional_path(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return fs::path(s);
}

void write_json_output(RunManifest& manifest, const fs::path& path, const json& value) {
  write_file_atomic(path, dump_json(value));
  manifest.output(path);
}

/// Applies `edit` to row blocks on up to `jobs` threads; each thread owns a disjoint block.
void for_row_blocks(Eigen::Index rows, std::size_t jobs, const std::function<void(Eigen::Index, Eigen::Index)>& work) {
  const auto workers = static_cast<Eigen::Index>(std::max<std::size_t>(1, jobs));
  if (workers == 1 || rows < 2 * workers) {
    work(0, rows);
    return;
  }
  const Eigen::Index block = (rows + workers - 1) / workers;
  std::vector<std::jthread> threads;
  for (Eigen::Index begin = 0; begin < rows; begin += block) {
    threads.emplace_back(work, begin, std::min(rows, begin + block));
  }
}

// Converts a JSON config object to command-line tokens for the chosen subcommand.
// Keys that the subcommand does not know are ignored so one config can serve many commands.
std::vector<std::string> config_tokens(const json& config, CLI::App& sub) {
  std::vector<std::string> tokens;
  if (!config.is_object()) fail(ErrorCode::InvalidConfig, "config file must hold a JSON object");
  for (const auto& [key, value] : config.items()) {
    std::string name = key;
    std::replace(name.begin(), name.end(), '_', '-');
    CLI::Option* opt = sub.get_option_no_throw("--" + name);
    if (opt == nullptr) continue;
    if (opt->get_type_size() == 0) {
      if (value.is_boolean() && value.get<bool>()) tokens.push_back("--" + name);
      continue;
    }
    std::string text;
    if (value.is_string()) {
      text = value.get<std::string>();
    } else if (value.is_array()) {
      for (std::size_t i = 0; i < value.size(); ++i) {
        if (i > 0) text += ",";
        text += value[i].is_string() ? value[i].get<std::string>() : value[i].dump();
      }
    } else {
      text = value.dump();
    }
    tokens.push_back("--" + name);
    tokens.push_back(text);
  }
  return tokens;
}

json resolved_options(const CLI::App& sub) {
  json out = json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help" || name == "config" || name == "manifest") continue;
    if (opt->count() > 0) {
      const auto& results = opt->results();
      out[name] = opt->get_type_size() == 0 ? json(true) : json(results.back());
    } else if (!opt->get_default_str().empty()) {
      out[name] = opt->get_default_str();
    }
  }
  return out;
}

LatentSet load_set(RunManifest& manifest, const std::string& path, const std::string& meta) {
  manifest.latent_input(path, optional_path(meta));
  return load_latents(path, optional_path(meta));
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Latent-space age direction fitting, identity-preserving edits, calibration and evaluation",
               "agesynth"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast)->always_capture_default();
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "JSON config; command-line flags take precedence");
    sub->add_option("--manifest", common.manifest_path, "Run manifest path (default derived from --out)");
  };

  std::unique_ptr<RunManifest> manifest;
  std::function<void()> action;
  std::string default_manifest;  // set by subcommands that write files

  // standardize ---------------------------------------------------------------
  struct {
    std::string latents, meta, out, joint_with, joint_meta, joint_out;
    double epsilon = kDefaultStdEpsilon;
    bool inverse = false;
  } stdz;
  auto* c_std = app.add_subcommand("standardize", "Standardize latents (or undo with --inverse)");
  add_common(c_std);
  c_std->add_option("--latents", stdz.latents, "Input latent file")->required();
  c_std->add_option("--meta", stdz.meta, "Metadata CSV (default: <latents>.meta.csv)");
  c_std->add_option("--out", stdz.out, "Output latent file")->required();
  c_std->add_option("--std-epsilon", stdz.epsilon, "Lower clamp for column std");
  c_std->add_flag("--inverse", stdz.inverse, "Apply the attached scaler's inverse");
  c_std->add_option("--joint-with", stdz.joint_with, "Second set sharing pooled statistics");
  c_std->add_option("--joint-meta", stdz.joint_meta, "Metadata CSV of the second set");
  c_std->add_option("--joint-out", stdz.joint_out, "Output for the second set");
  c_std->callback([&] {
    action = [&] {
      const LatentSet in = load_set(*manifest, stdz.latents, stdz.meta);
      if (stdz.inverse) {
        save_latents(destandardize(in), stdz.out);
      } else if (!stdz.joint_with.empty()) {
        if (stdz.joint_out.empty()) fail(ErrorCode::InvalidConfig, "--joint-out is required with --joint-with");
        const LatentSet other = load_set(*manifest, stdz.joint_with, stdz.joint_meta);
        const auto joint = standardize_jointly(in, other, stdz.epsilon);
        save_latents(joint.first, stdz.out);
        save_latents(joint.second, stdz.joint_out);
        manifest->latent_output(stdz.joint_out);
      } else {
        save_latents(standardize(in, stdz.epsilon).first, stdz.out);
      }
      manifest->latent_output(stdz.out);
      out << "wrote " << stdz.out << " (" << in.size() << " x " << in.dim() << ")\n";
    };
    default_manifest = stdz.out + ".manifest.json";
  });

  // fit-direction ---------------------------------------------------------------
  struct {
    std::string latents, meta, out;
    SvrConfig svr;
  } fitdir;
  auto* c_dir = app.add_subcommand("fit-direction", "Fit the linear SVR age hyperplane");
  add_common(c_dir);
  c_dir->add_option("--latents", fitdir.latents, "Standardized latent file with ages")->required();
  c_dir->add_option("--meta", fitdir.meta, "Metadata CSV");
  c_dir->add_option("--out", fitdir.out, "Direction JSON")->required();
  c_dir->add_option("--epsilon", fitdir.svr.epsilon, "Insensitive-tube half-width (years)");
  c_dir->add_option("--cost,--C", fitdir.svr.C, "Regularization trade-off C");
  c_dir->add_option("--max-iter", fitdir.svr.max_iterations, "Maximum solver sweeps");
  c_dir->add_option("--bias-scale", fitdir.svr.bias_scale, "Constant-feature value used to learn the bias");
  c_dir->add_option("--tol", fitdir.svr.tolerance, "Stopping tolerance on the optimality violation");
  c_dir->callback([&] {
    action = [&] {
      const LatentSet set = load_set(*manifest, fitdir.latents, fitdir.meta);
      const AgeDirection dir = fit_age_direction(set, fitdir.svr);
      write_json_output(*manifest, fitdir.out, to_json(dir));
      if (!dir.train_meta.converged) {
        err << "warning: SVR stopped after " << dir.train_meta.iterations
            << " sweeps without reaching tolerance (NonConvergence)\n";
      }
      out << "bias " << csv::format_double(dir.bias) << ", |lambda| " << csv::format_double(dir.lambda_raw.norm())
          << ", sweeps " << dir.train_meta.iterations << "\n";
    };
    default_manifest = fitdir.out + ".manifest.json";
  });

  // fit-pca-mask ----------------------------------------------------------------
  struct {
    std::string latents, meta, out, mode = "rank";
    double variance = 0.95;
  } pca;
  auto* c_pca = app.add_subcommand("fit-pca-mask", "Identity mask from PCA variance selection");
  add_common(c_pca);
  c_pca->add_option("--latents", pca.latents, "Standardized identity latents")->required();
  c_pca->add_option("--meta", pca.meta, "Metadata CSV");
  c_pca->add_option("--variance", pca.variance, "Cumulative variance threshold");
  c_pca->add_option("--mode", pca.mode, "rank | reconstruction")->check(CLI::IsMember({"rank", "reconstruction"}));
  c_pca->add_option("--out", pca.out, "Mask JSON")->required();
  c_pca->callback([&] {
    action = [&] {
      const LatentSet set = load_set(*manifest, pca.latents, pca.meta);
      const auto mode = pca.mode == "rank" ? PcaMaskMode::RankIndex : PcaMaskMode::Reconstruction;
      const ComponentMask mask = pca_mask(set, pca.variance, mode);
      write_json_output(*manifest, pca.out, to_json(mask, {{"variance", pca.variance}, {"mode", pca.mode}}));
      out << "selected " << mask.count() << " of " << mask.dim() << " components\n";
    };
    default_manifest = pca.out + ".manifest.json";
  });

  // fit-lda-masks ---------------------------------------------------------------
  struct {
    std::string id_latents, id_meta, age_latents, age_meta, scheme = "nine", metric = "mse", out;
    double discriminability = 0.95;
  } lda;
  auto* c_lda = app.add_subcommand("fit-lda-masks", "Identity/age masks from LDA reconstruction distances");
  add_common(c_lda);
  c_lda->add_option("--id-latents", lda.id_latents, "Standardized latents with identity_id")->required();
  c_lda->add_option("--id-meta", lda.id_meta, "Metadata CSV for the identity set");
  c_lda->add_option("--age-latents", lda.age_latents, "Standardized latents with ages or age groups")->required();
  c_lda->add_option("--age-meta", lda.age_meta, "Metadata CSV for the age set");
  c_lda->add_option("--scheme", lda.scheme, "Age-group scheme used when age_group is absent (four | nine)");
  c_lda->add_option("--metric", lda.metric, "mse | wasserstein | covariance");
  c_lda->add_option("--discriminability", lda.discriminability, "Cumulative discriminability retained");
  c_lda->add_option("--out", lda.out, "Output directory")->required();
  c_lda->callback([&] {
    action = [&] {
      const LatentSet id_set = load_set(*manifest, lda.id_latents, lda.id_meta);
      LatentSet age_set = load_set(*manifest, lda.age_latents, lda.age_meta);
      const bool has_groups = std::all_of(age_set.meta().begin(), age_set.meta().end(),
                                          [](const SampleMeta& m) { return m.age_group.has_value(); });
      if (!has_groups) age_set = assign_groups(age_set, AgeGroupScheme::preset(lda.scheme));
      const DistanceMetric metric = parse_metric(lda.metric);
      const LdaMasks masks = lda_masks(id_set, age_set, metric, lda.discriminability);
      const CombinedMasks combined = combine_masks(masks.id_star, masks.age_star);
      const json thresholds = {{"discriminability", lda.discriminability},
                               {"id_mu_psi", masks.id_profile.mu_psi},
                               {"age_mu_psi", masks.age_profile.mu_psi}};
      const fs::path dir = lda.out;
      fs::create_directories(dir);
      write_json_output(*manifest, dir / "id_star.json", to_json(masks.id_star, thresholds));
      write_json_output(*manifest, dir / "age_star.json", to_json(masks.age_star, thresholds));
      write_json_output(*manifest, dir / "age_only.json", to_json(combined.age_only, thresholds));
      write_json_output(*manifest, dir / "id_only.json", to_json(combined.id_only, thresholds));
      write_json_output(*manifest, dir / "both.json", to_json(combined.both, thresholds));
      out << "id* " << masks.id_star.count() << ", age* " << masks.age_star.count() << ", age-only "
          << combined.age_only.count() << ", both " << combined.both.count() << " of " << id_set.dim() << "\n";
    };
    default_manifest = (fs::path(lda.out) / "run_manifest.json").string();
  });

  // compose-phi -----------------------------------------------------------------
  struct {
    std::string masks, age_only, both, out;
    double alpha = 1.0, beta = 1.0;
  } phi;
  auto* c_phi = app.add_subcommand("compose-phi", "Compose Phi = alpha * age_only + beta * both");
  add_common(c_phi);
  c_phi->add_option("--masks", phi.masks, "Directory holding age_only.json and both.json");
  c_phi->add_option("--age-only", phi.age_only, "Age-only mask JSON");
  c_phi->add_option("--both", phi.both, "Identity-and-age mask JSON");
  c_phi->add_option("--alpha", phi.alpha, "Weight of age-only components");
  c_phi->add_option("--beta", phi.beta, "Weight of components shared with identity");
  c_phi->add_option("--out", phi.out, "Phi JSON")->required();
  c_phi->callback([&] {
    action = [&] {
      fs::path age_only_path = phi.age_only;
      fs::path both_path = phi.both;
      if (!phi.masks.empty()) {
        if (age_only_path.empty()) age_only_path = fs::path(phi.masks) / "age_only.json";
        if (both_path.empty()) both_path = fs::path(phi.masks) / "both.json";
      }
      if (age_only_path.empty() || both_path.empty()) {
        fail(ErrorCode::InvalidConfig, "give --masks or both --age-only and --both");
      }
      manifest->input(age_only_path);
      manifest->input(both_path);
      const PhiWeights weights =
          compose_phi(mask_from_json(read_json_file(age_only_path)), mask_from_json(read_json_file(both_path)),
                      phi.alpha, phi.beta);
      write_json_output(*manifest, phi.out, to_json(weights));
      out << "phi nonzero components: " << (weights.weights.array() != 0.0).count() << "\n";
    };
    default_manifest = phi.out + ".manifest.json";
  });

  // edit ------------------------------------------------------------------------
  struct {
    std::string latents, meta, direction, phi, out;
    double scalar = 0.0;
    std::size_t jobs = 1;
  } edit;
  auto* c_edit = app.add_subcommand("edit", "Move every latent by scalar * lambda_hat (weighted by Phi)");
  add_common(c_edit);
  c_edit->add_option("--latents", edit.latents, "Input latent file")->required();
  c_edit->add_option("--meta", edit.meta, "Metadata CSV");
  c_edit->add_option("--direction", edit.direction, "Direction JSON")->required();
  c_edit->add_option("--scalar", edit.scalar, "Scalar step s")->required();
  c_edit->add_option("--phi", edit.phi, "Phi JSON (default: all ones)");
  c_edit->add_option("--jobs", edit.jobs, "Worker threads");
  c_edit->add_option("--out", edit.out, "Output latent file")->required();
  c_edit->callback([&] {
    action = [&] {
      const LatentSet in = load_set(*manifest, edit.latents, edit.meta);
      manifest->input(edit.direction);
      const AgeDirection dir = direction_from_json(read_json_file(edit.direction));
      PhiWeights weights = PhiWeights::ones(dir.dim());
      if (!edit.phi.empty()) {
        manifest->input(edit.phi);
        weights = phi_from_json(read_json_file(edit.phi));
      }
      if (in.dim() != dir.dim()) fail(ErrorCode::DimensionMismatch, "latents and direction differ in dim");
      Matrix rows = in.vectors();
      const std::vector<double> scalars(static_cast<std::size_t>(rows.rows()), edit.scalar);
      for_row_blocks(rows.rows(), edit.jobs, [&](Eigen::Index begin, Eigen::Index end) {
        Matrix block = rows.middleRows(begin, end - begin);
        edit_rows_weighted(block, std::span<const double>(scalars).subspan(static_cast<std::size_t>(begin),
                                                                            static_cast<std::size_t>(end - begin)),
                           dir, weights);
        rows.middleRows(begin, end - begin) = block;
      });
      save_latents(in.with_vectors(std::move(rows)), edit.out);
      manifest->latent_output(edit.out);
      out << "edited " << in.size() << " latents with s = " << csv::format_double(edit.scalar) << "\n";
    };
    default_manifest = edit.out + ".manifest.json";
  });

  // calibrate -------------------------------------------------------------------
  struct {
    std::string samples, scheme = "four", out;
    int degree = 3;
    double range_min = -30.0, range_max = 30.0;
  } cal;
  auto* c_cal = app.add_subcommand("calibrate", "Fit per-group scalar -> age polynomials");
  add_common(c_cal);
  c_cal->add_option("--samples", cal.samples, "CSV group,scalar,estimated_age")->required();
  c_cal->add_option("--scheme", cal.scheme, "four | nine");
  c_cal->add_option("--degree", cal.degree, "Polynomial degree (1-6)");
  c_cal->add_option("--range-min", cal.range_min, "Lower end of the functional scalar range");
  c_cal->add_option("--range-max", cal.range_max, "Upper end of the functional scalar range");
  c_cal->add_option("--out", cal.out, "Calibration JSON")->required();
  c_cal->callback([&] {
    action = [&] {
      manifest->input(cal.samples);
      const auto samples = load_calibration_samples(cal.samples);
      const CalibrationModel model =
          fit_group_curves(samples, AgeGroupScheme::preset(cal.scheme), cal.degree, {cal.range_min, cal.range_max});
      write_json_output(*manifest, cal.out, to_json(model));
      for (const auto& g : model.groups) {
        out << "group " << g.group << " (" << g.label << "): rmse " << csv::format_double(g.rmse) << "\n";
      }
    };
    default_manifest = cal.out + ".manifest.json";
  });

  // solve-scalar ----------------------------------------------------------------
  struct {
    std::string calib;
    std::size_t group = 0;
    double from = 0.0, to = 0.0;
  } solve;
  auto* c_solve = app.add_subcommand("solve-scalar", "Scalar offset that moves an age to a target age");
  add_common(c_solve);
  c_solve->add_option("--calib", solve.calib, "Calibration JSON")->required();
  c_solve->add_option("--group", solve.group, "Age group index")->required();
  c_solve->add_option("--from", solve.from, "Original age (years)")->required();
  c_solve->add_option("--to", solve.to, "Desired age (years)")->required();
  c_solve->callback([&] {
    action = [&] {
      manifest->input(solve.calib);
      const CalibrationModel model = calibration_from_json(read_json_file(solve.calib));
      const ScalarOffset offset = scalar_offset(model, solve.group, solve.from, solve.to);
      auto path_of = [](const ScalarSolution& s) { return s.fallback_used ? "linear fallback" : "polynomial"; };
      // Ten significant digits on screen; the manifest keeps full precision.
      auto shown = [](double v) {
        std::ostringstream s;
        s << std::setprecision(10) << (std::abs(v) < 1e-12 ? 0.0 : v);
        return s.str();
      };
      out << "s_original = " << shown(offset.original.scalar) << " (" << path_of(offset.original) << ")\n";
      out << "s_desired = " << shown(offset.desired.scalar) << " (" << path_of(offset.desired) << ")\n";
      out << "Δs = " << shown(offset.delta) << "\n";
      manifest->config("result", {{"delta_s", offset.delta},
                                  {"s_original", offset.original.scalar},
                                  {"s_desired", offset.desired.scalar},
                                  {"fallback_original", offset.original.fallback_used},
                                  {"fallback_desired", offset.desired.fallback_used}});
    };
  });

  // evaluate --------------------------------------------------------------------
  struct {
    std::string records, out;
    double threshold = 0.0, cutoff = 0.75;
    bool pooled = false, skip_unverified = false;
  } eval;
  auto* c_eval = app.add_subcommand("evaluate", "Verification rate and age-gain curves");
  add_common(c_eval);
  c_eval->add_option("--records", eval.records, "Records CSV")->required();
  c_eval->add_option("--threshold", eval.threshold, "Verification threshold on the similarity score")->required();
  c_eval->add_option("--cutoff", eval.cutoff, "Verified-rate cutoff for the summary");
  c_eval->add_flag("--pooled", eval.pooled, "Pool all groups into one curve per direction");
  c_eval->add_flag("--skip-unverified", eval.skip_unverified, "Drop scalars where no sample verifies");
  c_eval->add_option("--out", eval.out, "Output directory")->required();
  c_eval->callback([&] {
    action = [&] {
      manifest->input(eval.records);
      const auto records = load_records(eval.records);
      const EvaluationReport report =
          evaluate_records(records, eval.threshold, eval.cutoff, eval.pooled, {eval.skip_unverified});
      const fs::path dir = eval.out;
      fs::create_directories(dir);
      for (const auto& c : report.curves) {
        if (c.curve.points.empty()) continue;
        const std::string group = c.group ? std::to_string(*c.group) : "all";
        const fs::path file = dir / ("curve_" + group + "_" + std::string(to_string(c.curve.direction)) + ".csv");
        write_file_atomic(file, curve_to_csv(c.curve));
        manifest->output(file);
      }
      write_json_output(*manifest, dir / "summary.json", to_json(report));
      for (const auto& c : report.curves) {
        out << (c.group ? "group " + std::to_string(*c.group) : std::string("pooled")) << " "
            << to_string(c.curve.direction) << ": ";
        if (c.at_cutoff) {
          out << "gain " << csv::format_double(c.at_cutoff->gain_mean) << " +/- "
              << csv::format_double(c.at_cutoff->gain_std) << " at rate " << csv::format_double(eval.cutoff) << "\n";
        } else {
          out << c.note << "\n";
        }
      }
    };
    default_manifest = (fs::path(eval.out) / "run_manifest.json").string();
  });

  // gen-dataset -----------------------------------------------------------------
  struct {
    std::string latents, meta, direction, phi, calib, ages, out;
    std::size_t jobs = 1;
    std::size_t max_new_outputs = 0;
  } gen;
  auto* c_gen = app.add_subcommand("gen-dataset", "Edit identity latents to a list of target ages (resumable)");
  add_common(c_gen);
  c_gen->add_option("--latents", gen.latents, "Identity latents")->required();
  c_gen->add_option("--meta", gen.meta, "Metadata CSV");
  c_gen->add_option("--direction", gen.direction, "Direction JSON")->required();
  c_gen->add_option("--phi", gen.phi, "Phi JSON (default: all ones)");
  c_gen->add_option("--calib", gen.calib, "Calibration JSON")->required();
  c_gen->add_option("--ages", gen.ages, "Comma-separated target ages (default: 10 ages from 5 to 80)");
  c_gen->add_option("--jobs", gen.jobs, "Worker threads");
  c_gen->add_option("--max-new-outputs", gen.max_new_outputs, "Stop after writing this many target files")
      ->group("");
  c_gen->add_option("--out", gen.out, "Output directory")->required();
  c_gen->callback([&] {
    action = [&] {
      const LatentSet ids = load_set(*manifest, gen.latents, gen.meta);
      manifest->input(gen.direction);
      manifest->input(gen.calib);
      const AgeDirection dir = direction_from_json(read_json_file(gen.direction));
      const CalibrationModel model = calibration_from_json(read_json_file(gen.calib));
      PhiWeights weights = PhiWeights::ones(dir.dim());
      if (!gen.phi.empty()) {
        manifest->input(gen.phi);
        weights = phi_from_json(read_json_file(gen.phi));
      }
      DatasetGenOptions options;
      if (!gen.ages.empty()) options.target_ages = parse_number_list(gen.ages);
      options.jobs = gen.jobs;
      options.max_new_outputs = gen.max_new_outputs;

      json fingerprint = {{"inputs", manifest->to_json()["inputs"]}, {"ages", options.target_ages}};
      const auto result =
          generate_dataset(ids, dir, weights, model, options, gen.out, sha256_hex(fingerprint.dump()));
      out << "targets written " << result.written << ", skipped " << result.skipped << ", rows " << result.rows
          << ", failures " << result.failures << (result.complete ? "" : " (incomplete)") << "\n";
      if (result.complete) {
        const fs::path dir_path = gen.out;
        for (double t : options.target_ages) manifest->latent_output(dir_path / target_file_name(t));
        manifest->output(dir_path / "index.csv");
        manifest->output(result.manifest);
      }
    };
    default_manifest = (fs::path(gen.out) / "run_manifest.json").string();
  });

  // inspect ---------------------------------------------------------------------
  struct {
    std::string latents, meta, scheme, json_file;
  } insp;
  auto* c_insp = app.add_subcommand("inspect", "Summarize a latent file or a JSON artifact");
  add_common(c_insp);
  c_insp->add_option("--latents", insp.latents, "Latent file");
  c_insp->add_option("--meta", insp.meta, "Metadata CSV");
  c_insp->add_option("--scheme", insp.scheme, "Print the age-group histogram under four | nine");
  c_insp->add_option("--json", insp.json_file, "Direction, mask, phi or calibration JSON");
  c_insp->callback([&] {
    action = [&] {
      if (insp.latents.empty() == insp.json_file.empty()) {
        fail(ErrorCode::InvalidConfig, "give exactly one of --latents or --json");
      }
      if (!insp.latents.empty()) {
        const LatentSet set = load_set(*manifest, insp.latents, insp.meta);
        out << "n " << set.size() << "\ndim " << set.dim() << "\nstandardized " << (set.standardized() ? 1 : 0) << "\n";
        if (!insp.scheme.empty()) {
          const AgeGroupScheme scheme = AgeGroupScheme::preset(insp.scheme);
          const auto hist = group_histogram(set, scheme);
          for (std::size_t g = 0; g < hist.size(); ++g) out << "group " << g << " " << scheme.label(g) << " " << hist[g] << "\n";
        }
        return;
      }
      manifest->input(insp.json_file);
      const json j = read_json_file(insp.json_file);
      if (j.contains("lambda_hat")) {
        const AgeDirection dir = direction_from_json(j);
        out << "direction dim " << dir.dim() << " bias " << csv::format_double(dir.bias) << "\n";
      } else if (j.contains("bits")) {
        const ComponentMask mask = mask_from_json(j);
        out << "mask " << to_string(mask.provenance) << " " << mask.count() << "/" << mask.dim() << "\n";
      } else if (j.contains("weights")) {
        const PhiWeights w = phi_from_json(j);
        out << "phi dim " << w.dim() << " alpha " << csv::format_double(w.alpha) << " beta "
            << csv::format_double(w.beta) << "\n";
      } else if (j.contains("groups")) {
        const CalibrationModel model = calibration_from_json(j);
        out << "calibration scheme " << model.scheme.name() << " groups " << model.groups.size() << "\n";
      } else {
        fail(ErrorCode::FormatError, "unrecognized JSON artifact");
      }
    };
  });

  // Splice config-file values in right after the subcommand so explicit flags, which
  // come later, override them.
  std::vector<std::string> argv_tokens = args;
  try {
    auto config_it = std::find_if(argv_tokens.begin(), argv_tokens.end(),
                                  [](const std::string& a) { return a == "--config" || a.rfind("--config=", 0) == 0; });
    if (config_it != argv_tokens.end()) {
      std::string path = *config_it == "--config" ? (config_it + 1 != argv_tokens.end() ? *(config_it + 1) : "")
                                                  : config_it->substr(std::string("--config=").size());
      auto sub_it = std::find_if(argv_tokens.begin(), argv_tokens.end(), [&](const std::string& a) {
        return app.get_subcommand_no_throw(a) != nullptr;
      });
      if (!path.empty() && sub_it != argv_tokens.end()) {
        const auto tokens = config_tokens(read_json_file(path), *app.get_subcommand(*sub_it));
        argv_tokens.insert(sub_it + 1, tokens.begin(), tokens.end());
      }
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomainError;
  }

  std::vector<std::string> reversed(argv_tokens.rbegin(), argv_tokens.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  manifest = std::make_unique<RunManifest>(sub->get_name());
  try {
    action();
    const json options = resolved_options(*sub);
    for (const auto& [key, value] : options.items()) manifest->config(key, value);
    const std::string manifest_path = common.manifest_path.empty() ? default_manifest : common.manifest_path;
    if (manifest_path.empty()) {
      err << manifest->to_json().dump() << "\n";
    } else {
      write_file_atomic(manifest_path, dump_json(manifest->to_json()));
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomainError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: IoFailure: " << e.what() << "\n";
    return kExitDomainError;
  } catch (const json::exception& e) {
    err << "error: FormatError: " << e.what() << "\n";
    return kExitDomainError;
  }
  return kExitOk;
}

}  // namespace agesynth::cli

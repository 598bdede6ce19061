#include "agesynth/json_io.hpp"

#include <cmath>
#include <fstream>

#include "agesynth/error.hpp"
#include "agesynth/latent_io.hpp"

namespace agesynth {

namespace {

json vector_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

Vector vector_from(const json& j, const char* what) {
  if (!j.is_array()) fail(ErrorCode::FormatError, std::string(what) + " must be an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) fail(ErrorCode::FormatError, std::string(what) + " must hold numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  if (!v.allFinite()) fail(ErrorCode::NonFiniteValue, std::string(what) + " not finite");
  return v;
}

const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) fail(ErrorCode::FormatError, std::string("missing field '") + key + "'");
  return j.at(key);
}

template <typename T>
T get(const json& j, const char* key) {
  try {
    return field(j, key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorCode::FormatError, std::string("field '") + key + "': " + e.what());
  }
}

json line_json(const LinearFit& f) { return {{"slope", f.slope}, {"intercept", f.intercept}}; }
LinearFit line_from(const json& j) { return {get<double>(j, "slope"), get<double>(j, "intercept")}; }

}  // namespace

json read_json_file(const std::filesystem::path& path) {
  const std::string text = read_file_bytes(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::FormatError, path.string() + ": " + e.what());
  }
}

std::string dump_json(const json& value) { return value.dump(2) + "\n"; }

json to_json(const Scaler& scaler) {
  return {{"mean", vector_json(scaler.mean())},
          {"std", vector_json(scaler.std())},
          {"epsilon", scaler.epsilon()},
          {"convention", "population"}};
}

Scaler scaler_from_json(const json& j) {
  return {vector_from(field(j, "mean"), "mean"), vector_from(field(j, "std"), "std"),
          j.contains("epsilon") ? get<double>(j, "epsilon") : kDefaultStdEpsilon};
}

json to_json(const AgeDirection& dir) {
  const auto& m = dir.train_meta;
  return {{"bias", dir.bias},
          {"lambda_raw", vector_json(dir.lambda_raw)},
          {"lambda_hat", vector_json(dir.lambda_hat)},
          {"train_meta",
           {{"n", m.n},
            {"dim", m.dim},
            {"epsilon", m.epsilon},
            {"C", m.C},
            {"bias_scale", m.bias_scale},
            {"iterations", m.iterations},
            {"final_objective", m.final_objective},
            {"max_violation", m.max_violation},
            {"converged", m.converged}}}};
}

AgeDirection direction_from_json(const json& j) {
  AgeDirection dir;
  dir.bias = get<double>(j, "bias");
  dir.lambda_raw = vector_from(field(j, "lambda_raw"), "lambda_raw");
  dir.lambda_hat = vector_from(field(j, "lambda_hat"), "lambda_hat");
  if (dir.lambda_raw.size() != dir.lambda_hat.size()) fail(ErrorCode::FormatError, "lambda vectors differ in length");
  if (dir.lambda_hat.size() == 0 || std::abs(dir.lambda_hat.norm() - 1.0) > 1e-9) {
    fail(ErrorCode::FormatError, "lambda_hat is not a unit vector");
  }
  if (j.contains("train_meta")) {
    const json& m = j.at("train_meta");
    auto& t = dir.train_meta;
    t.n = m.value("n", std::size_t{0});
    t.dim = m.value("dim", std::size_t{0});
    t.epsilon = m.value("epsilon", 0.0);
    t.C = m.value("C", 0.0);
    t.bias_scale = m.value("bias_scale", 0.0);
    t.iterations = m.value("iterations", 0L);
    t.final_objective = m.value("final_objective", 0.0);
    t.max_violation = m.value("max_violation", 0.0);
    t.converged = m.value("converged", false);
  }
  return dir;
}

json to_json(const ComponentMask& mask, const json& thresholds) {
  std::vector<int> bits(mask.bits.begin(), mask.bits.end());
  return {{"bits", bits},
          {"provenance", std::string(to_string(mask.provenance))},
          {"metric", mask.metric ? json(std::string(to_string(*mask.metric))) : json(nullptr)},
          {"thresholds", thresholds}};
}

ComponentMask mask_from_json(const json& j) {
  ComponentMask mask;
  for (const auto& b : field(j, "bits")) {
    if (!b.is_number_integer() || (b.get<int>() != 0 && b.get<int>() != 1)) {
      fail(ErrorCode::FormatError, "mask bits must be 0 or 1");
    }
    mask.bits.push_back(static_cast<std::uint8_t>(b.get<int>()));
  }
  mask.provenance = parse_provenance(get<std::string>(j, "provenance"));
  if (j.contains("metric") && !j.at("metric").is_null()) mask.metric = parse_metric(get<std::string>(j, "metric"));
  return mask;
}

json to_json(const PhiWeights& phi, const json& thresholds) {
  json sources = json::array();
  for (auto s : phi.sources) sources.push_back(std::string(to_string(s)));
  return {{"weights", vector_json(phi.weights)},
          {"provenance", sources},
          {"alpha", phi.alpha},
          {"beta", phi.beta},
          {"thresholds", thresholds}};
}

PhiWeights phi_from_json(const json& j) {
  PhiWeights phi;
  phi.weights = vector_from(field(j, "weights"), "weights");
  if ((phi.weights.array() < 0.0).any()) fail(ErrorCode::FormatError, "phi weights must be non-negative");
  phi.alpha = j.value("alpha", 1.0);
  phi.beta = j.value("beta", 1.0);
  if (j.contains("provenance")) {
    for (const auto& s : j.at("provenance")) phi.sources.push_back(parse_provenance(s.get<std::string>()));
  }
  return phi;
}

json to_json(const AgeGroupScheme& scheme) {
  return {{"name", scheme.name()}, {"boundaries", scheme.boundaries()}, {"labels", scheme.labels()}};
}

AgeGroupScheme scheme_from_json(const json& j) {
  if (j.is_string()) return AgeGroupScheme::preset(j.get<std::string>());
  return {get<std::string>(j, "name"), get<std::vector<double>>(j, "boundaries"),
          j.contains("labels") ? get<std::vector<std::string>>(j, "labels") : std::vector<std::string>{}};
}

json to_json(const CalibrationModel& model) {
  json groups = json::array();
  for (const auto& g : model.groups) {
    groups.push_back({{"group", g.group},
                      {"label", g.label},
                      {"coeffs", g.coeffs},
                      {"degree", g.degree},
                      {"range", {g.range.min, g.range.max}},
                      {"rmse", g.rmse},
                      {"samples", g.sample_count},
                      {"linear_aging", line_json(g.aging)},
                      {"linear_deaging", line_json(g.deaging)}});
  }
  return {{"scheme", to_json(model.scheme)}, {"groups", groups}};
}

CalibrationModel calibration_from_json(const json& j) {
  CalibrationModel model{scheme_from_json(field(j, "scheme")), {}};
  for (const auto& g : field(j, "groups")) {
    GroupCurve curve;
    curve.group = get<std::size_t>(g, "group");
    curve.label = g.value("label", model.scheme.label(curve.group));
    curve.coeffs = get<std::vector<double>>(g, "coeffs");
    curve.degree = get<int>(g, "degree");
    if (curve.coeffs.empty() || curve.degree != static_cast<int>(curve.coeffs.size()) - 1) {
      fail(ErrorCode::FormatError, "degree must equal coefficient count - 1");
    }
    const auto range = get<std::vector<double>>(g, "range");
    if (range.size() != 2 || !(range[0] < 0.0 && range[1] > 0.0)) {
      fail(ErrorCode::InvalidRange, "calibration range must be [min < 0, max > 0]");
    }
    curve.range = {range[0], range[1]};
    curve.rmse = g.value("rmse", 0.0);
    curve.sample_count = g.value("samples", std::size_t{0});
    curve.aging = line_from(field(g, "linear_aging"));
    curve.deaging = line_from(field(g, "linear_deaging"));
    for (double c : curve.coeffs) {
      if (!std::isfinite(c)) fail(ErrorCode::NonFiniteValue, "calibration coefficient not finite");
    }
    model.groups.push_back(std::move(curve));
  }
  return model;
}

json to_json(const EvaluationReport& report) {
  json curves = json::array();
  for (const auto& c : report.curves) {
    json entry = {{"group", c.group ? json(*c.group) : json(nullptr)},
                  {"direction", std::string(to_string(c.curve.direction))},
                  {"points", c.curve.points.size()}};
    if (c.at_cutoff) {
      entry["gain_mean"] = c.at_cutoff->gain_mean;
      entry["gain_std"] = c.at_cutoff->gain_std;
      entry["scalar"] = c.at_cutoff->scalar;
    } else {
      entry["gain_mean"] = nullptr;
      entry["gain_std"] = nullptr;
      entry["scalar"] = nullptr;
    }
    if (!c.note.empty()) entry["note"] = c.note;
    curves.push_back(std::move(entry));
  }
  return {{"threshold", report.threshold}, {"cutoff", report.cutoff}, {"pooled", report.pooled}, {"curves", curves}};
}

}  // namespace agesynth

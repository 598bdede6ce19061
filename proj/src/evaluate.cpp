#include "agesynth/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "agesynth/csv.hpp"
#include "agesynth/error.hpp"

namespace agesynth {

std::string_view to_string(EditDirection d) noexcept { return d == EditDirection::Aging ? "aging" : "deaging"; }

Verification verification_rate(std::span<const EvaluationRecord> records, double threshold) {
  if (records.empty()) fail(ErrorCode::EmptyRecords, "verification needs at least one record");
  Verification out;
  out.verified.reserve(records.size());
  std::size_t hits = 0;
  for (const auto& r : records) {
    const bool ok = r.fr_score >= threshold;
    out.verified.push_back(ok ? 1 : 0);
    hits += ok;
  }
  out.rate = static_cast<double>(hits) / static_cast<double>(records.size());
  return out;
}

AgeGain age_gain(std::span<const EvaluationRecord> records, std::span<const std::uint8_t> verified,
                 EditDirection direction) {
  if (records.size() != verified.size()) fail(ErrorCode::DimensionMismatch, "one flag per record required");
  AgeGain out;
  out.direction = direction;
  double sum = 0.0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!verified[i]) continue;
    sum += records[i].estimated_age - records[i].original_age;
    ++out.count;
  }
  if (out.count == 0) fail(ErrorCode::NoVerifiedSamples, "no verified samples");
  out.mean = sum / static_cast<double>(out.count);
  double sq = 0.0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!verified[i]) continue;
    const double d = records[i].estimated_age - records[i].original_age - out.mean;
    sq += d * d;
  }
  out.std = std::sqrt(sq / static_cast<double>(out.count));
  return out;
}

RecordsByScalar group_by_scalar(std::span<const EvaluationRecord> records) {
  RecordsByScalar out;
  for (const auto& r : records) out[r.scalar_s].push_back(r);
  return out;
}

GainCurve sweep_curve(const RecordsByScalar& records_by_scalar, double threshold, EditDirection direction,
                      SweepOptions options) {
  std::vector<double> scalars;
  for (const auto& [s, recs] : records_by_scalar) {
    if (direction == EditDirection::Aging ? s >= 0.0 : s <= 0.0) scalars.push_back(s);
  }
  if (direction == EditDirection::Deaging) std::reverse(scalars.begin(), scalars.end());
  if (scalars.size() < 2) {
    fail(ErrorCode::InsufficientPoints, std::string("a ") + std::string(to_string(direction)) +
                                            " curve needs at least two scalars");
  }

  GainCurve curve;
  curve.direction = direction;
  for (double s : scalars) {
    const auto& recs = records_by_scalar.at(s);
    const Verification v = verification_rate(recs, threshold);
    if (v.rate == 0.0 && options.skip_unverified) continue;
    const AgeGain gain = age_gain(recs, v.verified, direction);
    curve.points.push_back({s, v.rate, gain.mean, gain.std});
  }
  return curve;
}

GainAtRate gain_at_rate(const GainCurve& curve, double target_rate) {
  if (curve.points.size() < 2) fail(ErrorCode::InsufficientPoints, "gain interpolation needs at least two points");
  if (!(target_rate >= 0.0 && target_rate <= 1.0)) fail(ErrorCode::RateOutOfSpan, "target rate must be in [0, 1]");

  std::optional<GainAtRate> best;
  double best_reach = -1.0;
  auto consider = [&](const GainAtRate& candidate, bool knot) {
    const double reach = std::abs(candidate.scalar);
    // Knots win ties so that hitting a knot returns its values exactly.
    if (!best || reach > best_reach || (knot && reach == best_reach)) {
      best = candidate;
      best_reach = reach;
    }
  };

  const auto& pts = curve.points;
  for (const auto& p : pts) {
    if (p.verified_rate == target_rate) consider({p.gain_mean, p.gain_std, p.scalar}, true);
  }
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const GainPoint& a = pts[i];
    const GainPoint& b = pts[i + 1];
    const double lo = std::min(a.verified_rate, b.verified_rate);
    const double hi = std::max(a.verified_rate, b.verified_rate);
    if (!(target_rate > lo && target_rate < hi)) continue;
    const double t = (target_rate - a.verified_rate) / (b.verified_rate - a.verified_rate);
    auto lerp = [t](double x, double y) { return std::clamp(x + t * (y - x), std::min(x, y), std::max(x, y)); };
    consider({lerp(a.gain_mean, b.gain_mean), lerp(a.gain_std, b.gain_std), lerp(a.scalar, b.scalar)}, false);
  }
  if (!best) fail(ErrorCode::RateOutOfSpan, "target rate " + csv::format_double(target_rate) + " not reached by curve");
  return *best;
}

std::vector<EvaluationRecord> load_records(const std::filesystem::path& path) {
  const auto rows = csv::read_file(path);
  if (rows.empty()) fail(ErrorCode::FormatError, "records CSV has no header");
  const csv::Header header(rows.front());
  const auto id = header.index("sample_id");
  const auto scalar = header.index("scalar");
  const auto score = header.find("fr_score");
  const auto distance = header.find("fr_distance");
  if (!score && !distance) fail(ErrorCode::FormatError, "records CSV needs fr_score or fr_distance");
  const auto est = header.index("estimated_age");
  const auto orig = header.index("original_age");
  const auto group = header.index("group");
  const std::size_t score_col = score ? *score : *distance;
  const std::size_t needed = std::max({id, scalar, score_col, est, orig, group});

  std::vector<EvaluationRecord> out;
  out.reserve(rows.size() - 1);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() <= needed) fail(ErrorCode::FormatError, "short records row " + std::to_string(r));
    EvaluationRecord rec;
    rec.sample_id = row[id];
    rec.scalar_s = csv::parse_double(row[scalar], "scalar");
    const double raw = csv::parse_double(row[score_col], score ? "fr_score" : "fr_distance");
    rec.fr_score = score ? raw : 1.0 - raw;
    rec.estimated_age = csv::parse_double(row[est], "estimated_age");
    rec.original_age = csv::parse_double(row[orig], "original_age");
    const long long g = csv::parse_int(row[group], "group");
    if (g < 0) fail(ErrorCode::FormatError, "negative group");
    rec.group = static_cast<std::size_t>(g);
    for (double v : {rec.scalar_s, rec.fr_score, rec.estimated_age, rec.original_age}) {
      if (!std::isfinite(v)) fail(ErrorCode::NonFiniteValue, "non-finite value in records row " + std::to_string(r));
    }
    out.push_back(std::move(rec));
  }
  return out;
}

EvaluationReport evaluate_records(std::span<const EvaluationRecord> records, double threshold, double cutoff,
                                  bool pooled, SweepOptions options) {
  if (records.empty()) fail(ErrorCode::EmptyRecords, "no evaluation records");
  EvaluationReport report;
  report.threshold = threshold;
  report.cutoff = cutoff;
  report.pooled = pooled;

  std::vector<std::optional<std::size_t>> partitions;
  if (pooled) {
    partitions.emplace_back();
  } else {
    std::set<std::size_t> groups;
    for (const auto& r : records) groups.insert(r.group);
    for (auto g : groups) partitions.emplace_back(g);
  }

  for (const auto& part : partitions) {
    std::vector<EvaluationRecord> subset;
    for (const auto& r : records) {
      if (!part || r.group == *part) subset.push_back(r);
    }
    const RecordsByScalar by_scalar = group_by_scalar(subset);
    for (auto direction : {EditDirection::Aging, EditDirection::Deaging}) {
      CurveReport entry;
      entry.group = part;
      entry.curve.direction = direction;
      try {
        entry.curve = sweep_curve(by_scalar, threshold, direction, options);
        entry.at_cutoff = gain_at_rate(entry.curve, cutoff);
      } catch (const Error& e) {
        entry.note = e.what();
      }
      report.curves.push_back(std::move(entry));
    }
  }
  return report;
}

std::string curve_to_csv(const GainCurve& curve) {
  std::ostringstream out;
  csv::write_row(out, {"scalar", "verified_rate", "gain_mean", "gain_std"});
  for (const auto& p : curve.points) {
    csv::write_row(out, {csv::format_double(p.scalar), csv::format_double(p.verified_rate),
                         csv::format_double(p.gain_mean), csv::format_double(p.gain_std)});
  }
  return out.str();
}

}  // namespace agesynth

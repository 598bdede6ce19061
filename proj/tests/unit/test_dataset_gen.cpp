#include "doctest.h"

#include <filesystem>
#include <map>
#include <random>

#include "agesynth/csv.hpp"
#include "agesynth/dataset_gen.hpp"
#include "agesynth/error.hpp"
#include "agesynth/hashing.hpp"
#include "agesynth/latent_io.hpp"
#include "test_support.hpp"

using namespace agesynth;
namespace fs = std::filesystem;

namespace {

// Every group maps scalar s to age 30 + 2 s, plus the group index as an offset.
CalibrationModel linear_calibration() {
  std::vector<CalibrationSample> samples;
  for (std::size_t g = 0; g < 4; ++g) {
    for (int s = -10; s <= 10; ++s) samples.push_back({g, static_cast<double>(s), 30.0 + 2.0 * s + static_cast<double>(g)});
  }
  return fit_group_curves(samples, AgeGroupScheme::four(), 1);
}

LatentSet identities(std::mt19937_64& rng, int n, int dim) {
  const auto [set, scaler] = standardize(LatentSet::from_matrix(agesynth::testing::gaussian_matrix(rng, n, dim)));
  std::vector<SampleMeta> meta = set.meta();
  for (std::size_t i = 0; i < meta.size(); ++i) {
    meta[i].identity_id = "person" + std::to_string(i);
    if (i % 2 == 0) meta[i].age_years = 20.0 + 5.0 * static_cast<double>(i);
  }
  return set.with_meta(meta);
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) out[e.path().filename().string()] = read_file_bytes(e.path());
  return out;
}

}  // namespace

TEST_CASE("plan picks offsets from each identity's own curve") {
  std::mt19937_64 rng(91);
  const LatentSet ids = identities(rng, 3, 8);
  const AgeDirection dir = make_direction(30.0, Vector::LinSpaced(8, 0.5, 1.5));
  const CalibrationModel calib = linear_calibration();
  const DatasetPlan plan = plan_dataset(ids, dir, calib, {25.0, 50.0});
  REQUIRE(plan.edits.size() == 2);
  CHECK(plan.failures.empty());
  CHECK(plan.original_ages[0] == 20.0);
  CHECK_FALSE(plan.original_age_predicted[0]);
  CHECK(plan.original_age_predicted[1]);
  CHECK(plan.original_ages[1] == doctest::Approx(predict_age(dir, ids.vectors().row(1).transpose())));

  // identity 0 is 20 years old -> group 1 (young adults), curve 31 + 2 s
  const auto& e = plan.edits[1][0];
  CHECK(e.row == 0);
  CHECK(e.scalar == doctest::Approx((50.0 - 31.0) / 2.0 - (20.0 - 31.0) / 2.0));
  CHECK_FALSE(e.fallback);
}

TEST_CASE("3 identities x 10 ages gives 10 files of 3 rows and a 30-row index") {
  std::mt19937_64 rng(92);
  agesynth::testing::TempDir tmp("gen_small");
  const LatentSet ids = identities(rng, 3, 16);
  const AgeDirection dir = make_direction(30.0, agesynth::testing::gaussian_matrix(rng, 16, 1).col(0));
  const auto result = generate_dataset(ids, dir, PhiWeights::ones(16), linear_calibration(), {}, tmp.path(), "fp");
  CHECK(result.complete);
  CHECK(result.written == 10);
  CHECK(result.rows == 30);
  for (double t : default_target_ages()) {
    const LatentSet out = load_latents(tmp / target_file_name(t));
    CHECK(out.size() == 3);
    CHECK(out.meta()[0].identity_id == "person0");
    CHECK(out.meta()[0].age_years == t);
    CHECK(out.standardized());
  }
  const auto index = csv::read_file(tmp / "index.csv");
  CHECK(index.size() == 31);
  CHECK(index[0] == std::vector<std::string>{"identity_id", "target_age", "scalar_used", "fallback_flag"});

  // running again finds everything in place
  const auto before = snapshot(tmp.path());
  const auto again = generate_dataset(ids, dir, PhiWeights::ones(16), linear_calibration(), {}, tmp.path(), "fp");
  CHECK(again.written == 0);
  CHECK(again.skipped == 10);
  CHECK(snapshot(tmp.path()) == before);
}

TEST_CASE("target equal to the anchor age leaves the latent in place") {
  std::mt19937_64 rng(93);
  agesynth::testing::TempDir tmp("gen_anchor");
  LatentSet ids = identities(rng, 2, 8);
  auto meta = ids.meta();
  meta[0].age_years = 31.0;  // p(0) of the young-adult curve
  ids = ids.with_meta(meta);
  const AgeDirection dir = make_direction(30.0, Vector::Ones(8));
  DatasetGenOptions options;
  options.target_ages = {31.0};
  generate_dataset(ids, dir, PhiWeights::ones(8), linear_calibration(), options, tmp.path(), "fp");
  const LatentSet out = load_latents(tmp / target_file_name(31.0));
  const auto index = csv::read_file(tmp / "index.csv");
  CHECK(std::abs(csv::parse_double(index[1][2], "scalar")) < 1e-9);
  CHECK((out.vectors().row(0) - ids.vectors().row(0).cast<float>().cast<double>()).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("interrupted generation resumes to identical output") {
  std::mt19937_64 rng(94);
  agesynth::testing::TempDir full_dir("gen_full");
  agesynth::testing::TempDir part_dir("gen_part");
  const LatentSet ids = identities(rng, 20, 32);
  const AgeDirection dir = make_direction(30.0, agesynth::testing::gaussian_matrix(rng, 32, 1).col(0));
  const auto calib = linear_calibration();

  generate_dataset(ids, dir, PhiWeights::ones(32), calib, {}, full_dir.path(), "fp");

  DatasetGenOptions limited;
  limited.max_new_outputs = 4;
  const auto first = generate_dataset(ids, dir, PhiWeights::ones(32), calib, limited, part_dir.path(), "fp");
  CHECK_FALSE(first.complete);
  CHECK(first.written == 4);
  // a half-written temporary file from the interruption must not matter
  write_file_atomic(part_dir / target_file_name(80.0), "garbage");
  const auto second = generate_dataset(ids, dir, PhiWeights::ones(32), calib, {}, part_dir.path(), "fp");
  CHECK(second.complete);
  CHECK(second.skipped == 4);
  CHECK(second.written == 6);
  CHECK(snapshot(part_dir.path()) == snapshot(full_dir.path()));

  // a different fingerprint regenerates everything
  const auto third = generate_dataset(ids, dir, PhiWeights::ones(32), calib, {}, part_dir.path(), "other");
  CHECK(third.written == 10);
}

TEST_CASE("thread count does not change the output") {
  std::mt19937_64 rng(95);
  agesynth::testing::TempDir a("gen_j1");
  agesynth::testing::TempDir b("gen_j4");
  const LatentSet ids = identities(rng, 50, 16);
  const AgeDirection dir = make_direction(30.0, agesynth::testing::gaussian_matrix(rng, 16, 1).col(0));
  DatasetGenOptions one;
  DatasetGenOptions four;
  four.jobs = 4;
  generate_dataset(ids, dir, PhiWeights::ones(16), linear_calibration(), one, a.path(), "fp");
  generate_dataset(ids, dir, PhiWeights::ones(16), linear_calibration(), four, b.path(), "fp");
  CHECK(snapshot(a.path()) == snapshot(b.path()));
}

TEST_CASE("hashing") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

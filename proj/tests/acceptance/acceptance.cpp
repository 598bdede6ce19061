#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <Eigen/SVD>
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>

#include "agesynth/age_direction.hpp"
#include "agesynth/calibrate.hpp"
#include "agesynth/component_masks.hpp"
#include "agesynth/dataset_gen.hpp"
#include "agesynth/error.hpp"
#include "agesynth/evaluate.hpp"
#include "agesynth/feature_select.hpp"
#include "agesynth/hashing.hpp"
#include "agesynth/json_io.hpp"
#include "agesynth/latent_io.hpp"
#include "cli_fixture.hpp"
#include "test_support.hpp"

using namespace agesynth;
namespace fs = std::filesystem;
using agesynth::testing::gaussian_matrix;
using agesynth::testing::TempDir;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Collects failed sub-checks of one criterion.
class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    ++total_;
    if (!ok && failures_.size() < 5) failures_.push_back(what);
    if (!ok) ++failed_;
  }
  void note(const std::string& text) { notes_.push_back(text); }

  [[nodiscard]] bool ok() const { return failed_ == 0; }
  [[nodiscard]] std::string summary() const {
    std::ostringstream s;
    s << (total_ - failed_) << "/" << total_ << " checks";
    for (const auto& n : notes_) s << "; " << n;
    for (const auto& f : failures_) s << "; failed: " << f;
    return s.str();
  }

 private:
  std::size_t total_ = 0;
  std::size_t failed_ = 0;
  std::vector<std::string> failures_;
  std::vector<std::string> notes_;
};

int g_failed = 0;

void criterion(const std::string& name, const std::function<void(Checks&)>& body) {
  Checks c;
  try {
    body(c);
  } catch (const std::exception& e) {
    c.expect(false, std::string("exception: ") + e.what());
  }
  std::cout << (c.ok() ? "PASS " : "FAIL ") << name << ": " << c.summary() << std::endl;
  if (!c.ok()) ++g_failed;
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

double cosine(const Vector& a, const Vector& b) { return a.dot(b) / (a.norm() * b.norm()); }

double horner(const std::vector<double>& c, double x) {
  double v = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * x + *it;
  return v;
}

std::vector<CalibrationSample> sample_truth(const std::vector<double>& truth, std::size_t group, int lo, int hi) {
  std::vector<CalibrationSample> out;
  for (int s = lo; s <= hi; ++s) out.push_back({group, static_cast<double>(s), horner(truth, s)});
  return out;
}

CalibrationModel linear_four_groups() {
  std::vector<CalibrationSample> samples;
  for (std::size_t g = 0; g < 4; ++g) {
    for (int s = -10; s <= 10; ++s) samples.push_back({g, static_cast<double>(s), 30.0 + 2.0 * s + static_cast<double>(g)});
  }
  return fit_group_curves(samples, AgeGroupScheme::four(), 1);
}

// ---------------------------------------------------------------------------

void svr_recovery() {
  criterion("SVR recovery", [](Checks& c) {
    std::mt19937_64 rng(1001);
    Vector truth = gaussian_matrix(rng, 32, 1).col(0);
    truth *= 8.0 / truth.norm();
    for (double noise : {0.0, 0.5}) {
      const LatentSet set = agesynth::testing::planted_age_set(rng, 200, 32, truth, 45.0, noise);
      const auto start = Clock::now();
      const AgeDirection dir = fit_age_direction(set);
      const double t = seconds_since(start);
      const double cos = cosine(dir.lambda_hat, truth);
      const double need = noise == 0.0 ? 0.999 : 0.98;
      c.expect(cos >= need, "cosine " + fmt(cos) + " at noise " + fmt(noise));
      c.expect(t < 2.0, "200x32 fit took " + fmt(t) + " s");
      c.note("noise " + fmt(noise) + ": cos " + fmt(cos) + ", " + fmt(t) + " s");
    }

    Vector big = gaussian_matrix(rng, 512, 1).col(0);
    big *= 8.0 / big.norm();
    const LatentSet set = agesynth::testing::planted_age_set(rng, 1336, 512, big, 45.0, 0.5);
    const auto start = Clock::now();
    const AgeDirection dir = fit_age_direction(set);
    const double t = seconds_since(start);
    c.expect(t < 30.0, "1336x512 fit took " + fmt(t) + " s");
    c.note("1336x512: " + fmt(t) + " s, " + std::to_string(dir.train_meta.iterations) + " sweeps, converged " +
           (dir.train_meta.converged ? "yes" : "no") + ", cos " + fmt(cosine(dir.lambda_hat, big)));
  });
}

void edit_algebra() {
  criterion("Edit algebra", [](Checks& c) {
    std::mt19937_64 rng(1002);
    std::uniform_real_distribution<double> scal(-30.0, 30.0);
    std::uniform_int_distribution<int> dim_of(1, 512);
    std::uniform_int_distribution<int> level(0, 3);
    for (int trial = 0; trial < 1000; ++trial) {
      const int dim = trial % 4 == 0 ? 512 : dim_of(rng);
      const Vector w0 = gaussian_matrix(rng, dim, 1, 3.0).col(0);
      const AgeDirection dir = make_direction(40.0, gaussian_matrix(rng, dim, 1).col(0));
      const double s = scal(rng);
      const double t = scal(rng);

      c.expect(edit_latent(w0, 0.0, dir) == w0, "s=0 identity");
      const Vector e = edit_latent(w0, s, dir);
      c.expect((edit_latent(e, t, dir) - edit_latent(w0, s + t, dir)).cwiseAbs().maxCoeff() <= 1e-9, "additivity");
      c.expect((edit_latent(e, -s, dir) - w0).cwiseAbs().maxCoeff() <= 1e-9, "inversion");

      PhiWeights phi = PhiWeights::ones(static_cast<std::size_t>(dim));
      for (int j = 0; j < dim; ++j) phi.weights(j) = std::array{0.0, 0.5, 1.0, 2.0}[static_cast<std::size_t>(level(rng))];
      c.expect(edit_latent_weighted(w0, 0.0, dir, phi) == w0, "weighted s=0 identity");
      const Vector ew = edit_latent_weighted(w0, s, dir, phi);
      bool frozen = true;
      for (int j = 0; j < dim; ++j) {
        if (phi.weights(j) == 0.0 && ew(j) != w0(j)) frozen = false;
      }
      c.expect(frozen, "masked components unchanged");
      c.expect((edit_latent_weighted(ew, t, dir, phi) - edit_latent_weighted(w0, s + t, dir, phi)).cwiseAbs().maxCoeff() <=
                   1e-9,
               "weighted additivity");
      c.expect((edit_latent_weighted(ew, -s, dir, phi) - w0).cwiseAbs().maxCoeff() <= 1e-9, "weighted inversion");
    }
  });
}

// Standardized set whose columns fall into `k` blocks, each block driven by one factor.
LatentSet block_factor_set(std::mt19937_64& rng, int n, int dim, int k) {
  const Matrix factors = gaussian_matrix(rng, n, k);
  Matrix raw = gaussian_matrix(rng, n, dim, 0.02);
  for (int j = 0; j < dim; ++j) raw.col(j) += factors.col(j % k);
  return standardize(LatentSet::from_matrix(raw)).first;
}

void pca_mask_criterion() {
  criterion("PCA mask", [](Checks& c) {
    std::mt19937_64 rng(1003);
    int planted_cases = 0;
    for (int k = 1; k <= 8; ++k) {
      for (int dim : {16, 24, 40}) {
        const LatentSet set = block_factor_set(rng, 500, dim, k);
        const ComponentMask mask = pca_mask(set, 0.95);
        std::vector<std::uint8_t> expected(static_cast<std::size_t>(dim), 0);
        std::fill(expected.begin(), expected.begin() + k, 1);
        c.expect(mask.bits == expected, "planted k=" + std::to_string(k) + " dim=" + std::to_string(dim) +
                                            " selected " + std::to_string(mask.count()));
        ++planted_cases;
      }
    }
    c.note(std::to_string(planted_cases) + " planted spectra");

    std::uniform_real_distribution<double> u(0.05, 0.999);
    int minimal = 0;
    for (int trial = 0; trial < 100; ++trial) {
      const Matrix raw = gaussian_matrix(rng, 80, 12) * gaussian_matrix(rng, 12, 12);
      const auto spectrum = pca_spectrum(raw);
      const double t = u(rng);
      const std::size_t k = select_by_cumulative_fraction(spectrum.eigenvalues, t);
      const double total = spectrum.eigenvalues.sum();
      const bool covers = spectrum.eigenvalues.head(static_cast<Eigen::Index>(k)).sum() >= t * total;
      const bool smallest = k == 1 || spectrum.eigenvalues.head(static_cast<Eigen::Index>(k - 1)).sum() < t * total;
      if (covers && smallest) ++minimal;
    }
    c.expect(minimal == 100, "minimality " + std::to_string(minimal) + "/100");
    c.note("minimality " + std::to_string(minimal) + "/100");
  });
}

LatentSet planted_class_set(std::mt19937_64& rng, int classes, int per_class, int dim, int planted, double separation) {
  Matrix m = gaussian_matrix(rng, classes * per_class, dim);
  std::vector<SampleMeta> meta(static_cast<std::size_t>(classes * per_class));
  for (int cl = 0; cl < classes; ++cl) {
    for (int k = 0; k < per_class; ++k) {
      const int r = cl * per_class + k;
      m(r, planted) += separation * cl;
      meta[static_cast<std::size_t>(r)].sample_id = std::to_string(r);
      meta[static_cast<std::size_t>(r)].identity_id = "id" + std::to_string(cl);
      meta[static_cast<std::size_t>(r)].age_group = static_cast<std::size_t>(cl);
    }
  }
  return standardize(LatentSet(m, meta)).first;
}

// Between-class scatter computed directly from class means.
Eigen::MatrixXd between_scatter(const Matrix& x, const std::vector<std::size_t>& label, std::size_t classes) {
  const Vector mean = x.colwise().mean().transpose();
  Eigen::MatrixXd sb = Eigen::MatrixXd::Zero(x.cols(), x.cols());
  for (std::size_t cl = 0; cl < classes; ++cl) {
    Vector m = Vector::Zero(x.cols());
    double count = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      if (label[static_cast<std::size_t>(i)] == cl) {
        m += x.row(i).transpose();
        count += 1.0;
      }
    }
    m /= count;
    sb += count * (m - mean) * (m - mean).transpose();
  }
  return sb;
}

void lda_pipeline() {
  criterion("LDA pipeline", [](Checks& c) {
    std::mt19937_64 rng(1004);
    double worst_rec = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      const int classes = 2 + trial % 7;
      const int dim = 8 + trial;
      const LatentSet set = planted_class_set(rng, classes, 25, dim, trial % dim, 3.0);
      std::vector<std::size_t> label;
      for (const auto& m : set.meta()) label.push_back(*m.age_group);

      const LdaBasis basis = lda_basis(set.vectors(), label);
      const double rec = (reconstruct(set.vectors(), basis) - set.vectors()).norm();
      worst_rec = std::max(worst_rec, rec);
      c.expect(rec < 1e-6, "full-retention Frobenius error " + fmt(rec));

      const Eigen::MatrixXd sb = between_scatter(set.vectors(), label, static_cast<std::size_t>(classes));
      const Eigen::JacobiSVD<Eigen::MatrixXd> svd(sb);
      const Vector sv = svd.singularValues();
      Eigen::Index rank = 0;
      for (Eigen::Index i = 0; i < sv.size(); ++i) rank += sv(i) > 1e-9 * sv(0) ? 1 : 0;
      c.expect(rank <= classes - 1, "rank(S_b) " + std::to_string(rank) + " with " + std::to_string(classes) + " classes");
      for (Eigen::Index i = classes - 1; i < basis.eigenvalues.size(); ++i) {
        c.expect(std::abs(basis.eigenvalues(i)) <= 1e-8 * basis.eigenvalues(0), "eigenvalue past classes-1 is not zero");
      }
    }
    c.note("worst full-retention error " + fmt(worst_rec));

    const LatentSet v_id = planted_class_set(rng, 6, 40, 16, 5, 4.0);
    const LatentSet v_age = planted_class_set(rng, 4, 50, 16, 11, 4.0);
    for (DistanceMetric metric : {DistanceMetric::Mse, DistanceMetric::Wasserstein, DistanceMetric::Covariance}) {
      const std::string name(to_string(metric));
      const LdaMasks masks = lda_masks(v_id, v_age, metric);
      c.expect(masks.id_star.count() == 1 && masks.id_star.bits[5] == 1, name + ": identity mask not isolated");
      c.expect(masks.age_star.count() == 1 && masks.age_star.bits[11] == 1, name + ": age mask not isolated");
      // the mask follows the metric's inequality direction
      for (const auto& [mask, profile] : {std::pair{&masks.id_star, &masks.id_profile}, {&masks.age_star, &masks.age_profile}}) {
        for (Eigen::Index j = 0; j < profile->psi.size(); ++j) {
          const bool bit = metric == DistanceMetric::Covariance ? profile->psi(j) > profile->mu_psi
                                                                : profile->psi(j) < profile->mu_psi;
          c.expect(mask->bits[static_cast<std::size_t>(j)] == (bit ? 1 : 0), name + ": inequality direction");
        }
      }
    }
  });
}

double sorted_w1(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double t = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) t += std::abs(a[i] - b[i]);
  return t / static_cast<double>(a.size());
}

double best_matching_w1(const std::vector<double>& a, std::vector<double> b) {
  std::sort(b.begin(), b.end());
  double best = INFINITY;
  do {
    double t = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) t += std::abs(a[i] - b[i]);
    best = std::min(best, t / static_cast<double>(a.size()));
  } while (std::next_permutation(b.begin(), b.end()));
  return best;
}

void wasserstein_oracle() {
  criterion("Wasserstein oracle", [](Checks& c) {
    std::mt19937_64 rng(1005);
    std::uniform_int_distribution<int> rows(1, 60);
    std::uniform_int_distribution<int> coarse(-3, 3);
    double worst = 0.0;
    int pairs = 0;
    for (int batch = 0; batch < 10; ++batch) {
      const int n = rows(rng);
      Matrix a = gaussian_matrix(rng, n, 100);
      Matrix b = gaussian_matrix(rng, n, 100, 2.5);
      if (batch % 3 == 0) {  // many ties
        for (Eigen::Index i = 0; i < a.size(); ++i) {
          a.data()[i] = coarse(rng);
          b.data()[i] = coarse(rng);
        }
      }
      const auto profile = component_distances(a, b, DistanceMetric::Wasserstein);
      for (Eigen::Index j = 0; j < 100; ++j) {
        std::vector<double> ca;
        std::vector<double> cb;
        for (int i = 0; i < n; ++i) {
          ca.push_back(a(i, j));
          cb.push_back(b(i, j));
        }
        const double expect = sorted_w1(ca, cb);
        worst = std::max(worst, std::abs(profile.psi(j) - expect));
        c.expect(std::abs(profile.psi(j) - expect) <= 1e-12, "column pair differs from sorted brute force");
        c.expect(std::abs(wasserstein_1d(ca, cb) - expect) <= 1e-12, "wasserstein_1d differs from sorted brute force");
        ++pairs;
      }
    }
    c.note(std::to_string(pairs) + " column pairs, worst " + fmt(worst));

    int exhaustive = 0;
    for (int n = 1; n <= 4; ++n) {
      for (int trial = 0; trial < 250; ++trial) {
        std::vector<double> a(static_cast<std::size_t>(n));
        std::vector<double> b(static_cast<std::size_t>(n));
        for (auto& x : a) x = trial % 2 ? coarse(rng) : gaussian_matrix(rng, 1, 1)(0, 0);
        for (auto& x : b) x = trial % 2 ? coarse(rng) : gaussian_matrix(rng, 1, 1)(0, 0);
        c.expect(std::abs(wasserstein_1d(a, b) - best_matching_w1(a, b)) <= 1e-12,
                 "permutation minimum differs at n=" + std::to_string(n));
        ++exhaustive;
      }
    }
    c.note(std::to_string(exhaustive) + " exhaustive permutation cases");
  });
}

void mask_algebra() {
  criterion("Mask algebra", [](Checks& c) {
    std::mt19937_64 rng(1006);
    std::uniform_int_distribution<int> dim_of(1, 512);
    std::uniform_real_distribution<double> density(0.0, 1.0);
    std::uniform_real_distribution<double> alpha_of(0.1, 3.0);
    for (int trial = 0; trial < 1000; ++trial) {
      const auto dim = static_cast<std::size_t>(dim_of(rng));
      std::bernoulli_distribution id_coin(density(rng));
      std::bernoulli_distribution age_coin(density(rng));
      ComponentMask id{std::vector<std::uint8_t>(dim), MaskProvenance::LdaId, DistanceMetric::Mse};
      ComponentMask age{std::vector<std::uint8_t>(dim), MaskProvenance::LdaAge, DistanceMetric::Mse};
      for (std::size_t i = 0; i < dim; ++i) {
        id.bits[i] = id_coin(rng);
        age.bits[i] = age_coin(rng);
      }
      const CombinedMasks m = combine_masks(id, age);
      bool disjoint = true;
      bool covers = true;
      for (std::size_t i = 0; i < dim; ++i) {
        const int a = m.age_only.bits[i];
        const int d = m.id_only.bits[i];
        const int b = m.both.bits[i];
        if (a + d + b > 1) disjoint = false;
        if ((a | b) != age.bits[i] || (d | b) != id.bits[i] || (a | d | b) != (id.bits[i] | age.bits[i])) covers = false;
        if (b != (id.bits[i] & age.bits[i])) covers = false;
      }
      c.expect(disjoint, "disjointness");
      c.expect(covers, "coverage");

      const PhiWeights age_only_phi = compose_phi(m.age_only, m.both, 1.0, 0.0);
      bool equal = true;
      for (std::size_t i = 0; i < dim; ++i) {
        if (age_only_phi.weights(static_cast<Eigen::Index>(i)) != static_cast<double>(m.age_only.bits[i])) equal = false;
      }
      c.expect(equal, "beta=0 differs from the age-only mask");
      const double alpha = alpha_of(rng);
      ComponentMask none = m.both;
      std::fill(none.bits.begin(), none.bits.end(), 0);
      c.expect(compose_phi(m.age_only, m.both, alpha, 0.0).weights == compose_phi(m.age_only, none, alpha, 1.0).weights,
               "beta=0 with alpha " + fmt(alpha));
    }
  });
}

void calibration_criterion() {
  criterion("Calibration", [](Checks& c) {
    std::mt19937_64 rng(1007);
    std::uniform_real_distribution<double> u(-1.0, 1.0);

    double worst_coeff = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
      const std::vector<double> line{30.0 + 20.0 * u(rng), 2.0 + u(rng)};
      const auto lin = fit_group_curves(sample_truth(line, 1, -10, 10), AgeGroupScheme::four(), 1);
      for (std::size_t i = 0; i < 2; ++i) worst_coeff = std::max(worst_coeff, std::abs(lin.curve(1).coeffs[i] - line[i]));
      const std::vector<double> cubic{25.0 + 10.0 * u(rng), 1.5 + u(rng), 0.02 * u(rng), 0.001 * u(rng)};
      const auto cub = fit_group_curves(sample_truth(cubic, 2, -30, 30), AgeGroupScheme::four(), 3);
      for (std::size_t i = 0; i < 4; ++i) worst_coeff = std::max(worst_coeff, std::abs(cub.curve(2).coeffs[i] - cubic[i]));
    }
    c.expect(worst_coeff < 1e-6, "coefficient error " + fmt(worst_coeff));
    c.note("worst coefficient error " + fmt(worst_coeff));

    std::uniform_real_distribution<double> slope(0.5, 3.0);
    std::uniform_real_distribution<double> frac(0.02, 0.98);
    double worst_trip = 0.0;
    double worst_anti = 0.0;
    for (int trial = 0; trial < 500; ++trial) {
      const std::vector<double> truth{10.0 + 50.0 * std::abs(u(rng)), slope(rng), 0.005 * u(rng), 0.001 * std::abs(u(rng))};
      const CalibrationModel model = fit_group_curves(sample_truth(truth, 0, -30, 30), AgeGroupScheme::four(), 3);
      const double lo = horner(truth, -30.0);
      const double hi = horner(truth, 30.0);
      const double ya = lo + frac(rng) * (hi - lo);
      const double yb = lo + frac(rng) * (hi - lo);
      const auto ab = scalar_offset(model, 0, ya, yb);
      const auto ba = scalar_offset(model, 0, yb, ya);
      c.expect(!ab.original.fallback_used && !ab.desired.fallback_used, "monotone truth used the fallback");
      worst_trip = std::max(worst_trip, std::abs(horner(truth, ab.original.scalar + ab.delta) - yb));
      worst_anti = std::max(worst_anti, std::abs(ab.delta + ba.delta));
    }
    c.expect(worst_trip < 0.01, "round trip " + fmt(worst_trip) + " years");
    c.expect(worst_anti <= 1e-9, "antisymmetry " + fmt(worst_anti));
    c.note("round trip " + fmt(worst_trip) + " years, antisymmetry " + fmt(worst_anti));

    // 30 + a (s^3 - r^2 s) crosses every level strictly between its local extremes three times.
    int ambiguous = 0;
    for (int trial = 0; trial < 200; ++trial) {
      const double a = 0.001 + 0.01 * std::abs(u(rng));
      const double r = 2.0 + 15.0 * std::abs(u(rng));
      const std::vector<double> truth{30.0, -a * r * r, 0.0, a};
      const CalibrationModel model = fit_group_curves(sample_truth(truth, 0, -30, 30), AgeGroupScheme::four(), 3);
      const double swing = horner(truth, -r / std::sqrt(3.0)) - 30.0;
      const double target = 30.0 + 0.9 * u(rng) * swing;
      int crossings = 0;
      double prev = horner(truth, -30.0) - target;
      for (int k = 1; k <= 60000; ++k) {
        const double v = horner(truth, -30.0 + k * 0.001) - target;
        if ((prev < 0.0) != (v < 0.0)) ++crossings;
        prev = v;
      }
      if (crossings < 2) continue;
      ++ambiguous;
      const auto sol = solve_scalar_for_age(model, 0, target);
      c.expect(sol.fallback_used, "ambiguous target did not take the fallback");
      const auto& g = model.curve(0);
      const LinearFit& line = target >= g.age_at(0.0) ? g.aging : g.deaging;
      const double expect = std::clamp((target - line.intercept) / line.slope, g.range.min, g.range.max);
      c.expect(std::abs(sol.scalar - expect) <= 1e-12, "fallback value");
    }
    c.expect(ambiguous >= 150, "too few ambiguous cases generated");
    c.note(std::to_string(ambiguous) + " ambiguous-root cases");
  });
}

std::optional<GainAtRate> oracle_gain_at(const GainCurve& curve, double r) {
  std::optional<GainAtRate> best;
  double reach = -1.0;
  for (const auto& p : curve.points) {
    if (p.verified_rate == r && std::abs(p.scalar) >= reach) {
      best = GainAtRate{p.gain_mean, p.gain_std, p.scalar};
      reach = std::abs(p.scalar);
    }
  }
  for (std::size_t i = 0; i + 1 < curve.points.size(); ++i) {
    const auto& a = curve.points[i];
    const auto& b = curve.points[i + 1];
    if ((r - a.verified_rate) * (r - b.verified_rate) >= 0.0) continue;
    const double t = (r - a.verified_rate) / (b.verified_rate - a.verified_rate);
    const double s = a.scalar + t * (b.scalar - a.scalar);
    if (std::abs(s) > reach) {
      best = GainAtRate{a.gain_mean + t * (b.gain_mean - a.gain_mean), a.gain_std + t * (b.gain_std - a.gain_std), s};
      reach = std::abs(s);
    }
  }
  return best;
}

void evaluation_criterion() {
  criterion("Evaluation", [](Checks& c) {
    std::mt19937_64 rng(1008);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_real_distribution<double> age(0.0, 90.0);

    double worst = 0.0;
    for (int trial = 0; trial < 500; ++trial) {
      std::vector<EvaluationRecord> recs;
      const int n = 1 + static_cast<int>(u(rng) * 80);
      for (int i = 0; i < n; ++i) recs.push_back({"r" + std::to_string(i), 1.0, 2.0 * u(rng) - 1.0, age(rng), age(rng), 0});
      const double threshold = u(rng) - 0.5;
      const auto v = verification_rate(recs, threshold);
      std::vector<double> diffs;
      for (const auto& r : recs) {
        if (r.fr_score >= threshold) diffs.push_back(r.estimated_age - r.original_age);
      }
      c.expect(v.rate == static_cast<double>(diffs.size()) / n, "verification rate");
      if (diffs.empty()) continue;
      const double mean = std::accumulate(diffs.begin(), diffs.end(), 0.0) / static_cast<double>(diffs.size());
      double var = 0.0;
      for (double d : diffs) var += (d - mean) * (d - mean);
      const double sd = std::sqrt(var / static_cast<double>(diffs.size()));
      const auto g = age_gain(recs, v.verified, EditDirection::Aging);
      worst = std::max({worst, std::abs(g.mean - mean), std::abs(g.std - sd)});
    }
    c.expect(worst <= 1e-12, "age gain differs from brute force by " + fmt(worst));
    c.note("age gain worst " + fmt(worst));

    std::uniform_real_distribution<double> gain(-10.0, 30.0);
    for (int trial = 0; trial < 500; ++trial) {
      const int n = 2 + static_cast<int>(u(rng) * 12);
      const bool aging = trial % 2 == 0;
      const bool monotone = trial % 3 != 0;
      std::vector<double> rates;
      for (int i = 0; i < n; ++i) rates.push_back(u(rng));
      if (monotone) std::sort(rates.rbegin(), rates.rend());
      GainCurve curve{{}, aging ? EditDirection::Aging : EditDirection::Deaging};
      for (int i = 0; i < n; ++i) {
        curve.points.push_back({(aging ? 1.0 : -1.0) * 0.5 * i, rates[static_cast<std::size_t>(i)], gain(rng), u(rng)});
      }

      for (const auto& p : curve.points) {
        const auto same = std::count_if(curve.points.begin(), curve.points.end(),
                                        [&](const GainPoint& q) { return q.verified_rate == p.verified_rate; });
        if (!monotone || same != 1) continue;
        const auto g = gain_at_rate(curve, p.verified_rate);
        c.expect(g.gain_mean == p.gain_mean && g.gain_std == p.gain_std && g.scalar == p.scalar, "knot not exact");
      }
      for (int k = 0; k < 10; ++k) {
        const double r = u(rng);
        const auto expect = oracle_gain_at(curve, r);
        if (!expect) {
          bool threw = false;
          try {
            gain_at_rate(curve, r);
          } catch (const Error& e) {
            threw = e.code() == ErrorCode::RateOutOfSpan;
          }
          c.expect(threw, "rate outside the curve was accepted");
          continue;
        }
        const auto g = gain_at_rate(curve, r);
        c.expect(std::abs(g.scalar - expect->scalar) < 1e-9 && std::abs(g.gain_mean - expect->gain_mean) < 1e-9,
                 "interpolation differs from oracle");
        const auto lo = static_cast<std::size_t>(std::floor(std::abs(g.scalar) / 0.5 + 1e-12));
        const auto hi = std::min(lo + 1, curve.points.size() - 1);
        const auto& pa = curve.points[lo];
        const auto& pb = curve.points[hi];
        c.expect(g.gain_mean >= std::min(pa.gain_mean, pb.gain_mean) - 1e-12 &&
                     g.gain_mean <= std::max(pa.gain_mean, pb.gain_mean) + 1e-12,
                 "gain outside its bracket");
        c.expect(r >= std::min(pa.verified_rate, pb.verified_rate) - 1e-12 &&
                     r <= std::max(pa.verified_rate, pb.verified_rate) + 1e-12,
                 "bracket does not contain the rate");
      }
    }
    c.note("500 random curves");

    std::vector<EvaluationRecord> recs;
    for (int i = 0; i < 400; ++i) recs.push_back({"m" + std::to_string(i), 0.0, 2.0 * u(rng) - 1.0, 30.0, 30.0, 0});
    double prev = 2.0;
    bool monotone = true;
    for (int k = 0; k <= 2400; ++k) {
      const double rate = verification_rate(recs, -1.2 + k * 0.001).rate;
      if (rate > prev) monotone = false;
      prev = rate;
    }
    c.expect(monotone, "verification rate not monotone in threshold");
  });
}

void determinism() {
  criterion("Determinism", [](Checks& c) {
    TempDir tmp("accept_cli");
    auto reset = [&] {
      for (const auto& e : fs::directory_iterator(tmp.path())) fs::remove_all(e.path());
      agesynth::testing::write_cli_fixture(tmp.path());
    };
    reset();
    const auto first = agesynth::testing::run_all_subcommands(tmp.path());
    const auto snap1 = agesynth::testing::tree_snapshot(tmp.path());
    reset();
    const auto second = agesynth::testing::run_all_subcommands(tmp.path());
    const auto snap2 = agesynth::testing::tree_snapshot(tmp.path());

    std::set<std::string> commands;
    for (std::size_t i = 0; i < first.size(); ++i) {
      c.expect(first[i].second.code == 0 && second[i].second.code == 0, first[i].first + " failed: " + first[i].second.err);
      c.expect(first[i].second.out == second[i].second.out, first[i].first + " stdout differs");
      commands.insert(first[i].first);
    }
    c.expect(snap1 == snap2, "output trees differ");

    int manifests = 0;
    for (const auto& [rel, bytes] : snap1) {
      if (rel.size() < 13 || rel.compare(rel.size() - 13, 13, "manifest.json") != 0) continue;
      const json m = json::parse(bytes);
      if (!m.contains("command")) continue;
      ++manifests;
      c.expect(snap2.count(rel) && json::parse(snap2.at(rel)) == m, rel + " differs");
      for (const auto& o : m["outputs"]) {
        c.expect(o["sha256"] == sha256_file(o["path"].get<std::string>()), rel + ": recorded hash does not match");
      }
    }
    c.note(std::to_string(first.size()) + " runs, " + std::to_string(snap1.size()) + " files, " +
           std::to_string(manifests) + " run manifests");
  });
}

// ---------------------------------------------------------------------------

LatentSet synthetic_identities(std::mt19937_64& rng, int n, int dim) {
  const LatentSet set = standardize(LatentSet::from_matrix(agesynth::testing::as_float32(gaussian_matrix(rng, n, dim)))).first;
  std::uniform_real_distribution<double> age(1.0, 85.0);
  std::vector<SampleMeta> meta = set.meta();
  for (std::size_t i = 0; i < meta.size(); ++i) {
    meta[i].sample_id = "face" + std::to_string(i);
    meta[i].identity_id = "person" + std::to_string(i);
    meta[i].age_years = std::round(age(rng));
  }
  return set.with_meta(meta);
}

std::map<std::string, std::string> hash_tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = sha256_file(e.path());
  }
  return out;
}

int run_cli_process(const std::vector<std::string>& args) {
  const pid_t pid = fork();
  if (pid == 0) {
    std::vector<char*> argv;
    std::string exe = AGESYNTH_CLI_PATH;
    argv.push_back(exe.data());
    std::vector<std::string> copy = args;
    for (auto& a : copy) argv.push_back(a.data());
    argv.push_back(nullptr);
    const int null_fd = ::open("/dev/null", O_WRONLY);
    ::dup2(null_fd, 1);
    ::dup2(null_fd, 2);
    ::execv(exe.c_str(), argv.data());
    _exit(127);
  }
  return pid;
}

int wait_exit(pid_t pid) {
  int status = 0;
  ::waitpid(pid, &status, 0);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -WTERMSIG(status);
}

std::size_t recorded_outputs(const fs::path& manifest) {
  try {
    return read_json_file(manifest)["outputs"].size();
  } catch (const std::exception&) {
    return 0;
  }
}

void throughput() {
  criterion("Throughput", [](Checks& c) {
    std::mt19937_64 rng(1010);
    const int n = 20000;
    const int dim = 512;
    const LatentSet ids = synthetic_identities(rng, n, dim);
    const AgeDirection dir = make_direction(40.0, gaussian_matrix(rng, dim, 1).col(0));
    const CalibrationModel calib = linear_four_groups();
    PhiWeights phi = PhiWeights::ones(static_cast<std::size_t>(dim));
    for (int j = 0; j < dim; j += 3) phi.weights(j) = 0.0;

    const auto start = Clock::now();
    const DatasetPlan plan = plan_dataset(ids, dir, calib, default_target_ages());
    std::size_t edits = 0;
    for (std::size_t t = 0; t < plan.target_ages.size(); ++t) {
      edits += render_target(ids, plan, t, dir, phi, calib.scheme).size();
    }
    const double elapsed = seconds_since(start);
    c.expect(edits == 200000, std::to_string(edits) + " edits");
    c.expect(elapsed < 60.0, "edits took " + fmt(elapsed) + " s");
    c.note(std::to_string(edits) + " weighted edits in " + fmt(elapsed) + " s");

    TempDir tmp("accept_gen");
    save_latents(ids, tmp / "ids.latw");
    write_file_atomic(tmp / "direction.json", dump_json(to_json(dir)));
    write_file_atomic(tmp / "phi.json", dump_json(to_json(phi)));
    write_file_atomic(tmp / "calib.json", dump_json(to_json(calib)));
    const fs::path out = tmp / "gen";
    const std::vector<std::string> args{"gen-dataset", "--latents", (tmp / "ids.latw").string(), "--direction",
                                        (tmp / "direction.json").string(), "--phi", (tmp / "phi.json").string(),
                                        "--calib", (tmp / "calib.json").string(), "--out", out.string()};

    const auto full_start = Clock::now();
    c.expect(wait_exit(run_cli_process(args)) == 0, "uninterrupted run failed");
    const double full_time = seconds_since(full_start);
    const auto reference = hash_tree(out);
    c.expect(reference.count("index.csv") == 1, "uninterrupted run left no index");
    fs::remove_all(out);

    const pid_t victim = run_cli_process(args);
    const auto deadline = Clock::now() + std::chrono::seconds(300);
    while (recorded_outputs(out / "gen_manifest.json") < 3 && Clock::now() < deadline) {
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    ::kill(victim, SIGKILL);
    const int killed = wait_exit(victim);
    const std::size_t before = recorded_outputs(out / "gen_manifest.json");
    c.expect(killed == -SIGKILL, "run finished before it could be killed");
    c.expect(!fs::exists(out / "index.csv"), "killed run already complete");

    c.expect(wait_exit(run_cli_process(args)) == 0, "restarted run failed");
    c.expect(hash_tree(out) == reference, "resumed output differs from the uninterrupted run");
    c.note("CLI run " + fmt(full_time) + " s; killed after " + std::to_string(before) + "/10 targets, resumed to identical output");
  });
}

}  // namespace

int main() {
  svr_recovery();
  edit_algebra();
  pca_mask_criterion();
  lda_pipeline();
  wasserstein_oracle();
  mask_algebra();
  calibration_criterion();
  evaluation_criterion();
  determinism();
  throughput();
  std::cout << (g_failed == 0 ? "all criteria passed" : std::to_string(g_failed) + " criteria failed") << std::endl;
  return g_failed == 0 ? 0 : 1;
}

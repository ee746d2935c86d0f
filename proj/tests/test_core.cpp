#include <Eigen/Dense>
#include <cmath>

#include "doctest.h"
#include "dro/core.hpp"
#include "oracles.hpp"

using dro::ProbVector;
using Eigen::VectorXd;

namespace {
VectorXd make_vec(std::initializer_list<double> vals) {
  VectorXd v(static_cast<Eigen::Index>(vals.size()));
  Eigen::Index i = 0;
  for (double x : vals) v[i++] = x;
  return v;
}
}  // namespace

TEST_CASE("make_rng uses the affine seed scheme") {
  CHECK(dro::make_rng(1000, 0, 0).seed() == 1000);
  CHECK(dro::make_rng(1000, 2, 500).seed() == 1534);

  dro::RngStream a = dro::make_rng(1000, 2, 500);
  dro::RngStream b = dro::make_rng(1000, 2, 500);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("distinct seeds give statistically independent-looking streams") {
  // First-moment sanity: means of disjoint streams agree with 1/2.
  for (std::uint64_t seed : {1ULL, 2ULL, 999ULL}) {
    dro::RngStream rng(seed);
    double mean = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) mean += rng.next_double();
    mean /= n;
    CHECK(std::abs(mean - 0.5) < 0.01);
  }
}

TEST_CASE("normal and gamma draws have the right first moments") {
  dro::RngStream rng(7);
  const int n = 50000;
  double mean = 0.0, var = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.next_normal();
    mean += z;
    var += z * z;
  }
  mean /= n;
  var = var / n - mean * mean;
  CHECK(std::abs(mean) < 0.02);
  CHECK(std::abs(var - 1.0) < 0.03);

  double gmean = 0.0;
  for (int i = 0; i < n; ++i) gmean += rng.next_gamma(0.3);
  CHECK(std::abs(gmean / n - 0.3) < 0.02);
}

TEST_CASE("project_simplex on pinned inputs") {
  const ProbVector a = dro::project_simplex(make_vec({0.3, 0.7}));
  CHECK(a[0] == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(a[1] == doctest::Approx(0.7).epsilon(1e-12));

  const ProbVector b = dro::project_simplex(make_vec({2.0, 0.0}));
  CHECK(b[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(b[1] == doctest::Approx(0.0).epsilon(1e-12));

  const ProbVector c = dro::project_simplex(make_vec({0.6, 0.6}));
  CHECK(c[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(c[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("project_simplex rejects non-finite input") {
  CHECK_THROWS_AS(dro::project_simplex(make_vec({1.0, std::nan("")})),
                  std::invalid_argument);
  CHECK_THROWS_AS(dro::project_simplex(VectorXd()), std::invalid_argument);
}

TEST_CASE("project_simplex is idempotent and optimal") {
  dro::RngStream rng(42);
  dro::RngStream oracle_rng(43);
  for (int trial = 0; trial < 1000; ++trial) {
    const VectorXd v = 3.0 * dro::draw_normal_vector(rng, 5);
    const ProbVector p = dro::project_simplex(v);

    const ProbVector again = dro::project_simplex(p.vec());
    CHECK((again.vec() - p.vec()).lpNorm<Eigen::Infinity>() < 1e-12);

    // KKT certificate: active coordinates share one shift, inactive ones sit
    // below it.
    double tau = 0.0;
    int active = 0;
    for (Eigen::Index i = 0; i < 5; ++i)
      if (p[i] > 0.0) {
        tau += v[i] - p[i];
        ++active;
      }
    tau /= active;
    for (Eigen::Index i = 0; i < 5; ++i) {
      if (p[i] > 0.0)
        CHECK(std::abs(v[i] - p[i] - tau) < 1e-9);
      else
        CHECK(v[i] <= tau + 1e-9);
    }

    // No random simplex candidate may be strictly closer.
    const double ours = (p.vec() - v).squaredNorm();
    const double cand = oracles::closest_simplex_candidate_sqdist(v, 50, oracle_rng);
    CHECK(ours <= cand + 1e-8);
  }
}

TEST_CASE("fit_loglog_slope recovers planted exponents") {
  VectorXd xs = make_vec({10, 20, 40, 80, 160});
  VectorXd ys(5), zs(5), cs(5);
  for (int i = 0; i < 5; ++i) {
    ys[i] = std::pow(xs[i], -0.5);
    zs[i] = 3.0 * std::pow(xs[i], -0.25);
    cs[i] = 2.0;
  }
  CHECK(dro::fit_loglog_slope(xs, ys) == doctest::Approx(-0.5).epsilon(1e-10));
  CHECK(dro::fit_loglog_slope(xs, zs) == doctest::Approx(-0.25).epsilon(1e-10));
  CHECK(dro::fit_loglog_slope(xs, cs) == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("fit_loglog_slope validates input") {
  CHECK_THROWS_AS(dro::fit_loglog_slope(make_vec({1.0}), make_vec({1.0})),
                  std::invalid_argument);
  CHECK_THROWS_AS(dro::fit_loglog_slope(make_vec({1.0, 2.0}), make_vec({1.0, -2.0})),
                  std::invalid_argument);
  CHECK_THROWS_AS(dro::fit_loglog_slope(make_vec({2.0, 1.0}), make_vec({1.0, 1.0})),
                  std::invalid_argument);
  CHECK_THROWS_AS(dro::fit_loglog_slope(make_vec({1.0, 2.0}), make_vec({1.0, 1.0, 1.0})),
                  std::invalid_argument);
}

TEST_CASE("ProbVector validates and normalizes") {
  CHECK_THROWS_AS(ProbVector(make_vec({0.5, 0.4})), std::invalid_argument);
  CHECK_THROWS_AS(ProbVector(make_vec({1.1, -0.1})), std::invalid_argument);
  const ProbVector u = ProbVector::uniform(4);
  CHECK(u.vec().sum() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("multinomial counts sum to n") {
  dro::RngStream rng(11);
  const ProbVector p = dro::draw_dirichlet(rng, 0.3, 15);
  const Eigen::VectorXi counts = dro::draw_multinomial_counts(rng, 5000, p);
  CHECK(counts.sum() == 5000);
  CHECK(counts.minCoeff() >= 0);
}

#include <Eigen/Dense>
#include <cmath>

#include "doctest.h"
#include "dro/solvers.hpp"
#include "oracles.hpp"

using dro::chi2_dual_solve;
using dro::InnerSolution;
using dro::kl_tilt_weights;
using dro::mixture_chi2_argmax;
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

TEST_CASE("chi2 dual: flat losses admit no tilt") {
  const VectorXd losses = VectorXd::Constant(5, 3.25);
  const InnerSolution sol = chi2_dual_solve(losses, 0.7);
  CHECK(sol.value == doctest::Approx(3.25).epsilon(1e-12));
  CHECK(sol.dual.eta == doctest::Approx(3.25).epsilon(1e-12));
  for (int i = 0; i < 5; ++i) CHECK(sol.weights[i] == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("chi2 dual: two-point instance solved by hand and by grid") {
  // For losses (0,1), rho = 0.125 the ball is w2 <= 0.75, so the worst case
  // puts 0.75 on the larger loss: value 0.75, eta* = -0.5.
  const VectorXd losses = make_vec({0.0, 1.0});
  const InnerSolution sol = chi2_dual_solve(losses, 0.125);
  CHECK(sol.value == doctest::Approx(0.75).epsilon(1e-6));
  CHECK(sol.dual.eta == doctest::Approx(-0.5).epsilon(1e-6));
  CHECK(sol.weights[0] == doctest::Approx(0.25).epsilon(1e-6));
  CHECK(sol.weights[1] == doctest::Approx(0.75).epsilon(1e-6));

  CHECK(std::abs(sol.value - oracles::chi2_dual_grid(losses, 0.125)) < 1e-4);
}

TEST_CASE("chi2 dual: single loss and small-rho limit") {
  CHECK(chi2_dual_solve(make_vec({5.0}), 0.1).value == doctest::Approx(5.0).epsilon(1e-10));

  const VectorXd losses = make_vec({0.2, 0.9, 0.4, 0.7});
  const double mean = losses.mean();
  for (double rho : {1e-8, 1e-6, 1e-4}) {
    const double value = chi2_dual_solve(losses, rho).value;
    CHECK(value >= mean - 1e-10);
    CHECK(value - mean < 2.0 * std::sqrt(2.0 * rho) + 1e-8);
  }
}

TEST_CASE("chi2 dual equals grid and primal oracles on random instances") {
  dro::RngStream rng(2024);
  const double rhos[] = {0.01, 0.1, 1.0};
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng.next_u64() % 6);
    VectorXd losses(n);
    for (int i = 0; i < n; ++i) losses[i] = 2.0 * rng.next_double() - 0.5;
    const double rho = rhos[trial % 3];

    const InnerSolution sol = chi2_dual_solve(losses, rho);
    CHECK(std::abs(sol.value - oracles::chi2_dual_grid(losses, rho)) < 1e-4);
    CHECK(std::abs(sol.value - oracles::chi2_primal_enum(losses, rho)) < 1e-3);
    if (n == 2)
      CHECK(std::abs(sol.value -
                     oracles::chi2_primal_grid2(Eigen::Vector2d(losses[0], losses[1]), rho)) <
            1e-3);

    CHECK(sol.value >= losses.mean() - 1e-10);
    CHECK(std::abs(sol.weights.vec().sum() - 1.0) < 1e-12);
    CHECK(sol.weights.vec().dot(losses) == doctest::Approx(sol.value).epsilon(1e-6));
  }
}

TEST_CASE("chi2 dual value is nondecreasing in rho") {
  dro::RngStream rng(5);
  VectorXd losses(5);
  for (int i = 0; i < 5; ++i) losses[i] = rng.next_normal();
  double prev = losses.mean();
  for (double rho : {0.01, 0.05, 0.2, 0.5, 1.0, 3.0, 10.0}) {
    const double value = chi2_dual_solve(losses, rho).value;
    CHECK(value >= prev - 1e-10);
    prev = value;
  }
  // Large rho saturates at the maximum loss.
  CHECK(chi2_dual_solve(losses, 1e6).value == doctest::Approx(losses.maxCoeff()).epsilon(1e-6));
}

TEST_CASE("chi2 dual rejects bad input") {
  CHECK_THROWS_AS(chi2_dual_solve(VectorXd(), 0.1), std::invalid_argument);
  CHECK_THROWS_AS(chi2_dual_solve(make_vec({1.0}), 0.0), std::invalid_argument);
  CHECK_THROWS_AS(chi2_dual_solve(make_vec({std::nan("")}), 0.1), std::invalid_argument);
}

TEST_CASE("kl tilt: hand instance, limits, monotonicity") {
  const VectorXd equal = VectorXd::Constant(4, 2.0);
  const InnerSolution uniform = kl_tilt_weights(equal, 1.0);
  for (int i = 0; i < 4; ++i) CHECK(uniform.weights[i] == doctest::Approx(0.25));

  const VectorXd losses = make_vec({0.0, 1.0});
  const InnerSolution sol = kl_tilt_weights(losses, 1.0);
  const double e = std::exp(1.0);
  CHECK(sol.weights[0] == doctest::Approx(1.0 / (1.0 + e)).epsilon(1e-12));
  CHECK(sol.weights[1] == doctest::Approx(e / (1.0 + e)).epsilon(1e-12));
  CHECK(sol.value == doctest::Approx(e / (1.0 + e)).epsilon(1e-12));

  const InnerSolution flat = kl_tilt_weights(losses, 1e9);
  CHECK(flat.weights[0] == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(flat.value == doctest::Approx(0.5).epsilon(1e-8));

  // Monotone: larger loss, at-least-as-large weight (strict when distinct);
  // the tilt never decreases the objective.
  dro::RngStream rng(9);
  VectorXd random_losses(8);
  for (int i = 0; i < 8; ++i) random_losses[i] = rng.next_normal();
  const InnerSolution mono = kl_tilt_weights(random_losses, 0.5);
  CHECK(mono.value >= random_losses.mean() - 1e-10);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j)
      if (random_losses[i] > random_losses[j]) CHECK(mono.weights[i] > mono.weights[j]);
}

TEST_CASE("kl tilt survives extreme ranges via max subtraction") {
  const VectorXd losses = make_vec({0.0, 5000.0});
  const InnerSolution sol = kl_tilt_weights(losses, 1.0);
  CHECK(std::isfinite(sol.value));
  CHECK(sol.weights[1] == doctest::Approx(1.0).epsilon(1e-12));

  // Clamped temperature keeps tiny tau finite too.
  const InnerSolution clamped = kl_tilt_weights(losses, 1e-12);
  CHECK(std::isfinite(clamped.value));
  CHECK(clamped.value == doctest::Approx(5000.0).epsilon(1e-9));
}

TEST_CASE("wasserstein penalty formula") {
  CHECK(dro::wasserstein_penalty(VectorXd::Zero(6), 3.0) == doctest::Approx(0.0));
  CHECK(dro::wasserstein_penalty(VectorXd::Ones(4), 2.0) == doctest::Approx(2.0).epsilon(1e-15));
  const VectorXd g = make_vec({0.3, 1.9, 0.1});
  CHECK(dro::wasserstein_penalty(g, 2.6) ==
        doctest::Approx(2.0 * dro::wasserstein_penalty(g, 1.3)).epsilon(1e-12));
  CHECK_THROWS_AS(dro::wasserstein_penalty(make_vec({-0.1}), 1.0), std::invalid_argument);
}

TEST_CASE("mixture chi2: flat losses return the reference") {
  const ProbVector p(make_vec({0.2, 0.3, 0.5}));
  const VectorXd a = VectorXd::Constant(3, 1.7);
  const InnerSolution sol = mixture_chi2_argmax(a, p, 0.3);
  CHECK(sol.value == doctest::Approx(1.7).epsilon(1e-12));
  for (int i = 0; i < 3; ++i) CHECK(sol.weights[i] == doctest::Approx(p[i]).epsilon(1e-12));
}

TEST_CASE("mixture chi2: interior hand instance") {
  const ProbVector p(make_vec({0.5, 0.5}));
  const VectorXd a = make_vec({0.0, 1.0});
  const InnerSolution sol = mixture_chi2_argmax(a, p, 0.04);
  CHECK(sol.value == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(sol.weights[0] == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(sol.weights[1] == doctest::Approx(0.6).epsilon(1e-12));

  const double grid = oracles::mixture_grid_k2(Eigen::Vector2d(0, 1),
                                               Eigen::Vector2d(0.5, 0.5), 0.04);
  CHECK(std::abs(sol.value - grid) < 1e-4);
}

TEST_CASE("mixture chi2: large-radius boundary instance matches the grid") {
  const ProbVector p(make_vec({0.9, 0.1}));
  const VectorXd a = make_vec({0.0, 10.0});
  const InnerSolution sol = mixture_chi2_argmax(a, p, 5.0);
  const double grid =
      oracles::mixture_grid_k2(Eigen::Vector2d(0, 10), Eigen::Vector2d(0.9, 0.1), 5.0);
  CHECK(std::abs(sol.value - grid) < 1e-3);
  CHECK(dro::chi2_divergence(sol.weights, p) <= 5.0 + 1e-8);
}

TEST_CASE("mixture chi2: rho beyond the vertex divergence returns the vertex") {
  const ProbVector p(make_vec({0.6, 0.4}));
  const VectorXd a = make_vec({1.0, 2.0});
  // Divergence of the vertex e2 is (1 - 0.4)/0.4 = 1.5.
  const InnerSolution sol = mixture_chi2_argmax(a, p, 2.0);
  CHECK(sol.value == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(sol.weights[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("mixture chi2: random instances stay feasible and beat the mean") {
  dro::RngStream rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    const int k = 2 + static_cast<int>(rng.next_u64() % 6);
    const ProbVector p = dro::draw_dirichlet(rng, 1.0, k);
    VectorXd a(k);
    for (int i = 0; i < k; ++i) a[i] = 2.0 * rng.next_normal();
    const double rho = std::exp(2.0 * rng.next_normal());

    const InnerSolution sol = mixture_chi2_argmax(a, p, rho);
    CHECK(std::abs(sol.weights.vec().sum() - 1.0) < 1e-12);
    CHECK(sol.weights.vec().minCoeff() >= 0.0);
    CHECK(dro::chi2_divergence(sol.weights, p) <= rho + 1e-8);
    CHECK(sol.value >= p.vec().dot(a) - 1e-10);

    // Interior candidate, when feasible, must be the answer with the closed
    // form value.
    const double mu = p.vec().dot(a);
    const double vp = (p.vec().array() * (a.array() - mu).square()).sum();
    if (vp > 1e-12) {
      const double t = std::sqrt(rho / vp);
      const VectorXd interior = p.vec().array() * (1.0 + t * (a.array() - mu));
      if (interior.minCoeff() >= 0.0)
        CHECK(sol.value == doctest::Approx(mu + std::sqrt(rho * vp)).epsilon(1e-10));
    }
  }
}

TEST_CASE("mixture chi2 value is affine-equivariant in the losses") {
  dro::RngStream rng(67);
  for (int trial = 0; trial < 100; ++trial) {
    const int k = 3 + static_cast<int>(rng.next_u64() % 4);
    const ProbVector p = dro::draw_dirichlet(rng, 0.7, k);
    VectorXd a(k);
    for (int i = 0; i < k; ++i) a[i] = rng.next_normal();
    const double rho = 0.5 * rng.next_double() + 0.01;
    const double c = 0.2 + 2.0 * rng.next_double();
    const double b = rng.next_normal();

    const double base = mixture_chi2_argmax(a, p, rho).value;
    const double scaled = mixture_chi2_argmax((c * a.array() + b).matrix(), p, rho).value;
    CHECK(scaled == doctest::Approx(c * base + b).epsilon(1e-9));
  }
}

TEST_CASE("mixture chi2: clip-renormalize mode is a distinct heuristic") {
  // On a boundary instance the heuristic stays feasible for the simplex but
  // generally returns a smaller objective than the exact KKT solution.
  const ProbVector p(make_vec({0.05, 0.15, 0.8}));
  const VectorXd a = make_vec({5.0, 1.0, 0.0});
  const double rho = 3.0;
  const InnerSolution exact = mixture_chi2_argmax(a, p, rho);
  const InnerSolution clipped =
      mixture_chi2_argmax(a, p, rho, dro::MixtureSolveMode::clip_renormalize);
  CHECK(clipped.weights.vec().minCoeff() >= 0.0);
  CHECK(exact.value >= clipped.weights.vec().dot(a) - 1e-9);
  const double grid = oracles::mixture_grid_k3(Eigen::Vector3d(5, 1, 0),
                                               Eigen::Vector3d(0.05, 0.15, 0.8), rho, 1e-3);
  CHECK(std::abs(exact.value - grid) < 2e-3);
}

TEST_CASE("mixture chi2 validation") {
  const VectorXd a = make_vec({0.0, 1.0});
  CHECK_THROWS_AS(mixture_chi2_argmax(a, ProbVector(make_vec({1.0, 0.0})), 0.1),
                  std::invalid_argument);
  CHECK_THROWS_AS(mixture_chi2_argmax(make_vec({1.0}), ProbVector(make_vec({1.0})), 0.1),
                  std::invalid_argument);
  CHECK_THROWS_AS(mixture_chi2_argmax(a, ProbVector(make_vec({0.5, 0.5})), -0.1),
                  std::invalid_argument);
}

TEST_CASE("chi2 ball membership") {
  const ProbVector p(make_vec({0.5, 0.5}));
  const ProbVector q(make_vec({0.6, 0.4}));
  CHECK(dro::chi2_ball_contains(p, p, 0.0));
  CHECK(dro::chi2_ball_contains(q, p, 0.04));
  CHECK_FALSE(dro::chi2_ball_contains(q, p, 0.039));
  CHECK(dro::chi2_divergence(q, p) == doctest::Approx(0.04).epsilon(1e-12));
  CHECK_THROWS_AS(dro::chi2_divergence(p, ProbVector(make_vec({1.0, 0.0}))),
                  std::invalid_argument);
}

TEST_CASE("ambiguity spec validation") {
  CHECK_THROWS_AS(dro::validate(dro::AmbiguitySpec(dro::Chi2Spec{0.0})),
                  std::invalid_argument);
  CHECK_THROWS_AS(dro::validate(dro::AmbiguitySpec(dro::KlSpec{-1.0})),
                  std::invalid_argument);
  CHECK_THROWS_AS(dro::validate(dro::AmbiguitySpec(dro::WassersteinSpec{-0.5})),
                  std::invalid_argument);
  CHECK_NOTHROW(dro::validate(dro::AmbiguitySpec(dro::MixtureChi2Spec{0.0})));
  CHECK(std::string(dro::kind_name(dro::AmbiguitySpec(dro::Chi2Spec{1.0}))) == "chi2");
}

#include <Eigen/Dense>
#include <cmath>

#include "doctest.h"
#include "dro/losses.hpp"
#include "dro/simulator.hpp"

using dro::bound_constants;
using dro::PreferenceSample;
using Eigen::VectorXd;

namespace {
PreferenceSample make_sample(std::initializer_list<double> dpsi, double dr, int y) {
  PreferenceSample s;
  s.dpsi = VectorXd(static_cast<Eigen::Index>(dpsi.size()));
  Eigen::Index i = 0;
  for (double x : dpsi) s.dpsi[i++] = x;
  s.dr = dr;
  s.y = y;
  return s;
}

// Admissible draw: theta in the B-ball, |dpsi| <= 2 from two unit features,
// |dr| <= 2F.
PreferenceSample random_admissible(dro::RngStream& rng, int d, double F) {
  VectorXd a1 = dro::draw_normal_vector(rng, d);
  a1 /= a1.norm();
  VectorXd a2 = dro::draw_normal_vector(rng, d);
  a2 /= a2.norm();
  PreferenceSample s;
  s.dpsi = a1 - a2;
  s.dr = 2.0 * F * (2.0 * rng.next_double() - 1.0);
  s.y = rng.next_double() < 0.5 ? 0 : 1;
  return s;
}

VectorXd random_ball(dro::RngStream& rng, int d, double B) {
  VectorXd v = dro::draw_normal_vector(rng, d);
  return v * (B * std::pow(rng.next_double(), 1.0 / d) / v.norm());
}
}  // namespace

TEST_CASE("bound constants formulas") {
  const auto c = bound_constants(1.0, 1.0, 1.0);
  CHECK(c.k_g == doctest::Approx(10.0));
  CHECK(c.k_loss == doctest::Approx(100.0));
  CHECK(c.lipschitz == doctest::Approx(40.0));

  CHECK(bound_constants(1.0, 1.0, 2.0).k_g == doctest::Approx(4.0 + 2.0));
  CHECK(bound_constants(1.0, 0.5, 1.0).k_g == doctest::Approx(9.0));
  CHECK_THROWS_AS(bound_constants(0.0, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("rebel loss pinned values") {
  const VectorXd zero = VectorXd::Zero(2);
  PreferenceSample s = make_sample({1.0, 0.0}, 0.0, 1);
  CHECK(dro::rebel_loss(s, zero, zero, 1.0) == doctest::Approx(0.0));

  VectorXd theta(2);
  theta << 0.7, 0.0;
  CHECK(dro::rebel_loss(s, theta, zero, 0.7) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(dro::rebel_loss(s, theta, zero, 0.0), std::invalid_argument);
}

TEST_CASE("rebel loss boundedness and Lipschitz over admissible draws") {
  const double B = 1.0, F = 1.0, eta = 1.0;
  const auto c = bound_constants(B, F, eta);
  dro::RngStream rng(99);
  int violations = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const PreferenceSample s = random_admissible(rng, 6, F);
    const VectorXd theta = random_ball(rng, 6, B);
    const VectorXd theta_t = random_ball(rng, 6, B);
    if (dro::rebel_loss(s, theta, theta_t, eta) > c.k_loss) ++violations;
  }
  CHECK(violations == 0);

  for (int trial = 0; trial < 1000; ++trial) {
    const PreferenceSample s = random_admissible(rng, 6, F);
    const VectorXd anchor = random_ball(rng, 6, B);
    const VectorXd t1 = random_ball(rng, 6, B);
    const VectorXd t2 = random_ball(rng, 6, B);
    const double l1 = dro::rebel_loss(s, t1, anchor, eta);
    const double l2 = dro::rebel_loss(s, t2, anchor, eta);
    CHECK(std::abs(l1 - l2) <= c.lipschitz * (t1 - t2).norm() + 1e-12);
  }
}

TEST_CASE("rebel gradient matches finite differences") {
  dro::RngStream rng(101);
  for (int trial = 0; trial < 50; ++trial) {
    const PreferenceSample s = random_admissible(rng, 5, 1.0);
    const VectorXd theta = random_ball(rng, 5, 1.0);
    const VectorXd anchor = random_ball(rng, 5, 1.0);
    const VectorXd grad = dro::rebel_loss_grad(s, theta, anchor, 0.8);
    for (int i = 0; i < 5; ++i) {
      VectorXd lo = theta, hi = theta;
      hi[i] += 1e-6;
      lo[i] -= 1e-6;
      const double fd = (dro::rebel_loss(s, hi, anchor, 0.8) -
                         dro::rebel_loss(s, lo, anchor, 0.8)) /
                        2e-6;
      CHECK(grad[i] == doctest::Approx(fd).epsilon(1e-5));
    }
  }
}

TEST_CASE("dpo loss pinned values and label symmetry") {
  const VectorXd zero = VectorXd::Zero(2);
  PreferenceSample s = make_sample({1.0, 0.0}, 0.0, 1);
  CHECK(dro::dpo_loss(s, zero, zero, 1.0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  s.y = 0;
  CHECK(dro::dpo_loss(s, zero, zero, 1.0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  // y = 1 at beta h = 20: softplus(-20) ~ 2.06e-9.
  VectorXd theta(2);
  theta << 20.0, 0.0;
  s.y = 1;
  CHECK(dro::dpo_loss(s, theta, zero, 1.0) ==
        doctest::Approx(std::log1p(std::exp(-20.0))).epsilon(1e-12));
  CHECK(dro::dpo_loss(s, theta, zero, 1.0) == doctest::Approx(2.061e-9).epsilon(1e-3));

  // Losses swap between labels when the margin flips sign.
  dro::RngStream rng(3);
  const VectorXd ref = VectorXd::Zero(4);
  for (int trial = 0; trial < 100; ++trial) {
    PreferenceSample a = random_admissible(rng, 4, 1.0);
    const VectorXd th = random_ball(rng, 4, 1.0);
    a.y = 1;
    const double win = dro::dpo_loss(a, th, ref, 1.0);
    PreferenceSample b = a;
    b.y = 0;
    b.dpsi = -a.dpsi;  // h -> -h
    CHECK(dro::dpo_loss(b, th, ref, 1.0) == doctest::Approx(win).epsilon(1e-12));
  }
}

TEST_CASE("dpo loss stays below its admissible bound") {
  const double B = 1.0, beta = 2.0;
  const double bound = std::log1p(std::exp(4.0 * beta * B));
  dro::RngStream rng(55);
  const VectorXd ref = VectorXd::Zero(6);
  int violations = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const PreferenceSample s = random_admissible(rng, 6, 1.0);
    const VectorXd theta = random_ball(rng, 6, B);
    if (dro::dpo_loss(s, theta, ref, beta) > bound) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("dpo gradient matches finite differences") {
  dro::RngStream rng(17);
  const VectorXd ref = VectorXd::Zero(5);
  for (int trial = 0; trial < 50; ++trial) {
    PreferenceSample s = random_admissible(rng, 5, 1.0);
    const VectorXd theta = random_ball(rng, 5, 1.0);
    const VectorXd grad = dro::dpo_loss_grad(s, theta, ref, 1.3);
    for (int i = 0; i < 5; ++i) {
      VectorXd lo = theta, hi = theta;
      hi[i] += 1e-6;
      lo[i] -= 1e-6;
      const double fd =
          (dro::dpo_loss(s, hi, ref, 1.3) - dro::dpo_loss(s, lo, ref, 1.3)) / 2e-6;
      CHECK(grad[i] == doctest::Approx(fd).epsilon(2e-5));
    }
  }
}

TEST_CASE("log linear policy") {
  std::vector<VectorXd> actions;
  VectorXd a(1), b(1);
  a << 0.0;
  b << std::log(3.0);
  actions.push_back(a);
  actions.push_back(b);
  VectorXd theta(1);
  theta << 1.0;
  const dro::ProbVector p = dro::log_linear_policy(theta, actions);
  CHECK(p[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(0.75).epsilon(1e-12));

  // theta = 0 gives uniform; shifting every logit is a no-op.
  const dro::ProbVector u = dro::log_linear_policy(VectorXd::Zero(1), actions);
  CHECK(u[0] == doctest::Approx(0.5));
  std::vector<VectorXd> shifted = actions;
  for (auto& f : shifted) f.array() += 10.0;
  const dro::ProbVector q = dro::log_linear_policy(theta, shifted);
  CHECK(q[0] == doctest::Approx(p[0]).epsilon(1e-12));

  CHECK_THROWS_AS(dro::log_linear_policy(theta, {}), std::invalid_argument);
}

TEST_CASE("group losses: hand instance and pooled identity") {
  // Two groups, two samples each, residuals by hand.
  dro::GroupedDataset data;
  data.groups = 2;
  data.group.resize(4);
  data.group << 0, 0, 1, 1;
  data.features.resize(4, 1);
  data.features << 1.0, 2.0, 3.0, 4.0;
  data.target.resize(4);
  data.target << 1.5, 1.5, 0.0, 1.0;
  data.counts.resize(2);
  data.counts << 2, 2;
  data.phat.resize(2);
  data.phat << 0.5, 0.5;

  VectorXd theta(1);
  theta << 1.0;
  const VectorXd losses = dro::group_losses(data, theta);
  CHECK(losses[0] == doctest::Approx((0.25 + 0.25) / 2.0).epsilon(1e-12));
  CHECK(losses[1] == doctest::Approx((9.0 + 9.0) / 2.0).epsilon(1e-12));

  // phat-weighted group losses equal the pooled mean squared residual.
  const VectorXd resid = data.features * theta - data.target;
  CHECK(data.phat.dot(losses) ==
        doctest::Approx(resid.squaredNorm() / 4.0).epsilon(1e-12));

  // Scaling targets by c scales L_k(0) by c^2.
  dro::GroupedDataset scaled = data;
  scaled.target *= 3.0;
  const VectorXd at_zero = dro::group_losses(data, VectorXd::Zero(1));
  const VectorXd scaled_at_zero = dro::group_losses(scaled, VectorXd::Zero(1));
  CHECK(scaled_at_zero[0] == doctest::Approx(9.0 * at_zero[0]).epsilon(1e-12));
  CHECK(scaled_at_zero[1] == doctest::Approx(9.0 * at_zero[1]).epsilon(1e-12));
}

TEST_CASE("empty groups report zero loss") {
  dro::GroupedDataset data;
  data.groups = 3;
  data.group.resize(2);
  data.group << 0, 0;
  data.features.resize(2, 1);
  data.features << 1.0, -1.0;
  data.target.resize(2);
  data.target << 0.0, 0.0;
  data.counts.resize(3);
  data.counts << 2, 0, 0;
  data.phat.resize(3);
  data.phat << 1.0, 0.0, 0.0;

  const VectorXd losses = dro::group_losses(data, VectorXd::Ones(1));
  CHECK(losses[1] == 0.0);
  CHECK(losses[2] == 0.0);
}

TEST_CASE("project_to_ball") {
  VectorXd v(2);
  v << 3.0, 4.0;
  CHECK(dro::project_to_ball(v, 10.0).isApprox(v));
  CHECK(dro::project_to_ball(v, 1.0).norm() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(dro::project_to_ball(v, 0.0), std::invalid_argument);
}

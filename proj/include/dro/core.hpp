#pragma once

#include <Eigen/Dense>

#include "dro/rng.hpp"

namespace dro {

/**
 * Point of the probability simplex: entries >= 0, sum 1 within 1e-12.
 * Construction validates and snaps tiny negative round-off to zero.
 */
class ProbVector {
 public:
  ProbVector() = default;
  explicit ProbVector(Eigen::VectorXd w);

  static ProbVector uniform(Eigen::Index k);

  const Eigen::VectorXd& vec() const { return w_; }
  double operator[](Eigen::Index k) const { return w_[k]; }
  Eigen::Index size() const { return w_.size(); }

 private:
  Eigen::VectorXd w_;
};

/**
 * Exact Euclidean projection onto the simplex (sort-and-threshold):
 * out_i = max(v_i - tau, 0) with tau chosen so the result sums to one.
 * O(K log K); idempotent.
 */
ProbVector project_simplex(const Eigen::Ref<const Eigen::VectorXd>& v);

/**
 * Clip negative entries to zero and renormalize. Not the Euclidean
 * projection in general; kept as an alternative mode for ablations of the
 * mixture inner maximizer.
 */
ProbVector clip_renormalize_simplex(const Eigen::Ref<const Eigen::VectorXd>& v);

/// OLS slope of log(y) on log(x). xs strictly increasing, all values > 0,
/// length >= 2; violations throw std::invalid_argument.
double fit_loglog_slope(const Eigen::Ref<const Eigen::VectorXd>& xs,
                        const Eigen::Ref<const Eigen::VectorXd>& ys);

// Deterministic vector draws layered on RngStream.

Eigen::VectorXd draw_normal_vector(RngStream& rng, Eigen::Index d);

/// Dirichlet(alpha * 1_K) via normalized Gamma draws.
ProbVector draw_dirichlet(RngStream& rng, double alpha, Eigen::Index k);

/// Index draw from a probability vector (inverse-CDF walk).
Eigen::Index draw_categorical(RngStream& rng, const ProbVector& p);

/// Counts of n categorical draws from p.
Eigen::VectorXi draw_multinomial_counts(RngStream& rng, long n, const ProbVector& p);

}  // namespace dro

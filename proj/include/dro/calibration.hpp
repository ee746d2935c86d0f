#pragma once

#include <Eigen/Dense>

#include "dro/core.hpp"

namespace dro {

/**
 * Acklam's rational approximation of the standard normal quantile
 * (central branch plus two tail branches). Relative accuracy about
 * 1.15e-9 over (0,1). p outside (0,1) throws.
 */
double inverse_normal(double p);

/**
 * Wilson-Hilferty cube approximation of the chi-square quantile:
 *   chi2_{m,alpha} ~ m * (1 - 2/(9m) + z_alpha * sqrt(2/(9m)))^3.
 * Within 0.5% of the exact quantile for m >= 5 and alpha in [0.5, 0.99];
 * looser (about 5%) at m = 1.
 */
double chi2_quantile_wh(int m, double alpha);

/**
 * Pearson's multinomial statistic
 *   D_n = n * sum_k (phat_k - p0_k)^2 / p0_k,  phat = counts / n.
 * Requires all p0 entries > 0 and at least one observation.
 */
double pearson_statistic(const Eigen::Ref<const Eigen::VectorXi>& counts,
                         const ProbVector& p0);

/**
 * Radius schedule eps_n for a chi-square ambiguity ball over K groups.
 *   calibrated(alpha): eps_n = chi2_{K-1,alpha} / n  (targets alpha-coverage)
 *   fast(c):           eps_n = c * n^-2
 */
struct RadiusSchedule {
  enum class Kind { calibrated, fast };
  Kind kind = Kind::calibrated;
  double alpha = 0.9;  // calibrated: confidence level in (0,1)
  double c = 0.7;      // fast: scale, > 0 (+inf allowed: degenerate full-coverage schedule)
  int groups = 15;     // K

  static RadiusSchedule calibrated(double alpha, int groups);
  static RadiusSchedule fast(double c, int groups);

  /// Short label used as CSV sweep key ("cal_0.9", "fast_0.7").
  std::string label() const;
};

double radius(const RadiusSchedule& schedule, long n);

}  // namespace dro

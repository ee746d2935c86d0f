#include "dro/calibration.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace dro {

double inverse_normal(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::invalid_argument("inverse_normal: p must be in (0,1)");

  static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                  -2.759285104469687e+02, 1.383577518672690e+02,
                                  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                  -1.556989798598866e+02, 6.680131188771972e+01,
                                  -1.328068155288572e+01};
  static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                  -2.400758277161838e+00, -2.549732539343734e+00,
                                  4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                  2.445134137142996e+00, 3.754408661907416e+00};
  static constexpr double p_low = 0.02425;
  static constexpr double p_high = 1.0 - p_low;

  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > p_high) {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

double chi2_quantile_wh(int m, double alpha) {
  if (m < 1) throw std::invalid_argument("chi2_quantile_wh: m must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("chi2_quantile_wh: alpha must be in (0,1)");
  const double z = inverse_normal(alpha);
  const double md = static_cast<double>(m);
  const double t = 1.0 - 2.0 / (9.0 * md) + z * std::sqrt(2.0 / (9.0 * md));
  return md * t * t * t;
}

double pearson_statistic(const Eigen::Ref<const Eigen::VectorXi>& counts,
                         const ProbVector& p0) {
  if (counts.size() != p0.size())
    throw std::invalid_argument("pearson_statistic: length mismatch");
  long n = 0;
  for (Eigen::Index k = 0; k < counts.size(); ++k) {
    if (counts[k] < 0) throw std::invalid_argument("pearson_statistic: negative count");
    n += counts[k];
  }
  if (n <= 0) throw std::invalid_argument("pearson_statistic: no observations");
  double stat = 0.0;
  const double nd = static_cast<double>(n);
  for (Eigen::Index k = 0; k < counts.size(); ++k) {
    if (!(p0[k] > 0.0))
      throw std::invalid_argument("pearson_statistic: reference has a zero entry");
    const double diff = static_cast<double>(counts[k]) / nd - p0[k];
    stat += diff * diff / p0[k];
  }
  return nd * stat;
}

RadiusSchedule RadiusSchedule::calibrated(double alpha, int groups) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("RadiusSchedule: alpha must be in (0,1)");
  if (groups < 2) throw std::invalid_argument("RadiusSchedule: need K >= 2");
  RadiusSchedule s;
  s.kind = Kind::calibrated;
  s.alpha = alpha;
  s.groups = groups;
  return s;
}

RadiusSchedule RadiusSchedule::fast(double c, int groups) {
  if (!(c > 0.0)) throw std::invalid_argument("RadiusSchedule: c must be > 0");
  RadiusSchedule s;
  s.kind = Kind::fast;
  s.c = c;
  s.groups = groups;
  return s;
}

std::string RadiusSchedule::label() const {
  char buf[64];
  if (kind == Kind::calibrated)
    std::snprintf(buf, sizeof(buf), "cal_%g", alpha);
  else
    std::snprintf(buf, sizeof(buf), "fast_%g", c);
  return buf;
}

double radius(const RadiusSchedule& schedule, long n) {
  if (n < 1) throw std::invalid_argument("radius: n must be >= 1");
  const double nd = static_cast<double>(n);
  if (schedule.kind == RadiusSchedule::Kind::calibrated)
    return chi2_quantile_wh(schedule.groups - 1, schedule.alpha) / nd;
  return schedule.c / (nd * nd);
}

}  // namespace dro

#pragma once

#include <Eigen/Dense>
#include <limits>
#include <variant>

#include "dro/core.hpp"

namespace dro {

// Ambiguity-set descriptors. Exactly one kind is active.
struct Chi2Spec {
  double rho;  // > 0
};
struct KlSpec {
  double tau;  // > 0; effective temperature is max(tau, 1e-6)
};
struct WassersteinSpec {
  double rho0;  // >= 0, gradient-penalty weight
};
struct MixtureChi2Spec {
  double rho;  // >= 0; rho = 0 degenerates to the reference mixture (ERM)
};
using AmbiguitySpec = std::variant<Chi2Spec, KlSpec, WassersteinSpec, MixtureChi2Spec>;

/// Throws std::invalid_argument when a parameter is out of range.
void validate(const AmbiguitySpec& spec);

/// Human-readable tag ("chi2", "kl", "wasserstein", "mixture_chi2").
const char* kind_name(const AmbiguitySpec& spec);

/**
 * Result of a robust inner maximization: worst-case weights on the simplex,
 * the robust objective value, and whichever dual quantities the solver
 * produced (NaN where not applicable).
 */
struct InnerSolution {
  ProbVector weights;
  double value = 0.0;
  struct Dual {
    double eta = std::numeric_limits<double>::quiet_NaN();      // chi2 shift
    double lambda = std::numeric_limits<double>::quiet_NaN();   // chi2 / mixture multiplier
    double log_normalizer = std::numeric_limits<double>::quiet_NaN();  // KL tilt
    double step = std::numeric_limits<double>::quiet_NaN();     // mixture interior step t
  } dual;
};

/**
 * Worst-case expectation over the chi-square ball around the empirical
 * distribution of n losses,
 *
 *   sup { w.l : w in simplex, sum_i (1/n) * (1/2) (n w_i - 1)^2 <= rho },
 *
 * via its exact one-dimensional dual
 *
 *   f(eta) = eta + sqrt( ((1+2*rho)/n) * sum_i (l_i - eta)_+^2 ),
 *
 * minimized by bisection on the monotone subgradient. The minimizer
 * satisfies eta* <= max_i l_i (f ramps with slope 1 above the losses); the
 * left bracket end is expanded geometrically until the subgradient is
 * negative, which terminates because the slope tends to 1 - sqrt(1+2*rho) < 0.
 *
 * Worst-case weights: w_i = (l_i - eta*)_+ / (n lambda*) with
 * lambda* = sqrt(sum_i (l_i - eta*)_+^2 / (n (1+2*rho))); at the exact
 * minimizer they sum to one. When every hinge term vanishes (all losses
 * equal, or the ball swallows a vertex at rho >= (n-1)/2), the weights are
 * uniform over the argmax set of the losses and value = max_i l_i, the limit
 * of the weight formula.
 */
InnerSolution chi2_dual_solve(const Eigen::Ref<const Eigen::VectorXd>& losses, double rho);

/**
 * Exponential-tilt weights of the KL worst case:
 *   w_i ~ exp((l_i - mean(l)) / tau_eff), tau_eff = max(tau, 1e-6),
 * normalized on the simplex; value = sum_i w_i l_i. Mean-centering bounds the
 * exponents by range(l)/tau; an extra max-subtraction (a no-op after
 * normalization) is applied if that still exceeds 700.
 */
InnerSolution kl_tilt_weights(const Eigen::Ref<const Eigen::VectorXd>& losses, double tau);

/// Gradient-norm penalty R = rho0 * sqrt(mean of per-sample ||grad_z loss||^2).
double wasserstein_penalty(const Eigen::Ref<const Eigen::VectorXd>& grad_sqnorms,
                           double rho0);

enum class MixtureSolveMode {
  kkt,              // exact active-set water-filling (default)
  clip_renormalize  // step along p.*(a - mu), clip at zero, renormalize
};

/**
 * Group-level chi-square inner maximization
 *
 *   max { q.a : q in simplex, sum_k (q_k - p_k)^2 / p_k <= rho },
 *
 * p strictly positive. Interior solution (all q_k > 0):
 *   q_k = p_k + t p_k (a_k - mu),  mu = p.a,  t = sqrt(rho / V_p(a)),
 * with value mu + sqrt(rho * V_p(a)). If the interior candidate leaves the
 * simplex, the KKT boundary form
 *   q_k = p_k [1 + (a_k - tau)/(2 lambda)]_+
 * is solved by bisection on lambda: R(lambda), the ball divergence of
 * q(lambda) with tau(lambda) fixed by the simplex constraint, is continuous
 * and strictly decreasing. If sum_k p_k (a_k - mu)^2 < 1e-12 the losses are
 * flat and q = p is returned.
 */
InnerSolution mixture_chi2_argmax(const Eigen::Ref<const Eigen::VectorXd>& group_losses,
                                  const ProbVector& p_ref, double rho,
                                  MixtureSolveMode mode = MixtureSolveMode::kkt);

/// sum_k (q_k - p_k)^2 / p_k; p strictly positive.
double chi2_divergence(const ProbVector& q, const ProbVector& p);

/// True iff chi2_divergence(q, p) <= eps + 1e-12.
bool chi2_ball_contains(const ProbVector& q, const ProbVector& p, double eps);

}  // namespace dro

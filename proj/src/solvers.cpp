#include "dro/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace dro {

void validate(const AmbiguitySpec& spec) {
  std::visit(
      [](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Chi2Spec>) {
          if (!(s.rho > 0.0)) throw std::invalid_argument("chi2: rho must be > 0");
        } else if constexpr (std::is_same_v<T, KlSpec>) {
          if (!(s.tau > 0.0)) throw std::invalid_argument("kl: tau must be > 0");
        } else if constexpr (std::is_same_v<T, WassersteinSpec>) {
          if (!(s.rho0 >= 0.0)) throw std::invalid_argument("wasserstein: rho0 must be >= 0");
        } else {
          if (!(s.rho >= 0.0)) throw std::invalid_argument("mixture_chi2: rho must be >= 0");
        }
      },
      spec);
}

const char* kind_name(const AmbiguitySpec& spec) {
  switch (spec.index()) {
    case 0: return "chi2";
    case 1: return "kl";
    case 2: return "wasserstein";
    default: return "mixture_chi2";
  }
}

namespace {

void require_losses(const Eigen::Ref<const Eigen::VectorXd>& losses, const char* who) {
  if (losses.size() == 0) throw std::invalid_argument(std::string(who) + ": empty losses");
  if (!losses.allFinite())
    throw std::invalid_argument(std::string(who) + ": non-finite losses");
}

// Subgradient of f(eta) = eta + sqrt(coef * sum (l-eta)_+^2); 1 where the
// hinge sum vanishes.
double chi2_dual_slope(const Eigen::Ref<const Eigen::VectorXd>& losses, double coef,
                       double eta) {
  double s1 = 0.0, s2 = 0.0;
  for (Eigen::Index i = 0; i < losses.size(); ++i) {
    const double h = losses[i] - eta;
    if (h > 0.0) {
      s1 += h;
      s2 += h * h;
    }
  }
  if (s2 <= 0.0) return 1.0;
  return 1.0 - std::sqrt(coef) * s1 / std::sqrt(s2);
}

ProbVector uniform_over_argmax(const Eigen::Ref<const Eigen::VectorXd>& losses) {
  const double lmax = losses.maxCoeff();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(losses.size());
  int ties = 0;
  for (Eigen::Index i = 0; i < losses.size(); ++i)
    if (losses[i] == lmax) ++ties;
  for (Eigen::Index i = 0; i < losses.size(); ++i)
    if (losses[i] == lmax) w[i] = 1.0 / ties;
  return ProbVector(std::move(w));
}

}  // namespace

InnerSolution chi2_dual_solve(const Eigen::Ref<const Eigen::VectorXd>& losses, double rho) {
  require_losses(losses, "chi2_dual_solve");
  if (!(rho > 0.0)) throw std::invalid_argument("chi2_dual_solve: rho must be > 0");

  const Eigen::Index n = losses.size();
  const double nd = static_cast<double>(n);
  const double coef = (1.0 + 2.0 * rho) / nd;
  const double lmax = losses.maxCoeff();
  const double lmin = losses.minCoeff();

  InnerSolution sol;
  if (lmax == lmin) {
    // Flat losses admit no tilt.
    sol.weights = ProbVector::uniform(n);
    sol.value = lmax;
    sol.dual.eta = lmax;
    sol.dual.lambda = 0.0;
    return sol;
  }

  double upper = lmax;
  double lower = lmin;
  double width = std::max(lmax - lmin, 1.0);
  // Slope tends to 1 - sqrt(1+2rho) < 0 far left, so this terminates.
  while (chi2_dual_slope(losses, coef, lower) >= 0.0) {
    lower -= width;
    width *= 2.0;
  }

  const double tol = 1e-10 * (1.0 + std::abs(lmax));
  while (upper - lower > tol) {
    const double mid = 0.5 * (lower + upper);
    if (chi2_dual_slope(losses, coef, mid) > 0.0)
      upper = mid;
    else
      lower = mid;
  }
  const double eta = 0.5 * (lower + upper);

  double s2 = 0.0;
  Eigen::VectorXd hinge = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double h = losses[i] - eta;
    if (h > 0.0) {
      hinge[i] = h;
      s2 += h * h;
    }
  }
  sol.dual.eta = eta;
  sol.dual.lambda = std::sqrt(s2 / (nd * (1.0 + 2.0 * rho)));
  sol.value = eta + std::sqrt(coef * s2);

  const double hsum = hinge.sum();
  if (hsum > 0.0) {
    sol.weights = ProbVector(hinge / hsum);
  } else {
    sol.weights = uniform_over_argmax(losses);
    sol.value = lmax;
  }
  return sol;
}

InnerSolution kl_tilt_weights(const Eigen::Ref<const Eigen::VectorXd>& losses, double tau) {
  require_losses(losses, "kl_tilt_weights");
  if (!(tau > 0.0)) throw std::invalid_argument("kl_tilt_weights: tau must be > 0");
  const double tau_eff = std::max(tau, 1e-6);

  const double mean = losses.mean();
  Eigen::VectorXd expo = (losses.array() - mean) / tau_eff;
  if (expo.maxCoeff() > 700.0) expo.array() -= expo.maxCoeff();

  const Eigen::VectorXd tilt = expo.array().exp();
  const double z = tilt.sum();

  InnerSolution sol;
  sol.weights = ProbVector(tilt / z);
  sol.value = sol.weights.vec().dot(losses);
  sol.dual.log_normalizer = std::log(z);
  return sol;
}

double wasserstein_penalty(const Eigen::Ref<const Eigen::VectorXd>& grad_sqnorms,
                           double rho0) {
  require_losses(grad_sqnorms, "wasserstein_penalty");
  if (!(rho0 >= 0.0)) throw std::invalid_argument("wasserstein_penalty: rho0 must be >= 0");
  if (grad_sqnorms.minCoeff() < 0.0)
    throw std::invalid_argument("wasserstein_penalty: negative squared norm");
  return rho0 * std::sqrt(grad_sqnorms.mean());
}

namespace {

struct WaterFill {
  Eigen::VectorXd q;
  double tau = 0.0;
  double divergence = 0.0;
};

// For fixed lambda > 0, find tau with sum_k q_k(tau, lambda) = 1 where
// q_k = p_k [1 + (a_k - tau)/(2 lambda)]_+, and report the ball divergence.
// Candidate active sets are prefixes of the loss order sorted descending;
// tau_J = abar_J - 2 lambda gamma_J / alpha_J per candidate, accepted when it
// reproduces exactly that active set.
WaterFill water_fill(const Eigen::VectorXd& a, const Eigen::VectorXd& p, double lambda,
                     const std::vector<Eigen::Index>& order) {
  const Eigen::Index k = a.size();
  double alpha = 0.0;   // active reference mass
  double pa = 0.0;      // active sum p_k a_k
  WaterFill out;
  for (Eigen::Index j = 0; j < k; ++j) {
    const Eigen::Index idx = order[static_cast<std::size_t>(j)];
    alpha += p[idx];
    pa += p[idx] * a[idx];
    const double abar = pa / alpha;
    const double gamma = 1.0 - alpha;
    const double tau = abar - 2.0 * lambda * gamma / alpha;
    const double threshold = tau - 2.0 * lambda;
    const bool last_in = a[idx] > threshold;
    const bool next_out = (j + 1 >= k) || !(a[order[static_cast<std::size_t>(j + 1)]] > threshold);
    if (last_in && next_out) {
      out.q = Eigen::VectorXd::Zero(k);
      out.tau = tau;
      double div = gamma;  // excluded coordinates each contribute p_k
      for (Eigen::Index m = 0; m <= j; ++m) {
        const Eigen::Index im = order[static_cast<std::size_t>(m)];
        const double shift = (a[im] - tau) / (2.0 * lambda);
        out.q[im] = p[im] * (1.0 + shift);
        div += p[im] * shift * shift;
      }
      out.divergence = div;
      return out;
    }
  }
  // Numerical ties can leave no prefix self-consistent; fall back to all-active.
  const double mu = p.dot(a);
  out.q = p.array() * (1.0 + (a.array() - mu) / (2.0 * lambda));
  out.tau = mu;
  out.divergence = (out.q - p).array().square().cwiseQuotient(p.array()).sum();
  return out;
}

}  // namespace

InnerSolution mixture_chi2_argmax(const Eigen::Ref<const Eigen::VectorXd>& group_losses,
                                  const ProbVector& p_ref, double rho,
                                  MixtureSolveMode mode) {
  require_losses(group_losses, "mixture_chi2_argmax");
  if (group_losses.size() != p_ref.size())
    throw std::invalid_argument("mixture_chi2_argmax: length mismatch");
  if (group_losses.size() < 2)
    throw std::invalid_argument("mixture_chi2_argmax: need K >= 2");
  if (!(rho >= 0.0)) throw std::invalid_argument("mixture_chi2_argmax: rho must be >= 0");
  for (Eigen::Index i = 0; i < p_ref.size(); ++i)
    if (!(p_ref[i] > 0.0))
      throw std::invalid_argument("mixture_chi2_argmax: reference must be strictly positive");

  const Eigen::VectorXd& p = p_ref.vec();
  const Eigen::VectorXd& a = group_losses;
  const Eigen::Index k = a.size();

  const double mu = p.dot(a);
  const Eigen::VectorXd centered = a.array() - mu;
  const double vp = (p.array() * centered.array().square()).sum();

  InnerSolution sol;
  if (rho == 0.0 || vp < 1e-12) {
    sol.weights = p_ref;
    sol.value = mu;
    sol.dual.step = 0.0;
    return sol;
  }

  const double t = std::sqrt(rho / vp);
  const Eigen::VectorXd interior = p.array() * (1.0 + t * centered.array());

  if (mode == MixtureSolveMode::clip_renormalize) {
    sol.weights = clip_renormalize_simplex(interior);
    sol.value = sol.weights.vec().dot(a);
    sol.dual.step = t;
    return sol;
  }

  if (interior.minCoeff() >= 0.0) {
    sol.weights = ProbVector(interior);
    sol.value = mu + std::sqrt(rho * vp);
    sol.dual.step = t;
    sol.dual.lambda = 0.5 * std::sqrt(vp / rho);
    return sol;
  }

  // Boundary case. If the ball already contains the best vertex/face, the
  // maximum sits there: conditioning p on the argmax set T has divergence
  // (1 - P_T)/P_T.
  const double amax = a.maxCoeff();
  double mass_top = 0.0;
  for (Eigen::Index i = 0; i < k; ++i)
    if (a[i] == amax) mass_top += p[i];
  if (rho >= (1.0 - mass_top) / mass_top) {
    Eigen::VectorXd q = Eigen::VectorXd::Zero(k);
    for (Eigen::Index i = 0; i < k; ++i)
      if (a[i] == amax) q[i] = p[i] / mass_top;
    sol.weights = ProbVector(std::move(q));
    sol.value = amax;
    sol.dual.lambda = 0.0;
    return sol;
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index i, Eigen::Index j) { return a[i] > a[j]; });

  // R(lambda) is continuous and strictly decreasing; bracket rho and bisect.
  double lam_hi = std::max(0.5 * std::sqrt(vp / rho), 1.0);
  while (water_fill(a, p, lam_hi, order).divergence > rho) lam_hi *= 2.0;
  double lam_lo = lam_hi;
  while (water_fill(a, p, lam_lo, order).divergence < rho) lam_lo *= 0.5;

  for (int it = 0; it < 200 && lam_hi - lam_lo > 1e-15 * lam_hi; ++it) {
    const double mid = 0.5 * (lam_lo + lam_hi);
    if (water_fill(a, p, mid, order).divergence > rho)
      lam_lo = mid;
    else
      lam_hi = mid;
  }
  const double lambda = 0.5 * (lam_lo + lam_hi);
  WaterFill wf = water_fill(a, p, lambda, order);

  // Snap round-off so the simplex constraint holds to machine precision.
  wf.q = wf.q.cwiseMax(0.0);
  sol.weights = ProbVector(wf.q / wf.q.sum());
  sol.value = sol.weights.vec().dot(a);
  sol.dual.lambda = lambda;
  return sol;
}

double chi2_divergence(const ProbVector& q, const ProbVector& p) {
  if (q.size() != p.size()) throw std::invalid_argument("chi2_divergence: length mismatch");
  double div = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (!(p[i] > 0.0))
      throw std::invalid_argument("chi2_divergence: reference has a zero entry");
    const double d = q[i] - p[i];
    div += d * d / p[i];
  }
  return div;
}

bool chi2_ball_contains(const ProbVector& q, const ProbVector& p, double eps) {
  if (!(eps >= 0.0)) throw std::invalid_argument("chi2_ball_contains: eps must be >= 0");
  return chi2_divergence(q, p) <= eps + 1e-12;
}

}  // namespace dro

#include "dro/core.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace dro {

namespace {
void require_finite(const Eigen::Ref<const Eigen::VectorXd>& v, const char* who) {
  if (v.size() == 0) throw std::invalid_argument(std::string(who) + ": empty input");
  if (!v.allFinite()) throw std::invalid_argument(std::string(who) + ": non-finite input");
}
}  // namespace

ProbVector::ProbVector(Eigen::VectorXd w) : w_(std::move(w)) {
  require_finite(w_, "ProbVector");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < w_.size(); ++i) {
    if (w_[i] < -1e-12) throw std::invalid_argument("ProbVector: negative entry");
    if (w_[i] < 0.0) w_[i] = 0.0;
    sum += w_[i];
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("ProbVector: entries must sum to 1");
  w_ /= sum;
}

ProbVector ProbVector::uniform(Eigen::Index k) {
  return ProbVector(Eigen::VectorXd::Constant(k, 1.0 / static_cast<double>(k)));
}

ProbVector project_simplex(const Eigen::Ref<const Eigen::VectorXd>& v) {
  require_finite(v, "project_simplex");
  const Eigen::Index k = v.size();
  std::vector<double> u(v.data(), v.data() + k);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cumsum = 0.0;
  double tau = 0.0;
  Eigen::Index support = 0;
  for (Eigen::Index j = 0; j < k; ++j) {
    cumsum += u[static_cast<std::size_t>(j)];
    const double candidate = (cumsum - 1.0) / static_cast<double>(j + 1);
    if (u[static_cast<std::size_t>(j)] - candidate > 0.0) {
      tau = candidate;
      support = j + 1;
    }
  }
  (void)support;
  Eigen::VectorXd out = (v.array() - tau).cwiseMax(0.0);
  return ProbVector(out / out.sum());
}

ProbVector clip_renormalize_simplex(const Eigen::Ref<const Eigen::VectorXd>& v) {
  require_finite(v, "clip_renormalize_simplex");
  Eigen::VectorXd out = v.cwiseMax(0.0);
  const double sum = out.sum();
  if (sum <= 0.0)
    throw std::invalid_argument("clip_renormalize_simplex: no positive mass");
  return ProbVector(out / sum);
}

double fit_loglog_slope(const Eigen::Ref<const Eigen::VectorXd>& xs,
                        const Eigen::Ref<const Eigen::VectorXd>& ys) {
  if (xs.size() != ys.size()) throw std::invalid_argument("fit_loglog_slope: length mismatch");
  if (xs.size() < 2) throw std::invalid_argument("fit_loglog_slope: need at least 2 points");
  for (Eigen::Index i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0))
      throw std::invalid_argument("fit_loglog_slope: values must be positive");
    if (i > 0 && !(xs[i] > xs[i - 1]))
      throw std::invalid_argument("fit_loglog_slope: xs must be strictly increasing");
  }
  const Eigen::VectorXd lx = xs.array().log();
  const Eigen::VectorXd ly = ys.array().log();
  const Eigen::VectorXd cx = lx.array() - lx.mean();
  const Eigen::VectorXd cy = ly.array() - ly.mean();
  return cx.dot(cy) / cx.squaredNorm();
}

Eigen::VectorXd draw_normal_vector(RngStream& rng, Eigen::Index d) {
  Eigen::VectorXd out(d);
  for (Eigen::Index i = 0; i < d; ++i) out[i] = rng.next_normal();
  return out;
}

ProbVector draw_dirichlet(RngStream& rng, double alpha, Eigen::Index k) {
  Eigen::VectorXd g(k);
  for (Eigen::Index i = 0; i < k; ++i) g[i] = rng.next_gamma(alpha);
  return ProbVector(g / g.sum());
}

Eigen::Index draw_categorical(RngStream& rng, const ProbVector& p) {
  const double u = rng.next_double();
  double acc = 0.0;
  const Eigen::Index k = p.size();
  for (Eigen::Index i = 0; i < k; ++i) {
    acc += p[i];
    if (u < acc) return i;
  }
  return k - 1;
}

Eigen::VectorXi draw_multinomial_counts(RngStream& rng, long n, const ProbVector& p) {
  Eigen::VectorXi counts = Eigen::VectorXi::Zero(p.size());
  for (long i = 0; i < n; ++i) counts[draw_categorical(rng, p)] += 1;
  return counts;
}

}  // namespace dro

#include "dro/trainer.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace dro {

namespace {
double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Inner chi-square mixture solve restricted to groups with samples; empty
// groups keep weight zero. Returns expanded weights.
InnerSolution supported_mixture_argmax(const GroupStats& stats,
                                       const Eigen::VectorXd& losses, double rho) {
  const int k = static_cast<int>(stats.phat.size());
  std::vector<int> supported;
  supported.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i)
    if (stats.counts[i] > 0) supported.push_back(i);
  const int ks = static_cast<int>(supported.size());
  if (ks == 0) throw std::invalid_argument("robust group solve: empty dataset");

  InnerSolution expanded;
  if (ks == 1) {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(k);
    w[supported[0]] = 1.0;
    expanded.weights = ProbVector(std::move(w));
    expanded.value = losses[supported[0]];
    return expanded;
  }

  Eigen::VectorXd sub_losses(ks), sub_p(ks);
  for (int i = 0; i < ks; ++i) {
    sub_losses[i] = losses[supported[static_cast<std::size_t>(i)]];
    sub_p[i] = stats.phat[supported[static_cast<std::size_t>(i)]];
  }
  InnerSolution sub;
  if (rho == 0.0) {
    sub.weights = ProbVector(sub_p);
    sub.value = sub_p.dot(sub_losses);
  } else {
    sub = mixture_chi2_argmax(sub_losses, ProbVector(sub_p), rho);
  }

  Eigen::VectorXd w = Eigen::VectorXd::Zero(k);
  for (int i = 0; i < ks; ++i) w[supported[static_cast<std::size_t>(i)]] = sub.weights[i];
  expanded.weights = ProbVector(std::move(w));
  expanded.value = sub.value;
  expanded.dual = sub.dual;
  return expanded;
}
}  // namespace

GroupStats group_stats(const GroupedDataset& data) {
  const int k = data.groups;
  const int d = static_cast<int>(data.features.cols());
  GroupStats stats;
  stats.dim = d;
  stats.counts = data.counts;
  stats.phat = data.phat;
  stats.quad.assign(static_cast<std::size_t>(k), Eigen::MatrixXd::Zero(d, d));
  stats.cross = Eigen::MatrixXd::Zero(k, d);
  stats.target_sq = Eigen::VectorXd::Zero(k);

  for (Eigen::Index i = 0; i < data.group.size(); ++i) {
    const int g = data.group[i];
    const auto v = data.features.row(i);
    stats.quad[static_cast<std::size_t>(g)].noalias() += v.transpose() * v;
    stats.cross.row(g) += data.target[i] * v;
    stats.target_sq[g] += data.target[i] * data.target[i];
  }
  for (int g = 0; g < k; ++g) {
    if (data.counts[g] == 0) continue;
    const double inv = 1.0 / static_cast<double>(data.counts[g]);
    stats.quad[static_cast<std::size_t>(g)] *= inv;
    stats.cross.row(g) *= inv;
    stats.target_sq[g] *= inv;
  }
  return stats;
}

Eigen::VectorXd stats_group_losses(const GroupStats& stats,
                                   const Eigen::Ref<const Eigen::VectorXd>& theta) {
  const int k = static_cast<int>(stats.phat.size());
  Eigen::VectorXd losses = Eigen::VectorXd::Zero(k);
  for (int g = 0; g < k; ++g) {
    if (stats.counts[g] == 0) continue;
    losses[g] = theta.dot(stats.quad[static_cast<std::size_t>(g)] * theta) -
                2.0 * stats.cross.row(g).dot(theta) + stats.target_sq[g];
  }
  return losses;
}

double robust_group_value(const GroupStats& stats,
                          const Eigen::Ref<const Eigen::VectorXd>& theta, double rho) {
  const Eigen::VectorXd losses = stats_group_losses(stats, theta);
  return supported_mixture_argmax(stats, losses, rho).value;
}

Eigen::VectorXd robust_group_gradient(const GroupStats& stats,
                                      const Eigen::Ref<const Eigen::VectorXd>& theta,
                                      double rho) {
  const Eigen::VectorXd losses = stats_group_losses(stats, theta);
  const InnerSolution inner = supported_mixture_argmax(stats, losses, rho);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(stats.dim);
  for (int g = 0; g < static_cast<int>(stats.phat.size()); ++g) {
    const double w = inner.weights[g];
    if (w == 0.0) continue;
    grad.noalias() +=
        w * 2.0 *
        (stats.quad[static_cast<std::size_t>(g)] * theta - stats.cross.row(g).transpose());
  }
  return grad;
}

Eigen::VectorXd train_radius_coverage(const GroupedDataset& data, const TrainConfig& config,
                                      const Eigen::VectorXd* theta_star,
                                      std::vector<GroupStepLog>* log) {
  if (config.steps < 1) throw std::invalid_argument("train: steps must be >= 1");
  if (!(config.lr > 0.0)) throw std::invalid_argument("train: lr must be > 0");
  if (!(config.rho >= 0.0)) throw std::invalid_argument("train: rho must be >= 0");

  const GroupStats stats = group_stats(data);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(stats.dim);
  for (int step = 0; step < config.steps; ++step) {
    if (log) {
      GroupStepLog entry;
      entry.step = step;
      const InnerSolution inner =
          supported_mixture_argmax(stats, stats_group_losses(stats, theta), config.rho);
      entry.value = inner.value;
      entry.dual = std::isfinite(inner.dual.step) ? inner.dual.step : inner.dual.lambda;
      if (!std::isfinite(entry.dual)) entry.dual = 0.0;
      if (theta_star) entry.param_error = (theta - *theta_star).norm();
      log->push_back(entry);
    }
    theta -= config.lr * robust_group_gradient(stats, theta, config.rho);
    if (config.ball_radius) theta = project_to_ball(theta, *config.ball_radius);
  }
  return theta;
}

void write_train_log_csv(const std::vector<GroupStepLog>& log, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_train_log_csv: cannot open " + path);
  out << "step,value,param_error,dual\n";
  char buf[128];
  for (const auto& entry : log) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g\n", entry.step, entry.value,
                  entry.param_error, entry.dual);
    out << buf;
  }
}

namespace {

struct PerSample {
  double loss = 0.0;
  Eigen::VectorXd grad;       // d loss / d theta
  double z_sqnorm = 0.0;      // ||grad_z loss||^2
  Eigen::VectorXd z_sq_grad;  // d z_sqnorm / d theta
};

PerSample per_sample_terms(const PreferenceSample& s, const Eigen::VectorXd& theta,
                           const Eigen::VectorXd& anchor,
                           const PreferenceTrainParams& params, bool with_penalty) {
  PerSample out;
  const Eigen::VectorXd delta = theta - anchor;
  if (params.loss == PreferenceLoss::rebel) {
    const double eta = params.eta;
    const double g = delta.dot(s.dpsi) / eta - s.dr;
    out.loss = g * g;
    out.grad = (2.0 * g / eta) * s.dpsi;
    if (with_penalty) {
      const double geom = delta.squaredNorm() / (eta * eta) + 1.0;
      out.z_sqnorm = 4.0 * g * g * geom;
      out.z_sq_grad = (8.0 * g * geom / eta) * s.dpsi + (8.0 * g * g / (eta * eta)) * delta;
    }
  } else {
    const double beta = params.beta;
    const double h = delta.dot(s.dpsi);
    const double sig = s.y == 1 ? sigmoid(-beta * h) : sigmoid(beta * h);
    out.loss = s.y == 1 ? (beta * h > 0 ? std::log1p(std::exp(-beta * h))
                                        : -beta * h + std::log1p(std::exp(beta * h)))
                        : (beta * h > 0 ? beta * h + std::log1p(std::exp(-beta * h))
                                        : std::log1p(std::exp(beta * h)));
    const double dh = s.y == 1 ? -beta * sig : beta * sig;
    out.grad = dh * s.dpsi;
    if (with_penalty) {
      const double b2s2 = beta * beta * sig * sig;
      out.z_sqnorm = b2s2 * delta.squaredNorm();
      const double sign = s.y == 1 ? -1.0 : 1.0;
      out.z_sq_grad = sign * 2.0 * beta * b2s2 * (1.0 - sig) * delta.squaredNorm() * s.dpsi +
                      2.0 * b2s2 * delta;
    }
  }
  return out;
}

}  // namespace

Eigen::VectorXd preference_batch_losses(const std::vector<PreferenceSample>& batch,
                                        const Eigen::Ref<const Eigen::VectorXd>& theta,
                                        const Eigen::Ref<const Eigen::VectorXd>& anchor,
                                        const PreferenceTrainParams& params) {
  if (batch.empty()) throw std::invalid_argument("preference batch: empty");
  Eigen::VectorXd losses(static_cast<Eigen::Index>(batch.size()));
  const Eigen::VectorXd th = theta, an = anchor;
  for (std::size_t i = 0; i < batch.size(); ++i)
    losses[static_cast<Eigen::Index>(i)] =
        per_sample_terms(batch[i], th, an, params, false).loss;
  return losses;
}

double preference_batch_value(const std::vector<PreferenceSample>& batch,
                              const Eigen::Ref<const Eigen::VectorXd>& theta,
                              const Eigen::Ref<const Eigen::VectorXd>& anchor,
                              const PreferenceTrainParams& params) {
  const Eigen::VectorXd losses = preference_batch_losses(batch, theta, anchor, params);
  if (!params.spec) return losses.mean();
  validate(*params.spec);

  if (const auto* chi2 = std::get_if<Chi2Spec>(&*params.spec))
    return chi2_dual_solve(losses, chi2->rho).value;

  if (const auto* kl = std::get_if<KlSpec>(&*params.spec)) {
    const double tau_eff = std::max(kl->tau, 1e-6);
    const double m = losses.maxCoeff();
    const double lse =
        std::log(((losses.array() - m) / tau_eff).exp().mean()) * tau_eff + m;
    return lse;
  }

  if (const auto* w = std::get_if<WassersteinSpec>(&*params.spec)) {
    const Eigen::VectorXd th = theta, an = anchor;
    Eigen::VectorXd sqnorms(static_cast<Eigen::Index>(batch.size()));
    for (std::size_t i = 0; i < batch.size(); ++i)
      sqnorms[static_cast<Eigen::Index>(i)] =
          per_sample_terms(batch[i], th, an, params, true).z_sqnorm;
    return losses.mean() + wasserstein_penalty(sqnorms, w->rho0);
  }

  throw std::invalid_argument("preference training does not take a mixture_chi2 spec");
}

Eigen::VectorXd preference_batch_gradient(const std::vector<PreferenceSample>& batch,
                                          const Eigen::Ref<const Eigen::VectorXd>& theta,
                                          const Eigen::Ref<const Eigen::VectorXd>& anchor,
                                          const PreferenceTrainParams& params) {
  if (batch.empty()) throw std::invalid_argument("preference batch: empty");
  const Eigen::VectorXd th = theta, an = anchor;
  const Eigen::Index n = static_cast<Eigen::Index>(batch.size());
  const bool wasserstein =
      params.spec && std::holds_alternative<WassersteinSpec>(*params.spec);

  std::vector<PerSample> terms;
  terms.reserve(batch.size());
  Eigen::VectorXd losses(n);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    terms.push_back(per_sample_terms(batch[i], th, an, params, wasserstein));
    losses[static_cast<Eigen::Index>(i)] = terms[i].loss;
  }

  Eigen::VectorXd weights;
  if (!params.spec) {
    weights = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  } else if (const auto* chi2 = std::get_if<Chi2Spec>(&*params.spec)) {
    weights = chi2_dual_solve(losses, chi2->rho).weights.vec();
  } else if (const auto* kl = std::get_if<KlSpec>(&*params.spec)) {
    weights = kl_tilt_weights(losses, kl->tau).weights.vec();
  } else if (std::get_if<WassersteinSpec>(&*params.spec)) {
    weights = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  } else {
    throw std::invalid_argument("preference training does not take a mixture_chi2 spec");
  }

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(theta.size());
  for (Eigen::Index i = 0; i < n; ++i)
    grad.noalias() += weights[i] * terms[static_cast<std::size_t>(i)].grad;

  if (wasserstein) {
    const auto& w = std::get<WassersteinSpec>(*params.spec);
    double mean_sq = 0.0;
    for (const auto& t : terms) mean_sq += t.z_sqnorm;
    mean_sq /= static_cast<double>(n);
    if (w.rho0 > 0.0 && mean_sq > 0.0) {
      Eigen::VectorXd mean_sq_grad = Eigen::VectorXd::Zero(theta.size());
      for (const auto& t : terms) mean_sq_grad.noalias() += t.z_sq_grad;
      mean_sq_grad /= static_cast<double>(n);
      grad.noalias() += (w.rho0 / (2.0 * std::sqrt(mean_sq))) * mean_sq_grad;
    }
  }
  return grad;
}

Eigen::VectorXd train_preference(
    const std::function<std::vector<PreferenceSample>(int)>& batch_provider,
    const PreferenceTrainParams& params, std::vector<PreferenceStepLog>* log,
    std::vector<Eigen::VectorXd>* trajectory) {
  if (params.epochs < 1) throw std::invalid_argument("train_preference: epochs must be >= 1");
  if (!(params.lr > 0.0)) throw std::invalid_argument("train_preference: lr must be > 0");
  if (params.spec) validate(*params.spec);

  std::optional<Eigen::VectorXd> theta;
  Eigen::VectorXd anchor;  // the initial policy anchors both losses

  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    const std::vector<PreferenceSample> batch = batch_provider(epoch);
    if (batch.empty()) throw std::invalid_argument("train_preference: empty batch");
    if (!theta) {
      theta = Eigen::VectorXd::Zero(batch.front().dpsi.size());
      anchor = *theta;
    }

    if (log) {
      PreferenceStepLog entry;
      entry.epoch = epoch;
      const Eigen::VectorXd losses = preference_batch_losses(batch, *theta, anchor, params);
      entry.mean_loss = losses.mean();
      if (params.spec && std::holds_alternative<KlSpec>(*params.spec)) {
        entry.robust_value = kl_tilt_weights(losses, std::get<KlSpec>(*params.spec).tau).value;
      } else {
        entry.robust_value = preference_batch_value(batch, *theta, anchor, params);
      }
      log->push_back(entry);
    }

    const Eigen::VectorXd grad = preference_batch_gradient(batch, *theta, anchor, params);
    *theta = project_to_ball(*theta - params.lr * grad, params.B);
    if (trajectory) trajectory->push_back(*theta);
  }
  return *theta;
}

}  // namespace dro

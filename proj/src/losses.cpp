#include "dro/losses.hpp"

#include <cmath>
#include <stdexcept>

#include "dro/simulator.hpp"

namespace dro {

namespace {
// log(1 + e^x) without overflow.
double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}
}  // namespace

BoundConstants bound_constants(double B, double F, double eta) {
  if (!(B > 0.0 && F > 0.0 && eta > 0.0))
    throw std::invalid_argument("bound_constants: B, F, eta must be > 0");
  BoundConstants c;
  c.B = B;
  c.F = F;
  c.eta = eta;
  c.k_g = 8.0 * B / eta + 2.0 * F;
  c.k_loss = c.k_g * c.k_g;
  c.lipschitz = 4.0 * c.k_g / eta;
  return c;
}

double rebel_loss(const PreferenceSample& s, const Eigen::Ref<const Eigen::VectorXd>& theta,
                  const Eigen::Ref<const Eigen::VectorXd>& theta_t, double eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("rebel_loss: eta must be > 0");
  const double g = (theta - theta_t).dot(s.dpsi) / eta - s.dr;
  return g * g;
}

Eigen::VectorXd rebel_loss_grad(const PreferenceSample& s,
                                const Eigen::Ref<const Eigen::VectorXd>& theta,
                                const Eigen::Ref<const Eigen::VectorXd>& theta_t,
                                double eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("rebel_loss_grad: eta must be > 0");
  const double g = (theta - theta_t).dot(s.dpsi) / eta - s.dr;
  return (2.0 * g / eta) * s.dpsi;
}

double dpo_loss(const PreferenceSample& s, const Eigen::Ref<const Eigen::VectorXd>& theta,
                const Eigen::Ref<const Eigen::VectorXd>& theta_ref, double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("dpo_loss: beta must be > 0");
  const double h = (theta - theta_ref).dot(s.dpsi);
  return s.y == 1 ? softplus(-beta * h) : softplus(beta * h);
}

Eigen::VectorXd dpo_loss_grad(const PreferenceSample& s,
                              const Eigen::Ref<const Eigen::VectorXd>& theta,
                              const Eigen::Ref<const Eigen::VectorXd>& theta_ref,
                              double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("dpo_loss_grad: beta must be > 0");
  const double h = (theta - theta_ref).dot(s.dpsi);
  const double dh = s.y == 1 ? -beta * sigmoid(-beta * h) : beta * sigmoid(beta * h);
  return dh * s.dpsi;
}

ProbVector log_linear_policy(const Eigen::Ref<const Eigen::VectorXd>& theta,
                             const std::vector<Eigen::VectorXd>& action_features) {
  if (action_features.empty())
    throw std::invalid_argument("log_linear_policy: empty action set");
  Eigen::VectorXd logits(static_cast<Eigen::Index>(action_features.size()));
  for (std::size_t i = 0; i < action_features.size(); ++i)
    logits[static_cast<Eigen::Index>(i)] = theta.dot(action_features[i]);
  logits.array() -= logits.maxCoeff();
  const Eigen::VectorXd w = logits.array().exp();
  return ProbVector(w / w.sum());
}

Eigen::VectorXd group_losses(const GroupedDataset& data,
                             const Eigen::Ref<const Eigen::VectorXd>& theta) {
  Eigen::VectorXd loss = Eigen::VectorXd::Zero(data.groups);
  const Eigen::VectorXd resid = data.features * theta - data.target;
  for (Eigen::Index i = 0; i < data.group.size(); ++i)
    loss[data.group[i]] += resid[i] * resid[i];
  for (int k = 0; k < data.groups; ++k)
    if (data.counts[k] > 0) loss[k] /= static_cast<double>(data.counts[k]);
  return loss;
}

Eigen::VectorXd project_to_ball(const Eigen::Ref<const Eigen::VectorXd>& theta, double B) {
  if (!(B > 0.0)) throw std::invalid_argument("project_to_ball: B must be > 0");
  const double norm = theta.norm();
  if (norm <= B) return theta;
  return theta * (B / norm);
}

}  // namespace dro

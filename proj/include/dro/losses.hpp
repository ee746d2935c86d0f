#pragma once

#include <Eigen/Dense>
#include <vector>

#include "dro/core.hpp"

namespace dro {

/**
 * One preference observation reduced to its sufficient statistics under a
 * log-linear policy: the feature gap of the two responses, the reward gap,
 * and the binary preference label. With unit-norm features ||dpsi|| <= 2.
 */
struct PreferenceSample {
  Eigen::VectorXd dpsi;  // psi(x, a1) - psi(x, a2)
  double dr = 0.0;       // r(x, a1) - r(x, a2)
  int y = 1;             // 1 if a1 preferred, else 0
};

/**
 * Constants from the admissibility box ||theta|| <= B, ||omega|| <= F,
 * regression step size eta:
 *   K_g = 8B/eta + 2F,   K_l = K_g^2,   L_theta = 4 K_g / eta.
 * K_l bounds the squared-regression loss and L_theta its theta-Lipschitz
 * modulus; both are checked empirically in the test suite.
 */
struct BoundConstants {
  double B = 0.0;
  double F = 0.0;
  double eta = 0.0;
  double k_g = 0.0;
  double k_loss = 0.0;
  double lipschitz = 0.0;
};

BoundConstants bound_constants(double B, double F, double eta);

/**
 * Squared relative-reward regression residual. Under log-linear policies the
 * policy log-ratio difference collapses to (theta - theta_t) . dpsi, so
 *
 *   loss = ( (1/eta) (theta - theta_t) . dpsi  -  dr )^2.
 */
double rebel_loss(const PreferenceSample& s, const Eigen::Ref<const Eigen::VectorXd>& theta,
                  const Eigen::Ref<const Eigen::VectorXd>& theta_t, double eta);

/// d(rebel_loss)/d(theta) = 2 g (1/eta) dpsi with g the signed residual.
Eigen::VectorXd rebel_loss_grad(const PreferenceSample& s,
                                const Eigen::Ref<const Eigen::VectorXd>& theta,
                                const Eigen::Ref<const Eigen::VectorXd>& theta_t, double eta);

/**
 * Logistic preference loss with margin h = (theta - theta_ref) . dpsi:
 *   -y log sigmoid(beta h) - (1-y) log sigmoid(-beta h),
 * evaluated in softplus form for stability. Bounded by log(1 + e^{4 beta B})
 * on the admissible box.
 */
double dpo_loss(const PreferenceSample& s, const Eigen::Ref<const Eigen::VectorXd>& theta,
                const Eigen::Ref<const Eigen::VectorXd>& theta_ref, double beta);

Eigen::VectorXd dpo_loss_grad(const PreferenceSample& s,
                              const Eigen::Ref<const Eigen::VectorXd>& theta,
                              const Eigen::Ref<const Eigen::VectorXd>& theta_ref, double beta);

/// Softmax policy over a finite action set: weights ~ exp(theta . psi_a).
ProbVector log_linear_policy(const Eigen::Ref<const Eigen::VectorXd>& theta,
                             const std::vector<Eigen::VectorXd>& action_features);

struct GroupedDataset;  // simulator.hpp

/**
 * Per-group mean squared residuals L_k = mean over group k of (v.theta - t)^2.
 * Groups with no samples report 0 and are treated as inactive downstream.
 */
Eigen::VectorXd group_losses(const GroupedDataset& data,
                             const Eigen::Ref<const Eigen::VectorXd>& theta);

/// Euclidean projection onto the ball ||theta|| <= B (identity inside).
Eigen::VectorXd project_to_ball(const Eigen::Ref<const Eigen::VectorXd>& theta, double B);

}  // namespace dro

#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <vector>

#include "dro/losses.hpp"
#include "dro/simulator.hpp"
#include "dro/solvers.hpp"

namespace dro {

/**
 * Per-group sufficient statistics of the squared loss,
 *   L_k(theta) = theta' A_k theta - 2 b_k . theta + c_k,
 * precomputed once per dataset so each full-batch step costs O(K d^2).
 */
struct GroupStats {
  std::vector<Eigen::MatrixXd> quad;  // A_k = (1/|I_k|) sum_k v v'
  Eigen::MatrixXd cross;              // rows b_k = (1/|I_k|) sum_k t v
  Eigen::VectorXd target_sq;          // c_k = (1/|I_k|) sum_k t^2
  Eigen::VectorXi counts;
  Eigen::VectorXd phat;
  int dim = 0;
};

GroupStats group_stats(const GroupedDataset& data);

/// L_k(theta) from the sufficient statistics (0 for empty groups).
Eigen::VectorXd stats_group_losses(const GroupStats& stats,
                                   const Eigen::Ref<const Eigen::VectorXd>& theta);

/**
 * Worst-case mixture objective max { q . L(theta) } over the chi-square ball
 * of radius rho around the empirical group frequencies. Groups with no
 * samples are held at weight zero (their reference mass). rho = 0 is the
 * empirical (ERM) objective.
 */
double robust_group_value(const GroupStats& stats,
                          const Eigen::Ref<const Eigen::VectorXd>& theta, double rho);

/**
 * Gradient of the worst-case mixture objective. The maximizing q is unique,
 * so by the envelope theorem the gradient treats it as constant:
 *   grad = sum_k q*_k * 2 (A_k theta - b_k).
 */
Eigen::VectorXd robust_group_gradient(const GroupStats& stats,
                                      const Eigen::Ref<const Eigen::VectorXd>& theta,
                                      double rho);

struct TrainConfig {
  int steps = 500;
  double lr = 0.12;
  double rho = 0.0;                      // mixture ball radius; 0 = ERM
  std::optional<double> ball_radius;     // optional projection ||theta|| <= B
};

struct GroupStepLog {
  int step = 0;
  double value = 0.0;       // robust objective before the step
  double param_error = -1;  // ||theta - theta_star|| when known, else -1
  double dual = 0.0;        // active dual: interior step t, else boundary lambda
};

/// Header "step,value,param_error,dual"; one row per recorded step.
void write_train_log_csv(const std::vector<GroupStepLog>& log, const std::string& path);

/**
 * Full-batch gradient descent from theta_0 = 0 for exactly config.steps
 * steps; deterministic in its inputs. theta_star, when given, is only used
 * to fill the optional per-step log.
 */
Eigen::VectorXd train_radius_coverage(const GroupedDataset& data, const TrainConfig& config,
                                      const Eigen::VectorXd* theta_star = nullptr,
                                      std::vector<GroupStepLog>* log = nullptr);

enum class PreferenceLoss { rebel, dpo };

struct PreferenceTrainParams {
  PreferenceLoss loss = PreferenceLoss::rebel;
  std::optional<AmbiguitySpec> spec;  // nullopt = non-robust
  double eta = 0.5;                   // squared-regression step-size parameter
  double beta = 1.0;                  // logistic loss scale
  double B = 1.0;                     // projection bound
  int epochs = 40;
  double lr = 1e-2;
};

/// Pointwise losses of a batch at theta (anchor = previous iterate for the
/// regression loss, reference parameter for the logistic loss).
Eigen::VectorXd preference_batch_losses(const std::vector<PreferenceSample>& batch,
                                        const Eigen::Ref<const Eigen::VectorXd>& theta,
                                        const Eigen::Ref<const Eigen::VectorXd>& anchor,
                                        const PreferenceTrainParams& params);

/**
 * The differentiable robust batch objective:
 *   none:        mean loss
 *   chi2:        dual value of the chi-square worst case
 *   kl:          smooth soft value tau * log mean exp(loss / tau)
 *   wasserstein: mean loss + rho0 * sqrt(mean ||grad_z loss||^2)
 * preference_batch_gradient is its exact gradient (envelope theorem for the
 * weighted kinds, full chain rule for the penalty), which is what the
 * finite-difference checks compare against.
 */
double preference_batch_value(const std::vector<PreferenceSample>& batch,
                              const Eigen::Ref<const Eigen::VectorXd>& theta,
                              const Eigen::Ref<const Eigen::VectorXd>& anchor,
                              const PreferenceTrainParams& params);

Eigen::VectorXd preference_batch_gradient(const std::vector<PreferenceSample>& batch,
                                          const Eigen::Ref<const Eigen::VectorXd>& theta,
                                          const Eigen::Ref<const Eigen::VectorXd>& anchor,
                                          const PreferenceTrainParams& params);

struct PreferenceStepLog {
  int epoch = 0;
  double robust_value = 0.0;  // weighted (or penalized) batch loss
  double mean_loss = 0.0;     // unweighted batch mean
};

/**
 * Preference training loop: per epoch, draw a fresh batch, recompute the
 * inner solution, take one weighted (or penalized) gradient step, project
 * onto the B-ball. Both losses are anchored at the initial policy
 * theta_0 = 0 (the data sampler is fixed, so the regression target is a
 * single convex quadratic rather than a moving one).
 */
Eigen::VectorXd train_preference(
    const std::function<std::vector<PreferenceSample>(int)>& batch_provider,
    const PreferenceTrainParams& params,
    std::vector<PreferenceStepLog>* log = nullptr,
    std::vector<Eigen::VectorXd>* trajectory = nullptr);

}  // namespace dro

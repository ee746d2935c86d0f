#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "dro/core.hpp"
#include "dro/losses.hpp"
#include "dro/rng.hpp"

namespace dro {

/**
 * Gaussian-mixture ground truth: K latent groups in ambient dimension d with
 * low-rank factor means, heteroskedastic target noise, and a unit linear
 * reward direction.
 *
 * Construction recipe (deterministic in the seed):
 *   p0 ~ Dirichlet(0.3 * 1_K);
 *   U in R^{rank x d} with orthonormal rows;
 *   mu_k = normalize(c_k^T U + 0.05 eps_k), c_k and eps_k standard normal;
 *   sigma_k log-uniform in [0.05, 0.35]; theta_star uniform on the sphere.
 *
 * Fields are plain data so ablations (zeroing noise scales) stay trivial.
 */
struct MixtureEnv {
  int groups = 15;
  int dim = 12;
  int rank = 3;
  std::uint64_t seed = 0;
  ProbVector p0;
  Eigen::MatrixXd factor_rows;  // rank x d, orthonormal rows
  Eigen::MatrixXd means;        // K x d, unit rows
  Eigen::VectorXd sigma;        // per-group target noise scales
  Eigen::VectorXd theta_star;   // unit vector
  double feature_noise = 0.35;  // isotropic feature noise scale
  double mean_perturbation = 0.05;
};

MixtureEnv make_env(std::uint64_t seed, int groups = 15, int dim = 12, int rank = 3);

/**
 * n draws of (group label, feature vector, target):
 *   C_i ~ Multinomial(p0), v_i ~ N(mu_{C_i}, feature_noise^2 I),
 *   t_i = v_i . theta_star + N(0, sigma_{C_i}^2).
 */
struct GroupedDataset {
  Eigen::VectorXi group;    // n labels in [0, K)
  Eigen::MatrixXd features; // n x d
  Eigen::VectorXd target;   // n
  Eigen::VectorXi counts;   // K
  Eigen::VectorXd phat;     // empirical group frequencies, counts / n
  int groups = 0;
};

GroupedDataset sample_dataset(const MixtureEnv& env, long n, RngStream rng);

/// Dump rows (group, v_1..v_d, t) as CSV for external inspection.
void dump_dataset_csv(const GroupedDataset& data, const std::string& path);

enum class Mixing { convex, geometric };

/**
 * Two-objective linear reward environment for synthetic preference data:
 * actions are unit-sphere feature vectors, psi(x, a) = a, and objective
 * rewards are omega_j . a with ||omega_j|| = F.
 */
struct PreferenceEnv {
  int dim = 12;
  double F = 1.0;
  std::uint64_t seed = 0;
  Eigen::VectorXd omega1;
  Eigen::VectorXd omega2;
};

PreferenceEnv make_preference_env(std::uint64_t seed, int dim = 12, double F = 1.0);

/**
 * Mixed reward of the two objectives at coefficient alpha in [0,1]:
 *   convex:    alpha r1 + (1-alpha) r2
 *   geometric: r1^alpha * r2^(1-alpha), requires r1, r2 > 0.
 */
double mix_rewards(double r1, double r2, double alpha, Mixing mixing);

/// Objective rewards of an action; geometric mixing consumes the sigmoid
/// squashed values so they are strictly positive.
double mixed_action_reward(const PreferenceEnv& env,
                           const Eigen::Ref<const Eigen::VectorXd>& action, double alpha,
                           Mixing mixing);

struct SyntheticPreferenceSet {
  std::vector<PreferenceSample> samples;
  Mixing mixing = Mixing::convex;
  double alpha0 = 0.1;
};

/**
 * n Bradley-Terry labelled pairs: two unit-sphere actions per sample, reward
 * gap dr from the alpha0-mixed reward, label y = 1 with probability
 * sigmoid(dr).
 */
SyntheticPreferenceSet sample_preferences(const PreferenceEnv& env, long n, double alpha0,
                                          Mixing mixing, RngStream rng);

/**
 * Fixed menus of candidate actions used to score policies: the expected
 * mixed reward of theta on a menu is the softmax-weighted mean of the per
 * action mixed rewards, so evaluation is exact given the drawn menus.
 */
struct EvalMenus {
  std::vector<std::vector<Eigen::VectorXd>> menus;
};

EvalMenus make_eval_menus(RngStream rng, int n_menus, int menu_size, int dim);

/**
 * Mean (over menus) expected mixed reward of the log-linear policy at each
 * alpha in the grid; stderr is across menus.
 */
struct MixtureRewardCurve {
  Eigen::VectorXd alphas;
  Eigen::VectorXd mean;
  Eigen::VectorXd stderr_;
};

MixtureRewardCurve mixture_reward(const PreferenceEnv& env,
                                  const Eigen::Ref<const Eigen::VectorXd>& theta,
                                  const EvalMenus& menus,
                                  const Eigen::Ref<const Eigen::VectorXd>& alpha_grid,
                                  Mixing mixing);

}  // namespace dro

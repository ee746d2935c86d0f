#include "dro/simulator.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace dro {

namespace {
double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Eigen::VectorXd unit_sphere_draw(RngStream& rng, Eigen::Index d) {
  Eigen::VectorXd v = draw_normal_vector(rng, d);
  double norm = v.norm();
  while (norm == 0.0) {
    v = draw_normal_vector(rng, d);
    norm = v.norm();
  }
  return v / norm;
}
}  // namespace

MixtureEnv make_env(std::uint64_t seed, int groups, int dim, int rank) {
  if (groups < 2) throw std::invalid_argument("make_env: need K >= 2");
  if (rank < 1 || rank > dim) throw std::invalid_argument("make_env: need 1 <= rank <= dim");

  MixtureEnv env;
  env.groups = groups;
  env.dim = dim;
  env.rank = rank;
  env.seed = seed;

  RngStream rng = make_rng(seed, 0, 0);
  env.p0 = draw_dirichlet(rng, 0.3, groups);

  // Row-orthonormal factor matrix via modified Gram-Schmidt.
  env.factor_rows.resize(rank, dim);
  for (int r = 0; r < rank; ++r) {
    Eigen::VectorXd row = draw_normal_vector(rng, dim);
    for (int s = 0; s < r; ++s)
      row -= env.factor_rows.row(s).dot(row) * env.factor_rows.row(s).transpose();
    env.factor_rows.row(r) = row / row.norm();
  }

  env.means.resize(groups, dim);
  for (int k = 0; k < groups; ++k) {
    const Eigen::VectorXd coeff = draw_normal_vector(rng, rank);
    const Eigen::VectorXd noise = draw_normal_vector(rng, dim);
    Eigen::VectorXd mean =
        env.factor_rows.transpose() * coeff + env.mean_perturbation * noise;
    env.means.row(k) = mean / mean.norm();
  }

  env.sigma.resize(groups);
  const double lo = std::log(0.05), hi = std::log(0.35);
  for (int k = 0; k < groups; ++k)
    env.sigma[k] = std::exp(lo + rng.next_double() * (hi - lo));

  env.theta_star = unit_sphere_draw(rng, dim);
  return env;
}

GroupedDataset sample_dataset(const MixtureEnv& env, long n, RngStream rng) {
  if (n < 1) throw std::invalid_argument("sample_dataset: n must be >= 1");
  GroupedDataset data;
  data.groups = env.groups;
  data.group.resize(n);
  data.features.resize(n, env.dim);
  data.target.resize(n);
  data.counts = Eigen::VectorXi::Zero(env.groups);

  for (long i = 0; i < n; ++i) {
    const Eigen::Index k = draw_categorical(rng, env.p0);
    data.group[i] = static_cast<int>(k);
    data.counts[k] += 1;
    const Eigen::VectorXd v =
        env.means.row(k).transpose() + env.feature_noise * draw_normal_vector(rng, env.dim);
    data.features.row(i) = v;
    data.target[i] = v.dot(env.theta_star) + env.sigma[k] * rng.next_normal();
  }
  data.phat = data.counts.cast<double>() / static_cast<double>(n);
  return data;
}

void dump_dataset_csv(const GroupedDataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("dump_dataset_csv: cannot open " + path);
  out << "group";
  for (Eigen::Index j = 0; j < data.features.cols(); ++j) out << ",v_" << (j + 1);
  out << ",t\n";
  char buf[64];
  for (Eigen::Index i = 0; i < data.group.size(); ++i) {
    out << data.group[i];
    for (Eigen::Index j = 0; j < data.features.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), ",%.17g", data.features(i, j));
      out << buf;
    }
    std::snprintf(buf, sizeof(buf), ",%.17g\n", data.target[i]);
    out << buf;
  }
}

PreferenceEnv make_preference_env(std::uint64_t seed, int dim, double F) {
  if (!(F > 0.0)) throw std::invalid_argument("make_preference_env: F must be > 0");
  PreferenceEnv env;
  env.dim = dim;
  env.F = F;
  env.seed = seed;
  RngStream rng = make_rng(seed, 1, 0);
  env.omega1 = F * unit_sphere_draw(rng, dim);
  env.omega2 = F * unit_sphere_draw(rng, dim);
  return env;
}

double mix_rewards(double r1, double r2, double alpha, Mixing mixing) {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw std::invalid_argument("mix_rewards: alpha must be in [0,1]");
  if (mixing == Mixing::convex) return alpha * r1 + (1.0 - alpha) * r2;
  if (!(r1 > 0.0 && r2 > 0.0))
    throw std::invalid_argument("mix_rewards: geometric mixing needs positive rewards");
  return std::pow(r1, alpha) * std::pow(r2, 1.0 - alpha);
}

double mixed_action_reward(const PreferenceEnv& env,
                           const Eigen::Ref<const Eigen::VectorXd>& action, double alpha,
                           Mixing mixing) {
  const double r1 = env.omega1.dot(action);
  const double r2 = env.omega2.dot(action);
  if (mixing == Mixing::geometric)
    return mix_rewards(sigmoid(r1), sigmoid(r2), alpha, mixing);
  return mix_rewards(r1, r2, alpha, mixing);
}

SyntheticPreferenceSet sample_preferences(const PreferenceEnv& env, long n, double alpha0,
                                          Mixing mixing, RngStream rng) {
  if (n < 1) throw std::invalid_argument("sample_preferences: n must be >= 1");
  if (!(alpha0 >= 0.0 && alpha0 <= 1.0))
    throw std::invalid_argument("sample_preferences: alpha0 must be in [0,1]");

  SyntheticPreferenceSet set;
  set.mixing = mixing;
  set.alpha0 = alpha0;
  set.samples.reserve(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) {
    const Eigen::VectorXd a1 = unit_sphere_draw(rng, env.dim);
    const Eigen::VectorXd a2 = unit_sphere_draw(rng, env.dim);
    PreferenceSample s;
    s.dpsi = a1 - a2;
    s.dr = mixed_action_reward(env, a1, alpha0, mixing) -
           mixed_action_reward(env, a2, alpha0, mixing);
    s.y = rng.next_double() < sigmoid(s.dr) ? 1 : 0;
    set.samples.push_back(std::move(s));
  }
  return set;
}

EvalMenus make_eval_menus(RngStream rng, int n_menus, int menu_size, int dim) {
  if (n_menus < 1 || menu_size < 1)
    throw std::invalid_argument("make_eval_menus: need at least one menu and action");
  EvalMenus menus;
  menus.menus.resize(static_cast<std::size_t>(n_menus));
  for (auto& menu : menus.menus) {
    menu.reserve(static_cast<std::size_t>(menu_size));
    for (int j = 0; j < menu_size; ++j) menu.push_back(unit_sphere_draw(rng, dim));
  }
  return menus;
}

MixtureRewardCurve mixture_reward(const PreferenceEnv& env,
                                  const Eigen::Ref<const Eigen::VectorXd>& theta,
                                  const EvalMenus& menus,
                                  const Eigen::Ref<const Eigen::VectorXd>& alpha_grid,
                                  Mixing mixing) {
  if (menus.menus.empty()) throw std::invalid_argument("mixture_reward: no menus");
  for (Eigen::Index i = 0; i < alpha_grid.size(); ++i)
    if (!(alpha_grid[i] >= 0.0 && alpha_grid[i] <= 1.0))
      throw std::invalid_argument("mixture_reward: alpha grid must lie in [0,1]");

  const Eigen::Index na = alpha_grid.size();
  const Eigen::Index nm = static_cast<Eigen::Index>(menus.menus.size());
  Eigen::MatrixXd per_menu(nm, na);

  for (Eigen::Index m = 0; m < nm; ++m) {
    const auto& menu = menus.menus[static_cast<std::size_t>(m)];
    const ProbVector policy = log_linear_policy(theta, menu);
    for (Eigen::Index ai = 0; ai < na; ++ai) {
      double value = 0.0;
      for (std::size_t j = 0; j < menu.size(); ++j)
        value += policy[static_cast<Eigen::Index>(j)] *
                 mixed_action_reward(env, menu[j], alpha_grid[ai], mixing);
      per_menu(m, ai) = value;
    }
  }

  MixtureRewardCurve curve;
  curve.alphas = alpha_grid;
  curve.mean = per_menu.colwise().mean();
  curve.stderr_.resize(na);
  for (Eigen::Index ai = 0; ai < na; ++ai) {
    const double sd =
        std::sqrt((per_menu.col(ai).array() - curve.mean[ai]).square().sum() /
                  static_cast<double>(nm));
    curve.stderr_[ai] = sd / std::sqrt(static_cast<double>(nm));
  }
  return curve;
}

}  // namespace dro

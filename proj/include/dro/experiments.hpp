#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "dro/calibration.hpp"
#include "dro/simulator.hpp"
#include "dro/trainer.hpp"

namespace dro {

/**
 * Long-format results table: one row per (sweep key, metric) with the mean,
 * its standard error (population SD / sqrt(reps), so indicator metrics equal
 * the closed-form binomial SE), and the replication count.
 *
 * The capture timestamp is kept in memory only; serialized output depends
 * solely on (env seed, config) so re-runs are byte-identical.
 */
struct ExperimentRow {
  std::string sweep_key;
  std::string metric;
  double mean = 0.0;
  double stderr_ = 0.0;
  long reps = 0;
};

struct ExperimentTable {
  std::string name;
  std::uint64_t env_seed = 0;
  std::vector<std::pair<std::string, std::string>> metadata;
  std::string timestamp;
  std::vector<ExperimentRow> rows;

  const ExperimentRow* find(const std::string& key, const std::string& metric) const;
};

/// Header "sweep_key,metric,mean,stderr,reps"; numbers at 17 significant digits.
void write_csv(const ExperimentTable& table, const std::string& path);

/// Run fn(0..count-1) on up to `jobs` threads. Tasks write disjoint slots, so
/// results do not depend on the schedule.
void parallel_for(long count, int jobs, const std::function<void(long)>& fn);

// -------------------------------------------------------------------------
// Coverage curves: empirical P{D_n <= n * eps_n} under multinomial
// resampling of the true mixture, per schedule and sample size.
// -------------------------------------------------------------------------
struct CoverageConfig {
  std::vector<double> alphas{0.5, 0.9, 0.95};
  double fast_c = 0.7;
  std::vector<long> ns{1000, 2000, 4000, 8000, 16000};
  int reps = 120;
  int jobs = 1;
};

ExperimentTable coverage_curve(const MixtureEnv& env, const CoverageConfig& cfg);

// -------------------------------------------------------------------------
// Rate overlay: ||theta_hat - theta_star|| across n for each schedule
// (including an ERM control), with per-schedule log-log slope fits.
// -------------------------------------------------------------------------
struct RateConfig {
  std::vector<double> alphas{0.5, 0.9, 0.95};
  double fast_c = 0.7;
  bool erm_control = true;
  std::vector<long> ns{1000, 2000, 4000, 8000, 16000};
  int seeds = 8;
  TrainConfig train;  // rho is overridden per (schedule, n)
  int jobs = 1;
};

ExperimentTable rate_curve(const MixtureEnv& env, const RateConfig& cfg);

// -------------------------------------------------------------------------
// Risk-coverage frontier at fixed n: sweep eps = c/n, reporting per c the
// empirical coverage (paired draws across c, so exactly nondecreasing), the
// excess worst-case risk of per-c retrained models, and the excess at one
// shared ERM model.
// -------------------------------------------------------------------------
struct FrontierConfig {
  long n = 16000;
  int grid = 25;
  double grid_alpha_max = 0.99;  // c_max = chi2 quantile at this level
  std::vector<double> c_values;  // explicit grid; empty = `grid` points in [0, c_max]
  int cover_reps = 400;
  int seeds = 8;
  long eval_n = 25000;
  TrainConfig train;
  int jobs = 1;
};

ExperimentTable frontier(const MixtureEnv& env, const FrontierConfig& cfg);

// -------------------------------------------------------------------------
// Alignment sweep: {dpo, rebel} x {none, wasserstein, kl, chi2} trained at
// the nominal mixing coefficient, scored across the alpha grid on fixed
// evaluation menus shared by all methods.
// -------------------------------------------------------------------------
struct AlignConfig {
  double alpha0 = 0.1;
  Mixing mixing = Mixing::convex;
  int alpha_points = 11;
  int epochs = 40;
  int batch = 64;
  double lr = 0.08;
  double eta = 0.5;    // regression step-size parameter
  double beta = 1.0;   // logistic scale
  double B = 1.0;      // projection bound
  double tau = 2.0;    // kl temperature
  double rho = 0.5;    // chi2 radius
  double rho0 = 0.05;  // wasserstein penalty weight
  int eval_menus = 64;
  int menu_size = 8;
  int jobs = 1;
};

/// Method labels in emission order.
std::vector<std::string> alignment_methods();

ExperimentTable alignment_sweep(const PreferenceEnv& env, const AlignConfig& cfg);

}  // namespace dro

#include "dro/experiments.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <stdexcept>
#include <thread>

namespace dro {

namespace {

// Purpose offsets of the affine seeding scheme; the environment seed is
// folded into the base so distinct environments use distinct streams.
constexpr std::uint64_t kDataBase = 1000;
constexpr std::uint64_t kCoverBase = 9999;
constexpr std::uint64_t kEvalBase = 20000;
constexpr std::uint64_t kPrefBase = 3000;

std::string fmt_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_key(const char* prefix, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s%.17g", prefix, v);
  return buf;
}

std::string now_string() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%S", std::gmtime(&t));
  return buf;
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

// Population-SD convention so indicator metrics reproduce the closed-form
// binomial standard error.
MeanSe mean_se(const Eigen::Ref<const Eigen::VectorXd>& values) {
  MeanSe out;
  const double n = static_cast<double>(values.size());
  out.mean = values.mean();
  out.se = std::sqrt((values.array() - out.mean).square().sum() / n) / std::sqrt(n);
  return out;
}

std::vector<RadiusSchedule> build_schedules(const std::vector<double>& alphas, double fast_c,
                                            int groups) {
  std::vector<RadiusSchedule> out;
  for (double a : alphas) out.push_back(RadiusSchedule::calibrated(a, groups));
  out.push_back(RadiusSchedule::fast(fast_c, groups));
  return out;
}

}  // namespace

const ExperimentRow* ExperimentTable::find(const std::string& key,
                                           const std::string& metric) const {
  for (const auto& row : rows)
    if (row.sweep_key == key && row.metric == metric) return &row;
  return nullptr;
}

void write_csv(const ExperimentTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_csv: cannot open " + path);
  out << "sweep_key,metric,mean,stderr,reps\n";
  for (const auto& row : table.rows) {
    out << row.sweep_key << ',' << row.metric << ',' << fmt_num(row.mean) << ','
        << fmt_num(row.stderr_) << ',' << row.reps << '\n';
  }
}

void parallel_for(long count, int jobs, const std::function<void(long)>& fn) {
  if (count <= 0) return;
  if (jobs <= 1 || count == 1) {
    for (long i = 0; i < count; ++i) fn(i);
    return;
  }
  const int workers = static_cast<int>(std::min<long>(jobs, count));
  std::atomic<long> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const long i = next.fetch_add(1);
        if (i >= count) return;
        fn(i);
      }
    });
  }
  for (auto& t : pool) t.join();
}

ExperimentTable coverage_curve(const MixtureEnv& env, const CoverageConfig& cfg) {
  if (cfg.reps < 1) throw std::invalid_argument("coverage_curve: reps must be >= 1");
  const std::vector<RadiusSchedule> schedules =
      build_schedules(cfg.alphas, cfg.fast_c, env.groups);

  const long n_sizes = static_cast<long>(cfg.ns.size());
  // Pearson statistics per (n, rep); one draw serves every schedule.
  std::vector<Eigen::VectorXd> stats(static_cast<std::size_t>(n_sizes),
                                     Eigen::VectorXd::Zero(cfg.reps));
  parallel_for(n_sizes * cfg.reps, cfg.jobs, [&](long task) {
    const long ni = task / cfg.reps;
    const long rep = task % cfg.reps;
    const long n = cfg.ns[static_cast<std::size_t>(ni)];
    RngStream rng = make_rng(kCoverBase + env.seed, static_cast<std::uint64_t>(rep),
                             static_cast<std::uint64_t>(n));
    const Eigen::VectorXi counts = draw_multinomial_counts(rng, n, env.p0);
    stats[static_cast<std::size_t>(ni)][rep] = pearson_statistic(counts, env.p0);
  });

  ExperimentTable table;
  table.name = "coverage";
  table.env_seed = env.seed;
  table.timestamp = now_string();
  table.metadata.emplace_back("reps", std::to_string(cfg.reps));
  for (const auto& s : schedules) table.metadata.emplace_back("schedule", s.label());

  for (const auto& schedule : schedules) {
    for (long ni = 0; ni < n_sizes; ++ni) {
      const long n = cfg.ns[static_cast<std::size_t>(ni)];
      const double threshold = static_cast<double>(n) * radius(schedule, n);
      Eigen::VectorXd hits(cfg.reps);
      for (int rep = 0; rep < cfg.reps; ++rep)
        hits[rep] = stats[static_cast<std::size_t>(ni)][rep] <= threshold ? 1.0 : 0.0;
      const MeanSe agg = mean_se(hits);
      table.rows.push_back({schedule.label() + ";n=" + std::to_string(n), "coverage",
                            agg.mean, agg.se, cfg.reps});
    }
  }
  return table;
}

ExperimentTable rate_curve(const MixtureEnv& env, const RateConfig& cfg) {
  if (cfg.seeds < 1) throw std::invalid_argument("rate_curve: seeds must be >= 1");
  std::vector<RadiusSchedule> schedules = build_schedules(cfg.alphas, cfg.fast_c, env.groups);

  const long n_sizes = static_cast<long>(cfg.ns.size());
  const long n_sched = static_cast<long>(schedules.size()) + (cfg.erm_control ? 1 : 0);

  // Datasets are shared across schedules: stats per (n, seed) first.
  std::vector<GroupStats> stats(static_cast<std::size_t>(n_sizes * cfg.seeds));
  parallel_for(n_sizes * cfg.seeds, cfg.jobs, [&](long task) {
    const long ni = task / cfg.seeds;
    const long seed = task % cfg.seeds;
    const long n = cfg.ns[static_cast<std::size_t>(ni)];
    const GroupedDataset data =
        sample_dataset(env, n,
                       make_rng(kDataBase + env.seed, static_cast<std::uint64_t>(seed),
                                static_cast<std::uint64_t>(n)));
    stats[static_cast<std::size_t>(task)] = group_stats(data);
  });

  // errors[schedule][n][seed]
  std::vector<Eigen::MatrixXd> errors(static_cast<std::size_t>(n_sched),
                                      Eigen::MatrixXd::Zero(n_sizes, cfg.seeds));
  parallel_for(n_sched * n_sizes * cfg.seeds, cfg.jobs, [&](long task) {
    const long si = task / (n_sizes * cfg.seeds);
    const long ni = (task / cfg.seeds) % n_sizes;
    const long seed = task % cfg.seeds;
    const long n = cfg.ns[static_cast<std::size_t>(ni)];

    TrainConfig train = cfg.train;
    train.rho = si < static_cast<long>(schedules.size())
                    ? radius(schedules[static_cast<std::size_t>(si)], n)
                    : 0.0;

    const GroupStats& st = stats[static_cast<std::size_t>(ni * cfg.seeds + seed)];
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(st.dim);
    for (int step = 0; step < train.steps; ++step) {
      theta -= train.lr * robust_group_gradient(st, theta, train.rho);
      if (train.ball_radius) theta = project_to_ball(theta, *train.ball_radius);
    }
    errors[static_cast<std::size_t>(si)](ni, seed) = (theta - env.theta_star).norm();
  });

  ExperimentTable table;
  table.name = "rate";
  table.env_seed = env.seed;
  table.timestamp = now_string();
  table.metadata.emplace_back("seeds", std::to_string(cfg.seeds));
  table.metadata.emplace_back("steps", std::to_string(cfg.train.steps));

  for (long si = 0; si < n_sched; ++si) {
    const std::string label = si < static_cast<long>(schedules.size())
                                  ? schedules[static_cast<std::size_t>(si)].label()
                                  : std::string("erm");
    Eigen::VectorXd xs(n_sizes), means(n_sizes);
    for (long ni = 0; ni < n_sizes; ++ni) {
      const MeanSe agg = mean_se(errors[static_cast<std::size_t>(si)].row(ni).transpose());
      xs[ni] = static_cast<double>(cfg.ns[static_cast<std::size_t>(ni)]);
      means[ni] = agg.mean;
      table.rows.push_back({label + ";n=" + std::to_string(cfg.ns[static_cast<std::size_t>(ni)]),
                            "param_error", agg.mean, agg.se, cfg.seeds});
    }
    table.rows.push_back(
        {label, "loglog_slope", fit_loglog_slope(xs, means), 0.0, n_sizes});
  }
  return table;
}

ExperimentTable frontier(const MixtureEnv& env, const FrontierConfig& cfg) {
  if (cfg.grid < 2 && cfg.c_values.empty())
    throw std::invalid_argument("frontier: need at least 2 grid points");

  std::vector<double> cs = cfg.c_values;
  if (cs.empty()) {
    const double c_max = chi2_quantile_wh(env.groups - 1, cfg.grid_alpha_max);
    for (int j = 0; j < cfg.grid; ++j)
      cs.push_back(c_max * static_cast<double>(j) / static_cast<double>(cfg.grid - 1));
  }
  const long n_c = static_cast<long>(cs.size());
  const double nd = static_cast<double>(cfg.n);

  // Paired coverage draws: one Pearson statistic per rep thresholded at every c.
  Eigen::VectorXd pearson(cfg.cover_reps);
  parallel_for(cfg.cover_reps, cfg.jobs, [&](long rep) {
    RngStream rng = make_rng(kCoverBase + env.seed, static_cast<std::uint64_t>(rep),
                             static_cast<std::uint64_t>(cfg.n));
    pearson[rep] = pearson_statistic(draw_multinomial_counts(rng, cfg.n, env.p0), env.p0);
  });

  // Training datasets (shared across c) and the fixed evaluation set.
  std::vector<GroupStats> stats(static_cast<std::size_t>(cfg.seeds));
  parallel_for(cfg.seeds, cfg.jobs, [&](long seed) {
    stats[static_cast<std::size_t>(seed)] = group_stats(
        sample_dataset(env, cfg.n,
                       make_rng(kDataBase + env.seed, static_cast<std::uint64_t>(seed),
                                static_cast<std::uint64_t>(cfg.n))));
  });
  const GroupStats eval_stats = group_stats(
      sample_dataset(env, cfg.eval_n,
                     make_rng(kEvalBase + env.seed, 0, static_cast<std::uint64_t>(cfg.eval_n))));

  const auto train_theta = [&](const GroupStats& st, double rho) {
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(st.dim);
    for (int step = 0; step < cfg.train.steps; ++step) {
      theta -= cfg.train.lr * robust_group_gradient(st, theta, rho);
      if (cfg.train.ball_radius) theta = project_to_ball(theta, *cfg.train.ball_radius);
    }
    return theta;
  };

  const auto excess_at = [&](const Eigen::VectorXd& theta, double c) {
    const Eigen::VectorXd losses = stats_group_losses(eval_stats, theta);
    const double nominal = env.p0.vec().dot(losses);
    if (c <= 0.0) return 0.0;
    return mixture_chi2_argmax(losses, env.p0, c / nd).value - nominal;
  };

  // Shared model for the common-theta excess column: ERM at seed 0.
  const Eigen::VectorXd theta_common = train_theta(stats[0], 0.0);

  Eigen::MatrixXd excess(n_c, cfg.seeds);
  parallel_for(n_c * cfg.seeds, cfg.jobs, [&](long task) {
    const long ci = task / cfg.seeds;
    const long seed = task % cfg.seeds;
    const double c = cs[static_cast<std::size_t>(ci)];
    const Eigen::VectorXd theta = train_theta(stats[static_cast<std::size_t>(seed)], c / nd);
    excess(ci, seed) = excess_at(theta, c);
  });

  ExperimentTable table;
  table.name = "frontier";
  table.env_seed = env.seed;
  table.timestamp = now_string();
  table.metadata.emplace_back("n", std::to_string(cfg.n));
  table.metadata.emplace_back("cover_reps", std::to_string(cfg.cover_reps));
  table.metadata.emplace_back("seeds", std::to_string(cfg.seeds));

  for (long ci = 0; ci < n_c; ++ci) {
    const double c = cs[static_cast<std::size_t>(ci)];
    const std::string key = fmt_key("c=", c);
    Eigen::VectorXd hits(cfg.cover_reps);
    for (int rep = 0; rep < cfg.cover_reps; ++rep)
      hits[rep] = pearson[rep] <= c ? 1.0 : 0.0;
    const MeanSe cover = mean_se(hits);
    table.rows.push_back({key, "coverage", cover.mean, cover.se, cfg.cover_reps});

    const MeanSe exc = mean_se(excess.row(ci).transpose());
    table.rows.push_back({key, "excess", exc.mean, exc.se, cfg.seeds});
    table.rows.push_back({key, "excess_common", excess_at(theta_common, c), 0.0, 1});
  }
  return table;
}

std::vector<std::string> alignment_methods() {
  return {"dpo",   "dpo_wass",   "dpo_kl",   "dpo_chi2",
          "rebel", "rebel_wass", "rebel_kl", "rebel_chi2"};
}

ExperimentTable alignment_sweep(const PreferenceEnv& env, const AlignConfig& cfg) {
  if (cfg.alpha_points < 2) throw std::invalid_argument("alignment_sweep: need >= 2 alphas");

  Eigen::VectorXd alpha_grid(cfg.alpha_points);
  for (int i = 0; i < cfg.alpha_points; ++i)
    alpha_grid[i] = static_cast<double>(i) / static_cast<double>(cfg.alpha_points - 1);

  // Fresh batch per epoch; identical batches for every method so the
  // robust-vs-base comparisons are paired.
  const auto batch_provider = [&](int epoch) {
    return sample_preferences(env, cfg.batch, cfg.alpha0, cfg.mixing,
                              make_rng(kPrefBase + env.seed, 0,
                                       static_cast<std::uint64_t>(epoch)))
        .samples;
  };
  const EvalMenus menus = make_eval_menus(make_rng(kEvalBase + env.seed, 1, 0),
                                          cfg.eval_menus, cfg.menu_size, env.dim);

  const std::vector<std::string> methods = alignment_methods();
  std::vector<MixtureRewardCurve> curves(methods.size());

  parallel_for(static_cast<long>(methods.size()), cfg.jobs, [&](long mi) {
    const std::string& name = methods[static_cast<std::size_t>(mi)];
    PreferenceTrainParams params;
    params.loss = name.rfind("dpo", 0) == 0 ? PreferenceLoss::dpo : PreferenceLoss::rebel;
    params.eta = cfg.eta;
    params.beta = cfg.beta;
    params.B = cfg.B;
    params.epochs = cfg.epochs;
    params.lr = cfg.lr;
    if (name.ends_with("_wass"))
      params.spec = WassersteinSpec{cfg.rho0};
    else if (name.ends_with("_kl"))
      params.spec = KlSpec{cfg.tau};
    else if (name.ends_with("_chi2"))
      params.spec = Chi2Spec{cfg.rho};

    const Eigen::VectorXd theta = train_preference(batch_provider, params);
    curves[static_cast<std::size_t>(mi)] =
        mixture_reward(env, theta, menus, alpha_grid, cfg.mixing);
  });

  ExperimentTable table;
  table.name = "align";
  table.env_seed = env.seed;
  table.timestamp = now_string();
  table.metadata.emplace_back("mixing", cfg.mixing == Mixing::convex ? "convex" : "geometric");
  table.metadata.emplace_back("alpha0", fmt_num(cfg.alpha0));

  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    const MixtureRewardCurve& curve = curves[mi];
    Eigen::Index worst = 0;
    for (Eigen::Index ai = 0; ai < curve.alphas.size(); ++ai) {
      if (curve.mean[ai] < curve.mean[worst]) worst = ai;
      table.rows.push_back({methods[mi] + fmt_key(";alpha=", curve.alphas[ai]),
                            "mixture_reward", curve.mean[ai], curve.stderr_[ai],
                            cfg.eval_menus});
    }
    table.rows.push_back({methods[mi], "worst_mixture_reward", curve.mean[worst],
                          curve.stderr_[worst], cfg.eval_menus});
  }
  return table;
}

}  // namespace dro

// Command-line surface for the robust-training experiment suite: the four
// studies emit CSV tables plus a manifest; `solve` exposes the inner solvers
// directly. Exit codes: 0 success, 1 I/O failure, 2 bad flags.
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dro/experiments.hpp"
#include "dro/solvers.hpp"
#include "dro/version.hpp"

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<double> parse_number_list(const std::string& text, const char* flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(item, &used);
    } catch (const std::exception&) {
      throw CLI::ValidationError(flag, "expected a comma-separated list of numbers");
    }
    if (used != item.size())
      throw CLI::ValidationError(flag, "expected a comma-separated list of numbers");
    out.push_back(value);
  }
  if (out.empty()) throw CLI::ValidationError(flag, "expected at least one value");
  return out;
}

// Flat key=value manifest written alongside each CSV; re-running the printed
// command reproduces the CSV byte for byte.
void write_manifest(const std::string& csv_path, const std::string& command,
                    const std::vector<std::pair<std::string, std::string>>& entries) {
  const std::string path = csv_path + ".manifest";
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "command=" << command << "\n";
  out << "version=" << dro::kVersion << "\n";
  out << "output=" << csv_path << "\n";
  for (const auto& [key, value] : entries) out << key << "=" << value << "\n";
}

struct CommonFlags {
  std::uint64_t seed = 3;
  std::string out_dir = ".";
  int jobs = 1;

  void attach(CLI::App* app) {
    app->add_option("--seed", seed, "Environment seed")->capture_default_str();
    app->add_option("--out", out_dir, "Output directory")->capture_default_str();
    app->add_option("--jobs", jobs, "Max concurrent replication tasks")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
  }

  std::string csv_path(const std::string& experiment) const {
    return out_dir + "/" + experiment + "_" + std::to_string(seed) + ".csv";
  }
};

std::vector<long> to_longs(const std::vector<double>& xs, const char* flag) {
  std::vector<long> out;
  for (double x : xs) {
    const long v = static_cast<long>(x);
    if (static_cast<double>(v) != x || v < 1)
      throw CLI::ValidationError(flag, "expected positive integers");
    out.push_back(v);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributionally robust training toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", dro::kVersion);

  CommonFlags cover_common, rate_common, frontier_common, align_common;

  // --- coverage ---------------------------------------------------------
  auto* cmd_cover = app.add_subcommand("coverage", "Empirical coverage of radius schedules");
  std::string cover_alphas = "0.5,0.9,0.95";
  std::string cover_ns = "1000,2000,4000,8000,16000";
  dro::CoverageConfig cover_cfg;
  cover_common.attach(cmd_cover);
  cmd_cover->add_option("--alphas", cover_alphas, "Calibrated confidence levels")
      ->capture_default_str();
  cmd_cover->add_option("--fast-c", cover_cfg.fast_c, "Fast schedule scale c in c*n^-2")
      ->capture_default_str();
  cmd_cover->add_option("--ns", cover_ns, "Sample sizes")->capture_default_str();
  cmd_cover->add_option("--reps", cover_cfg.reps, "Resampling replications")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);

  // --- rate -------------------------------------------------------------
  auto* cmd_rate = app.add_subcommand("rate", "Parameter-error decay per schedule");
  std::string rate_alphas = "0.5,0.9,0.95";
  std::string rate_ns = "1000,2000,4000,8000,16000";
  dro::RateConfig rate_cfg;
  rate_common.attach(cmd_rate);
  cmd_rate->add_option("--alphas", rate_alphas, "Calibrated confidence levels")
      ->capture_default_str();
  cmd_rate->add_option("--fast-c", rate_cfg.fast_c, "Fast schedule scale")
      ->capture_default_str();
  cmd_rate->add_option("--ns", rate_ns, "Sample sizes")->capture_default_str();
  cmd_rate->add_option("--seeds", rate_cfg.seeds, "Training replications per point")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd_rate->add_option("--steps", rate_cfg.train.steps, "Gradient descent steps")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd_rate->add_option("--lr", rate_cfg.train.lr, "Gradient descent step size")
      ->capture_default_str();
  cmd_rate->add_flag("--no-erm", "Drop the ERM control schedule");

  // --- frontier ---------------------------------------------------------
  auto* cmd_frontier = app.add_subcommand("frontier", "Risk-coverage frontier at fixed n");
  dro::FrontierConfig frontier_cfg;
  frontier_common.attach(cmd_frontier);
  cmd_frontier->add_option("--n", frontier_cfg.n, "Sample size")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd_frontier->add_option("--grid", frontier_cfg.grid, "Evenly spaced c values")
      ->capture_default_str()
      ->check(CLI::Range(2, 10000));
  cmd_frontier->add_option("--cover-reps", frontier_cfg.cover_reps, "Coverage replications")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd_frontier->add_option("--seeds", frontier_cfg.seeds, "Training replications per c")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd_frontier->add_option("--eval-n", frontier_cfg.eval_n, "Fresh evaluation samples")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd_frontier->add_option("--steps", frontier_cfg.train.steps, "Gradient descent steps")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd_frontier->add_option("--lr", frontier_cfg.train.lr, "Gradient descent step size")
      ->capture_default_str();

  // --- align ------------------------------------------------------------
  auto* cmd_align = app.add_subcommand("align", "Preference-shift sweep over methods");
  dro::AlignConfig align_cfg;
  std::string mixing = "convex";
  align_common.attach(cmd_align);
  cmd_align->add_option("--alpha0", align_cfg.alpha0, "Nominal mixing coefficient")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  cmd_align->add_option("--mixing", mixing, "Reward mixing: convex or geometric")
      ->capture_default_str()
      ->check(CLI::IsMember({"convex", "geometric"}));
  cmd_align->add_option("--alpha-points", align_cfg.alpha_points, "Evaluation grid size")
      ->capture_default_str()
      ->check(CLI::Range(2, 1000));
  cmd_align->add_option("--epochs", align_cfg.epochs, "Training iterations")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd_align->add_option("--batch", align_cfg.batch, "Fresh samples per iteration")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd_align->add_option("--lr", align_cfg.lr, "Training step size")->capture_default_str();
  cmd_align->add_option("--eta", align_cfg.eta, "Regression step-size parameter")
      ->capture_default_str();
  cmd_align->add_option("--beta", align_cfg.beta, "Logistic loss scale")
      ->capture_default_str();
  cmd_align->add_option("--ball", align_cfg.B, "Projection bound on the parameter norm")
      ->capture_default_str();
  cmd_align->add_option("--tau", align_cfg.tau, "KL temperature")->capture_default_str();
  cmd_align->add_option("--rho", align_cfg.rho, "Chi-square radius")->capture_default_str();
  cmd_align->add_option("--rho0", align_cfg.rho0, "Gradient-penalty weight")
      ->capture_default_str();
  cmd_align->add_option("--eval-menus", align_cfg.eval_menus, "Held-out evaluation menus")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);

  // --- solve ------------------------------------------------------------
  auto* cmd_solve = app.add_subcommand("solve", "Run one inner solver on explicit losses");
  std::string solve_kind;
  std::string solve_losses_text;
  std::string solve_losses_file;
  std::string solve_pref_text;
  double solve_rho = 0.1, solve_tau = 1.0, solve_rho0 = 1.0;
  cmd_solve->add_option("--kind", solve_kind, "chi2 | kl | wasserstein | mixture")
      ->required()
      ->check(CLI::IsMember({"chi2", "kl", "wasserstein", "mixture"}));
  cmd_solve->add_option("--losses", solve_losses_text,
                        "Comma-separated losses (wasserstein: squared gradient norms)");
  cmd_solve->add_option("--losses-file", solve_losses_file,
                        "File with one loss per line (alternative to --losses)");
  cmd_solve->add_option("--pref", solve_pref_text,
                        "Reference mixture for --kind mixture (defaults to uniform)");
  cmd_solve->add_option("--rho", solve_rho, "Radius (chi2, mixture)")->capture_default_str();
  cmd_solve->add_option("--tau", solve_tau, "Temperature (kl)")->capture_default_str();
  cmd_solve->add_option("--rho0", solve_rho0, "Penalty weight (wasserstein)")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (cmd_cover->parsed()) {
      cover_cfg.alphas = parse_number_list(cover_alphas, "--alphas");
      cover_cfg.ns = to_longs(parse_number_list(cover_ns, "--ns"), "--ns");
      cover_cfg.jobs = cover_common.jobs;
      const dro::MixtureEnv env = dro::make_env(cover_common.seed);
      const dro::ExperimentTable table = dro::coverage_curve(env, cover_cfg);
      const std::string path = cover_common.csv_path("coverage");
      dro::write_csv(table, path);
      write_manifest(path, "coverage",
                     {{"seed", std::to_string(cover_common.seed)},
                      {"alphas", cover_alphas},
                      {"fast_c", fmt(cover_cfg.fast_c)},
                      {"ns", cover_ns},
                      {"reps", std::to_string(cover_cfg.reps)},
                      {"jobs", std::to_string(cover_common.jobs)}});
      std::cout << path << "\n";
    } else if (cmd_rate->parsed()) {
      rate_cfg.alphas = parse_number_list(rate_alphas, "--alphas");
      rate_cfg.ns = to_longs(parse_number_list(rate_ns, "--ns"), "--ns");
      rate_cfg.erm_control = cmd_rate->count("--no-erm") == 0;
      rate_cfg.jobs = rate_common.jobs;
      const dro::MixtureEnv env = dro::make_env(rate_common.seed);
      const dro::ExperimentTable table = dro::rate_curve(env, rate_cfg);
      const std::string path = rate_common.csv_path("rate");
      dro::write_csv(table, path);
      write_manifest(path, "rate",
                     {{"seed", std::to_string(rate_common.seed)},
                      {"alphas", rate_alphas},
                      {"fast_c", fmt(rate_cfg.fast_c)},
                      {"ns", rate_ns},
                      {"seeds", std::to_string(rate_cfg.seeds)},
                      {"steps", std::to_string(rate_cfg.train.steps)},
                      {"lr", fmt(rate_cfg.train.lr)},
                      {"erm", rate_cfg.erm_control ? "1" : "0"},
                      {"jobs", std::to_string(rate_common.jobs)}});
      std::cout << path << "\n";
    } else if (cmd_frontier->parsed()) {
      frontier_cfg.jobs = frontier_common.jobs;
      const dro::MixtureEnv env = dro::make_env(frontier_common.seed);
      const dro::ExperimentTable table = dro::frontier(env, frontier_cfg);
      const std::string path = frontier_common.csv_path("frontier");
      dro::write_csv(table, path);
      write_manifest(path, "frontier",
                     {{"seed", std::to_string(frontier_common.seed)},
                      {"n", std::to_string(frontier_cfg.n)},
                      {"grid", std::to_string(frontier_cfg.grid)},
                      {"cover_reps", std::to_string(frontier_cfg.cover_reps)},
                      {"seeds", std::to_string(frontier_cfg.seeds)},
                      {"eval_n", std::to_string(frontier_cfg.eval_n)},
                      {"steps", std::to_string(frontier_cfg.train.steps)},
                      {"lr", fmt(frontier_cfg.train.lr)},
                      {"jobs", std::to_string(frontier_common.jobs)}});
      std::cout << path << "\n";
    } else if (cmd_align->parsed()) {
      align_cfg.mixing = mixing == "convex" ? dro::Mixing::convex : dro::Mixing::geometric;
      align_cfg.jobs = align_common.jobs;
      const dro::PreferenceEnv env = dro::make_preference_env(align_common.seed);
      const dro::ExperimentTable table = dro::alignment_sweep(env, align_cfg);
      const std::string path = align_common.csv_path("align");
      dro::write_csv(table, path);
      write_manifest(path, "align",
                     {{"seed", std::to_string(align_common.seed)},
                      {"alpha0", fmt(align_cfg.alpha0)},
                      {"mixing", mixing},
                      {"alpha_points", std::to_string(align_cfg.alpha_points)},
                      {"epochs", std::to_string(align_cfg.epochs)},
                      {"batch", std::to_string(align_cfg.batch)},
                      {"lr", fmt(align_cfg.lr)},
                      {"eta", fmt(align_cfg.eta)},
                      {"beta", fmt(align_cfg.beta)},
                      {"ball", fmt(align_cfg.B)},
                      {"tau", fmt(align_cfg.tau)},
                      {"rho", fmt(align_cfg.rho)},
                      {"rho0", fmt(align_cfg.rho0)},
                      {"eval_menus", std::to_string(align_cfg.eval_menus)},
                      {"jobs", std::to_string(align_common.jobs)}});
      std::cout << path << "\n";
    } else if (cmd_solve->parsed()) {
      std::vector<double> values;
      if (!solve_losses_text.empty()) {
        values = parse_number_list(solve_losses_text, "--losses");
      } else if (!solve_losses_file.empty()) {
        std::ifstream in(solve_losses_file);
        if (!in) throw std::runtime_error("cannot open " + solve_losses_file);
        std::string line;
        while (std::getline(in, line)) {
          if (line.empty()) continue;
          values.push_back(parse_number_list(line, "--losses-file").front());
        }
        if (values.empty()) throw CLI::ValidationError("--losses-file", "no values");
      } else {
        throw CLI::ValidationError("--losses", "provide --losses or --losses-file");
      }
      Eigen::VectorXd losses(static_cast<Eigen::Index>(values.size()));
      for (std::size_t i = 0; i < values.size(); ++i)
        losses[static_cast<Eigen::Index>(i)] = values[i];

      if (solve_kind == "wasserstein") {
        std::cout << "penalty=" << fmt(dro::wasserstein_penalty(losses, solve_rho0)) << "\n";
        return 0;
      }

      dro::InnerSolution sol;
      if (solve_kind == "chi2") {
        sol = dro::chi2_dual_solve(losses, solve_rho);
        std::cout << "value=" << fmt(sol.value) << "\neta=" << fmt(sol.dual.eta)
                  << "\nlambda=" << fmt(sol.dual.lambda) << "\n";
      } else if (solve_kind == "kl") {
        sol = dro::kl_tilt_weights(losses, solve_tau);
        std::cout << "value=" << fmt(sol.value)
                  << "\nlog_normalizer=" << fmt(sol.dual.log_normalizer) << "\n";
      } else {
        dro::ProbVector pref = dro::ProbVector::uniform(losses.size());
        if (!solve_pref_text.empty()) {
          const std::vector<double> ps = parse_number_list(solve_pref_text, "--pref");
          Eigen::VectorXd p(static_cast<Eigen::Index>(ps.size()));
          for (std::size_t i = 0; i < ps.size(); ++i)
            p[static_cast<Eigen::Index>(i)] = ps[i];
          pref = dro::ProbVector(p);
        }
        sol = dro::mixture_chi2_argmax(losses, pref, solve_rho);
        std::cout << "value=" << fmt(sol.value) << "\nlambda=" << fmt(sol.dual.lambda)
                  << "\nstep=" << fmt(sol.dual.step) << "\n";
      }
      std::cout << "weights=";
      for (Eigen::Index i = 0; i < sol.weights.size(); ++i)
        std::cout << (i ? "," : "") << fmt(sol.weights[i]);
      std::cout << "\n";
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

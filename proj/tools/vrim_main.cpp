#include <cstdio>
#include <exception>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vrim/datasets.hpp"
#include "vrim/experiments.hpp"

namespace {

// 0 success, 2 config error, 3 dataset error, 4 numerical failure.
int run(int argc, char** argv) {
  CLI::App app{"Variance-reduced independent Metropolis experiments"};
  app.require_subcommand(1);

  vrim::ExperimentConfig cfg;
  std::string config_file;
  std::string sigma2_list, nu_list;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", cfg.seed, "master seed");
    sub->add_option("--replicas", cfg.replicas, "independent repetitions");
    sub->add_option("--threads", cfg.threads, "worker threads");
    sub->add_option("--out", cfg.out_dir, "output directory");
    sub->add_option("--config", config_file,
                    "key = value config file (flags override)");
    sub->add_option("--data", cfg.data_dir, "dataset directory");
    sub->add_option("--n", cfg.n, "samples per replica");
    sub->add_option("--burn-in", cfg.burn_in, "discarded chain records");
    sub->add_option("--batch-size", cfg.batch_size, "adaptation batch size B");
    sub->add_option("--n-batches", cfg.n_batches, "recorded batches l");
    sub->add_option("--adapt-batches", cfg.adapt_batches,
                    "adaptation updates before collection");
    sub->add_option("--grad", cfg.grad_kind, "gradient estimator: dsvi|stl");
    sub->add_option("--step-mu", cfg.step_mu, "Adam step size for the mean");
    sub->add_option("--step-l", cfg.step_l, "Adam step size for the factor");
    sub->add_option("--decay-tau", cfg.decay_tau,
                    "step decay timescale (0 = constant steps)");
    sub->add_option("--decay-kappa", cfg.decay_kappa, "step decay exponent");
    sub->add_option("--mode", cfg.mode, "sample collection: after|during");
    return sub;
  };

  CLI::App* oned_gauss = add_common(
      app.add_subcommand("oned-gauss", "1-D Gaussian target, Gaussian proposal"));
  oned_gauss->add_option("--sigma2", sigma2_list,
                         "comma-separated proposal variances");

  CLI::App* oned_t = add_common(
      app.add_subcommand("oned-t", "1-D Gaussian target, Student-t proposal"));
  oned_t->add_option("--nu", nu_list, "comma-separated degrees of freedom");

  CLI::App* gauss_d = add_common(
      app.add_subcommand("gauss-d", "adaptive d-dimensional Gaussian study"));
  gauss_d->add_option("--dim", cfg.dim, "target dimension");

  CLI::App* modelselect = add_common(app.add_subcommand(
      "modelselect", "marginal likelihood scan over regression submodels"));
  modelselect->add_option("--mixture-k", cfg.mixture_k,
                          "mixture components for the proposal fit");
  modelselect->add_option("--pm-samples", cfg.pm_samples,
                          "Monte Carlo size of the pseudo-marginal prior");

  CLI::App* logreg = add_common(
      app.add_subcommand("logreg", "Bayesian logistic regression study"));
  logreg->add_option("--dataset", cfg.dataset,
                     "ripley|pima|heart|german or a csv path");

  CLI::App* gp = add_common(
      app.add_subcommand("gp", "GP hyperparameter posterior study"));
  gp->add_option("--dataset", cfg.dataset, "boston|pendulum or a csv path");
  gp->add_option("--subsample", cfg.gp_subsample,
                 "use only the first rows (0 = all)");

  CLI::App* bounds = add_common(app.add_subcommand(
      "bounds", "theoretical variance-bound curves for the 1-D studies"));
  bounds->add_option("--sigma2", sigma2_list,
                     "comma-separated proposal variances");
  bounds->add_option("--nu", nu_list, "comma-separated degrees of freedom");
  bounds->add_option("--bound-tol", cfg.bound_tol, "quadrature tolerance");
  bounds->add_option("--bound-mc", cfg.bound_mc, "Monte Carlo draws");

  CLI::App* gen_data = app.add_subcommand(
      "gen-data", "write the bundled synthetic stand-in datasets");
  std::string gen_dir = "data";
  gen_data->add_option("--out", gen_dir, "target directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (gen_data->parsed()) {
      vrim::write_standin_datasets(gen_dir);
      std::printf("wrote datasets under %s\n", gen_dir.c_str());
      return 0;
    }

    // Subcommand name fixes the kind; a config file (if any) is applied
    // first, then explicit flags win by re-parsing.
    CLI::App* sub = app.get_subcommands().front();
    cfg.kind = vrim::experiment_kind_from_name(sub->get_name());
    if (!config_file.empty()) {
      vrim::ExperimentConfig base;
      base.kind = cfg.kind;
      vrim::apply_config_file(base, config_file);
      // Flags already hold their parsed values; pull file values only for
      // options the user did not pass.
      if (sub->count("--seed") == 0) cfg.seed = base.seed;
      if (sub->count("--replicas") == 0) cfg.replicas = base.replicas;
      if (sub->count("--threads") == 0) cfg.threads = base.threads;
      if (sub->count("--out") == 0) cfg.out_dir = base.out_dir;
      if (sub->count("--data") == 0) cfg.data_dir = base.data_dir;
      if (sub->count("--n") == 0) cfg.n = base.n;
      if (sub->count("--burn-in") == 0) cfg.burn_in = base.burn_in;
      if (sub->count("--batch-size") == 0) cfg.batch_size = base.batch_size;
      if (sub->count("--n-batches") == 0) cfg.n_batches = base.n_batches;
      if (sub->count("--adapt-batches") == 0)
        cfg.adapt_batches = base.adapt_batches;
      if (sub->count("--grad") == 0) cfg.grad_kind = base.grad_kind;
      if (sub->count("--step-mu") == 0) cfg.step_mu = base.step_mu;
      if (sub->count("--step-l") == 0) cfg.step_l = base.step_l;
      if (sub->count("--decay-tau") == 0) cfg.decay_tau = base.decay_tau;
      if (sub->count("--decay-kappa") == 0) cfg.decay_kappa = base.decay_kappa;
      if (sub->count("--mode") == 0) cfg.mode = base.mode;
      if (sub->get_option_no_throw("--dataset") &&
          sub->count("--dataset") == 0)
        cfg.dataset = base.dataset;
      if (sub->get_option_no_throw("--dim") && sub->count("--dim") == 0)
        cfg.dim = base.dim;
      if (sigma2_list.empty()) cfg.sigma2_grid = base.sigma2_grid;
      if (nu_list.empty()) cfg.nu_grid = base.nu_grid;
    }

    auto parse_grid = [](const std::string& s) {
      std::vector<double> grid;
      std::stringstream ss(s);
      std::string item;
      while (std::getline(ss, item, ',')) {
        try {
          grid.push_back(std::stod(item));
        } catch (const std::exception&) {
          throw vrim::ConfigError("bad grid value: " + item);
        }
      }
      if (grid.empty()) throw vrim::ConfigError("empty grid");
      return grid;
    };
    if (!sigma2_list.empty()) cfg.sigma2_grid = parse_grid(sigma2_list);
    if (!nu_list.empty()) cfg.nu_grid = parse_grid(nu_list);

    vrim::finalize_config(cfg);
    vrim::run_experiment(cfg);
    std::printf("outputs written to %s\n", cfg.out_dir.string().c_str());
    return 0;
  } catch (const vrim::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const vrim::DatasetError& e) {
    std::fprintf(stderr, "dataset error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  }
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }

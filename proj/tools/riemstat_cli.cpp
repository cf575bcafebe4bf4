// riemstat: statistics and control on Riemannian manifolds from the shell.

#include <CLI11.hpp>

#include <iostream>

#include "riemstat/commands.hpp"
#include "riemstat/errors.hpp"

namespace app = riemstat::app;

int main(int argc, char** argv) {
  app::init_logging();

  CLI::App cli{"Gaussian statistics, mixtures and MPC on Riemannian manifolds", "riemstat"};
  cli.require_subcommand(1);
  cli.fallthrough();

  app::GlobalOptions opt;
  int max_iter = 0;
  std::string out_dir = ".";
  cli.add_option("--seed", opt.seed, "random seed")->capture_default_str();
  cli.add_option("--tol", opt.tol, "tolerance of the fixed-point loops")->capture_default_str();
  cli.add_option("--max-iter", max_iter, "iteration cap of every loop")->check(CLI::PositiveNumber);
  cli.add_option("--out-dir", out_dir, "output directory")->capture_default_str();
  cli.add_flag("--plot", opt.plot, "also write SVG figures");

  std::string dataset;
  auto* mean = cli.add_subcommand("mean", "Karcher mean and covariance of a dataset");
  mean->add_option("dataset", dataset, "dataset CSV")->required()->check(CLI::ExistingFile);

  int k = 1;
  double tol_ll = 0.0;
  auto* gmm = cli.add_subcommand("gmm", "fit a Gaussian mixture by EM");
  gmm->add_option("dataset", dataset, "dataset CSV")->required()->check(CLI::ExistingFile);
  gmm->add_option("-k,--components", k, "number of components")->capture_default_str();
  auto* tol_ll_opt = gmm->add_option("--tol-ll", tol_ll, "log-likelihood improvement threshold (default 1e-8 N)");

  std::string model, queries;
  std::vector<std::size_t> inputs;
  auto* gmr = cli.add_subcommand("gmr", "Gaussian mixture regression");
  gmr->add_option("--model", model, "joint model JSON")->required()->check(CLI::ExistingFile);
  gmr->add_option("--inputs", inputs, "input part indices of the joint manifold")->required()->delimiter(',');
  gmr->add_option("queries", queries, "query CSV on the input manifold")->required()->check(CLI::ExistingFile);

  std::vector<std::string> models;
  auto* fuse = cli.add_subcommand("fuse", "product of Gaussians");
  fuse->add_option("models", models, "model JSON files")->required()->check(CLI::ExistingFile);

  std::string scenario;
  auto* mpc = cli.add_subcommand("mpc", "closed-loop MPC from a scenario file");
  mpc->add_option("scenario", scenario, "scenario JSON")->required()->check(CLI::ExistingFile);

  std::string demo_name;
  auto* demo = cli.add_subcommand("demo", "synthetic scenarios");
  demo->add_option("name", demo_name, "fig1, fig4, fig5 or fig6")
      ->required()
      ->check(CLI::IsMember({"fig1", "fig4", "fig5", "fig6"}));

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = cli.exit(e);
    return code == 0 ? 0 : 4;
  }
  if (max_iter > 0) opt.max_iter = max_iter;
  opt.out_dir = out_dir;

  try {
    app::CommandResult result;
    if (*mean) result = app::cmd_mean(dataset, opt);
    if (*gmm) result = app::cmd_gmm(dataset, k, opt, *tol_ll_opt ? std::optional<double>(tol_ll) : std::nullopt);
    if (*gmr) result = app::cmd_gmr(model, inputs, queries, opt);
    if (*fuse) result = app::cmd_fuse({models.begin(), models.end()}, opt);
    if (*mpc) result = app::cmd_mpc(scenario, opt);
    if (*demo) result = app::cmd_demo(demo_name, opt);
    std::cout << result.summary << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "riemstat: " << e.what() << "\n";
    return app::exit_code(e);
  }
}

#include "riemstat/commands.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <functional>

#include "riemstat/demos.hpp"
#include "riemstat/errors.hpp"
#include "riemstat/io.hpp"
#include "riemstat/linalg.hpp"
#include "riemstat/plot.hpp"

namespace riemstat::app {

namespace fs = std::filesystem;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

namespace {

IterOptions iter_options(const GlobalOptions& opt) {
  IterOptions o;
  o.tol = opt.tol;
  if (opt.max_iter) o.max_iter = *opt.max_iter;
  if (!(o.tol > 0.0)) throw ConfigError("--tol must be positive");
  if (o.max_iter < 1) throw ConfigError("--max-iter must be >= 1");
  return o;
}

EmOptions em_options(const GlobalOptions& opt, int k) {
  EmOptions o;
  o.k = k;
  o.seed = opt.seed;
  o.mean_options = iter_options(opt);
  if (opt.max_iter) o.max_iter = *opt.max_iter;
  return o;
}

json run_metadata(const std::string& command, const GlobalOptions& opt) {
  json meta;
  meta["command"] = command;
  meta["seed"] = opt.seed;
  meta["tol"] = opt.tol;
  if (opt.max_iter) meta["max_iter"] = *opt.max_iter;
  return meta;
}

// Plots are illustrative; failures are logged and never propagate.
void plot_guarded(const GlobalOptions& opt, const fs::path& file, const std::function<void(const fs::path&)>& draw,
                  CommandResult& result) {
  if (!opt.plot) return;
  try {
    draw(opt.out_dir / file);
    spdlog::debug("wrote {}", (opt.out_dir / file).string());
  } catch (const std::exception& e) {
    spdlog::warn("plot {} skipped: {}", file.string(), e.what());
    return;
  }
  result.summary += " plot=" + file.string();
}

class Outputs {
 public:
  Outputs(const GlobalOptions& opt, CommandResult& result) : opt_(opt), result_(result) {}

  void text(const fs::path& name, const std::string& content) {
    io::write_text(opt_.out_dir / name, content);
    done(name);
  }
  void doc(const fs::path& name, const json& content) {
    io::write_json(opt_.out_dir / name, content);
    done(name);
  }

 private:
  void done(const fs::path& name) {
    result_.files.push_back(opt_.out_dir / name);
    spdlog::info("wrote {}", (opt_.out_dir / name).string());
  }
  const GlobalOptions& opt_;
  CommandResult& result_;
};

std::string join_numbers(const VectorXd& v) {
  std::string out;
  for (Index i = 0; i < v.size(); ++i) out += (i ? "," : "") + io::format_number(v(i));
  return out;
}

std::string responsibilities_table(const MatrixXd& r) {
  std::string out = "point";
  for (Index k = 0; k < r.cols(); ++k) out += ",r" + std::to_string(k);
  out += '\n';
  for (Index n = 0; n < r.rows(); ++n) out += std::to_string(n) + "," + join_numbers(r.row(n).transpose()) + "\n";
  return out;
}

std::string loglik_table(const EmReport& report) {
  std::string out = "iteration,log_likelihood\n";
  for (std::size_t i = 0; i < report.log_likelihood.size(); ++i)
    out += std::to_string(i) + "," + io::format_number(report.log_likelihood[i]) + "\n";
  return out;
}

json gmm_document(const EmResult& fit, json meta) {
  json doc = io::model_to_json(fit.model);
  doc["em_report"] = io::em_report_to_json(fit.report);
  doc["metadata"] = std::move(meta);
  return doc;
}

plot::Scene mixture_scene(const std::string& title, const io::Dataset& data, const GaussianMixture& model) {
  plot::Scene scene;
  scene.title = title;
  scene.points = data.points;
  if (data.labels) scene.labels = *data.labels;
  for (std::size_t k = 0; k < model.size(); ++k)
    scene.ellipses.push_back({model.components[k], static_cast<int>(k), false});
  return scene;
}

std::vector<int> argmax_labels(const MatrixXd& r) {
  std::vector<int> labels;
  for (Index n = 0; n < r.rows(); ++n) {
    Index k = 0;
    r.row(n).maxCoeff(&k);
    labels.push_back(static_cast<int>(k));
  }
  return labels;
}

std::string trajectory_summary(const Manifold& m, const MpcRollout& run, const GaussianMixture& gmm) {
  const Point& last = gmm.components[static_cast<std::size_t>(run.active.back())].mean;
  return "steps=" + std::to_string(run.states.size() - 1) +
         " final_dist=" + io::format_number(m.dist(run.states.back(), last));
}

plot::Scene trajectory_scene(const std::string& title, const MpcRollout& run, const GaussianMixture& gmm,
                             const std::vector<Point>& data) {
  plot::Scene scene;
  scene.title = title;
  scene.points = data;
  for (std::size_t k = 0; k < gmm.size(); ++k) scene.ellipses.push_back({gmm.components[k], static_cast<int>(k), false});
  scene.paths.push_back({run.states, 4});
  scene.markers.push_back(run.states.front());
  return scene;
}

// ------------------------------------------------------------------ demos

CommandResult demo_fig1(const GlobalOptions& opt) {
  CommandResult result;
  Outputs out(opt, result);
  const demos::Fig1 f = demos::fig1(opt.seed, iter_options(opt));
  json meta = run_metadata("demo fig1", opt);
  out.doc("fig1_a.json", io::model_to_json(io::single(f.a)));
  out.doc("fig1_b.json", io::model_to_json(io::single(f.b)));
  json fused = io::model_to_json(io::single(f.fused.gaussian));
  meta["iterations"] = f.fused.iterations;
  fused["metadata"] = meta;
  out.doc("fig1_fused.json", fused);

  io::Dataset samples{f.a.manifold, sample(f.a, 150, opt.seed), std::vector<int>(150, 0), std::nullopt};
  for (const Point& p : sample(f.b, 150, opt.seed + 1)) {
    samples.points.push_back(p);
    samples.labels->push_back(1);
  }
  out.text("fig1_samples.csv", io::format_dataset(samples));

  plot_guarded(opt, "fig1.svg", [&](const fs::path& p) {
    plot::Scene scene;
    scene.title = "product of two Gaussians on the sphere";
    scene.ellipses = {{f.a, 0, true}, {f.b, 1, true}, {f.fused.gaussian, 2, false}};
    plot::write_svg(p, f.a.manifold, scene);
  }, result);
  result.summary = "fused mean=" + join_numbers(f.fused.gaussian.mean) +
                   " iterations=" + std::to_string(f.fused.iterations) + result.summary;
  return result;
}

CommandResult demo_fig4(const GlobalOptions& opt) {
  CommandResult result;
  Outputs out(opt, result);
  const demos::Fig4 f = demos::fig4(opt.seed, em_options(opt, 3));
  out.text("fig4_data.csv", io::format_dataset(f.data));
  out.doc("fig4_gmm.json", gmm_document(f.proposed, run_metadata("demo fig4", opt)));
  json meta = run_metadata("demo fig4", opt);
  meta["chart_origin"] = std::vector<double>(f.origin.data(), f.origin.data() + f.origin.size());
  out.doc("fig4_baseline.json", gmm_document(f.baseline, meta));
  out.text("fig4_summary.csv", "model,mean_loglik\nper_component_tangent," + io::format_number(f.proposed_loglik) +
                                   "\nsingle_tangent," + io::format_number(f.baseline_loglik) +
                                   "\n# spread=" + io::format_number(f.spread) + "\n");
  plot_guarded(opt, "fig4.svg", [&](const fs::path& p) {
    plot::Scene scene = mixture_scene("GMM on the sphere (solid) and single-chart baseline (dashed)", f.data,
                                      f.proposed.model);
    // Baseline components pushed back from the chart at the origin.
    const Manifold& s2 = f.data.manifold;
    for (std::size_t k = 0; k < f.baseline.model.size(); ++k) {
      const Gaussian& g = f.baseline.model.components[k];
      const Point mean = s2.exp(f.origin, g.mean);
      const MatrixXd cov = s2.transport_cov(f.origin, mean, g.cov);
      scene.ellipses.push_back({{s2, mean, cov}, static_cast<int>(k) + 3, true});
    }
    plot::write_svg(p, s2, scene);
  }, result);
  result.summary = "mean_loglik proposed=" + io::format_number(f.proposed_loglik) +
                   " baseline=" + io::format_number(f.baseline_loglik) + result.summary;
  return result;
}

CommandResult demo_fig5(const GlobalOptions& opt) {
  CommandResult result;
  Outputs out(opt, result);
  const demos::Fig5 f = demos::fig5(opt.seed, em_options(opt, 6));
  out.text("fig5_data.csv", io::format_dataset(f.data));
  json meta = run_metadata("demo fig5", opt);
  meta["noise"] = f.noise;
  out.doc("fig5_gmm.json", gmm_document(f.model, meta));

  const Manifold spd = Manifold::spd(2);
  std::string table = "t";
  for (const char* prefix : {"mean_", "truth_"})
    for (const std::string& n : io::coordinate_names(spd)) table += std::string(",") + prefix + n;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) table += ",cov_" + std::to_string(i) + "_" + std::to_string(j);
  table += ",error\n";
  double worst = 0.0;
  for (std::size_t q = 0; q < f.query_time.size(); ++q) {
    const Gaussian& g = f.predictions[q].gaussian;
    const Point truth = linalg::flatten(demos::fig5_curve(f.query_time[q]));
    const double err = spd.dist(g.mean, truth);
    worst = std::max(worst, err);
    table += io::format_number(f.query_time[q]) + "," + join_numbers(g.mean) + "," + join_numbers(truth) + "," +
             join_numbers(g.cov.reshaped<Eigen::RowMajor>()) + "," + io::format_number(err) + "\n";
  }
  out.text("fig5_predictions.csv", table);
  plot_guarded(opt, "fig5.svg", [&](const fs::path& p) {
    plot::SpdSeries series;
    series.title = "time to SPD regression: data (grey) and prediction";
    for (const Point& x : f.data.points) {
      series.data_time.push_back(x(0));
      series.data.push_back(linalg::unflatten(x.tail(4), 2, 2));
    }
    for (std::size_t q = 0; q < f.query_time.size(); q += 4) {
      series.model_time.push_back(f.query_time[q]);
      series.model.push_back(linalg::unflatten(f.predictions[q].gaussian.mean, 2, 2));
    }
    plot::write_spd_series(p, series);
  }, result);
  result.summary = "queries=" + std::to_string(f.query_time.size()) + " max_error=" + io::format_number(worst) +
                   result.summary;
  return result;
}

CommandResult demo_fig6(const GlobalOptions& opt) {
  CommandResult result;
  Outputs out(opt, result);
  const demos::Fig6 f = demos::fig6_scenario(opt.seed, em_options(opt, 3));
  const Manifold& s2 = f.data.manifold;
  out.text("fig6_demos.csv", io::format_dataset(f.data));
  out.doc("fig6_gmm.json", [&] {
    json doc = io::model_to_json(f.reference.gmm);
    doc["metadata"] = run_metadata("demo fig6", opt);
    return doc;
  }());
  json scenario;
  scenario["manifold"] = s2.to_string();
  scenario["model"] = "fig6_gmm.json";
  scenario["sequence"] = f.reference.sequence;
  scenario["T"] = f.reference.horizon();
  scenario["window"] = f.settings.window;
  scenario["dt"] = f.settings.dt;
  scenario["r"] = f.settings.r;
  scenario["start"] = std::vector<double>(f.start.data(), f.start.data() + f.start.size());
  scenario["steps"] = f.steps;
  out.doc("fig6_scenario.json", scenario);

  const MpcRollout run = mpc_rollout(s2, f.start, f.reference, f.settings, f.steps);
  out.text("fig6_trajectory.csv", io::format_trajectory(s2, run));
  plot_guarded(opt, "fig6.svg", [&](const fs::path& p) {
    plot::write_svg(p, s2, trajectory_scene("MPC on the sphere", run, f.reference.gmm, f.data.points));
  }, result);
  result.summary = trajectory_summary(s2, run, f.reference.gmm) + result.summary;
  return result;
}

}  // namespace

// ------------------------------------------------------------ subcommands

CommandResult cmd_mean(const fs::path& dataset, const GlobalOptions& opt) {
  CommandResult result;
  Outputs out(opt, result);
  const io::Dataset data = io::read_dataset(dataset);
  const MeanResult r = karcher_mean(data.weighted(), iter_options(opt));
  json doc = io::model_to_json(io::single(r.gaussian));
  json meta = run_metadata("mean", opt);
  meta["input"] = dataset.filename().string();
  meta["iterations"] = r.iterations;
  doc["metadata"] = meta;
  out.doc("mean.json", doc);
  plot_guarded(opt, "mean.svg", [&](const fs::path& p) {
    plot::write_svg(p, data.manifold, mixture_scene("Karcher mean", data, io::single(r.gaussian)));
  }, result);
  result.summary = "mean=" + join_numbers(r.gaussian.mean) + " iterations=" + std::to_string(r.iterations) +
                   result.summary;
  return result;
}

CommandResult cmd_gmm(const fs::path& dataset, int k, const GlobalOptions& opt, std::optional<double> tol_ll) {
  if (k < 1) throw ConfigError("-k must be >= 1");
  CommandResult result;
  Outputs out(opt, result);
  const io::Dataset data = io::read_dataset(dataset);
  EmOptions o = em_options(opt, k);
  if (tol_ll) o.tol_ll = *tol_ll;
  const EmResult fit = em_fit(data.weighted(), o);
  json meta = run_metadata("gmm", opt);
  meta["input"] = dataset.filename().string();
  meta["k"] = k;
  out.doc("gmm.json", gmm_document(fit, meta));
  out.text("responsibilities.csv", responsibilities_table(fit.report.responsibilities));
  out.text("loglik.csv", loglik_table(fit.report));
  plot_guarded(opt, "gmm.svg", [&](const fs::path& p) {
    io::Dataset labelled = data;
    labelled.labels = argmax_labels(fit.report.responsibilities);
    plot::write_svg(p, data.manifold, mixture_scene("GMM", labelled, fit.model));
  }, result);
  result.summary = "k=" + std::to_string(k) + " iterations=" + std::to_string(fit.report.iterations) +
                   " log_likelihood=" + io::format_number(fit.report.log_likelihood.back()) + result.summary;
  return result;
}

CommandResult cmd_gmr(const fs::path& model_path, const std::vector<std::size_t>& input_parts,
                      const fs::path& queries, const GlobalOptions& opt) {
  CommandResult result;
  Outputs out(opt, result);
  const GaussianMixture model = io::read_model(model_path);
  JointPartition part;
  try {
    part = JointPartition::from_inputs(model.manifold, input_parts);
  } catch (const InputError& e) {
    throw ConfigError(std::string("--inputs: ") + e.what());
  }
  if (part.input_parts.empty()) throw ConfigError("--inputs must name at least one part");
  const Manifold in_m = model.manifold.subset(part.input_parts);
  const Manifold out_m = model.manifold.subset(part.output_parts);
  const io::Dataset q = io::read_dataset(queries);
  if (!(q.manifold == in_m))
    throw InputError("queries are on " + q.manifold.to_string() + ", the model inputs are " + in_m.to_string());

  std::string table = "query";
  for (const std::string& n : io::coordinate_names(out_m)) table += ",mean_" + n;
  for (Index i = 0; i < out_m.dim(); ++i)
    for (Index j = 0; j < out_m.dim(); ++j) table += ",cov_" + std::to_string(i) + "_" + std::to_string(j);
  for (std::size_t k = 0; k < model.size(); ++k) table += ",h" + std::to_string(k);
  table += '\n';
  std::vector<Gaussian> outputs;
  for (std::size_t n = 0; n < q.points.size(); ++n) {
    const GmrResult r = gmr(model, part, q.points[n], iter_options(opt));
    if (!out_m.contains(r.gaussian.mean, 1e-9)) throw NumericalError("GMR output left the manifold");
    table += std::to_string(n) + "," + join_numbers(r.gaussian.mean) + "," +
             join_numbers(r.gaussian.cov.reshaped<Eigen::RowMajor>()) + "," + join_numbers(r.activations) + "\n";
    outputs.push_back(r.gaussian);
  }
  out.text("gmr.csv", table);
  plot_guarded(opt, "gmr.svg", [&](const fs::path& p) {
    plot::Scene scene;
    scene.title = "GMR outputs";
    for (const Gaussian& g : outputs) scene.ellipses.push_back({g, 0, false});
    plot::write_svg(p, out_m, scene);
  }, result);
  result.summary = "queries=" + std::to_string(q.points.size()) + " output=" + out_m.to_string() + result.summary;
  return result;
}

CommandResult cmd_fuse(const std::vector<fs::path>& models, const GlobalOptions& opt) {
  if (models.empty()) throw ConfigError("fuse needs at least one model file");
  CommandResult result;
  Outputs out(opt, result);
  std::vector<Gaussian> gaussians;
  json inputs = json::array();
  for (const fs::path& path : models) {
    const GaussianMixture m = io::read_model(path);
    for (const Gaussian& g : m.components) gaussians.push_back(g);
    inputs.push_back(path.filename().string());
  }
  const FuseResult r = fuse(gaussians, iter_options(opt));
  json doc = io::model_to_json(io::single(r.gaussian));
  json meta = run_metadata("fuse", opt);
  meta["inputs"] = inputs;
  meta["iterations"] = r.iterations;
  doc["metadata"] = meta;
  out.doc("fused.json", doc);
  plot_guarded(opt, "fused.svg", [&](const fs::path& p) {
    plot::Scene scene;
    scene.title = "product of Gaussians";
    for (std::size_t i = 0; i < gaussians.size(); ++i) scene.ellipses.push_back({gaussians[i], static_cast<int>(i) + 1, true});
    scene.ellipses.push_back({r.gaussian, 0, false});
    plot::write_svg(p, r.gaussian.manifold, scene);
  }, result);
  result.summary = "fused mean=" + join_numbers(r.gaussian.mean) + " iterations=" + std::to_string(r.iterations) +
                   result.summary;
  return result;
}

CommandResult cmd_mpc(const fs::path& scenario, const GlobalOptions& opt) {
  CommandResult result;
  Outputs out(opt, result);
  const io::Scenario sc = io::read_scenario(scenario);
  const MpcRollout run = mpc_rollout(sc.manifold, sc.start, sc.reference, sc.settings, sc.steps);
  out.text("trajectory.csv", io::format_trajectory(sc.manifold, run));
  plot_guarded(opt, "mpc.svg", [&](const fs::path& p) {
    plot::write_svg(p, sc.manifold, trajectory_scene("MPC", run, sc.reference.gmm, {}));
  }, result);
  result.summary = trajectory_summary(sc.manifold, run, sc.reference.gmm) + result.summary;
  return result;
}

CommandResult cmd_demo(const std::string& name, const GlobalOptions& opt) {
  if (name == "fig1") return demo_fig1(opt);
  if (name == "fig4") return demo_fig4(opt);
  if (name == "fig5") return demo_fig5(opt);
  if (name == "fig6") return demo_fig6(opt);
  throw ConfigError("unknown demo '" + name + "' (expected fig1, fig4, fig5 or fig6)");
}

int exit_code(const std::exception& e) {
  if (dynamic_cast<const NumericalError*>(&e)) return 2;
  if (dynamic_cast<const InputError*>(&e)) return 3;
  if (dynamic_cast<const ConfigError*>(&e)) return 4;
  if (dynamic_cast<const fs::filesystem_error*>(&e)) return 3;
  return 1;
}

void init_logging() {
  auto logger = spdlog::stderr_color_mt("riemstat");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("RIEMSTAT_LOG")) {
    const auto parsed = spdlog::level::from_str(level);
    // from_str maps unknown names to off; only accept real names.
    if (parsed != spdlog::level::off || std::string(level) == "off") {
      spdlog::set_level(parsed);
    } else {
      spdlog::warn("RIEMSTAT_LOG='{}' is not a level name; using warn", level);
    }
  }
}

}  // namespace riemstat::app

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <sys/wait.h>

#include "riemstat/commands.hpp"
#include "riemstat/demos.hpp"
#include "riemstat/errors.hpp"
#include "riemstat/io.hpp"
#include "riemstat/linalg.hpp"
#include "support.hpp"

namespace riemstat {
namespace {

namespace fs = std::filesystem;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;
using testing::Rng;

const Point kNorth = Eigen::Vector3d::UnitZ();

// Fresh scratch directory per test.
class Scratch : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("riemstat_" + std::string(info->test_suite_name()) + "_" + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path file(const std::string& name, const std::string& content) const {
    std::ofstream(dir_ / name) << content;
    return dir_ / name;
  }
  app::GlobalOptions options() const {
    app::GlobalOptions o;
    o.out_dir = dir_ / "out";
    return o;
  }

  fs::path dir_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// ---------------------------------------------------------------- datasets

TEST(Dataset, ParsesLabelsAndWeights) {
  const io::Dataset d = io::parse_dataset(
      "# manifold=sphere:2 columns=x,y,z,label,weight\n"
      "0,0,1,0,1\n"
      "1,0,0,1,3\n");
  EXPECT_EQ(d.manifold.to_string(), "sphere:2");
  ASSERT_EQ(d.points.size(), 2u);
  EXPECT_EQ(*d.labels, (std::vector<int>{0, 1}));
  const WeightedDataset w = d.weighted();
  EXPECT_NEAR(w.weights(0), 0.25, 1e-15);
  EXPECT_NEAR(w.weights(1), 0.75, 1e-15);
}

TEST(Dataset, ProjectsWithinSlackAndRejectsBeyond) {
  const io::Dataset ok = io::parse_dataset("# manifold=sphere:2 columns=x,y,z\n0,0,1.0000004\n");
  EXPECT_DOUBLE_EQ(ok.points[0].norm(), 1.0);
  EXPECT_THROW(io::parse_dataset("# manifold=sphere:2 columns=x,y,z\n0,0,1.1\n"), InputError);
  EXPECT_THROW(io::parse_dataset("# manifold=spd:2 columns=a,b,c,d\n1,0.5,0.4,1\n"), InputError);
}

TEST(Dataset, MalformedInputIsRejected) {
  EXPECT_THROW(io::parse_dataset(""), ParseError);
  EXPECT_THROW(io::parse_dataset("0,0,1\n"), ParseError);
  EXPECT_THROW(io::parse_dataset("# manifold=sphere:2 columns=x,y\n0,0\n"), ParseError);
  EXPECT_THROW(io::parse_dataset("# manifold=sphere:2 columns=x,y,z\n0,0\n"), ParseError);
  EXPECT_THROW(io::parse_dataset("# manifold=sphere:2 columns=x,y,z\n0,zero,1\n"), ParseError);
  EXPECT_THROW(io::parse_dataset("# manifold=bogus:2 columns=x,y,z\n0,0,1\n"), ParseError);
  EXPECT_THROW(io::parse_dataset("# manifold=sphere:2 columns=x,y,z,weight\n0,0,1,-1\n"), InputError);
  EXPECT_THROW(io::parse_dataset("# manifold=sphere:2 columns=x,y,z\n"), InputError);
}

TEST(Dataset, FormatParsesBackExactly) {
  Rng rng(3);
  const Manifold m = Manifold::parse("product[euclidean:1,spd:2]");
  io::Dataset d{m, {}, std::vector<int>{}, std::nullopt};
  for (int i = 0; i < 20; ++i) {
    d.points.push_back(testing::random_point(m, rng));
    d.labels->push_back(i % 3);
  }
  const io::Dataset back = io::parse_dataset(io::format_dataset(d));
  ASSERT_EQ(back.points.size(), d.points.size());
  for (std::size_t i = 0; i < d.points.size(); ++i) EXPECT_EQ(back.points[i], d.points[i]);
  EXPECT_EQ(*back.labels, *d.labels);
}

TEST(Dataset, WritingOffManifoldRowsFails) {
  io::Dataset d{Manifold::sphere(2), {Point::Constant(3, 1.0)}, std::nullopt, std::nullopt};
  EXPECT_THROW(io::format_dataset(d), NumericalError);
}

// ------------------------------------------------------------------ models

TEST(Model, RoundTripWithinTolerance) {
  Rng rng(5);
  for (const char* spec : {"sphere:3", "spd:3", "grassmann:4,2", "product[euclidean:2,hyperbolic:2]"}) {
    const Manifold m = Manifold::parse(spec);
    GaussianMixture g{m, VectorXd(3), {}};
    g.priors << 0.2, 0.3, 0.5;
    for (int k = 0; k < 3; ++k) g.components.push_back({m, testing::random_point(m, rng), testing::random_spd(m.dim(), rng)});
    const GaussianMixture back = io::model_from_json(json::parse(io::model_to_json(g).dump(2)));
    ASSERT_TRUE(back.manifold == m) << spec;
    EXPECT_LE((back.priors - g.priors).cwiseAbs().maxCoeff(), 1e-12);
    for (int k = 0; k < 3; ++k) {
      EXPECT_LE((back.components[k].mean - g.components[k].mean).cwiseAbs().maxCoeff(), 1e-12) << spec;
      EXPECT_LE((back.components[k].cov - g.components[k].cov).cwiseAbs().maxCoeff(), 1e-12) << spec;
    }
  }
}

TEST(Model, InvalidDocumentsAreRejected) {
  json doc = io::model_to_json(io::single(Gaussian{Manifold::sphere(2), kNorth, MatrixXd::Identity(2, 2)}));
  json bad = doc;
  bad["means"][0] = {0, 0, 2};
  EXPECT_THROW(io::model_from_json(bad), InputError);
  bad = doc;
  bad["covariances"][0] = {{1, 0}};
  EXPECT_THROW(io::model_from_json(bad), ParseError);
  bad = doc;
  bad.erase("priors");
  EXPECT_THROW(io::model_from_json(bad), ParseError);
  bad = doc;
  bad["covariances"][0] = {{1, 0}, {0, -1}};
  EXPECT_THROW(io::model_from_json(bad), InputError);
}

// --------------------------------------------------------------- scenarios

json scenario_doc() {
  return {{"manifold", "sphere:2"}, {"model", "m.json"}, {"sequence", "auto"}, {"T", 20},
          {"window", 5},            {"dt", 0.1},         {"r", 1e-3},         {"start", {1, 0, 0}}};
}

class ScenarioTest : public Scratch {
 protected:
  void SetUp() override {
    Scratch::SetUp();
    const Gaussian g{Manifold::sphere(2), kNorth, 0.01 * MatrixXd::Identity(2, 2)};
    io::write_json(dir_ / "m.json", io::model_to_json(io::single(g)));
  }
};

TEST_F(ScenarioTest, ReadsDefaults) {
  const io::Scenario sc = io::scenario_from_json(scenario_doc(), dir_);
  EXPECT_EQ(sc.steps, 20);
  EXPECT_EQ(sc.reference.horizon(), 20);
  EXPECT_EQ(sc.settings.window, 5);
  EXPECT_FALSE(sc.settings.clip_to_horizon);
}

TEST_F(ScenarioTest, InconsistentConfigIsConfigError) {
  const auto expect_config_error = [&](json doc) {
    EXPECT_THROW(io::scenario_from_json(doc, dir_), ConfigError) << doc.dump();
  };
  json d = scenario_doc();
  d.erase("T");
  expect_config_error(d);
  d = scenario_doc();
  d["window"] = 1;
  expect_config_error(d);
  d = scenario_doc();
  d["r"] = 0;
  expect_config_error(d);
  d = scenario_doc();
  d["sequence"] = {0, 0};
  expect_config_error(d);
  d = scenario_doc();
  d["sequence"] = std::vector<int>(20, 3);
  expect_config_error(d);
  d = scenario_doc();
  d["manifold"] = "sphere:3";
  expect_config_error(d);
  d = scenario_doc();
  d["start"] = {1, 1, 1};
  expect_config_error(d);
  d = scenario_doc();
  d["dt"] = "fast";
  expect_config_error(d);
}

// ---------------------------------------------------------------- commands

using Commands = Scratch;

GaussianMixture read_out(const app::CommandResult& r, const std::string& name) {
  for (const fs::path& p : r.files)
    if (p.filename() == name) return io::read_model(p);
  throw std::runtime_error(name + " not written");
}

TEST_F(Commands, MeanOfIdenticalPointsHasZeroCovariance) {
  const auto path = file("d.csv", "# manifold=sphere:2 columns=x,y,z\n0.6,0,0.8\n0.6,0,0.8\n0.6,0,0.8\n");
  const GaussianMixture g = read_out(app::cmd_mean(path, options()), "mean.json");
  EXPECT_LE((g.components[0].mean - Point(Eigen::Vector3d(0.6, 0, 0.8))).norm(), 1e-15);
  // Only the regularization floor remains.
  EXPECT_LE(g.components[0].cov.cwiseAbs().maxCoeff(), 1e-12);
}

TEST_F(Commands, EuclideanMeanIsArithmeticMean) {
  Rng rng(11);
  std::string csv = "# manifold=euclidean:3 columns=x,y,z\n";
  MatrixXd pts(40, 3);
  for (int i = 0; i < 40; ++i) {
    pts.row(i) = testing::gaussian_vector(3, rng).transpose();
    csv += io::format_number(pts(i, 0)) + "," + io::format_number(pts(i, 1)) + "," + io::format_number(pts(i, 2)) + "\n";
  }
  const GaussianMixture g = read_out(app::cmd_mean(file("d.csv", csv), options()), "mean.json");
  const VectorXd mu = pts.colwise().mean().transpose();
  const MatrixXd centred = pts.rowwise() - mu.transpose();
  EXPECT_LE((g.components[0].mean - mu).norm(), 1e-12);
  const MatrixXd cov = centred.transpose() * centred / 40.0;
  EXPECT_LE((g.components[0].cov - cov).norm(), 1e-5 * cov.trace());
}

TEST_F(Commands, TwoPointSphereMeanIsMidpoint) {
  const auto path = file("d.csv", "# manifold=sphere:2 columns=x,y,z\n1,0,0\n0,1,0\n");
  const GaussianMixture g = read_out(app::cmd_mean(path, options()), "mean.json");
  EXPECT_LE((g.components[0].mean - Point(Eigen::Vector3d(1, 1, 0).normalized())).norm(), 1e-9);
}

TEST_F(Commands, GmmWithOneComponentAndTraces) {
  Rng rng(2);
  io::Dataset d{Manifold::sphere(2), {}, std::nullopt, std::nullopt};
  for (int i = 0; i < 30; ++i) d.points.push_back(testing::random_neighbour(Manifold::sphere(2), kNorth, rng, 0.1));
  io::write_dataset(dir_ / "d.csv", d);
  const app::CommandResult r = app::cmd_gmm(dir_ / "d.csv", 1, options());
  const GaussianMixture g = read_out(r, "gmm.json");
  const MeanResult mean = karcher_mean(d.weighted());
  EXPECT_LE((g.components[0].mean - mean.gaussian.mean).norm(), 1e-9);
  EXPECT_TRUE(fs::exists(dir_ / "out" / "responsibilities.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "out" / "loglik.csv"));
  EXPECT_THROW(app::cmd_gmm(dir_ / "d.csv", 0, options()), ConfigError);
}

TEST_F(Commands, FuseIdentityAndDuplicates) {
  const Gaussian g{Manifold::sphere(2), Point(Eigen::Vector3d(0, 0.6, 0.8)), (MatrixXd(2, 2) << 0.04, 0.01, 0.01, 0.02).finished()};
  io::write_json(dir_ / "g.json", io::model_to_json(io::single(g)));
  const GaussianMixture one = read_out(app::cmd_fuse({dir_ / "g.json"}, options()), "fused.json");
  EXPECT_LE((one.components[0].mean - g.mean).norm(), 1e-12);
  EXPECT_LE((one.components[0].cov - g.cov).norm(), 1e-12);
  const GaussianMixture two = read_out(app::cmd_fuse({dir_ / "g.json", dir_ / "g.json"}, options()), "fused.json");
  EXPECT_LE((two.components[0].mean - g.mean).norm(), 1e-12);
  EXPECT_LE((two.components[0].cov - 0.5 * g.cov).norm(), 1e-12);
}

TEST_F(Commands, EuclideanFuseMatchesPrecisionWeighting) {
  Rng rng(4);
  const Manifold m = Manifold::euclidean(3);
  const Gaussian a{m, testing::gaussian_vector(3, rng), testing::random_spd(3, rng)};
  const Gaussian b{m, testing::gaussian_vector(3, rng), testing::random_spd(3, rng)};
  io::write_json(dir_ / "a.json", io::model_to_json(io::single(a)));
  io::write_json(dir_ / "b.json", io::model_to_json(io::single(b)));
  const GaussianMixture f = read_out(app::cmd_fuse({dir_ / "a.json", dir_ / "b.json"}, options()), "fused.json");
  const MatrixXd pa = a.cov.inverse(), pb = b.cov.inverse();
  const MatrixXd cov = (pa + pb).inverse();
  EXPECT_LE((f.components[0].cov - cov).norm(), 1e-10);
  EXPECT_LE((f.components[0].mean - cov * (pa * a.mean + pb * b.mean)).norm(), 1e-10);
}

TEST_F(Commands, EuclideanGmrMatchesConditioning) {
  Rng rng(6);
  const Manifold m = Manifold::parse("product[euclidean:1,euclidean:2]");
  const Gaussian g{m, testing::gaussian_vector(3, rng), testing::random_spd(3, rng)};
  io::write_json(dir_ / "g.json", io::model_to_json(io::single(g)));
  const auto q = file("q.csv", "# manifold=euclidean:1 columns=x\n0.5\n-1.25\n");
  app::cmd_gmr(dir_ / "g.json", {0}, q, options());
  std::istringstream table(slurp(dir_ / "out" / "gmr.csv"));
  std::string line;
  std::getline(table, line);
  EXPECT_EQ(line, "query,mean_x,mean_y,cov_0_0,cov_0_1,cov_1_0,cov_1_1,h0");
  for (double x : {0.5, -1.25}) {
    std::getline(table, line);
    std::vector<double> row;
    std::stringstream cells(line);
    for (std::string c; std::getline(cells, c, ',');) row.push_back(std::stod(c));
    const VectorXd mean = g.mean.tail(2) + g.cov.block(1, 0, 2, 1) * (x - g.mean(0)) / g.cov(0, 0);
    const MatrixXd cov = g.cov.block(1, 1, 2, 2) - g.cov.block(1, 0, 2, 1) * g.cov.block(0, 1, 1, 2) / g.cov(0, 0);
    EXPECT_NEAR(row[1], mean(0), 1e-10);
    EXPECT_NEAR(row[2], mean(1), 1e-10);
    EXPECT_NEAR(row[3], cov(0, 0), 1e-10);
    EXPECT_NEAR(row[6], cov(1, 1), 1e-10);
  }
  EXPECT_THROW(app::cmd_gmr(dir_ / "g.json", {0, 1}, q, options()), ConfigError);
  EXPECT_THROW(app::cmd_gmr(dir_ / "g.json", {1}, q, options()), InputError);
}

TEST_F(Commands, MpcWithNegligiblePrecisionStaysAtStart) {
  const Gaussian g{Manifold::euclidean(2), Point(Eigen::Vector2d(3, 4)), 1e20 * MatrixXd::Identity(2, 2)};
  io::write_json(dir_ / "m.json", io::model_to_json(io::single(g)));
  json sc = {{"manifold", "euclidean:2"}, {"model", "m.json"}, {"sequence", "auto"}, {"T", 10},
             {"window", 4},               {"dt", 0.1},         {"r", 1e-3},         {"start", {1, -1}}};
  io::write_json(dir_ / "s.json", sc);
  app::cmd_mpc(dir_ / "s.json", options());
  std::istringstream table(slurp(dir_ / "out" / "trajectory.csv"));
  std::string line;
  std::getline(table, line);
  EXPECT_EQ(line, "step,x,y,u_norm,dist_to_viapoint");
  int rows = 0;
  while (std::getline(table, line)) {
    std::vector<double> row;
    std::stringstream cells(line);
    for (std::string c; std::getline(cells, c, ',');) row.push_back(std::stod(c));
    EXPECT_NEAR(row[1], 1.0, 1e-12);
    EXPECT_NEAR(row[2], -1.0, 1e-12);
    ++rows;
  }
  EXPECT_EQ(rows, 11);
}

TEST_F(Commands, UnknownDemoIsConfigError) {
  EXPECT_THROW(app::cmd_demo("fig2", options()), ConfigError);
}

TEST(ExitCodes, ErrorClassesMapToCodes) {
  EXPECT_EQ(app::exit_code(NoConvergenceError("x", 3)), 2);
  EXPECT_EQ(app::exit_code(CutLocusError("x")), 2);
  EXPECT_EQ(app::exit_code(ParseError("x")), 3);
  EXPECT_EQ(app::exit_code(DimensionMismatchError("x")), 3);
  EXPECT_EQ(app::exit_code(ConfigError("x")), 4);
  EXPECT_EQ(app::exit_code(std::runtime_error("x")), 1);
}

// ------------------------------------------------------------- executable

class Executable : public Scratch {
 protected:
  int run(const std::string& args) const {
    const std::string cmd = std::string("\"") + RIEMSTAT_CLI + "\" " + args + " > \"" + (dir_ / "stdout").string() +
                            "\" 2> \"" + (dir_ / "stderr").string() + "\"";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
};

TEST_F(Executable, ExitCodes) {
  const auto good = file("good.csv", "# manifold=sphere:2 columns=x,y,z\n1,0,0\n0,1,0\n");
  const auto bad = file("bad.csv", "# manifold=sphere:2 columns=x,y,z\n1,0\n");
  const auto out = " --out-dir \"" + (dir_ / "out").string() + "\" ";
  EXPECT_EQ(run(out + "mean \"" + good.string() + "\""), 0);
  EXPECT_TRUE(fs::exists(dir_ / "out" / "mean.json"));
  EXPECT_EQ(run(out + "mean \"" + bad.string() + "\""), 3);
  EXPECT_NE(slurp(dir_ / "stderr").find("riemstat: "), std::string::npos);
  // Antipodal points have no Karcher mean reachable from either one.
  const auto antipodal = file("anti.csv", "# manifold=sphere:2 columns=x,y,z\n1,0,0\n-1,0,0\n");
  EXPECT_EQ(run(out + "mean \"" + antipodal.string() + "\""), 2);
  EXPECT_EQ(run(out + "gmm -k 2 \"" + good.string() + "\""), 0);
  // The inner mean cannot reach the tolerance in one step.
  EXPECT_EQ(run(out + "--max-iter 1 --tol 1e-300 mean \"" + good.string() + "\""), 2);
  EXPECT_EQ(run(out + "gmm -k 0 \"" + good.string() + "\""), 4);
  EXPECT_EQ(run(out + "demo fig9"), 4);
  EXPECT_EQ(run(out + "frobnicate"), 4);
  EXPECT_EQ(run(out + "--tol -1 mean \"" + good.string() + "\""), 4);
}

TEST_F(Executable, DemoScenarioReplaysExactly) {
  const auto a = dir_ / "a", b = dir_ / "b";
  ASSERT_EQ(run("--out-dir \"" + a.string() + "\" demo fig6"), 0);
  ASSERT_EQ(run("--out-dir \"" + b.string() + "\" mpc \"" + (a / "fig6_scenario.json").string() + "\""), 0);
  EXPECT_EQ(slurp(a / "fig6_trajectory.csv"), slurp(b / "trajectory.csv"));
}

TEST_F(Executable, PlotFlagWritesSvgWithoutChangingData) {
  const auto data = file("d.csv", "# manifold=sphere:2 columns=x,y,z\n1,0,0\n0,1,0\n0,0.6,0.8\n");
  const auto a = dir_ / "a", b = dir_ / "b";
  ASSERT_EQ(run("--out-dir \"" + a.string() + "\" mean \"" + data.string() + "\""), 0);
  ASSERT_EQ(run("--plot --out-dir \"" + b.string() + "\" mean \"" + data.string() + "\""), 0);
  EXPECT_EQ(slurp(a / "mean.json"), slurp(b / "mean.json"));
  EXPECT_FALSE(fs::exists(a / "mean.svg"));
  EXPECT_NE(slurp(b / "mean.svg").find("<svg"), std::string::npos);
}

// ------------------------------------------------------------------ demos

TEST(Demos, SphereClusteringBeatsSingleChartBaseline) {
  EmOptions o;
  o.seed = 1;
  const demos::Fig4 f = demos::fig4(1, o);
  EXPECT_GT(f.spread, std::numbers::pi / 2);
  EXPECT_GT(f.proposed_loglik, f.baseline_loglik);
}

TEST(Demos, SpdRegressionOutputsArePositiveDefinite) {
  EmOptions o;
  const demos::Fig5 f = demos::fig5(1, o);
  ASSERT_EQ(f.predictions.size(), 50u);
  const Manifold spd = Manifold::spd(2);
  for (std::size_t i = 0; i < f.predictions.size(); ++i) {
    const MatrixXd s = linalg::unflatten(f.predictions[i].gaussian.mean, 2, 2);
    EXPECT_LE((s - s.transpose()).norm(), 1e-12);
    EXPECT_GT(Eigen::SelfAdjointEigenSolver<MatrixXd>(s).eigenvalues().minCoeff(), 0.0);
    EXPECT_LE(spd.dist(f.predictions[i].gaussian.mean, linalg::flatten(demos::fig5_curve(f.query_time[i]))), f.noise);
  }
}

// Distance to the active viapoint over the second half of every segment.
// The window looks ahead, so once the next viapoint enters it the state
// starts leaving the current one early; the decrease is required only while
// the window still sees the active component alone, and over the whole
// second half of the final segment.
TEST(Demos, SphereMpcApproachesEachViapoint) {
  const demos::Fig6 f = demos::fig6_scenario(1, EmOptions{});
  const Manifold& s2 = f.data.manifold;
  const MpcRollout run = mpc_rollout(s2, f.start, f.reference, f.settings, f.steps);
  const auto& seq = f.reference.sequence;
  const int horizon = f.reference.horizon();
  int seg_begin = 0;
  int anticipating = 0;
  while (seg_begin < horizon) {
    int seg_end = seg_begin;
    while (seg_end < horizon && seq[seg_end] == seq[seg_begin]) ++seg_end;
    const bool last = seg_end == horizon;
    // Last state whose window holds only this component.
    const int quiet_end = last ? seg_end : seg_end - f.settings.window + 1;
    for (int t = (seg_begin + seg_end) / 2 + 1; t < quiet_end; ++t)
      EXPECT_LE(run.viapoint_distance[t], run.viapoint_distance[t - 1] + 1e-12) << "t=" << t;
    if (!last)
      for (int t = quiet_end; t < seg_end; ++t)
        anticipating += run.viapoint_distance[t] > run.viapoint_distance[t - 1] + 1e-12;
    seg_begin = seg_end;
  }
  // The early departure is real and shows up in the intermediate segments.
  EXPECT_GT(anticipating, 0);
  EXPECT_LT(run.viapoint_distance.back(), 0.05);
}

}  // namespace
}  // namespace riemstat

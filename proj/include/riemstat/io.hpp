#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "riemstat/control.hpp"
#include "riemstat/mixture.hpp"

namespace riemstat::io {

// CSV dataset with a one-line header
//   # manifold=sphere:2 columns=x,y,z[,label][,weight]
// Matrix-valued factors are flattened row-major.
struct Dataset {
  Manifold manifold = Manifold::euclidean(1);
  std::vector<Point> points;
  std::optional<std::vector<int>> labels;
  std::optional<Eigen::VectorXd> weights;

  WeightedDataset weighted() const;
};

// Rows are projected onto the manifold; a correction larger than 1e-6, a
// negative weight or a malformed line raises ParseError / InputError.
Dataset read_dataset(const std::filesystem::path& path);
Dataset parse_dataset(const std::string& text);
// Throws NumericalError when a row violates the manifold invariants.
void write_dataset(const std::filesystem::path& path, const Dataset& data);
std::string format_dataset(const Dataset& data);

// Default column names for the ambient coordinates.
std::vector<std::string> coordinate_names(const Manifold& m);

// Model documents: fields `manifold`, `priors`, `means` (ambient
// coordinates), `covariances` (row-major chart matrices), plus optional
// `em_report` and `metadata`.
nlohmann::json model_to_json(const GaussianMixture& model);
GaussianMixture model_from_json(const nlohmann::json& doc);
nlohmann::json em_report_to_json(const EmReport& report);
GaussianMixture single(const Gaussian& g);

GaussianMixture read_model(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& doc);
nlohmann::json read_json(const std::filesystem::path& path);

// Closed-loop scenario document.
struct Scenario {
  Manifold manifold = Manifold::euclidean(1);
  GaussianMixture model{Manifold::euclidean(1), {}, {}};
  StepwiseReference reference{model, {}};
  MpcSettings settings;
  Point start;
  int steps = 0;
};

// Relative model paths resolve against `base_dir`. Throws ConfigError.
Scenario scenario_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
Scenario read_scenario(const std::filesystem::path& path);

// Trajectory table: step, ambient coordinates, u_norm, dist_to_viapoint.
std::string format_trajectory(const Manifold& m, const MpcRollout& run);

// Formatting shared by every table writer (17 significant digits).
std::string format_number(double v);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace riemstat::io

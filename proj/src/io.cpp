#include "riemstat/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "riemstat/errors.hpp"
#include "riemstat/linalg.hpp"

namespace riemstat::io {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

namespace {

constexpr double kProjectionSlack = 1e-6;
constexpr double kInvariantTol = 1e-9;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& token, int line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(token, &used);
    if (used != token.size() || !std::isfinite(v)) throw std::invalid_argument(token);
    return v;
  } catch (const std::exception&) {
    throw ParseError("line " + std::to_string(line) + ": not a finite number: '" + token + "'");
  }
}

VectorXd json_vector(const json& j, const char* what) {
  if (!j.is_array()) throw ParseError(std::string(what) + " must be an array");
  VectorXd v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ParseError(std::string(what) + " must hold numbers");
    v(static_cast<Index>(i)) = j[i].get<double>();
  }
  return v;
}

json json_array(const VectorXd& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

void check_on_manifold(const Manifold& m, const Point& x, const char* what) {
  if (!m.contains(x, kInvariantTol))
    throw NumericalError(std::string(what) + " violates the " + m.to_string() + " invariants");
}

template <class T>
T config_value(const json& doc, const char* key) {
  if (!doc.contains(key)) throw ConfigError(std::string("scenario is missing '") + key + "'");
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("scenario field '") + key + "' has the wrong type");
  }
}

// Points already on the manifold to rounding are kept bit for bit, so that
// written files read back exactly.
Point snap(const Manifold& m, const Eigen::VectorXd& raw) {
  return m.contains(raw, 1e-12) ? Point(raw) : m.project(raw);
}

template <class T>
T config_value_or(const json& doc, const char* key, T fallback) {
  return doc.contains(key) ? config_value<T>(doc, key) : fallback;
}

}  // namespace

std::string format_number(double v) {
  if (v == 0.0) v = 0.0;  // no negative zero in tables
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
  if (!out) throw InputError("failed writing " + path.string());
}

static std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------- datasets

WeightedDataset Dataset::weighted() const {
  if (weights) return WeightedDataset::weighted(manifold, points, *weights);
  return WeightedDataset::uniform(manifold, points);
}

std::vector<std::string> coordinate_names(const Manifold& m) {
  const Index n = m.ambient_dim();
  if (n <= 3) {
    static const char* xyz[] = {"x", "y", "z"};
    return {xyz, xyz + n};
  }
  std::vector<std::string> names;
  for (Index i = 0; i < n; ++i) names.push_back("x" + std::to_string(i));
  return names;
}

Dataset parse_dataset(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  std::optional<Dataset> data;
  int label_col = -1, weight_col = -1;
  std::size_t ncols = 0;
  std::vector<double> weights;
  std::vector<int> labels;

  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    if (!data) {
      // # manifold=<spec> columns=<names>
      const auto m_at = line.find("manifold=");
      const auto c_at = line.find(" columns=");
      if (line[0] != '#' || m_at == std::string::npos || c_at == std::string::npos || c_at < m_at)
        throw ParseError("dataset must start with '# manifold=<spec> columns=<names>'");
      data.emplace();
      data->manifold = Manifold::parse(trim(line.substr(m_at + 9, c_at - m_at - 9)));
      const auto names = split(trim(line.substr(c_at + 9)), ',');
      ncols = names.size();
      for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == "label") label_col = static_cast<int>(i);
        if (names[i] == "weight") weight_col = static_cast<int>(i);
      }
      const std::size_t coords = ncols - (label_col >= 0) - (weight_col >= 0);
      if (coords != static_cast<std::size_t>(data->manifold.ambient_dim()))
        throw ParseError("header lists " + std::to_string(coords) + " coordinate columns, " +
                         data->manifold.to_string() + " needs " +
                         std::to_string(data->manifold.ambient_dim()));
      continue;
    }
    if (line[0] == '#') continue;
    const auto cells = split(line, ',');
    if (cells.size() != ncols)
      throw ParseError("line " + std::to_string(line_no) + ": expected " + std::to_string(ncols) +
                       " columns, found " + std::to_string(cells.size()));
    Point raw(data->manifold.ambient_dim());
    Index at = 0;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const double v = parse_double(cells[i], line_no);
      if (static_cast<int>(i) == label_col) {
        if (v != std::floor(v)) throw ParseError("line " + std::to_string(line_no) + ": label must be an integer");
        labels.push_back(static_cast<int>(v));
      } else if (static_cast<int>(i) == weight_col) {
        if (v < 0.0) throw InputError("line " + std::to_string(line_no) + ": negative weight");
        weights.push_back(v);
      } else {
        raw(at++) = v;
      }
    }
    Point x;
    try {
      x = snap(data->manifold, raw);
    } catch (const InputError& e) {
      throw InputError("line " + std::to_string(line_no) + ": " + e.what());
    }
    if ((x - raw).norm() > kProjectionSlack)
      throw InputError("line " + std::to_string(line_no) + ": point is not on " + data->manifold.to_string());
    data->points.push_back(std::move(x));
  }
  if (!data) throw ParseError("dataset is empty");
  if (data->points.empty()) throw InputError("dataset has no rows");
  if (label_col >= 0) data->labels = std::move(labels);
  if (weight_col >= 0) {
    data->weights = Eigen::Map<VectorXd>(weights.data(), static_cast<Index>(weights.size()));
    if (!(data->weights->sum() > 0.0)) throw InputError("weights sum to zero");
  }
  return std::move(*data);
}

Dataset read_dataset(const std::filesystem::path& path) { return parse_dataset(read_text(path)); }

std::string format_dataset(const Dataset& data) {
  std::vector<std::string> names = coordinate_names(data.manifold);
  if (data.labels) names.push_back("label");
  if (data.weights) names.push_back("weight");
  std::string out = "# manifold=" + data.manifold.to_string() + " columns=";
  for (std::size_t i = 0; i < names.size(); ++i) out += (i ? "," : "") + names[i];
  out += '\n';
  for (std::size_t n = 0; n < data.points.size(); ++n) {
    const Point& x = data.points[n];
    check_on_manifold(data.manifold, x, "dataset row");
    for (Index i = 0; i < x.size(); ++i) out += (i ? "," : "") + format_number(x(i));
    if (data.labels) out += "," + std::to_string(data.labels->at(n));
    if (data.weights) out += "," + format_number((*data.weights)(static_cast<Index>(n)));
    out += '\n';
  }
  return out;
}

void write_dataset(const std::filesystem::path& path, const Dataset& data) {
  write_text(path, format_dataset(data));
}

// ------------------------------------------------------------------ models

json model_to_json(const GaussianMixture& model) {
  json doc;
  doc["manifold"] = model.manifold.to_string();
  doc["priors"] = json_array(model.priors);
  doc["means"] = json::array();
  doc["covariances"] = json::array();
  for (const Gaussian& g : model.components) {
    doc["means"].push_back(json_array(g.mean));
    json rows = json::array();
    for (Index r = 0; r < g.cov.rows(); ++r) rows.push_back(json_array(g.cov.row(r).transpose()));
    doc["covariances"].push_back(std::move(rows));
  }
  return doc;
}

GaussianMixture model_from_json(const json& doc) {
  try {
    const Manifold m = Manifold::parse(doc.at("manifold").get<std::string>());
    GaussianMixture model{m, json_vector(doc.at("priors"), "priors"), {}};
    const json& means = doc.at("means");
    const json& covs = doc.at("covariances");
    if (!means.is_array() || !covs.is_array() || means.size() != covs.size() ||
        static_cast<Index>(means.size()) != model.priors.size())
      throw ParseError("priors, means and covariances must have one entry per component");
    for (std::size_t k = 0; k < means.size(); ++k) {
      Point mean = json_vector(means[k], "mean");
      if (mean.size() != m.ambient_dim()) throw ParseError("mean has the wrong length");
      const Point projected = m.project(mean);
      if ((projected - mean).norm() > kProjectionSlack) throw InputError("mean is not on " + m.to_string());
      if (!covs[k].is_array() || static_cast<Index>(covs[k].size()) != m.dim())
        throw ParseError("covariance must be dim x dim");
      MatrixXd cov(m.dim(), m.dim());
      for (Index r = 0; r < m.dim(); ++r) {
        const VectorXd row = json_vector(covs[k][static_cast<std::size_t>(r)], "covariance row");
        if (row.size() != m.dim()) throw ParseError("covariance must be dim x dim");
        cov.row(r) = row.transpose();
      }
      if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > kInvariantTol * std::max(1.0, cov.cwiseAbs().maxCoeff()) ||
          Eigen::LLT<MatrixXd>(0.5 * (cov + cov.transpose())).info() != Eigen::Success)
        throw InputError("covariance " + std::to_string(k) + " is not symmetric positive definite");
      model.components.push_back({m, mean, cov});
    }
    model.validate();
    return model;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed model document: ") + e.what());
  }
}

json em_report_to_json(const EmReport& report) {
  json doc;
  doc["log_likelihood"] = report.log_likelihood;
  doc["iterations"] = report.iterations;
  doc["converged"] = report.converged;
  doc["reseeds"] = json::array();
  for (const ReseedEvent& r : report.reseeds)
    doc["reseeds"].push_back({{"iteration", r.iteration}, {"component", r.component}});
  return doc;
}

GaussianMixture single(const Gaussian& g) { return {g.manifold, VectorXd::Ones(1), {g}}; }

json read_json(const std::filesystem::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

GaussianMixture read_model(const std::filesystem::path& path) { return model_from_json(read_json(path)); }

void write_json(const std::filesystem::path& path, const json& doc) { write_text(path, doc.dump(2) + "\n"); }

// --------------------------------------------------------------- scenarios

Scenario scenario_from_json(const json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) throw ConfigError("scenario must be a JSON object");
  Scenario sc;
  try {
    sc.manifold = Manifold::parse(config_value<std::string>(doc, "manifold"));
  } catch (const ParseError& e) {
    throw ConfigError(std::string("scenario manifold: ") + e.what());
  }
  std::filesystem::path model_path = config_value<std::string>(doc, "model");
  if (model_path.is_relative()) model_path = base_dir / model_path;
  sc.model = read_model(model_path);
  if (!(sc.model.manifold == sc.manifold)) throw ConfigError("model manifold differs from the scenario manifold");

  const int horizon = config_value<int>(doc, "T");
  if (horizon < 1) throw ConfigError("T must be >= 1");
  const json seq = doc.value("sequence", json("auto"));
  if (seq.is_string() && seq.get<std::string>() == "auto") {
    sc.reference = StepwiseReference::equal_segments(sc.model, horizon);
  } else if (seq.is_array()) {
    sc.reference.gmm = sc.model;
    for (const json& s : seq) {
      if (!s.is_number_integer()) throw ConfigError("sequence entries must be component indices");
      sc.reference.sequence.push_back(s.get<int>());
    }
    if (sc.reference.horizon() != horizon) throw ConfigError("sequence length must equal T");
  } else {
    throw ConfigError("sequence must be \"auto\" or a list of component indices");
  }
  try {
    sc.reference.validate();
  } catch (const InputError& e) {
    throw ConfigError(e.what());
  }

  sc.settings.window = config_value_or(doc, "window", sc.settings.window);
  sc.settings.dt = config_value_or(doc, "dt", sc.settings.dt);
  sc.settings.r = config_value_or(doc, "r", sc.settings.r);
  sc.settings.clip_to_horizon = config_value_or(doc, "clip_to_horizon", false);
  if (sc.settings.window < 2) throw ConfigError("window must be >= 2");
  if (!(sc.settings.dt > 0.0) || !(sc.settings.r > 0.0)) throw ConfigError("dt and r must be positive");

  if (!doc.contains("start")) throw ConfigError("scenario is missing 'start'");
  Point start;
  try {
    start = json_vector(doc.at("start"), "start");
  } catch (const ParseError& e) {
    throw ConfigError(e.what());
  }
  if (start.size() != sc.manifold.ambient_dim()) throw ConfigError("start has the wrong length");
  sc.start = snap(sc.manifold, start);
  if ((sc.start - start).norm() > kProjectionSlack) throw ConfigError("start is not on the manifold");
  sc.steps = config_value_or(doc, "steps", horizon);
  if (sc.steps < 1) throw ConfigError("steps must be >= 1");
  return sc;
}

Scenario read_scenario(const std::filesystem::path& path) {
  json doc;
  try {
    doc = read_json(path);
  } catch (const ParseError& e) {
    throw ConfigError(e.what());
  }
  try {
    return scenario_from_json(doc, path.parent_path());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }
}

std::string format_trajectory(const Manifold& m, const MpcRollout& run) {
  std::string out = "step";
  for (const std::string& name : coordinate_names(m)) out += "," + name;
  out += ",u_norm,dist_to_viapoint\n";
  for (std::size_t t = 0; t < run.states.size(); ++t) {
    check_on_manifold(m, run.states[t], "trajectory point");
    out += std::to_string(t);
    for (Index i = 0; i < run.states[t].size(); ++i) out += "," + format_number(run.states[t](i));
    const double u = t < run.commands.size() ? run.commands[t].norm() : 0.0;
    out += "," + format_number(u) + "," + format_number(run.viapoint_distance[t]) + "\n";
  }
  return out;
}

}  // namespace riemstat::io

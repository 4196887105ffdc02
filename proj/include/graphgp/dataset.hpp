#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "graphgp/errors.hpp"
#include "graphgp/graph.hpp"

namespace graphgp {

enum class Task { Regression, Classification };

/// A graph dataset: features, labels, connectivity, and split index sets.
/// Standardization transforms are recorded so metrics can be reported in
/// the original label units.
struct Dataset {
  std::string name;
  Eigen::MatrixXd X;  // n x m feature matrix
  Eigen::VectorXd y;  // real target, or class index stored as double
  Graph graph;
  std::vector<int> train;
  std::vector<int> validation;
  std::vector<int> test;
  Task task = Task::Regression;
  int class_count = 0;

  double label_mean = 0.0;   // regression: y_original = y * label_scale + label_mean
  double label_scale = 1.0;
  Eigen::VectorXd feature_mean;   // empty until features are standardized
  Eigen::VectorXd feature_scale;

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index dim() const { return X.cols(); }

  Eigen::VectorXi labels_int() const {
    Eigen::VectorXi out(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) out(i) = static_cast<int>(std::lround(y(i)));
    return out;
  }

  double destandardize_label(double v) const { return v * label_scale + label_mean; }

  void validate() const {
    auto check = [this](const std::vector<int>& idx, const char* which) {
      for (int i : idx) {
        if (i < 0 || i >= n()) {
          throw ParameterError(std::string("Dataset: ") + which + " index " +
                               std::to_string(i) + " out of range");
        }
      }
    };
    check(train, "train");
    check(validation, "validation");
    check(test, "test");
    std::set<int> seen;
    for (const auto* split : {&train, &validation, &test}) {
      for (int i : *split) {
        if (!seen.insert(i).second) {
          throw ParameterError("Dataset: split sets are not disjoint at index " +
                               std::to_string(i));
        }
      }
    }
    if (task == Task::Classification) {
      for (Eigen::Index i = 0; i < y.size(); ++i) {
        const int c = static_cast<int>(std::lround(y(i)));
        if (c < 0 || c >= class_count) {
          throw ParameterError("Dataset: class label " + std::to_string(c) +
                               " outside [0, " + std::to_string(class_count) + ")");
        }
      }
    }
  }
};

namespace detail {

inline double parse_real(const std::string& token, const std::string& file, long line) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end == token.c_str() || *end != '\0' || errno == ERANGE) {
    throw ParseError(file, line, "malformed real value '" + token + "'");
  }
  return v;
}

inline long parse_index(const std::string& token, const std::string& file, long line) {
  errno = 0;
  char* end = nullptr;
  const long v = std::strtol(token.c_str(), &end, 10);
  if (end == token.c_str() || *end != '\0') {
    throw ParseError(file, line, "malformed integer '" + token + "'");
  }
  if (errno == ERANGE) {
    throw ParseError(file, line, "index overflow in '" + token + "'");
  }
  return v;
}

/// Non-comment, non-blank lines of a text file with their 1-based numbers.
inline std::vector<std::pair<long, std::string>> read_data_lines(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ParseError(path.string(), 0, "missing or unreadable file");
  }
  std::vector<std::pair<long, std::string>> lines;
  std::string raw;
  long number = 0;
  while (std::getline(in, raw)) {
    ++number;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    const auto first = raw.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    if (raw[first] == '#') continue;
    lines.emplace_back(number, raw);
  }
  return lines;
}

inline std::vector<std::string> split_fields(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  if (sep == '\t') {
    // whitespace-separated (tabs canonical)
    while (ss >> field) out.push_back(field);
  } else {
    while (std::getline(ss, field, sep)) {
      const auto a = field.find_first_not_of(" \t");
      const auto b = field.find_last_not_of(" \t");
      out.push_back(a == std::string::npos ? "" : field.substr(a, b - a + 1));
    }
  }
  return out;
}

inline std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline nlohmann::json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ParseError(path.string(), 0, "missing or unreadable file");
  }
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string(), 0, std::string("invalid JSON: ") + e.what());
  }
}

}  // namespace detail

/// Swiss-roll regression dataset: n points on the classic roll
/// (t cos t, h, t sin t) for t ~ U[1.5pi, 4.5pi], h ~ U[0, 21], coordinates
/// perturbed by Gaussian noise of the given scale and used as features.
/// The target is t, standardized; the kNN graph must come out connected,
/// regenerating from fresh draws up to 20 times before giving up.
inline Dataset generate_swiss_roll(int n, int k, double noise, unsigned long seed) {
  if (n < 10) {
    throw ParameterError("generate_swiss_roll: need at least 10 points");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> t_dist(1.5 * M_PI, 4.5 * M_PI);
  std::uniform_real_distribution<double> h_dist(0.0, 21.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  for (int attempt = 0; attempt < 20; ++attempt) {
    Eigen::VectorXd t(n);
    Eigen::MatrixXd x(n, 3);
    for (int i = 0; i < n; ++i) {
      t(i) = t_dist(rng);
      const double h = h_dist(rng);
      x(i, 0) = t(i) * std::cos(t(i));
      x(i, 1) = h;
      x(i, 2) = t(i) * std::sin(t(i));
      if (noise > 0.0) {
        for (int d = 0; d < 3; ++d) x(i, d) += noise * gauss(rng);
      }
    }
    Graph g = build_knn_graph(x, k);
    if (!is_connected(g)) continue;

    const double mean = t.mean();
    const double sd = std::sqrt((t.array() - mean).square().sum() / n);
    Dataset ds;
    ds.name = "swiss_roll";
    ds.X = std::move(x);
    ds.y = (t.array() - mean) / sd;
    ds.graph = std::move(g);
    ds.task = Task::Regression;
    ds.label_mean = mean;
    ds.label_scale = sd;
    return ds;
  }
  throw GenerationError("generate_swiss_roll: no connected kNN graph in 20 attempts");
}

/// Uniform training split without replacement; the remainder becomes the
/// test set and validation is left empty.
inline Dataset sample_training_split(const Dataset& ds, int n_train, unsigned long seed) {
  if (n_train <= 0 || n_train >= ds.n()) {
    throw ParameterError("sample_training_split: n_train must lie in [1, n)");
  }
  std::vector<int> order(static_cast<std::size_t>(ds.n()));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  Dataset out = ds;
  out.train.assign(order.begin(), order.begin() + n_train);
  out.test.assign(order.begin() + n_train, order.end());
  out.validation.clear();
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

/// -X protocol: fold the validation labels into training.
inline Dataset merge_validation_into_train(const Dataset& ds) {
  Dataset out = ds;
  out.train.insert(out.train.end(), out.validation.begin(), out.validation.end());
  std::sort(out.train.begin(), out.train.end());
  out.validation.clear();
  return out;
}

/// Per-column zero-mean unit-variance scaling over all nodes; constant
/// columns are shifted to zero and left unscaled. Transforms compose with
/// any standardization already recorded.
inline Dataset standardize_features(const Dataset& ds) {
  Dataset out = ds;
  const Eigen::Index n = ds.n();
  const Eigen::Index m = ds.dim();
  Eigen::VectorXd mean(m), scale(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const double mu = ds.X.col(j).mean();
    const double var = (ds.X.col(j).array() - mu).square().sum() / static_cast<double>(n);
    const double sd = std::sqrt(var);
    mean(j) = mu;
    scale(j) = sd > 1e-13 * std::max(1.0, std::abs(mu)) ? sd : 1.0;
    out.X.col(j) = (ds.X.col(j).array() - mu) / scale(j);
  }
  if (ds.feature_mean.size() == m) {
    out.feature_mean = ds.feature_mean + (ds.feature_scale.array() * mean.array()).matrix();
    out.feature_scale = (ds.feature_scale.array() * scale.array()).matrix();
  } else {
    out.feature_mean = mean;
    out.feature_scale = scale;
  }
  return out;
}

/// Zero-mean unit-variance regression targets (no-op for classification).
/// The composed inverse transform keeps mapping back to original units.
inline Dataset standardize_targets(const Dataset& ds) {
  if (ds.task != Task::Regression) return ds;
  Dataset out = ds;
  const double mu = ds.y.mean();
  const double var = (ds.y.array() - mu).square().sum() / static_cast<double>(ds.y.size());
  const double sd = std::sqrt(var);
  const double scale = sd > 1e-13 * std::max(1.0, std::abs(mu)) ? sd : 1.0;
  out.y = (ds.y.array() - mu) / scale;
  out.label_mean = ds.label_mean + ds.label_scale * mu;
  out.label_scale = ds.label_scale * scale;
  return out;
}

/// Loads the on-disk dataset layout:
///   edges.tsv     src dst [weight]   (0-based ids, directed entries)
///   features.csv  comma-separated reals, line i = node i
///   labels.txt    class id or real value per node
///   splits.json   {"train": [...], "validation": [...], "test": [...]}
///   meta.json     {"task", "class_count", "name", ...}
/// The adjacency is symmetrized as (A + A^T)/2 after reading.
inline Dataset load_dataset(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  const fs::path meta_path = dir / "meta.json";
  const fs::path features_path = dir / "features.csv";
  const fs::path labels_path = dir / "labels.txt";
  const fs::path edges_path = dir / "edges.tsv";
  const fs::path splits_path = dir / "splits.json";

  Dataset ds;
  const nlohmann::json meta = detail::load_json(meta_path);
  if (!meta.contains("task") || !meta.contains("name")) {
    throw ParseError(meta_path.string(), 0, "meta.json needs 'task' and 'name'");
  }
  std::string task;
  try {
    task = meta.at("task").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(meta_path.string(), 0, e.what());
  }
  if (task == "regression") {
    ds.task = Task::Regression;
  } else if (task == "classification") {
    ds.task = Task::Classification;
  } else {
    throw ParseError(meta_path.string(), 0, "unknown task '" + task + "'");
  }
  ds.name = meta.at("name").get<std::string>();
  ds.class_count = meta.value("class_count", 0);
  if (ds.task == Task::Classification && ds.class_count < 2) {
    throw ParseError(meta_path.string(), 0, "classification needs class_count >= 2");
  }
  ds.label_mean = meta.value("label_mean", 0.0);
  ds.label_scale = meta.value("label_scale", 1.0);

  // features define n and m
  const auto feature_lines = detail::read_data_lines(features_path);
  const auto n = static_cast<Eigen::Index>(feature_lines.size());
  if (n == 0) {
    throw ParseError(features_path.string(), 0, "no feature rows");
  }
  Eigen::Index m = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& [line_no, text] = feature_lines[static_cast<std::size_t>(i)];
    const auto fields = detail::split_fields(text, ',');
    if (i == 0) {
      m = static_cast<Eigen::Index>(fields.size());
      ds.X.resize(n, m);
    } else if (static_cast<Eigen::Index>(fields.size()) != m) {
      throw ParseError(features_path.string(), line_no,
                       "expected " + std::to_string(m) + " columns, got " +
                           std::to_string(fields.size()));
    }
    for (Eigen::Index j = 0; j < m; ++j) {
      ds.X(i, j) = detail::parse_real(fields[static_cast<std::size_t>(j)],
                                      features_path.string(), line_no);
    }
  }

  // labels, one per node
  const auto label_lines = detail::read_data_lines(labels_path);
  if (static_cast<Eigen::Index>(label_lines.size()) != n) {
    throw ParseError(labels_path.string(), 0,
                     "expected " + std::to_string(n) + " labels, got " +
                         std::to_string(label_lines.size()));
  }
  ds.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& [line_no, text] = label_lines[static_cast<std::size_t>(i)];
    if (ds.task == Task::Classification) {
      const long c = detail::parse_index(text, labels_path.string(), line_no);
      if (c < 0 || c >= ds.class_count) {
        throw ParseError(labels_path.string(), line_no,
                         "class label " + std::to_string(c) + " outside [0, " +
                             std::to_string(ds.class_count) + ")");
      }
      ds.y(i) = static_cast<double>(c);
    } else {
      ds.y(i) = detail::parse_real(text, labels_path.string(), line_no);
    }
  }

  // edges: directed entries, conflicting duplicates rejected
  Eigen::MatrixXd adj = Eigen::MatrixXd::Zero(n, n);
  Eigen::Matrix<char, Eigen::Dynamic, Eigen::Dynamic> seen =
      Eigen::Matrix<char, Eigen::Dynamic, Eigen::Dynamic>::Zero(n, n);
  for (const auto& [line_no, text] : detail::read_data_lines(edges_path)) {
    const auto fields = detail::split_fields(text, '\t');
    if (fields.size() != 2 && fields.size() != 3) {
      throw ParseError(edges_path.string(), line_no, "expected 'src dst [weight]'");
    }
    const long src = detail::parse_index(fields[0], edges_path.string(), line_no);
    const long dst = detail::parse_index(fields[1], edges_path.string(), line_no);
    if (src < 0 || src >= n || dst < 0 || dst >= n) {
      throw ParseError(edges_path.string(), line_no,
                       "node id out of range [0, " + std::to_string(n) + ")");
    }
    const double w =
        fields.size() == 3 ? detail::parse_real(fields[2], edges_path.string(), line_no) : 1.0;
    if (w < 0.0) {
      throw ParseError(edges_path.string(), line_no, "negative edge weight");
    }
    if (seen(src, dst) && adj(src, dst) != w) {
      throw ParseError(edges_path.string(), line_no,
                       "duplicate edge (" + std::to_string(src) + ", " + std::to_string(dst) +
                           ") with conflicting weight");
    }
    adj(src, dst) = w;
    seen(src, dst) = 1;
  }
  ds.graph = Graph::from_adjacency(symmetrize_adjacency(adj));

  // splits
  const nlohmann::json splits = detail::load_json(splits_path);
  auto read_split = [&](const char* key) {
    std::vector<int> out;
    if (!splits.contains(key)) {
      throw ParseError(splits_path.string(), 0, std::string("missing '") + key + "' array");
    }
    try {
      for (const auto& v : splits.at(key)) {
        const long idx = v.get<long>();
        if (idx < 0 || idx >= n) {
          throw ParseError(splits_path.string(), 0,
                           "split index " + std::to_string(idx) + " out of range");
        }
        out.push_back(static_cast<int>(idx));
      }
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(splits_path.string(), 0, e.what());
    }
    return out;
  };
  ds.train = read_split("train");
  ds.validation = read_split("validation");
  ds.test = read_split("test");

  if (meta.contains("feature_mean")) {
    const auto& fm = meta.at("feature_mean");
    const auto& fsd = meta.at("feature_scale");
    ds.feature_mean.resize(static_cast<Eigen::Index>(fm.size()));
    ds.feature_scale.resize(static_cast<Eigen::Index>(fsd.size()));
    for (Eigen::Index j = 0; j < ds.feature_mean.size(); ++j) {
      ds.feature_mean(j) = fm.at(static_cast<std::size_t>(j)).get<double>();
      ds.feature_scale(j) = fsd.at(static_cast<std::size_t>(j)).get<double>();
    }
  }

  ds.validate();
  return ds;
}

/// Inverse of load_dataset. Edges are written in both directions so the
/// loader's (A + A^T)/2 reproduces the stored adjacency exactly.
inline void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const Eigen::Index n = ds.n();

  {
    std::ofstream out(dir / "features.csv");
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < ds.dim(); ++j) {
        if (j > 0) out << ',';
        out << detail::format_real(ds.X(i, j));
      }
      out << '\n';
    }
  }
  {
    std::ofstream out(dir / "labels.txt");
    for (Eigen::Index i = 0; i < n; ++i) {
      if (ds.task == Task::Classification) {
        out << static_cast<int>(std::lround(ds.y(i))) << '\n';
      } else {
        out << detail::format_real(ds.y(i)) << '\n';
      }
    }
  }
  {
    std::ofstream out(dir / "edges.tsv");
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        if (ds.graph.adjacency(i, j) != 0.0) {
          out << i << '\t' << j << '\t' << detail::format_real(ds.graph.adjacency(i, j))
              << '\n';
        }
      }
    }
  }
  {
    nlohmann::json splits;
    splits["train"] = ds.train;
    splits["validation"] = ds.validation;
    splits["test"] = ds.test;
    std::ofstream out(dir / "splits.json");
    out << splits.dump(2) << '\n';
  }
  {
    nlohmann::json meta;
    meta["task"] = ds.task == Task::Regression ? "regression" : "classification";
    meta["class_count"] = ds.class_count;
    meta["name"] = ds.name;
    if (ds.task == Task::Regression) {
      meta["label_mean"] = ds.label_mean;
      meta["label_scale"] = ds.label_scale;
    }
    if (ds.feature_mean.size() > 0) {
      meta["feature_mean"] = std::vector<double>(
          ds.feature_mean.data(), ds.feature_mean.data() + ds.feature_mean.size());
      meta["feature_scale"] = std::vector<double>(
          ds.feature_scale.data(), ds.feature_scale.data() + ds.feature_scale.size());
    }
    std::ofstream out(dir / "meta.json");
    out << meta.dump(2) << '\n';
  }
}

}  // namespace graphgp

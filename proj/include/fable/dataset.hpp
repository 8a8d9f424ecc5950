#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "fable/error.hpp"

namespace fable {

/// Label value for "the labeling function did not vote". Serialized as -1.
inline constexpr int kAbstain = -1;

inline bool is_abstain(int label) { return label == kAbstain; }

using LabelMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Instances, their labeling-function votes and (optionally) the gold labels.
///
/// Rows of `features`, `lf_labels` and `gold` refer to the same item. When
/// `item_ids` is non-empty it names each row; otherwise rows are identified by
/// zero-padded indices on serialization.
struct Dataset {
  std::string name;
  Eigen::MatrixXd features;
  LabelMatrix lf_labels;
  int num_classes = 2;
  std::optional<std::vector<int>> gold;
  std::vector<std::string> item_ids;

  std::size_t size() const { return static_cast<std::size_t>(lf_labels.rows()); }
  std::size_t num_lfs() const { return static_cast<std::size_t>(lf_labels.cols()); }
  std::size_t dims() const { return static_cast<std::size_t>(features.cols()); }

  bool operator==(const Dataset& other) const {
    return name == other.name && num_classes == other.num_classes &&
           features.rows() == other.features.rows() && features.cols() == other.features.cols() &&
           features == other.features && lf_labels.rows() == other.lf_labels.rows() &&
           lf_labels.cols() == other.lf_labels.cols() && lf_labels == other.lf_labels &&
           gold == other.gold && item_ids == other.item_ids;
  }
};

struct ValidationReport {
  std::size_t n_items = 0;
  std::size_t n_lfs = 0;
  int n_classes = 0;
  std::vector<double> coverage;  ///< fraction of items each LF voted on
  std::size_t all_abstain_rows = 0;
  std::optional<std::vector<double>> gold_balance;  ///< class frequencies of gold
};

/// Checks the dataset invariants and summarizes coverage. Throws DataError on
/// any violation.
inline ValidationReport validate(const Dataset& d) {
  if (d.num_classes < 2) throw DataError("num_classes must be >= 2");
  const auto n = d.lf_labels.rows();
  const auto l = d.lf_labels.cols();
  if (n < 1) throw DataError("dataset has no items");
  if (l < 1) throw DataError("dataset has no labeling functions");
  if (d.features.rows() != n) {
    throw DataError("feature rows (" + std::to_string(d.features.rows()) +
                    ") do not match label rows (" + std::to_string(n) + ")");
  }
  if (!d.item_ids.empty() && static_cast<Eigen::Index>(d.item_ids.size()) != n) {
    throw DataError("item_ids length does not match item count");
  }

  ValidationReport r;
  r.n_items = static_cast<std::size_t>(n);
  r.n_lfs = static_cast<std::size_t>(l);
  r.n_classes = d.num_classes;
  r.coverage.assign(r.n_lfs, 0.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    bool any = false;
    for (Eigen::Index j = 0; j < l; ++j) {
      const int y = d.lf_labels(i, j);
      if (is_abstain(y)) continue;
      if (y < 0 || y >= d.num_classes) {
        throw DataError("label " + std::to_string(y) + " at item " + std::to_string(i) + ", LF " +
                        std::to_string(j) + " outside [0, " + std::to_string(d.num_classes) + ")");
      }
      r.coverage[static_cast<std::size_t>(j)] += 1.0;
      any = true;
    }
    if (!any) ++r.all_abstain_rows;
  }
  for (auto& c : r.coverage) c /= static_cast<double>(n);

  if (d.gold) {
    if (static_cast<Eigen::Index>(d.gold->size()) != n) throw DataError("gold length does not match item count");
    std::vector<double> balance(static_cast<std::size_t>(d.num_classes), 0.0);
    for (int z : *d.gold) {
      if (z < 0 || z >= d.num_classes) throw DataError("gold label " + std::to_string(z) + " out of range");
      balance[static_cast<std::size_t>(z)] += 1.0;
    }
    for (auto& b : balance) b /= static_cast<double>(n);
    r.gold_balance = std::move(balance);
  }
  return r;
}

namespace detail {

inline std::string padded_id(std::size_t i, std::size_t n) {
  std::size_t width = 1;
  for (std::size_t m = n > 0 ? n - 1 : 0; m >= 10; m /= 10) ++width;
  std::string s = std::to_string(i);
  return std::string(width - std::min(width, s.size()), '0') + s;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace detail

/// Item id of row `i`, falling back to a zero-padded index.
inline std::string item_id(const Dataset& d, std::size_t i) {
  return d.item_ids.empty() ? detail::padded_id(i, d.size()) : d.item_ids[i];
}

/// Parses the WRENCH-style JSON layout:
///   { "<id>": {"label": int|null, "weak_labels": [int...], "data": {"feature": [float...]}}, ... }
/// Rows follow lexicographic id order. `num_classes` <= 0 infers K from the
/// largest label seen.
inline Dataset dataset_from_json(const nlohmann::json& root, std::string name = "", int num_classes = 0) {
  if (!root.is_object() || root.empty()) throw DataError("dataset JSON must be a non-empty object");

  std::vector<std::string> ids;
  ids.reserve(root.size());
  for (auto it = root.begin(); it != root.end(); ++it) ids.push_back(it.key());
  std::sort(ids.begin(), ids.end());

  const std::size_t n = ids.size();
  std::optional<std::size_t> n_lfs, n_dims;
  std::vector<std::vector<int>> weak(n);
  std::vector<std::vector<double>> feats(n);
  std::vector<std::optional<int>> labels(n);
  int max_label = -1;

  for (std::size_t i = 0; i < n; ++i) {
    const auto& item = root.at(ids[i]);
    const std::string where = "item '" + ids[i] + "': ";
    if (!item.is_object()) throw DataError(where + "expected an object");
    if (!item.contains("weak_labels") || !item["weak_labels"].is_array()) {
      throw DataError(where + "missing weak_labels array");
    }
    if (!item.contains("data") || !item["data"].is_object() || !item["data"].contains("feature") ||
        !item["data"]["feature"].is_array()) {
      throw DataError(where + "missing data.feature array");
    }
    for (const auto& v : item["weak_labels"]) {
      if (!v.is_number_integer()) throw DataError(where + "weak label is not an integer");
      const int y = v.get<int>();
      if (y < -1) throw DataError(where + "weak label " + std::to_string(y) + " is invalid");
      weak[i].push_back(y == -1 ? kAbstain : y);
      max_label = std::max(max_label, y);
    }
    for (const auto& v : item["data"]["feature"]) {
      if (!v.is_number()) throw DataError(where + "feature value is not numeric");
      feats[i].push_back(v.get<double>());
    }
    if (!n_lfs) n_lfs = weak[i].size();
    if (!n_dims) n_dims = feats[i].size();
    if (weak[i].size() != *n_lfs) throw DataError(where + "ragged weak_labels (expected " + std::to_string(*n_lfs) + ")");
    if (feats[i].size() != *n_dims) throw DataError(where + "ragged feature vector");
    if (item.contains("label") && !item["label"].is_null()) {
      if (!item["label"].is_number_integer()) throw DataError(where + "label is not an integer");
      labels[i] = item["label"].get<int>();
      max_label = std::max(max_label, *labels[i]);
    }
  }

  const auto n_gold = std::count_if(labels.begin(), labels.end(), [](const auto& z) { return z.has_value(); });
  if (n_gold != 0 && static_cast<std::size_t>(n_gold) != n) {
    throw DataError("gold labels must be given for all items or none");
  }

  Dataset d;
  d.name = std::move(name);
  d.num_classes = num_classes > 0 ? num_classes : std::max(2, max_label + 1);
  d.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(*n_dims));
  d.lf_labels.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(*n_lfs));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < *n_dims; ++k) d.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = feats[i][k];
    for (std::size_t j = 0; j < *n_lfs; ++j) d.lf_labels(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = weak[i][j];
  }
  if (n_gold != 0) {
    std::vector<int> gold(n);
    for (std::size_t i = 0; i < n; ++i) gold[i] = *labels[i];
    d.gold = std::move(gold);
  }
  d.item_ids = std::move(ids);
  validate(d);
  return d;
}

inline Dataset load_json(const std::filesystem::path& path, int num_classes = 0) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(detail::read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return dataset_from_json(root, path.stem().string(), num_classes);
}

inline nlohmann::json dataset_to_json(const Dataset& d) {
  nlohmann::json root = nlohmann::json::object();
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    nlohmann::json item;
    item["label"] = d.gold ? nlohmann::json((*d.gold)[i]) : nlohmann::json(nullptr);
    auto weak = nlohmann::json::array();
    for (Eigen::Index j = 0; j < d.lf_labels.cols(); ++j) {
      const int y = d.lf_labels(row, j);
      weak.push_back(is_abstain(y) ? -1 : y);
    }
    item["weak_labels"] = std::move(weak);
    auto feat = nlohmann::json::array();
    for (Eigen::Index k = 0; k < d.features.cols(); ++k) feat.push_back(d.features(row, k));
    item["data"]["feature"] = std::move(feat);
    root[item_id(d, i)] = std::move(item);
  }
  return root;
}

/// Writes the canonical JSON form (keys sorted, two-space indent).
inline void save_json(const Dataset& d, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << dataset_to_json(d).dump(2) << '\n';
}

namespace detail {

inline std::vector<std::vector<std::string>> read_csv_cells(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

template <typename T>
T parse_cell(const std::string& cell, const std::filesystem::path& path, std::size_t row) {
  try {
    std::size_t used = 0;
    T v;
    if constexpr (std::is_same_v<T, int>) {
      v = std::stoi(cell, &used);
    } else {
      v = std::stod(cell, &used);
    }
    if (cell.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw DataError(path.string() + ":" + std::to_string(row + 1) + ": cannot parse '" + cell + "'");
  }
}

}  // namespace detail

/// Loads the headerless CSV layout: features (N x D), labels (N x L, -1 for
/// abstain) and an optional single-column gold file.
inline Dataset load_csv(const std::filesystem::path& features_path, const std::filesystem::path& labels_path,
                        const std::optional<std::filesystem::path>& gold_path = std::nullopt, int num_classes = 0) {
  const auto frows = detail::read_csv_cells(features_path);
  const auto lrows = detail::read_csv_cells(labels_path);
  if (frows.empty()) throw DataError(features_path.string() + ": no rows");
  if (frows.size() != lrows.size()) throw DataError("features and labels have different row counts");

  const std::size_t n = frows.size();
  const std::size_t dims = frows.front().size();
  const std::size_t n_lfs = lrows.front().size();
  Dataset d;
  d.name = labels_path.parent_path().filename().string();
  d.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dims));
  d.lf_labels.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n_lfs));
  int max_label = -1;
  for (std::size_t i = 0; i < n; ++i) {
    if (frows[i].size() != dims) throw DataError(features_path.string() + ": ragged row " + std::to_string(i + 1));
    if (lrows[i].size() != n_lfs) throw DataError(labels_path.string() + ": ragged row " + std::to_string(i + 1));
    for (std::size_t k = 0; k < dims; ++k) {
      d.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          detail::parse_cell<double>(frows[i][k], features_path, i);
    }
    for (std::size_t j = 0; j < n_lfs; ++j) {
      const int y = detail::parse_cell<int>(lrows[i][j], labels_path, i);
      if (y < -1) throw DataError(labels_path.string() + ": invalid label " + std::to_string(y));
      d.lf_labels(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = y == -1 ? kAbstain : y;
      max_label = std::max(max_label, y);
    }
  }
  if (gold_path) {
    const auto grows = detail::read_csv_cells(*gold_path);
    if (grows.size() != n) throw DataError("gold and labels have different row counts");
    std::vector<int> gold(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (grows[i].size() != 1) throw DataError(gold_path->string() + ": expected one column");
      gold[i] = detail::parse_cell<int>(grows[i][0], *gold_path, i);
      max_label = std::max(max_label, gold[i]);
    }
    d.gold = std::move(gold);
  }
  d.num_classes = num_classes > 0 ? num_classes : std::max(2, max_label + 1);
  validate(d);
  return d;
}

}  // namespace fable

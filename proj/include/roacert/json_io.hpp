#pragma once

#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "roacert/linalg.hpp"
#include "roacert/network.hpp"

namespace roacert {

using json = nlohmann::json;

/// Row-major nested array -> matrix.
inline MatrixXd matrix_from_json(const json& j, const std::string& what) {
  if (!j.is_array()) throw ConfigError(what + ": expected an array of rows");
  if (j.empty()) return MatrixXd(0, 0);
  const auto rows = j.size();
  if (!j[0].is_array()) throw ConfigError(what + ": expected an array of rows");
  const auto cols = j[0].size();
  MatrixXd M(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) throw ConfigError(what + ": ragged matrix");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number()) throw ConfigError(what + ": non-numeric entry");
      M(r, c) = j[r][c].get<double>();
    }
  }
  return M;
}

inline VectorXd vector_from_json(const json& j, const std::string& what) {
  if (j.is_number()) {
    VectorXd v(1);
    v(0) = j.get<double>();
    return v;
  }
  if (!j.is_array()) throw ConfigError(what + ": expected an array of numbers");
  VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError(what + ": non-numeric entry");
    v(i) = j[i].get<double>();
  }
  return v;
}

inline json to_json(const MatrixXd& M) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json to_json(const VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

/// Rejects keys outside `allowed`.
inline void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) throw ConfigError(where + ": unknown key '" + it.key() + "'");
  }
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("'" + path + "': " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << text;
}

// Weight file:
// {"activation": "tanh", "leaky_slope": 0.01, "layers": [{"W": [[..]], "b": [..]}],
//  "output": {"W": [[..]], "b": [..]}, "C": [[..]]}
// A layer may carry its own "activation" (and "leaky_slope").
inline NeuralNetwork network_from_json(const json& j) {
  check_keys(j, {"activation", "leaky_slope", "layers", "output", "C"}, "weights");
  if (!j.contains("layers") || !j.contains("output")) throw ConfigError("weights: 'layers' and 'output' are required");
  const double slope = j.value("leaky_slope", 0.01);
  const Activation shared = Activation::parse(j.value("activation", std::string("tanh")), slope);
  std::vector<Layer> layers;
  int idx = 0;
  for (const auto& lj : j.at("layers")) {
    ++idx;
    const std::string where = "weights: layer " + std::to_string(idx);
    check_keys(lj, {"W", "b", "activation", "leaky_slope"}, where);
    Layer l;
    l.W = matrix_from_json(lj.at("W"), where + " W");
    l.b = lj.contains("b") ? vector_from_json(lj.at("b"), where + " b") : VectorXd::Zero(l.W.rows());
    l.activation = lj.contains("activation")
                       ? Activation::parse(lj.at("activation").get<std::string>(), lj.value("leaky_slope", slope))
                       : shared;
    layers.push_back(std::move(l));
  }
  const auto& oj = j.at("output");
  check_keys(oj, {"W", "b"}, "weights: output");
  MatrixXd W = matrix_from_json(oj.at("W"), "weights: output W");
  VectorXd b = oj.contains("b") ? vector_from_json(oj.at("b"), "weights: output b") : VectorXd::Zero(W.rows());
  std::optional<MatrixXd> C;
  if (j.contains("C")) C = matrix_from_json(j.at("C"), "weights: C");
  return NeuralNetwork(std::move(layers), std::move(W), std::move(b), std::move(C));
}

inline json network_to_json(const NeuralNetwork& nn) {
  json j;
  const Activation& first = nn.layers().front().activation;
  j["activation"] = first.name();
  if (first.kind() == ActivationKind::LeakyRelu) j["leaky_slope"] = first.leaky_slope();
  json layers = json::array();
  for (const auto& l : nn.layers()) {
    json lj{{"W", to_json(l.W)}, {"b", to_json(l.b)}};
    if (!(l.activation == first)) {
      lj["activation"] = l.activation.name();
      if (l.activation.kind() == ActivationKind::LeakyRelu) lj["leaky_slope"] = l.activation.leaky_slope();
    }
    layers.push_back(std::move(lj));
  }
  j["layers"] = std::move(layers);
  j["output"] = {{"W", to_json(nn.output_weight())}, {"b", to_json(nn.output_bias())}};
  if (nn.output_map()) j["C"] = to_json(*nn.output_map());
  return j;
}

inline NeuralNetwork load_network(const std::string& path) { return network_from_json(read_json_file(path)); }

}  // namespace roacert

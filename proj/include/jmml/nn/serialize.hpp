#pragma once

// JSON checkpoint container. Doubles are written with max_digits10 precision
// by nlohmann::json, so weights round-trip bit-exactly.
//
//   {"format": "jmml-checkpoint", "version": 1, "kind": "<model kind>", "payload": {...}}
//
// A dense network payload is {"layers": [{"in", "out", "activation", "weights", "bias"}]}
// with weights stored row-major as an in x out matrix.

#include <fstream>
#include <string>

#include "json.hpp"

#include "jmml/error.hpp"
#include "jmml/nn/dense.hpp"
#include "jmml/types.hpp"

namespace jmml::nn {

using json = nlohmann::json;

inline constexpr int kCheckpointVersion = 1;

inline json matrix_to_json(const Matrix& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

inline Matrix matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) throw FormatError("matrix: data length mismatch");
  Matrix m(rows, cols);
  std::copy(data.begin(), data.end(), m.data());
  return m;
}

inline json vector_to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline Vector vector_from_json(const json& j) {
  const auto data = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(data.data(), static_cast<Eigen::Index>(data.size()));
}

inline json layer_to_json(const DenseLayer& l) {
  return {{"in", l.in_dim()},
          {"out", l.out_dim()},
          {"activation", std::string(to_string(l.activation))},
          {"weights", std::vector<double>(l.weight.data(), l.weight.data() + l.weight.size())},
          {"bias", vector_to_json(l.bias)}};
}

inline DenseLayer layer_from_json(const json& j) {
  DenseLayer l(j.at("in").get<std::size_t>(), j.at("out").get<std::size_t>(),
               parse_activation(j.at("activation").get<std::string>()));
  const auto w = j.at("weights").get<std::vector<double>>();
  const auto b = j.at("bias").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(w.size()) != l.weight.size() || static_cast<Eigen::Index>(b.size()) != l.bias.size())
    throw FormatError("layer: parameter length mismatch");
  std::copy(w.begin(), w.end(), l.weight.data());
  std::copy(b.begin(), b.end(), l.bias.data());
  return l;
}

inline json net_to_json(const DenseNet& net) {
  json layers = json::array();
  for (const auto& l : net.layers()) layers.push_back(layer_to_json(*l));
  return {{"layers", layers}};
}

inline DenseNet net_from_json(const json& j) {
  std::vector<SharedLayerHandle> layers;
  for (const auto& lj : j.at("layers")) layers.push_back(std::make_shared<DenseLayer>(layer_from_json(lj)));
  try {
    return DenseNet(std::move(layers));
  } catch (const ShapeError& e) {
    throw FormatError(e.what());
  }
}

inline json wrap_checkpoint(const std::string& kind, json payload) {
  return {{"format", "jmml-checkpoint"}, {"version", kCheckpointVersion}, {"kind", kind}, {"payload", std::move(payload)}};
}

inline const json& unwrap_checkpoint(const json& j, const std::string& kind) {
  if (j.value("format", "") != "jmml-checkpoint") throw FormatError("not a jmml checkpoint");
  if (j.value("version", 0) != kCheckpointVersion) throw FormatError("unsupported checkpoint version");
  if (j.value("kind", "") != kind) throw FormatError("checkpoint kind is '" + j.value("kind", "") + "', expected '" + kind + "'");
  return j.at("payload");
}

inline void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  out << j.dump(1) << '\n';
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError("'" + path + "': " + e.what());
  }
}

}  // namespace jmml::nn

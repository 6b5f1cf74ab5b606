#pragma once

#include <string>

#include "json_io.hpp"
#include "network.hpp"

namespace locdim {

inline constexpr const char* kNetworkFormat = "locdim-network";

namespace detail {

inline json layers_to_json(const DenseNetwork& net) {
  json arr = json::array();
  for (const auto& ly : net.layers()) {
    json W = json::array();
    for (long i = 0; i < ly.W.rows(); ++i) {
      json row = json::array();
      for (long j = 0; j < ly.W.cols(); ++j) row.push_back(ly.W(i, j));
      W.push_back(std::move(row));
    }
    json b = json::array();
    for (long i = 0; i < ly.b.size(); ++i) b.push_back(ly.b(i));
    arr.push_back({{"W", std::move(W)}, {"b", std::move(b)}});
  }
  return arr;
}

inline std::vector<Layer> layers_from_json(const json& arr) {
  if (!arr.is_array()) throw std::runtime_error("network: 'layers' must be an array");
  std::vector<Layer> layers;
  for (const auto& jl : arr) {
    const auto& W = jl.at("W");
    const auto& b = jl.at("b");
    long rows = static_cast<long>(W.size());
    long cols = rows ? static_cast<long>(W[0].size()) : 0;
    Layer ly{Eigen::MatrixXd(rows, cols), Eigen::VectorXd(static_cast<long>(b.size()))};
    for (long i = 0; i < rows; ++i) {
      if (static_cast<long>(W[i].size()) != cols) throw std::runtime_error("network: ragged weight matrix");
      for (long j = 0; j < cols; ++j) ly.W(i, j) = W[i][j].get<double>();
    }
    for (long i = 0; i < ly.b.size(); ++i) ly.b(i) = b[i].get<double>();
    layers.push_back(std::move(ly));
  }
  return layers;
}

inline void check_header(const json& j, const char* kind) {
  if (j.value("format", "") != kNetworkFormat) throw std::runtime_error("network: unknown format");
  if (j.value("version", 0) != 1) throw std::runtime_error("network: unsupported version");
  if (j.value("kind", "") != kind) throw std::runtime_error(std::string("network: expected kind ") + kind);
}

}  // namespace detail

inline json to_json(const DenseNetwork& net) {
  return {{"format", kNetworkFormat}, {"version", 1}, {"kind", "dense"},
          {"activation", "logistic"}, {"d", net.input_dim()}, {"L", net.hidden_layers()},
          {"r", net.width()}, {"alpha", net.weight_bound()}, {"layers", detail::layers_to_json(net)}};
}

inline json to_json(const SparseAdditiveNetwork& net) {
  json subs = json::array();
  for (const auto& s : net.subnets()) subs.push_back({{"layers", detail::layers_to_json(s)}});
  return {{"format", kNetworkFormat}, {"version", 1}, {"kind", "sparse"},
          {"activation", "logistic"}, {"d", net.input_dim()}, {"L", net.hidden_layers()},
          {"r", net.width()}, {"alpha", net.weight_bound()}, {"subnets", std::move(subs)},
          {"mu", net.mu()}};
}

inline DenseNetwork dense_from_json(const json& j) {
  detail::check_header(j, "dense");
  DenseNetwork net(detail::layers_from_json(j.at("layers")), j.at("alpha").get<double>());
  if (net.input_dim() != j.at("d").get<int>() || net.hidden_layers() != j.at("L").get<int>() ||
      net.width() != j.at("r").get<int>())
    throw std::runtime_error("network: header disagrees with layer shapes");
  return net;
}

inline SparseAdditiveNetwork sparse_from_json(const json& j) {
  detail::check_header(j, "sparse");
  double alpha = j.at("alpha").get<double>();
  std::vector<DenseNetwork> subs;
  for (const auto& s : j.at("subnets")) subs.emplace_back(detail::layers_from_json(s.at("layers")), alpha);
  SparseAdditiveNetwork net(std::move(subs), j.at("mu").get<std::vector<double>>(), alpha);
  if (net.input_dim() != j.at("d").get<int>() || net.hidden_layers() != j.at("L").get<int>() ||
      net.width() != j.at("r").get<int>())
    throw std::runtime_error("network: header disagrees with layer shapes");
  return net;
}

}  // namespace locdim

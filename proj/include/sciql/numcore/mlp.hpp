#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sciql/numcore/dense_array.hpp"
#include "sciql/numcore/parameter_set.hpp"

namespace sciql {

using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<float, 1, Eigen::Dynamic>;

enum class Activation { relu };

struct MlpSpec {
  std::size_t input_dim = 1;
  std::vector<std::size_t> hidden{256, 256};
  std::size_t output_dim = 1;
  Activation activation = Activation::relu;
  bool use_layer_norm = false;
  /// When set, a label index is embedded and concatenated after the input.
  std::optional<std::size_t> label_embedding_dim;
  std::size_t num_labels = 0;

  void validate() const {
    if (input_dim < 1 || output_dim < 1) throw std::invalid_argument("MlpSpec: dims must be >= 1");
    if (hidden.empty()) throw std::invalid_argument("MlpSpec: hidden list must be nonempty");
    for (auto h : hidden) {
      if (h < 1) throw std::invalid_argument("MlpSpec: hidden widths must be >= 1");
    }
    if (label_embedding_dim) {
      if (*label_embedding_dim < 1) throw std::invalid_argument("MlpSpec: embedding dim must be >= 1");
      if (num_labels < 1) throw std::invalid_argument("MlpSpec: embedding requires num_labels >= 1");
    }
  }

  [[nodiscard]] bool conditioned() const { return label_embedding_dim.has_value(); }
  [[nodiscard]] std::size_t first_layer_inputs() const {
    return input_dim + label_embedding_dim.value_or(0);
  }

  bool operator==(const MlpSpec&) const = default;
};

namespace detail {

inline std::string layer_name(std::size_t i) { return "l" + std::to_string(i); }

inline Eigen::Map<const RowMatrix> as_matrix(const DenseArray& a) {
  return {a.data.data(), static_cast<Eigen::Index>(a.shape.at(0)),
          static_cast<Eigen::Index>(a.shape.size() > 1 ? a.shape[1] : 1)};
}
inline Eigen::Map<RowMatrix> as_matrix(DenseArray& a) {
  return {a.data.data(), static_cast<Eigen::Index>(a.shape.at(0)),
          static_cast<Eigen::Index>(a.shape.size() > 1 ? a.shape[1] : 1)};
}
inline Eigen::Map<const RowVector> as_row(const DenseArray& a) {
  return {a.data.data(), static_cast<Eigen::Index>(a.size())};
}
inline Eigen::Map<RowVector> as_row(DenseArray& a) {
  return {a.data.data(), static_cast<Eigen::Index>(a.size())};
}

constexpr float kLayerNormEps = 1e-5f;

}  // namespace detail

/// Glorot-uniform weights, zero biases, unit layer-norm gains, N(0, 0.02) embeddings.
template <class Rng>
ParameterSet init_mlp(const MlpSpec& spec, Rng& rng) {
  spec.validate();
  ParameterSet params;
  std::size_t fan_in = spec.first_layer_inputs();
  auto dense = [&](const std::string& prefix, std::size_t in, std::size_t out) {
    const float limit = std::sqrt(6.0f / static_cast<float>(in + out));
    std::uniform_real_distribution<float> uni(-limit, limit);
    DenseArray w({out, in});
    for (auto& v : w.data) v = uni(rng);
    params.add(prefix + ".w", std::move(w));
    params.add(prefix + ".b", DenseArray({out}));
  };
  for (std::size_t i = 0; i < spec.hidden.size(); ++i) {
    const auto name = detail::layer_name(i);
    dense(name, fan_in, spec.hidden[i]);
    if (spec.use_layer_norm) {
      params.add(name + ".ln_g", DenseArray({spec.hidden[i]}, 1.0f));
      params.add(name + ".ln_b", DenseArray({spec.hidden[i]}));
    }
    fan_in = spec.hidden[i];
  }
  dense("out", fan_in, spec.output_dim);
  if (spec.label_embedding_dim) {
    std::normal_distribution<float> normal(0.0f, 0.02f);
    DenseArray emb({spec.num_labels, *spec.label_embedding_dim});
    for (auto& v : emb.data) v = normal(rng);
    params.add("embed", std::move(emb));
  }
  return params;
}

/// Row z of the embedding matrix.
inline DenseArray embed_label(const ParameterSet& params, std::uint32_t z) {
  const auto it = params.entries.find("embed");
  if (it == params.entries.end()) throw std::invalid_argument("embed_label: network has no embedding");
  const DenseArray& emb = it->second;
  if (z >= emb.shape.at(0)) {
    throw std::invalid_argument("embed_label: label " + std::to_string(z) + " out of range [0," +
                                std::to_string(emb.shape[0]) + ")");
  }
  const auto r = emb.row(z);
  return DenseArray({r.size()}, FloatBuffer(r.begin(), r.end()));
}

/// Activations kept from a forward pass for the backward pass.
struct MlpTape {
  RowMatrix input;  // [B, first_layer_inputs]
  std::vector<std::uint32_t> labels;
  struct Layer {
    RowMatrix normalized;  // x-hat when layer norm is on
    Eigen::VectorXf inv_std;
    RowMatrix pre_activation;  // after linear (+ layer norm)
    RowMatrix output;          // after activation
  };
  std::vector<Layer> layers;
  RowMatrix output;
};

namespace detail {

inline void check_forward_inputs(const MlpSpec& spec, const DenseArray& input,
                                 std::span<const std::uint32_t> labels) {
  if (input.rank() != 2 || input.shape[1] != spec.input_dim) {
    throw std::invalid_argument("mlp_forward: input shape " + shape_string(input.shape) +
                                " does not match input_dim " + std::to_string(spec.input_dim));
  }
  if (spec.conditioned()) {
    if (labels.size() != input.shape[0]) {
      throw std::invalid_argument("mlp_forward: expected one label per input row");
    }
    for (auto z : labels) {
      if (z >= spec.num_labels) {
        throw std::invalid_argument("mlp_forward: label " + std::to_string(z) + " out of range");
      }
    }
  }
}

}  // namespace detail

inline MlpTape mlp_forward_tape(const MlpSpec& spec, const ParameterSet& params,
                                const DenseArray& input,
                                std::span<const std::uint32_t> labels = {}) {
  detail::check_forward_inputs(spec, input, labels);
  using detail::as_matrix;
  using detail::as_row;
  const auto batch = static_cast<Eigen::Index>(input.shape[0]);
  MlpTape tape;
  tape.input.resize(batch, static_cast<Eigen::Index>(spec.first_layer_inputs()));
  tape.input.leftCols(static_cast<Eigen::Index>(spec.input_dim)) = as_matrix(input);
  if (spec.conditioned()) {
    tape.labels.assign(labels.begin(), labels.end());
    const auto emb = as_matrix(params["embed"]);
    const auto edim = static_cast<Eigen::Index>(*spec.label_embedding_dim);
    for (Eigen::Index r = 0; r < batch; ++r) {
      tape.input.row(r).rightCols(edim) = emb.row(labels[static_cast<std::size_t>(r)]);
    }
  }
  const RowMatrix* x = &tape.input;
  tape.layers.resize(spec.hidden.size());
  for (std::size_t i = 0; i < spec.hidden.size(); ++i) {
    const auto name = detail::layer_name(i);
    auto& layer = tape.layers[i];
    const auto w = as_matrix(params[name + ".w"]);
    const auto b = as_row(params[name + ".b"]);
    RowMatrix lin = (*x) * w.transpose();
    lin.rowwise() += b;
    if (spec.use_layer_norm) {
      const auto h = lin.cols();
      layer.inv_std.resize(batch);
      layer.normalized.resize(batch, h);
      for (Eigen::Index r = 0; r < batch; ++r) {
        const float mean = lin.row(r).mean();
        const float var = (lin.row(r).array() - mean).square().mean();
        const float inv = 1.0f / std::sqrt(var + detail::kLayerNormEps);
        layer.inv_std[r] = inv;
        layer.normalized.row(r) = (lin.row(r).array() - mean) * inv;
      }
      const auto g = as_row(params[name + ".ln_g"]);
      const auto beta = as_row(params[name + ".ln_b"]);
      layer.pre_activation = layer.normalized.array().rowwise() * g.array();
      layer.pre_activation.rowwise() += beta;
    } else {
      layer.pre_activation = std::move(lin);
    }
    layer.output = layer.pre_activation.cwiseMax(0.0f);
    x = &layer.output;
  }
  tape.output = (*x) * as_matrix(params["out.w"]).transpose();
  tape.output.rowwise() += as_row(params["out.b"]);
  return tape;
}

inline DenseArray to_dense(const RowMatrix& m) {
  DenseArray out({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
  detail::as_matrix(out) = m;
  return out;
}

/// Deterministic forward map; output is [B, output_dim].
inline DenseArray mlp_forward(const MlpSpec& spec, const ParameterSet& params,
                              const DenseArray& input,
                              std::span<const std::uint32_t> labels = {}) {
  return to_dense(mlp_forward_tape(spec, params, input, labels).output);
}

/// Reverse-mode gradients of sum(output .* output_grad) w.r.t. every entry.
inline ParameterSet mlp_backward(const MlpSpec& spec, const ParameterSet& params,
                                 const MlpTape& tape, const DenseArray& output_grad) {
  using detail::as_matrix;
  using detail::as_row;
  if (output_grad.rank() != 2 || output_grad.shape[0] != static_cast<std::size_t>(tape.output.rows()) ||
      output_grad.shape[1] != spec.output_dim) {
    throw std::invalid_argument("mlp_backward: output_grad shape " +
                                shape_string(output_grad.shape) + " does not match forward output");
  }
  ParameterSet grads = params.zeros_like();
  RowMatrix delta = as_matrix(output_grad);
  const RowMatrix& last = spec.hidden.empty() ? tape.input : tape.layers.back().output;
  as_matrix(grads["out.w"]) = delta.transpose() * last;
  as_row(grads["out.b"]) = delta.colwise().sum();
  delta = delta * as_matrix(params["out.w"]);

  for (std::size_t k = spec.hidden.size(); k-- > 0;) {
    const auto name = detail::layer_name(k);
    const auto& layer = tape.layers[k];
    delta.array() *= (layer.pre_activation.array() > 0.0f).cast<float>();
    if (spec.use_layer_norm) {
      const auto g = as_row(params[name + ".ln_g"]);
      as_row(grads[name + ".ln_g"]) = (delta.array() * layer.normalized.array()).colwise().sum();
      as_row(grads[name + ".ln_b"]) = delta.colwise().sum();
      RowMatrix dxhat = delta.array().rowwise() * g.array();
      const auto h = static_cast<float>(dxhat.cols());
      for (Eigen::Index r = 0; r < dxhat.rows(); ++r) {
        const float mean_d = dxhat.row(r).sum() / h;
        const float mean_dx = dxhat.row(r).dot(layer.normalized.row(r)) / h;
        dxhat.row(r) = layer.inv_std[r] *
                       (dxhat.row(r).array() - mean_d - layer.normalized.row(r).array() * mean_dx)
                           .matrix();
      }
      delta = std::move(dxhat);
    }
    const RowMatrix& x = k == 0 ? tape.input : tape.layers[k - 1].output;
    as_matrix(grads[name + ".w"]) = delta.transpose() * x;
    as_row(grads[name + ".b"]) = delta.colwise().sum();
    if (k > 0 || spec.conditioned()) delta = delta * as_matrix(params[name + ".w"]);
  }

  if (spec.conditioned()) {
    auto demb = as_matrix(grads["embed"]);
    const auto edim = static_cast<Eigen::Index>(*spec.label_embedding_dim);
    for (Eigen::Index r = 0; r < delta.rows(); ++r) {
      demb.row(tape.labels[static_cast<std::size_t>(r)]) += delta.row(r).rightCols(edim);
    }
  }
  return grads;
}

/// Recomputing overload.
inline ParameterSet mlp_backward(const MlpSpec& spec, const ParameterSet& params,
                                 const DenseArray& input, const DenseArray& output_grad,
                                 std::span<const std::uint32_t> labels = {}) {
  return mlp_backward(spec, params, mlp_forward_tape(spec, params, input, labels), output_grad);
}

}  // namespace sciql

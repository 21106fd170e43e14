#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nasnerf/tensor.hpp"

namespace nasnerf {

enum class Activation { kNone, kRelu, kSigmoid };

std::string to_string(Activation a);

// y = x W^T + b, weights stored row-major [out_dim x in_dim].
template <typename T>
struct LinearLayer {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  AlignedVector<T> weights;
  AlignedVector<T> bias;

  LinearLayer() = default;
  LinearLayer(std::size_t in, std::size_t out) : in_dim(in), out_dim(out), weights(in * out, T{0}), bias(out, T{0}) {}

  std::size_t parameter_count() const { return weights.size() + bias.size(); }
};

// Fixed-topology MLP. A layer listed in skip_inputs receives
// concat(previous output, aux_inputs[tag]) instead of the previous output.
// For layer 0 the "previous output" is the network input.
template <typename T>
struct Mlp {
  std::vector<LinearLayer<T>> layers;
  std::vector<Activation> activations;
  std::map<std::size_t, std::string> skip_inputs;

  std::size_t in_dim() const { return layers.empty() ? 0 : layers.front().in_dim - skip_width(0); }
  std::size_t out_dim() const { return layers.empty() ? 0 : layers.back().out_dim; }
  std::size_t parameter_count() const;

  // Width of the aux tensor concatenated at `layer`, zero when there is none.
  std::size_t skip_width(std::size_t layer) const;

  // Declared widths of every aux source, filled in by the builder.
  std::map<std::string, std::size_t> aux_widths;
};

template <typename T>
using AuxInputs = std::map<std::string, const Tensor<T>*>;

// Builder describing one layer: output width, activation, optional skip tag.
struct LayerSpec {
  std::size_t out_dim;
  Activation activation = Activation::kRelu;
  std::optional<std::string> skip_tag;
  std::size_t skip_width = 0;
};

// Uniform(+-sqrt(6/(in+out))) weights and zero bias. Each layer draws from
// its own stream derived from `seed`, so inserting a layer does not perturb
// the others.
template <typename T>
Mlp<T> make_mlp(std::size_t in_dim, const std::vector<LayerSpec>& specs, std::uint64_t seed);

// Values recorded by a forward pass and consumed by the backward pass.
template <typename T>
struct MlpTape {
  std::vector<Tensor<T>> layer_inputs;   // after skip concatenation
  std::vector<Tensor<T>> layer_outputs;  // after activation
  bool recorded() const { return !layer_outputs.empty(); }
};

template <typename T>
struct MlpGradients {
  std::vector<AlignedVector<T>> weights;
  std::vector<AlignedVector<T>> bias;
  Tensor<T> input;
  std::map<std::string, Tensor<T>> aux;

  // Allocates zero gradients shaped like `mlp`'s parameters.
  static MlpGradients zeros_like(const Mlp<T>& mlp);
  void accumulate(const MlpGradients& other);
};

// Forward pass over a [batch x in_dim] input. Throws ShapeError on dimension
// mismatch or a missing aux source, NumericError on non-finite output.
template <typename T>
Tensor<T> mlp_forward(const Mlp<T>& mlp, const Tensor<T>& input, const AuxInputs<T>& aux = {},
                      MlpTape<T>* tape = nullptr);

// Reverse pass. `output_grad` is dL/d(output). Throws Error when the tape is
// empty and ShapeError when the gradient shape does not match the output.
template <typename T>
MlpGradients<T> mlp_backward(const Mlp<T>& mlp, const MlpTape<T>& tape, const Tensor<T>& output_grad);

// Parameter views in canonical order: w0, b0, w1, b1, ...
template <typename T>
std::vector<std::span<T>> parameter_spans(Mlp<T>& mlp);
template <typename T>
std::vector<std::span<const T>> parameter_spans(const Mlp<T>& mlp);
template <typename T>
std::vector<std::span<T>> gradient_spans(MlpGradients<T>& grads);

// Loss used by the gradient checker.
enum class LossTag { kSum, kHalfSquaredSum };

double evaluate_loss(const Tensor<double>& output, LossTag loss);
Tensor<double> loss_gradient(const Tensor<double>& output, LossTag loss);

// max_i |a_i - n_i| / max(|a_i|, |n_i|, 1e-12)
double max_relative_error(const std::vector<std::vector<double>>& analytic,
                          const std::vector<std::vector<double>>& numeric);

// Central finite differences of `loss` with respect to every scalar in
// `params`; each scalar is restored after probing.
std::vector<std::vector<double>> numeric_gradients(const std::vector<std::span<double>>& params,
                                                   const std::function<double()>& loss, double step = 1e-5);

std::vector<std::vector<double>> copy_gradients(const std::vector<std::span<double>>& grads);

// Max relative error between backprop and central differences (h = 1e-5)
// for `loss` applied to the MLP output. 64-bit only.
double gradient_check(Mlp<double>& mlp, const Tensor<double>& input, LossTag loss,
                      const AuxInputs<double>& aux = {});

}  // namespace nasnerf

#include "nasnerf/mlp.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "nasnerf/rng.hpp"

namespace nasnerf {
namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using RowVec = Eigen::Matrix<T, 1, Eigen::Dynamic>;

template <typename T>
Eigen::Map<const RowMat<T>> as_matrix(const Tensor<T>& t) {
  return {t.data.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols())};
}

template <typename T>
Eigen::Map<RowMat<T>> as_matrix(Tensor<T>& t) {
  return {t.data.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols())};
}

template <typename T>
Eigen::Map<const RowMat<T>> weight_matrix(const LinearLayer<T>& l) {
  return {l.weights.data(), static_cast<Eigen::Index>(l.out_dim), static_cast<Eigen::Index>(l.in_dim)};
}

template <typename T>
void apply_activation(Activation a, Tensor<T>& t) {
  switch (a) {
    case Activation::kNone:
      break;
    case Activation::kRelu:
      for (T& v : t.data) v = v > T{0} ? v : T{0};
      break;
    case Activation::kSigmoid:
      for (T& v : t.data) v = T{1} / (T{1} + std::exp(-v));
      break;
  }
}

// Multiplies `grad` in place by the activation derivative, expressed in terms
// of the activation output.
template <typename T>
void activation_backward(Activation a, const Tensor<T>& output, Tensor<T>& grad) {
  switch (a) {
    case Activation::kNone:
      break;
    case Activation::kRelu:
      for (std::size_t i = 0; i < grad.data.size(); ++i) {
        if (!(output.data[i] > T{0})) grad.data[i] = T{0};
      }
      break;
    case Activation::kSigmoid:
      for (std::size_t i = 0; i < grad.data.size(); ++i) {
        const T y = output.data[i];
        grad.data[i] *= y * (T{1} - y);
      }
      break;
  }
}

}  // namespace

std::string to_string(Activation a) {
  switch (a) {
    case Activation::kNone:
      return "none";
    case Activation::kRelu:
      return "relu";
    case Activation::kSigmoid:
      return "sigmoid";
  }
  return "?";
}

template <typename T>
std::size_t Mlp<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.parameter_count();
  return n;
}

template <typename T>
std::size_t Mlp<T>::skip_width(std::size_t layer) const {
  auto it = skip_inputs.find(layer);
  if (it == skip_inputs.end()) return 0;
  auto w = aux_widths.find(it->second);
  return w == aux_widths.end() ? 0 : w->second;
}

template <typename T>
Mlp<T> make_mlp(std::size_t in_dim, const std::vector<LayerSpec>& specs, std::uint64_t seed) {
  if (specs.empty()) throw ConfigError("make_mlp: at least one layer required");
  Mlp<T> mlp;
  std::size_t prev = in_dim;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const LayerSpec& s = specs[i];
    if (s.out_dim == 0) throw ConfigError("make_mlp: zero-width layer");
    std::size_t in = prev;
    if (s.skip_tag) {
      mlp.skip_inputs[i] = *s.skip_tag;
      auto [it, inserted] = mlp.aux_widths.emplace(*s.skip_tag, s.skip_width);
      if (!inserted && it->second != s.skip_width) {
        throw ConfigError("make_mlp: aux source '" + *s.skip_tag + "' declared with two widths");
      }
      in += s.skip_width;
    }
    LinearLayer<T> layer(in, s.out_dim);
    Rng rng(derive_seed(seed, {i}));
    const double bound = std::sqrt(6.0 / static_cast<double>(in + s.out_dim));
    for (T& w : layer.weights) w = static_cast<T>(rng.uniform(-bound, bound));
    mlp.layers.push_back(std::move(layer));
    mlp.activations.push_back(s.activation);
    prev = s.out_dim;
  }
  return mlp;
}

template <typename T>
MlpGradients<T> MlpGradients<T>::zeros_like(const Mlp<T>& mlp) {
  MlpGradients g;
  for (const auto& l : mlp.layers) {
    g.weights.emplace_back(l.weights.size(), T{0});
    g.bias.emplace_back(l.bias.size(), T{0});
  }
  return g;
}

template <typename T>
void MlpGradients<T>::accumulate(const MlpGradients& other) {
  if (other.weights.size() != weights.size()) throw ShapeError("gradient accumulate: layer count mismatch");
  for (std::size_t l = 0; l < weights.size(); ++l) {
    for (std::size_t i = 0; i < weights[l].size(); ++i) weights[l][i] += other.weights[l][i];
    for (std::size_t i = 0; i < bias[l].size(); ++i) bias[l][i] += other.bias[l][i];
  }
}

template <typename T>
Tensor<T> mlp_forward(const Mlp<T>& mlp, const Tensor<T>& input, const AuxInputs<T>& aux, MlpTape<T>* tape) {
  if (mlp.layers.empty()) throw ConfigError("mlp_forward: empty network");
  if (input.rank() != 2) throw ShapeError("mlp_forward: input must be rank 2");
  if (tape) {
    tape->layer_inputs.clear();
    tape->layer_outputs.clear();
  }
  const std::size_t batch = input.rows();
  Tensor<T> current = input;
  for (std::size_t i = 0; i < mlp.layers.size(); ++i) {
    const LinearLayer<T>& layer = mlp.layers[i];
    if (auto skip = mlp.skip_inputs.find(i); skip != mlp.skip_inputs.end()) {
      auto src = aux.find(skip->second);
      if (src == aux.end() || src->second == nullptr) {
        throw ShapeError("mlp_forward: missing aux input '" + skip->second + "'");
      }
      current = concat_cols(current, *src->second);
    }
    if (current.cols() != layer.in_dim || current.rows() != batch) {
      throw ShapeError("mlp_forward: layer " + std::to_string(i) + " expects width " + std::to_string(layer.in_dim) +
                       ", got " + std::to_string(current.cols()));
    }
    Tensor<T> out = Tensor<T>::matrix(batch, layer.out_dim);
    auto y = as_matrix(out);
    y.noalias() = as_matrix(current) * weight_matrix(layer).transpose();
    y.rowwise() += Eigen::Map<const RowVec<T>>(layer.bias.data(), static_cast<Eigen::Index>(layer.out_dim));
    apply_activation(mlp.activations[i], out);
    if (tape) tape->layer_inputs.push_back(std::move(current));
    current = std::move(out);
    if (tape) tape->layer_outputs.push_back(current);
  }
  if (!current.all_finite()) throw NumericError("mlp_forward: non-finite output");
  return current;
}

template <typename T>
MlpGradients<T> mlp_backward(const Mlp<T>& mlp, const MlpTape<T>& tape, const Tensor<T>& output_grad) {
  if (!tape.recorded() || tape.layer_outputs.size() != mlp.layers.size()) {
    throw Error("mlp_backward: no matching forward pass recorded");
  }
  const Tensor<T>& final_out = tape.layer_outputs.back();
  if (output_grad.shape != final_out.shape) throw ShapeError("mlp_backward: output gradient shape mismatch");

  MlpGradients<T> grads = MlpGradients<T>::zeros_like(mlp);
  Tensor<T> grad = output_grad;
  for (std::size_t li = mlp.layers.size(); li-- > 0;) {
    const LinearLayer<T>& layer = mlp.layers[li];
    activation_backward(mlp.activations[li], tape.layer_outputs[li], grad);
    const Tensor<T>& x = tape.layer_inputs[li];
    auto dz = as_matrix(grad);

    Eigen::Map<RowMat<T>> dw(grads.weights[li].data(), static_cast<Eigen::Index>(layer.out_dim),
                             static_cast<Eigen::Index>(layer.in_dim));
    dw.noalias() = dz.transpose() * as_matrix(x);
    Eigen::Map<RowVec<T>> db(grads.bias[li].data(), static_cast<Eigen::Index>(layer.out_dim));
    db = dz.colwise().sum();

    Tensor<T> dx = Tensor<T>::matrix(x.rows(), x.cols());
    as_matrix(dx).noalias() = dz * weight_matrix(layer);

    if (auto skip = mlp.skip_inputs.find(li); skip != mlp.skip_inputs.end()) {
      const std::size_t aux_w = mlp.skip_width(li);
      const std::size_t main_w = x.cols() - aux_w;
      Tensor<T> main_grad = Tensor<T>::matrix(x.rows(), main_w);
      Tensor<T> aux_grad = Tensor<T>::matrix(x.rows(), aux_w);
      for (std::size_t r = 0; r < x.rows(); ++r) {
        auto src = dx.row(r);
        std::copy(src.begin(), src.begin() + static_cast<std::ptrdiff_t>(main_w), main_grad.row(r).begin());
        std::copy(src.begin() + static_cast<std::ptrdiff_t>(main_w), src.end(), aux_grad.row(r).begin());
      }
      auto [it, inserted] = grads.aux.try_emplace(skip->second, std::move(aux_grad));
      if (!inserted) {
        for (std::size_t i = 0; i < it->second.data.size(); ++i) it->second.data[i] += aux_grad.data[i];
      }
      grad = std::move(main_grad);
    } else {
      grad = std::move(dx);
    }
  }
  grads.input = std::move(grad);
  for (const auto& w : grads.weights) {
    for (const T& v : w) {
      if (!std::isfinite(v)) throw NumericError("mlp_backward: non-finite weight gradient");
    }
  }
  return grads;
}

template <typename T>
std::vector<std::span<T>> parameter_spans(Mlp<T>& mlp) {
  std::vector<std::span<T>> out;
  for (auto& l : mlp.layers) {
    out.emplace_back(l.weights);
    out.emplace_back(l.bias);
  }
  return out;
}

template <typename T>
std::vector<std::span<const T>> parameter_spans(const Mlp<T>& mlp) {
  std::vector<std::span<const T>> out;
  for (const auto& l : mlp.layers) {
    out.emplace_back(l.weights);
    out.emplace_back(l.bias);
  }
  return out;
}

template <typename T>
std::vector<std::span<T>> gradient_spans(MlpGradients<T>& grads) {
  std::vector<std::span<T>> out;
  for (std::size_t l = 0; l < grads.weights.size(); ++l) {
    out.emplace_back(grads.weights[l]);
    out.emplace_back(grads.bias[l]);
  }
  return out;
}

double evaluate_loss(const Tensor<double>& output, LossTag loss) {
  double s = 0.0;
  for (double v : output.data) s += loss == LossTag::kSum ? v : 0.5 * v * v;
  return s;
}

Tensor<double> loss_gradient(const Tensor<double>& output, LossTag loss) {
  Tensor<double> g(output.shape);
  for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] = loss == LossTag::kSum ? 1.0 : output.data[i];
  return g;
}

double max_relative_error(const std::vector<std::vector<double>>& analytic,
                          const std::vector<std::vector<double>>& numeric) {
  if (analytic.size() != numeric.size()) throw ShapeError("max_relative_error: group count mismatch");
  double worst = 0.0;
  for (std::size_t g = 0; g < analytic.size(); ++g) {
    if (analytic[g].size() != numeric[g].size()) throw ShapeError("max_relative_error: group size mismatch");
    for (std::size_t i = 0; i < analytic[g].size(); ++i) {
      const double a = analytic[g][i];
      const double n = numeric[g][i];
      const double denom = std::max({std::abs(a), std::abs(n), 1e-12});
      worst = std::max(worst, std::abs(a - n) / denom);
    }
  }
  return worst;
}

std::vector<std::vector<double>> numeric_gradients(const std::vector<std::span<double>>& params,
                                                   const std::function<double()>& loss, double step) {
  std::vector<std::vector<double>> out;
  out.reserve(params.size());
  for (const auto& p : params) {
    std::vector<double> g(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double saved = p[i];
      p[i] = saved + step;
      const double up = loss();
      p[i] = saved - step;
      const double down = loss();
      p[i] = saved;
      g[i] = (up - down) / (2.0 * step);
    }
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<std::vector<double>> copy_gradients(const std::vector<std::span<double>>& grads) {
  std::vector<std::vector<double>> out;
  out.reserve(grads.size());
  for (const auto& g : grads) out.emplace_back(g.begin(), g.end());
  return out;
}

double gradient_check(Mlp<double>& mlp, const Tensor<double>& input, LossTag loss, const AuxInputs<double>& aux) {
  MlpTape<double> tape;
  Tensor<double> out = mlp_forward(mlp, input, aux, &tape);
  MlpGradients<double> grads = mlp_backward(mlp, tape, loss_gradient(out, loss));
  auto analytic = copy_gradients(gradient_spans(grads));
  auto numeric =
      numeric_gradients(parameter_spans(mlp), [&] { return evaluate_loss(mlp_forward(mlp, input, aux), loss); });
  return max_relative_error(analytic, numeric);
}

#define NASNERF_INSTANTIATE_MLP(T)                                                                           \
  template struct Mlp<T>;                                                                                    \
  template struct MlpGradients<T>;                                                                           \
  template Mlp<T> make_mlp<T>(std::size_t, const std::vector<LayerSpec>&, std::uint64_t);                    \
  template Tensor<T> mlp_forward<T>(const Mlp<T>&, const Tensor<T>&, const AuxInputs<T>&, MlpTape<T>*);       \
  template MlpGradients<T> mlp_backward<T>(const Mlp<T>&, const MlpTape<T>&, const Tensor<T>&);              \
  template std::vector<std::span<T>> parameter_spans<T>(Mlp<T>&);                                            \
  template std::vector<std::span<const T>> parameter_spans<T>(const Mlp<T>&);                                \
  template std::vector<std::span<T>> gradient_spans<T>(MlpGradients<T>&);

NASNERF_INSTANTIATE_MLP(float)
NASNERF_INSTANTIATE_MLP(double)

}  // namespace nasnerf

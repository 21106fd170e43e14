#include "nasnerf/field.hpp"

#include <cmath>

#include "nasnerf/rng.hpp"

namespace nasnerf {

template <typename T>
NasNerfField<T> build_field(const FieldCellConfig& cell, const PositionalEncoding& position_encoder,
                            const PositionalEncoding& direction_encoder, std::size_t head_width, std::uint64_t seed) {
  cell.validate();
  if (head_width == 0) throw ConfigError("build_field: head width must be positive");
  NasNerfField<T> f;
  f.cell = cell;
  f.position_encoder = position_encoder;
  f.direction_encoder = direction_encoder;
  f.head_width = head_width;

  const std::size_t pos_dim = position_encoder.output_dim(3);
  const std::size_t dir_dim = direction_encoder.output_dim(3);
  const auto [d1, d2, d3] = cell.depths;
  const auto c1 = static_cast<std::size_t>(cell.channels[0]);
  const auto c2 = static_cast<std::size_t>(cell.channels[1]);
  const auto c3 = static_cast<std::size_t>(cell.channels[2]);

  std::vector<LayerSpec> trunk;
  for (int i = 0; i < d1; ++i) trunk.push_back({i + 1 == d1 ? c2 : c1});
  for (int i = 0; i < d2; ++i) trunk.push_back({c3, Activation::kRelu, kPositionTag, pos_dim});
  for (int i = 0; i < d3; ++i) trunk.push_back({c3});
  f.trunk = make_mlp<T>(pos_dim, trunk, derive_seed(seed, {0}));

  f.density_head = make_mlp<T>(c3, {{1, Activation::kRelu}}, derive_seed(seed, {1}));

  f.radiance_head = make_mlp<T>(c3,
                                {{head_width, Activation::kRelu, kDirectionTag, dir_dim},
                                 {head_width, Activation::kRelu},
                                 {3, Activation::kSigmoid}},
                                derive_seed(seed, {2}));
  return f;
}

template <typename T>
FieldGradients<T> FieldGradients<T>::zeros_like(const NasNerfField<T>& f) {
  return {MlpGradients<T>::zeros_like(f.trunk), MlpGradients<T>::zeros_like(f.density_head),
          MlpGradients<T>::zeros_like(f.radiance_head)};
}

template <typename T>
void FieldGradients<T>::accumulate(const FieldGradients& other) {
  trunk.accumulate(other.trunk);
  density.accumulate(other.density);
  radiance.accumulate(other.radiance);
}

template <typename T>
FieldOutput<T> field_query(const NasNerfField<T>& field, const Tensor<T>& positions, const Tensor<T>& directions,
                           FieldTape<T>* tape) {
  if (positions.rank() != 2 || positions.cols() != 3 || directions.shape != positions.shape) {
    throw ShapeError("field_query: positions and directions must both be [batch x 3]");
  }
  if (!positions.all_finite() || !directions.all_finite()) throw NumericError("field_query: non-finite input");
  const double tol = sizeof(T) >= 8 ? 1e-6 : 1e-4;
  for (std::size_t r = 0; r < directions.rows(); ++r) {
    auto d = directions.row(r);
    const double norm = std::sqrt(double(d[0]) * d[0] + double(d[1]) * d[1] + double(d[2]) * d[2]);
    if (std::abs(norm - 1.0) > tol) throw ConfigError("field_query: direction is not unit length");
  }

  Tensor<T> pos_enc = encode_batch(positions, field.position_encoder);
  Tensor<T> dir_enc = encode_batch(directions, field.direction_encoder);

  FieldOutput<T> out;
  Tensor<T> features = mlp_forward(field.trunk, pos_enc, {{kPositionTag, &pos_enc}}, tape ? &tape->trunk : nullptr);
  out.density = mlp_forward(field.density_head, features, {}, tape ? &tape->density : nullptr);
  out.rgb = mlp_forward(field.radiance_head, features, {{kDirectionTag, &dir_enc}}, tape ? &tape->radiance : nullptr);
  if (tape) {
    tape->encoded_position = std::move(pos_enc);
    tape->encoded_direction = std::move(dir_enc);
  }
  return out;
}

template <typename T>
FieldGradients<T> field_backward(const NasNerfField<T>& field, const FieldTape<T>& tape, const Tensor<T>& density_grad,
                                 const Tensor<T>& rgb_grad) {
  FieldGradients<T> g;
  g.density = mlp_backward(field.density_head, tape.density, density_grad);
  g.radiance = mlp_backward(field.radiance_head, tape.radiance, rgb_grad);
  Tensor<T> feature_grad = g.density.input;
  for (std::size_t i = 0; i < feature_grad.data.size(); ++i) feature_grad.data[i] += g.radiance.input.data[i];
  g.trunk = mlp_backward(field.trunk, tape.trunk, feature_grad);
  return g;
}

template <typename T>
std::vector<std::span<T>> parameter_spans(NasNerfField<T>& field) {
  auto out = parameter_spans(field.trunk);
  for (auto s : parameter_spans(field.density_head)) out.push_back(s);
  for (auto s : parameter_spans(field.radiance_head)) out.push_back(s);
  return out;
}

template <typename T>
std::vector<std::span<T>> gradient_spans(FieldGradients<T>& grads) {
  auto out = gradient_spans(grads.trunk);
  for (auto s : gradient_spans(grads.density)) out.push_back(s);
  for (auto s : gradient_spans(grads.radiance)) out.push_back(s);
  return out;
}

template <typename T>
NerfModel<T> build_model(const ArchitectureDescriptor& descriptor, std::uint64_t seed) {
  descriptor.validate();
  const PositionalEncoding pos{descriptor.pos_enc_L, true};
  const PositionalEncoding dir{descriptor.dir_enc_L, true};
  const auto head = static_cast<std::size_t>(descriptor.head_width);
  return {descriptor, build_field<T>(descriptor.coarse, pos, dir, head, derive_seed(seed, {0})),
          build_field<T>(descriptor.fine, pos, dir, head, derive_seed(seed, {1}))};
}

template <typename T>
std::vector<std::span<T>> parameter_spans(NerfModel<T>& model) {
  auto out = parameter_spans(model.coarse);
  for (auto s : parameter_spans(model.fine)) out.push_back(s);
  return out;
}

#define NASNERF_INSTANTIATE_FIELD(T)                                                                                 \
  template struct FieldGradients<T>;                                                                                 \
  template NasNerfField<T> build_field<T>(const FieldCellConfig&, const PositionalEncoding&,                         \
                                          const PositionalEncoding&, std::size_t, std::uint64_t);                    \
  template FieldOutput<T> field_query<T>(const NasNerfField<T>&, const Tensor<T>&, const Tensor<T>&, FieldTape<T>*); \
  template FieldGradients<T> field_backward<T>(const NasNerfField<T>&, const FieldTape<T>&, const Tensor<T>&,        \
                                               const Tensor<T>&);                                                    \
  template std::vector<std::span<T>> parameter_spans<T>(NasNerfField<T>&);                                           \
  template std::vector<std::span<T>> gradient_spans<T>(FieldGradients<T>&);                                          \
  template NerfModel<T> build_model<T>(const ArchitectureDescriptor&, std::uint64_t);                                \
  template std::vector<std::span<T>> parameter_spans<T>(NerfModel<T>&);

NASNERF_INSTANTIATE_FIELD(float)
NASNERF_INSTANTIATE_FIELD(double)

}  // namespace nasnerf

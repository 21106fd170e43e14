#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nasnerf/descriptor.hpp"
#include "nasnerf/encoding.hpp"
#include "nasnerf/mlp.hpp"

namespace nasnerf {

inline constexpr const char* kPositionTag = "position";
inline constexpr const char* kDirectionTag = "direction";

// One field cell: a three-stage density trunk, a density head and the fixed
// radiance head.
//
// Trunk wiring (each stage's last layer projects to the next stage's width):
//   stage 1: D1 layers, encoded position -> C1 ... C1 -> C2
//   stage 2: one layer, concat(stage-1 output, encoded position) -> C3
//   stage 3: D3 layers, C3 -> C3
// Density head: C3 -> 1, ReLU.
// Radiance head: concat(trunk output, encoded direction) -> H -> H -> 3,
// ReLU, ReLU, sigmoid.
//
// The uniform (4,1,3)x256 cell reproduces the classic 8x256 trunk with the
// skip at layer 4.
template <typename T>
struct NasNerfField {
  FieldCellConfig cell;
  PositionalEncoding position_encoder{10, true};
  PositionalEncoding direction_encoder{4, true};
  std::size_t head_width = 128;
  Mlp<T> trunk;
  Mlp<T> density_head;
  Mlp<T> radiance_head;

  std::size_t parameter_count() const {
    return trunk.parameter_count() + density_head.parameter_count() + radiance_head.parameter_count();
  }
};

template <typename T>
NasNerfField<T> build_field(const FieldCellConfig& cell, const PositionalEncoding& position_encoder,
                            const PositionalEncoding& direction_encoder, std::size_t head_width, std::uint64_t seed);

template <typename T>
struct FieldOutput {
  Tensor<T> density;  // [batch x 1], >= 0
  Tensor<T> rgb;      // [batch x 3], in [0, 1]
};

template <typename T>
struct FieldTape {
  Tensor<T> encoded_position;
  Tensor<T> encoded_direction;
  MlpTape<T> trunk;
  MlpTape<T> density;
  MlpTape<T> radiance;
};

template <typename T>
struct FieldGradients {
  MlpGradients<T> trunk;
  MlpGradients<T> density;
  MlpGradients<T> radiance;

  static FieldGradients zeros_like(const NasNerfField<T>& f);
  void accumulate(const FieldGradients& other);
};

// positions, directions: [batch x 3]; directions must be unit length within
// 1e-6 (1e-4 in 32-bit). Throws NumericError on non-finite input.
template <typename T>
FieldOutput<T> field_query(const NasNerfField<T>& field, const Tensor<T>& positions, const Tensor<T>& directions,
                           FieldTape<T>* tape = nullptr);

template <typename T>
FieldGradients<T> field_backward(const NasNerfField<T>& field, const FieldTape<T>& tape, const Tensor<T>& density_grad,
                                 const Tensor<T>& rgb_grad);

// Canonical parameter order: trunk, density head, radiance head.
template <typename T>
std::vector<std::span<T>> parameter_spans(NasNerfField<T>& field);
template <typename T>
std::vector<std::span<T>> gradient_spans(FieldGradients<T>& grads);

// Coarse + fine fields built from a descriptor.
template <typename T>
struct NerfModel {
  ArchitectureDescriptor descriptor;
  NasNerfField<T> coarse;
  NasNerfField<T> fine;

  std::size_t parameter_count() const { return coarse.parameter_count() + fine.parameter_count(); }
};

// Independent weights for the two fields, both derived from `seed`.
template <typename T>
NerfModel<T> build_model(const ArchitectureDescriptor& descriptor, std::uint64_t seed);

// All scalars of the model in canonical order (coarse then fine).
template <typename T>
std::vector<std::span<T>> parameter_spans(NerfModel<T>& model);

}  // namespace nasnerf

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "nasnerf/tensor.hpp"

namespace nasnerf {

// Frequency encoding gamma(v). Output layout for an input of width n:
//   [v_0..v_{n-1}] (if include_raw_input), then for k = 0..L-1:
//   [sin(2^k pi v_0)..sin(2^k pi v_{n-1}), cos(2^k pi v_0)..cos(2^k pi v_{n-1})]
struct PositionalEncoding {
  int num_frequencies = 10;
  bool include_raw_input = true;

  std::size_t output_dim(std::size_t input_dim) const {
    return input_dim * ((include_raw_input ? 1 : 0) + 2 * static_cast<std::size_t>(num_frequencies));
  }
};

std::vector<double> encode(std::span<const double> v, const PositionalEncoding& enc);

// Row-wise encoding of a [batch x n] tensor.
template <typename T>
Tensor<T> encode_batch(const Tensor<T>& v, const PositionalEncoding& enc);

}  // namespace nasnerf

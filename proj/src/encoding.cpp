#include "nasnerf/encoding.hpp"

#include <cmath>
#include <numbers>

namespace nasnerf {
namespace {

template <typename In, typename Out>
void encode_into(std::span<const In> v, const PositionalEncoding& enc, std::span<Out> out) {
  const std::size_t n = v.size();
  std::size_t o = 0;
  if (enc.include_raw_input) {
    for (std::size_t i = 0; i < n; ++i) out[o++] = static_cast<Out>(v[i]);
  }
  // Double-angle recurrence from the k = 0 terms; the error after L
  // doublings stays near 2^L ulp of double, far below float resolution.
  double sn[8], cs[8];
  double* s = n <= 8 ? sn : new double[2 * n];
  double* c = n <= 8 ? cs : s + n;
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = std::sin(std::numbers::pi * static_cast<double>(v[i]));
    c[i] = std::cos(std::numbers::pi * static_cast<double>(v[i]));
  }
  for (int k = 0; k < enc.num_frequencies; ++k) {
    for (std::size_t i = 0; i < n; ++i) out[o + i] = static_cast<Out>(s[i]);
    for (std::size_t i = 0; i < n; ++i) out[o + n + i] = static_cast<Out>(c[i]);
    o += 2 * n;
    for (std::size_t i = 0; i < n; ++i) {
      const double s2 = 2.0 * s[i] * c[i];
      c[i] = (c[i] - s[i]) * (c[i] + s[i]);
      s[i] = s2;
    }
  }
  if (n > 8) delete[] s;
}

}  // namespace

std::vector<double> encode(std::span<const double> v, const PositionalEncoding& enc) {
  std::vector<double> out(enc.output_dim(v.size()));
  encode_into<double, double>(v, enc, out);
  return out;
}

template <typename T>
Tensor<T> encode_batch(const Tensor<T>& v, const PositionalEncoding& enc) {
  Tensor<T> out = Tensor<T>::matrix(v.rows(), enc.output_dim(v.cols()));
  for (std::size_t r = 0; r < v.rows(); ++r) encode_into<T, T>(v.row(r), enc, out.row(r));
  return out;
}

template Tensor<float> encode_batch<float>(const Tensor<float>&, const PositionalEncoding&);
template Tensor<double> encode_batch<double>(const Tensor<double>&, const PositionalEncoding&);

}  // namespace nasnerf

#pragma once
// Reference implementations used only by the tests.

#include <cmath>
#include <vector>

#include "nasnerf/cost.hpp"
#include "nasnerf/image.hpp"
#include "nasnerf/search.hpp"
#include "nasnerf/rng.hpp"

namespace oracle {

// Direct per-window SSIM with a 2D Gaussian window, no separable filtering.
inline double brute_force_ssim(const nasnerf::Image& a, const nasnerf::Image& b, int win = 11, double sigma = 1.5) {
  std::vector<double> g(win);
  double gs = 0.0;
  for (int i = 0; i < win; ++i) {
    const double x = i - (win - 1) / 2.0;
    g[i] = std::exp(-x * x / (2 * sigma * sigma));
    gs += g[i];
  }
  for (double& v : g) v /= gs;
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  double total = 0.0;
  for (int c = 0; c < a.channels; ++c) {
    double sum = 0.0;
    int count = 0;
    for (int y0 = 0; y0 + win <= a.height; ++y0) {
      for (int x0 = 0; x0 + win <= a.width; ++x0) {
        double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
        for (int j = 0; j < win; ++j) {
          for (int i = 0; i < win; ++i) {
            const double w = g[i] * g[j];
            const double va = a.at(x0 + i, y0 + j, c), vb = b.at(x0 + i, y0 + j, c);
            ma += w * va;
            mb += w * vb;
            saa += w * va * va;
            sbb += w * vb * vb;
            sab += w * va * vb;
          }
        }
        const double va = saa - ma * ma, vb = sbb - mb * mb, cov = sab - ma * mb;
        sum += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        ++count;
      }
    }
    total += sum / count;
  }
  return total / a.channels;
}

inline nasnerf::Image random_image(int w, int h, std::uint64_t seed) {
  nasnerf::Rng rng(seed);
  nasnerf::Image img(w, h, 3);
  for (auto& v : img.data) v = static_cast<float>(rng.uniform());
  return img;
}

// Correlated pair: b = a + noise, clamped.
inline nasnerf::Image perturb(const nasnerf::Image& a, double amount, std::uint64_t seed) {
  nasnerf::Rng rng(seed);
  nasnerf::Image b = a;
  for (auto& v : b.data) {
    v = static_cast<float>(std::fmin(1.0, std::fmax(0.0, v + amount * (rng.uniform() - 0.5))));
  }
  return b;
}

// Deterministic proxy SSIM: saturating in the fine field's size plus a small
// hash-derived jitter so that ties are rare.
inline double surrogate_ssim(const nasnerf::ArchitectureDescriptor& d, std::uint64_t /*seed*/) {
  const auto shapes = nasnerf::field_layer_shapes(d.fine, d.pos_enc_L, d.dir_enc_L, d.head_width);
  double fine = 0.0;
  for (const auto& s : shapes) fine += static_cast<double>(s.in * s.out + s.out);
  const double jitter = static_cast<double>(nasnerf::descriptor_hash(d) % 1000) / 1e6;
  return 0.95 - 0.3 * std::exp(-fine / 30000.0) + jitter;
}

// Coarse field fixed at the minimum; fine D1, D3 in {1,2}, widths {8,16,32}.
inline nasnerf::SearchSpace small_space() {
  nasnerf::SearchSpace s;
  s.coarse = {{1}, {1}, {8}, {8}, {8}};
  s.fine = {{1, 2}, {1, 2}, {8, 16, 32}, {8, 16, 32}, {8, 16, 32}};
  return s;
}

}  // namespace oracle

#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "nasnerf/field.hpp"
#include "nasnerf/image.hpp"
#include "nasnerf/rng.hpp"

namespace nasnerf {

// Pinhole camera, Blender/OpenGL convention: looks down -z, +y up.
struct Camera {
  Eigen::Matrix4d pose = Eigen::Matrix4d::Identity();  // camera-to-world
  double fov_x = 0.6911112070083618;                   // radians
  int width = 64;
  int height = 64;

  double focal() const;
  // Throws ConfigError unless the rotation block is orthonormal within 1e-5
  // and the image size / fov are sane.
  void validate() const;
};

struct Ray {
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  Eigen::Vector3d direction{0.0, 0.0, -1.0};
  double near = 2.0;
  double far = 6.0;
};

struct RenderSettings {
  int samples_coarse = 64;
  int samples_fine = 128;
  std::array<double, 3> background{1.0, 1.0, 1.0};
  int rays_per_batch = 4096;
  double near = 2.0;
  double far = 6.0;
  // Jittered stratification and random inverse-CDF draws; when false, bin
  // midpoints and evenly spaced quantiles are used.
  bool randomized = true;

  void validate() const;
};

// Pixel (x, y); rays pass through pixel centres.
struct Pixel {
  int x = 0;
  int y = 0;
};

std::vector<Ray> generate_rays(const Camera& camera, std::span<const Pixel> pixels, double near, double far);
std::vector<Ray> generate_rays(const Camera& camera, double near, double far);  // all pixels, row-major

// One draw per equal sub-interval of [near, far]; midpoints when rng is null.
std::vector<double> stratified_samples(double near, double far, int n, Rng* rng);

struct CompositeResult {
  std::array<double, 3> rgb{};
  std::vector<double> weights;
  std::vector<double> transmittance;  // T_i before sample i
  double opacity = 0.0;               // sum of weights
  double final_transmittance = 1.0;
};

// alpha_i = 1 - exp(-sigma_i delta_i), delta_i = t_{i+1} - t_i (last uses far);
// T_i = prod_{j<i} (1 - alpha_j); w_i = T_i alpha_i;
// colour = sum w_i rgb_i + (1 - sum w_i) background.
// rgbs is [n x 3] interleaved. Throws ConfigError on unsorted t or negative density.
CompositeResult composite(std::span<const double> densities, std::span<const double> rgbs,
                          std::span<const double> t_values, double far, const std::array<double, 3>& background);

struct CompositeGradient {
  std::vector<double> density;  // dL/dsigma_i
  std::vector<double> rgb;      // dL/drgb_i, [n x 3]
};

CompositeGradient composite_backward(std::span<const double> densities, std::span<const double> rgbs,
                                     std::span<const double> t_values, double far,
                                     const std::array<double, 3>& background, const CompositeResult& forward,
                                     const std::array<double, 3>& color_grad);

// Inverse-CDF sampling of the piecewise-constant pdf proportional to
// (weights + 1e-5). Bin i spans the midpoints around t_i, clipped to
// [near, far]. With a null rng the quantiles (k + 0.5) / n are used.
std::vector<double> importance_samples(std::span<const double> weights, std::span<const double> t_values, double near,
                                       double far, int n_fine, Rng* rng);

inline constexpr double kPdfEpsilon = 1e-5;

// Samples and field outputs of one pass over a ray batch; every ray carries
// the same number of samples.
template <typename T>
struct RenderPass {
  std::size_t samples_per_ray = 0;
  std::vector<double> t_values;  // [rays x samples]
  Tensor<T> positions;
  Tensor<T> directions;
  FieldOutput<T> output;
  FieldTape<T> tape;
  std::vector<CompositeResult> composites;
};

template <typename T>
struct RayBatchResult {
  std::vector<std::array<double, 3>> coarse_rgb;
  std::vector<std::array<double, 3>> fine_rgb;
  RenderPass<T> coarse;
  RenderPass<T> fine;
  std::size_t coarse_queries = 0;
  std::size_t fine_queries = 0;
  std::vector<double> far_planes;
};

// Coarse pass on N_c stratified samples, importance sampling N_f more from
// the coarse weights, then the fine field on the sorted union (N_c + N_f).
// ray_seeds[i] seeds ray i's sampling stream. With samples_fine == 0 the
// fine field re-evaluates the coarse samples.
template <typename T>
RayBatchResult<T> render_rays(const NerfModel<T>& model, std::span<const Ray> rays, const RenderSettings& settings,
                              std::span<const std::uint64_t> ray_seeds, bool record_tape);

template <typename T>
struct ModelGradients {
  FieldGradients<T> coarse;
  FieldGradients<T> fine;
};

// Backpropagates dL/d(colour) of both passes into both fields. Importance
// sample positions are treated as constants.
template <typename T>
ModelGradients<T> render_rays_backward(const NerfModel<T>& model, const RayBatchResult<T>& result,
                                       const RenderSettings& settings,
                                       std::span<const std::array<double, 3>> coarse_grad,
                                       std::span<const std::array<double, 3>> fine_grad);

struct RenderedImage {
  Image fine;
  Image coarse;
  std::size_t field_queries = 0;
};

// Renders every pixel in row tiles. Ray i uses derive_seed(seed, {i}) so the
// result is independent of `threads`.
template <typename T>
RenderedImage render_image(const NerfModel<T>& model, const Camera& camera, const RenderSettings& settings,
                           std::uint64_t seed, int threads = 1);

}  // namespace nasnerf

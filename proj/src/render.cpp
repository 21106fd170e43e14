#include "nasnerf/render.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace nasnerf {

double Camera::focal() const { return 0.5 * width / std::tan(0.5 * fov_x); }

void Camera::validate() const {
  if (width <= 0 || height <= 0) throw ConfigError("camera: image size must be positive");
  if (!(fov_x > 0.0 && fov_x < M_PI)) throw ConfigError("camera: fov_x must lie in (0, pi)");
  if (!pose.allFinite()) throw ConfigError("camera: pose is not finite");
  const Eigen::Matrix3d r = pose.topLeftCorner<3, 3>();
  if ((r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-5) {
    throw ConfigError("camera: degenerate pose (rotation block not orthonormal)");
  }
}

void RenderSettings::validate() const {
  if (samples_coarse < 2) throw ConfigError("render settings: samples_coarse must be >= 2");
  if (samples_fine < 0) throw ConfigError("render settings: samples_fine must be >= 0");
  if (rays_per_batch < 1) throw ConfigError("render settings: rays_per_batch must be >= 1");
  if (!(near > 0.0 && near < far)) throw ConfigError("render settings: need 0 < near < far");
}

std::vector<Ray> generate_rays(const Camera& camera, std::span<const Pixel> pixels, double near, double far) {
  camera.validate();
  if (!(near > 0.0 && near < far)) throw ConfigError("generate_rays: need 0 < near < far");
  const double f = camera.focal();
  const Eigen::Matrix3d r = camera.pose.topLeftCorner<3, 3>();
  const Eigen::Vector3d origin = camera.pose.topRightCorner<3, 1>();
  std::vector<Ray> rays;
  rays.reserve(pixels.size());
  for (const Pixel& p : pixels) {
    const Eigen::Vector3d d_cam((p.x + 0.5 - 0.5 * camera.width) / f, -(p.y + 0.5 - 0.5 * camera.height) / f, -1.0);
    rays.push_back({origin, (r * d_cam).normalized(), near, far});
  }
  return rays;
}

std::vector<Ray> generate_rays(const Camera& camera, double near, double far) {
  std::vector<Pixel> pixels;
  pixels.reserve(static_cast<std::size_t>(camera.width) * camera.height);
  for (int y = 0; y < camera.height; ++y) {
    for (int x = 0; x < camera.width; ++x) pixels.push_back({x, y});
  }
  return generate_rays(camera, pixels, near, far);
}

std::vector<double> stratified_samples(double near, double far, int n, Rng* rng) {
  if (n < 2) throw ConfigError("stratified_samples: n must be >= 2");
  std::vector<double> t(n);
  const double step = (far - near) / n;
  for (int i = 0; i < n; ++i) t[i] = near + step * (i + (rng ? rng->uniform() : 0.5));
  return t;
}

CompositeResult composite(std::span<const double> densities, std::span<const double> rgbs,
                          std::span<const double> t_values, double far, const std::array<double, 3>& background) {
  const std::size_t n = t_values.size();
  if (densities.size() != n || rgbs.size() != 3 * n) throw ShapeError("composite: input sizes disagree");
  CompositeResult out;
  out.weights.resize(n);
  out.transmittance.resize(n);
  double trans = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double next = i + 1 < n ? t_values[i + 1] : far;
    if (next < t_values[i]) throw ConfigError("composite: t values must be sorted and below far");
    if (densities[i] < 0.0) throw ConfigError("composite: negative density");
    const double alpha = 1.0 - std::exp(-densities[i] * (next - t_values[i]));
    out.transmittance[i] = trans;
    out.weights[i] = trans * alpha;
    for (int c = 0; c < 3; ++c) out.rgb[c] += out.weights[i] * rgbs[3 * i + c];
    out.opacity += out.weights[i];
    trans *= 1.0 - alpha;
  }
  out.final_transmittance = trans;
  for (int c = 0; c < 3; ++c) out.rgb[c] += (1.0 - out.opacity) * background[c];
  return out;
}

CompositeGradient composite_backward(std::span<const double> densities, std::span<const double> rgbs,
                                     std::span<const double> t_values, double far,
                                     const std::array<double, 3>& background, const CompositeResult& forward,
                                     const std::array<double, 3>& color_grad) {
  const std::size_t n = t_values.size();
  CompositeGradient g;
  g.density.assign(n, 0.0);
  g.rgb.assign(3 * n, 0.0);
  // Background receives 1 - sum(w), which equals the final transmittance up
  // to rounding; the forward pass uses the former.
  const double residual = 1.0 - forward.opacity;
  double bg_term = 0.0;
  for (int c = 0; c < 3; ++c) bg_term += color_grad[c] * background[c];
  double suffix = 0.0;  // sum_{i>k} w_i <g, rgb_i>
  for (std::size_t k = n; k-- > 0;) {
    double g_dot_rgb = 0.0;
    for (int c = 0; c < 3; ++c) {
      g.rgb[3 * k + c] = color_grad[c] * forward.weights[k];
      g_dot_rgb += color_grad[c] * rgbs[3 * k + c];
    }
    const double next = k + 1 < n ? t_values[k + 1] : far;
    const double delta = next - t_values[k];
    const double t_after = forward.transmittance[k] * std::exp(-densities[k] * delta);
    g.density[k] = delta * (t_after * g_dot_rgb - suffix - residual * bg_term);
    suffix += forward.weights[k] * g_dot_rgb;
  }
  return g;
}

std::vector<double> importance_samples(std::span<const double> weights, std::span<const double> t_values, double near,
                                       double far, int n_fine, Rng* rng) {
  const std::size_t n = t_values.size();
  if (weights.size() != n || n == 0) throw ShapeError("importance_samples: weights and t values disagree");
  std::vector<double> out;
  if (n_fine <= 0) return out;
  std::vector<double> edges(n + 1);
  edges[0] = near;
  edges[n] = far;
  for (std::size_t i = 1; i < n; ++i) edges[i] = 0.5 * (t_values[i - 1] + t_values[i]);
  std::vector<double> cdf(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (weights[i] < 0.0) throw ConfigError("importance_samples: negative weight");
    cdf[i + 1] = cdf[i] + weights[i] + kPdfEpsilon;
  }
  const double total = cdf[n];
  out.reserve(n_fine);
  for (int k = 0; k < n_fine; ++k) {
    const double u = (rng ? rng->uniform() : (k + 0.5) / n_fine) * total;
    std::size_t bin = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    bin = std::clamp<std::size_t>(bin, 1, n) - 1;
    const double mass = cdf[bin + 1] - cdf[bin];
    const double frac = mass > 0.0 ? (u - cdf[bin]) / mass : 0.5;
    out.push_back(std::clamp(edges[bin] + frac * (edges[bin + 1] - edges[bin]), near, far));
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

template <typename T>
void run_pass(const NasNerfField<T>& field, std::span<const Ray> rays, RenderPass<T>& pass,
              const RenderSettings& settings, bool record_tape) {
  const std::size_t s = pass.samples_per_ray;
  const std::size_t total = rays.size() * s;
  pass.positions = Tensor<T>::matrix(total, 3);
  pass.directions = Tensor<T>::matrix(total, 3);
  for (std::size_t r = 0; r < rays.size(); ++r) {
    for (std::size_t i = 0; i < s; ++i) {
      const double t = pass.t_values[r * s + i];
      const Eigen::Vector3d p = rays[r].origin + t * rays[r].direction;
      for (int c = 0; c < 3; ++c) {
        pass.positions(r * s + i, c) = static_cast<T>(p[c]);
        pass.directions(r * s + i, c) = static_cast<T>(rays[r].direction[c]);
      }
    }
  }
  pass.output = field_query(field, pass.positions, pass.directions, record_tape ? &pass.tape : nullptr);
  pass.composites.clear();
  pass.composites.reserve(rays.size());
  std::vector<double> dens(s), rgb(3 * s);
  for (std::size_t r = 0; r < rays.size(); ++r) {
    for (std::size_t i = 0; i < s; ++i) {
      dens[i] = static_cast<double>(pass.output.density.data[r * s + i]);
      for (int c = 0; c < 3; ++c) rgb[3 * i + c] = static_cast<double>(pass.output.rgb(r * s + i, c));
    }
    pass.composites.push_back(composite(dens, rgb, std::span<const double>(pass.t_values).subspan(r * s, s),
                                        rays[r].far, settings.background));
  }
}

template <typename T>
FieldGradients<T> pass_backward(const NasNerfField<T>& field, std::span<const Ray> rays, const RenderPass<T>& pass,
                                const RenderSettings& settings, std::span<const std::array<double, 3>> color_grad) {
  const std::size_t s = pass.samples_per_ray;
  Tensor<T> density_grad = Tensor<T>::matrix(rays.size() * s, 1);
  Tensor<T> rgb_grad = Tensor<T>::matrix(rays.size() * s, 3);
  std::vector<double> dens(s), rgb(3 * s);
  for (std::size_t r = 0; r < rays.size(); ++r) {
    for (std::size_t i = 0; i < s; ++i) {
      dens[i] = static_cast<double>(pass.output.density.data[r * s + i]);
      for (int c = 0; c < 3; ++c) rgb[3 * i + c] = static_cast<double>(pass.output.rgb(r * s + i, c));
    }
    const CompositeGradient g =
        composite_backward(dens, rgb, std::span<const double>(pass.t_values).subspan(r * s, s), rays[r].far,
                           settings.background, pass.composites[r], color_grad[r]);
    for (std::size_t i = 0; i < s; ++i) {
      density_grad.data[r * s + i] = static_cast<T>(g.density[i]);
      for (int c = 0; c < 3; ++c) rgb_grad(r * s + i, c) = static_cast<T>(g.rgb[3 * i + c]);
    }
  }
  return field_backward(field, pass.tape, density_grad, rgb_grad);
}

}  // namespace

template <typename T>
RayBatchResult<T> render_rays(const NerfModel<T>& model, std::span<const Ray> rays, const RenderSettings& settings,
                              std::span<const std::uint64_t> ray_seeds, bool record_tape) {
  settings.validate();
  if (ray_seeds.size() != rays.size()) throw ShapeError("render_rays: one seed per ray required");
  const auto nc = static_cast<std::size_t>(settings.samples_coarse);
  const auto nf = static_cast<std::size_t>(settings.samples_fine);
  RayBatchResult<T> res;
  res.coarse.samples_per_ray = nc;
  res.fine.samples_per_ray = nc + nf;
  res.coarse.t_values.resize(rays.size() * nc);
  res.fine.t_values.resize(rays.size() * (nc + nf));

  std::vector<Rng> rngs;
  rngs.reserve(rays.size());
  res.far_planes.reserve(rays.size());
  for (const Ray& r : rays) res.far_planes.push_back(r.far);
  for (std::size_t r = 0; r < rays.size(); ++r) {
    rngs.emplace_back(ray_seeds[r]);
    auto t = stratified_samples(rays[r].near, rays[r].far, settings.samples_coarse,
                                settings.randomized ? &rngs[r] : nullptr);
    std::copy(t.begin(), t.end(), res.coarse.t_values.begin() + static_cast<std::ptrdiff_t>(r * nc));
  }
  run_pass(model.coarse, rays, res.coarse, settings, record_tape);
  res.coarse_queries = rays.size() * nc;

  for (std::size_t r = 0; r < rays.size(); ++r) {
    std::span<const double> tc(res.coarse.t_values.data() + r * nc, nc);
    auto tf = importance_samples(res.coarse.composites[r].weights, tc, rays[r].near, rays[r].far,
                                 settings.samples_fine, settings.randomized ? &rngs[r] : nullptr);
    auto dst = res.fine.t_values.begin() + static_cast<std::ptrdiff_t>(r * (nc + nf));
    std::merge(tc.begin(), tc.end(), tf.begin(), tf.end(), dst);
  }
  run_pass(model.fine, rays, res.fine, settings, record_tape);
  res.fine_queries = rays.size() * (nc + nf);

  res.coarse_rgb.reserve(rays.size());
  res.fine_rgb.reserve(rays.size());
  for (std::size_t r = 0; r < rays.size(); ++r) {
    res.coarse_rgb.push_back(res.coarse.composites[r].rgb);
    res.fine_rgb.push_back(res.fine.composites[r].rgb);
  }
  return res;
}

template <typename T>
ModelGradients<T> render_rays_backward(const NerfModel<T>& model, const RayBatchResult<T>& result,
                                       const RenderSettings& settings,
                                       std::span<const std::array<double, 3>> coarse_grad,
                                       std::span<const std::array<double, 3>> fine_grad) {
  const std::size_t n = result.coarse_rgb.size();
  if (coarse_grad.size() != n || fine_grad.size() != n) throw ShapeError("render_rays_backward: gradient count");
  if (!result.coarse.tape.trunk.recorded() || !result.fine.tape.trunk.recorded()) {
    throw Error("render_rays_backward: render_rays was called without record_tape");
  }
  std::vector<Ray> rays(n);
  for (std::size_t r = 0; r < n; ++r) rays[r].far = result.far_planes[r];
  return {pass_backward(model.coarse, rays, result.coarse, settings, coarse_grad),
          pass_backward(model.fine, rays, result.fine, settings, fine_grad)};
}

template <typename T>
RenderedImage render_image(const NerfModel<T>& model, const Camera& camera, const RenderSettings& settings,
                           std::uint64_t seed, int threads) {
  settings.validate();
  const auto rays = generate_rays(camera, settings.near, settings.far);
  RenderedImage out;
  out.fine = Image(camera.width, camera.height, 3);
  out.coarse = Image(camera.width, camera.height, 3);
  const std::size_t per_ray = static_cast<std::size_t>(2 * settings.samples_coarse + settings.samples_fine);
  const std::size_t chunk = std::max<std::size_t>(1, std::min<std::size_t>(settings.rays_per_batch, 65536 / per_ray));
  const std::size_t n_chunks = (rays.size() + chunk - 1) / chunk;

  std::atomic<std::size_t> next{0};
  std::vector<std::size_t> queries(n_chunks, 0);
  auto worker = [&] {
    std::vector<std::uint64_t> seeds;
    for (std::size_t c = next++; c < n_chunks; c = next++) {
      const std::size_t begin = c * chunk;
      const std::size_t end = std::min(rays.size(), begin + chunk);
      seeds.clear();
      for (std::size_t i = begin; i < end; ++i) seeds.push_back(derive_seed(seed, {i}));
      auto res = render_rays(model, std::span<const Ray>(rays).subspan(begin, end - begin), settings, seeds, false);
      for (std::size_t i = begin; i < end; ++i) {
        for (int ch = 0; ch < 3; ++ch) {
          out.fine.data[i * 3 + ch] = static_cast<float>(res.fine_rgb[i - begin][ch]);
          out.coarse.data[i * 3 + ch] = static_cast<float>(res.coarse_rgb[i - begin][ch]);
        }
      }
      queries[c] = res.coarse_queries + res.fine_queries;
    }
  };
  const int n_threads = std::max(1, std::min<int>(threads, static_cast<int>(n_chunks)));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto q : queries) out.field_queries += q;
  return out;
}

#define NASNERF_INSTANTIATE_RENDER(T)                                                                              \
  template RayBatchResult<T> render_rays<T>(const NerfModel<T>&, std::span<const Ray>, const RenderSettings&,      \
                                            std::span<const std::uint64_t>, bool);                                 \
  template ModelGradients<T> render_rays_backward<T>(const NerfModel<T>&, const RayBatchResult<T>&,                \
                                                     const RenderSettings&, std::span<const std::array<double, 3>>, \
                                                     std::span<const std::array<double, 3>>);                      \
  template RenderedImage render_image<T>(const NerfModel<T>&, const Camera&, const RenderSettings&, std::uint64_t, \
                                         int);

NASNERF_INSTANTIATE_RENDER(float)
NASNERF_INSTANTIATE_RENDER(double)

}  // namespace nasnerf

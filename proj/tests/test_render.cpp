#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "nasnerf/data.hpp"
#include "nasnerf/error.hpp"
#include "nasnerf/render.hpp"

using namespace nasnerf;

namespace {

const std::array<double, 3> kWhite{1.0, 1.0, 1.0};

std::vector<double> midpoints(double near, double far, int n) { return stratified_samples(near, far, n, nullptr); }

NerfModel<float> zero_density_model() {
  ArchitectureDescriptor d;
  d.coarse = {{1, 1, 1}, {8, 8, 8}};
  d.fine = d.coarse;
  auto m = build_model<float>(d, 3);
  for (auto* f : {&m.coarse, &m.fine}) {
    auto& l = f->density_head.layers.back();
    std::fill(l.weights.begin(), l.weights.end(), 0.0f);
    std::fill(l.bias.begin(), l.bias.end(), 0.0f);
  }
  return m;
}

}  // namespace

TEST_CASE("camera: centre pixel looks down -z") {
  Camera cam;
  cam.width = 3;
  cam.height = 3;
  const std::vector<Pixel> px{{1, 1}};
  const auto rays = generate_rays(cam, px, 2.0, 6.0);
  CHECK(rays[0].direction.x() == doctest::Approx(0.0));
  CHECK(rays[0].direction.y() == doctest::Approx(0.0));
  CHECK(rays[0].direction.z() == doctest::Approx(-1.0));
  cam.pose(0, 0) = 2.0;
  CHECK_THROWS_AS(cam.validate(), ConfigError);
}

TEST_CASE("stratified: midpoints and Monte Carlo bin means") {
  const auto t = midpoints(0.0, 1.0, 4);
  const std::vector<double> expect{0.125, 0.375, 0.625, 0.875};
  for (int i = 0; i < 4; ++i) CHECK(t[i] == doctest::Approx(expect[i]).epsilon(1e-15));
  const int n = 8, draws = 100000;
  std::vector<double> sum(n, 0.0);
  Rng rng(5);
  for (int d = 0; d < draws; ++d) {
    const auto s = stratified_samples(2.0, 6.0, n, &rng);
    for (int k = 0; k < n; ++k) sum[k] += s[k];
  }
  const double width = 4.0 / n;
  const double sigma = width / std::sqrt(12.0 * draws);
  // 3 sigma per bin, widened to 4 sigma to cover the 8 bins jointly.
  for (int k = 0; k < n; ++k) CHECK(std::abs(sum[k] / draws - (2.0 + (k + 0.5) * width)) < 4.0 * sigma);
}

TEST_CASE("composite: empty medium shows the background") {
  const auto t = midpoints(2.0, 6.0, 16);
  const std::vector<double> sigma(16, 0.0), rgb(48, 0.3);
  const std::array<double, 3> bg{0.2, 0.4, 0.6};
  const auto r = composite(sigma, rgb, t, 6.0, bg);
  for (int c = 0; c < 3; ++c) CHECK(r.rgb[c] == doctest::Approx(bg[c]));
  for (double w : r.weights) CHECK(w == 0.0);
}

TEST_CASE("composite: one sample with sigma*delta = ln 2") {
  const std::vector<double> t{0.0}, sigma{std::log(2.0)}, rgb{1.0, 0.0, 0.0};
  const auto r = composite(sigma, rgb, t, 1.0, {0.0, 0.0, 0.0});
  CHECK(r.weights[0] == doctest::Approx(0.5));
  CHECK(r.final_transmittance == doctest::Approx(0.5));
  CHECK(r.rgb[0] == doctest::Approx(0.5));
}

TEST_CASE("composite: homogeneous medium matches 1 - e^-2") {
  const auto t = midpoints(0.0, 1.0, 256);
  const std::vector<double> sigma(256, 2.0), rgb(768, 0.0);
  const auto r = composite(sigma, rgb, t, 1.0, kWhite);
  CHECK(std::abs(r.opacity - (1.0 - std::exp(-2.0))) < 1e-2);
}

TEST_CASE("composite: weights bounded and opacity grows with density") {
  Rng rng(3);
  const auto t = midpoints(2.0, 6.0, 32);
  std::vector<double> sigma(32), rgb(96, 0.5);
  for (auto& s : sigma) s = rng.uniform(0.0, 5.0);
  const auto r = composite(sigma, rgb, t, 6.0, kWhite);
  double sum = 0.0;
  for (double w : r.weights) {
    CHECK(w >= 0.0);
    CHECK(w <= 1.0);
    sum += w;
  }
  CHECK(sum <= 1.0 + 1e-12);
  std::vector<double> one(32, 0.0);
  double prev = -1.0;
  for (double s : {0.1, 1.0, 10.0, 100.0, 1e4}) {
    one[10] = s;
    const double op = composite(one, rgb, t, 6.0, kWhite).opacity;
    CHECK(op > prev);
    prev = op;
  }
  CHECK(prev == doctest::Approx(1.0));
}

TEST_CASE("composite: errors on bad input") {
  const std::vector<double> t{0.5, 0.2}, sigma{1.0, 1.0}, rgb(6, 0.5);
  CHECK_THROWS_AS(composite(sigma, rgb, t, 1.0, kWhite), ConfigError);
  const std::vector<double> t2{0.2, 0.5}, neg{-1.0, 1.0};
  CHECK_THROWS_AS(composite(neg, rgb, t2, 1.0, kWhite), ConfigError);
}

TEST_CASE("composite_backward: matches finite differences") {
  Rng rng(8);
  const int n = 12;
  const auto t = midpoints(2.0, 6.0, n);
  std::vector<double> sigma(n), rgb(3 * n);
  for (auto& s : sigma) s = rng.uniform(0.1, 3.0);
  for (auto& c : rgb) c = rng.uniform(0.0, 1.0);
  const std::array<double, 3> bg{0.9, 0.8, 0.7}, g{0.3, -1.2, 0.5};
  auto loss = [&] {
    const auto r = composite(sigma, rgb, t, 6.0, bg);
    return g[0] * r.rgb[0] + g[1] * r.rgb[1] + g[2] * r.rgb[2];
  };
  const auto fwd = composite(sigma, rgb, t, 6.0, bg);
  const auto grad = composite_backward(sigma, rgb, t, 6.0, bg, fwd, g);
  const double h = 1e-6;
  for (int i = 0; i < n; ++i) {
    const double s0 = sigma[i];
    sigma[i] = s0 + h;
    const double up = loss();
    sigma[i] = s0 - h;
    const double dn = loss();
    sigma[i] = s0;
    CHECK(grad.density[i] == doctest::Approx((up - dn) / (2 * h)).epsilon(1e-5));
  }
  for (int i = 0; i < 3 * n; ++i) {
    const double c0 = rgb[i];
    rgb[i] = c0 + h;
    const double up = loss();
    rgb[i] = c0 - h;
    const double dn = loss();
    rgb[i] = c0;
    CHECK(grad.rgb[i] == doctest::Approx((up - dn) / (2 * h)).epsilon(1e-5));
  }
}

TEST_CASE("importance: uniform weights give uniform samples (KS)") {
  const int n = 16;
  const auto t = midpoints(0.0, 1.0, n);
  const std::vector<double> w(n, 1.0 / n);
  std::vector<double> all;
  Rng rng(13);
  for (int k = 0; k < 100; ++k) {
    const auto s = importance_samples(w, t, 0.0, 1.0, 1000, &rng);
    CHECK(std::is_sorted(s.begin(), s.end()));
    all.insert(all.end(), s.begin(), s.end());
  }
  std::sort(all.begin(), all.end());
  double d = 0.0;
  const double m = static_cast<double>(all.size());
  for (std::size_t i = 0; i < all.size(); ++i) {
    d = std::max({d, std::abs((i + 1) / m - all[i]), std::abs(all[i] - i / m)});
  }
  // Asymptotic KS critical value at p = 0.01.
  CHECK(d < 1.628 / std::sqrt(m));
}

TEST_CASE("importance: single nonzero bin confines the samples") {
  const int n = 8;
  const auto t = midpoints(0.0, 1.0, n);
  std::vector<double> w(n, 0.0);
  w[5] = 1.0;
  Rng rng(2);
  // The 1e-5 floor leaks a negligible mass to other bins.
  const auto s = importance_samples(w, t, 0.0, 1.0, 64, &rng);
  int inside = 0;
  for (double v : s) inside += (v >= 5.0 / n && v <= 6.0 / n);
  CHECK(inside == 64);
}

TEST_CASE("render_rays: zero-density fields render the background") {
  const auto model = zero_density_model();
  Camera cam;
  cam.width = 4;
  cam.height = 4;
  cam.pose(2, 3) = 4.0;
  const auto rays = generate_rays(cam, 2.0, 6.0);
  RenderSettings rs;
  rs.samples_coarse = 8;
  rs.samples_fine = 8;
  rs.background = {0.1, 0.5, 0.9};
  std::vector<std::uint64_t> seeds(rays.size(), 1);
  const auto r = render_rays(model, rays, rs, seeds, false);
  for (std::size_t i = 0; i < rays.size(); ++i) {
    for (int c = 0; c < 3; ++c) {
      CHECK(r.fine_rgb[i][c] == doctest::Approx(rs.background[c]));
      CHECK(r.coarse_rgb[i][c] == doctest::Approx(rs.background[c]));
    }
  }
  CHECK(r.fine_queries == rays.size() * 16);
}

TEST_CASE("render_image: independent of thread count") {
  ArchitectureDescriptor d;
  d.coarse = {{1, 1, 1}, {8, 8, 8}};
  d.fine = d.coarse;
  const auto model = build_model<float>(d, 5);
  Camera cam = look_at({0.0, -4.0, 1.0}, 0.7, 8, 6);
  RenderSettings rs;
  rs.samples_coarse = 8;
  rs.samples_fine = 8;
  rs.rays_per_batch = 7;
  const auto a = render_image(model, cam, rs, 11, 1);
  const auto b = render_image(model, cam, rs, 11, 3);
  CHECK(a.fine.data == b.fine.data);
  CHECK(a.coarse.data == b.coarse.data);
}

TEST_CASE("quadrature converges to the procedural oracle") {
  ProceduralSceneSpec spec;
  spec.spheres = {{{0.0, 0.0, 0.0}, 0.8, {0.9, 0.2, 0.1}, 3.0}, {{0.3, 0.2, 0.1}, 0.4, {0.1, 0.3, 0.9}, 6.0}};
  const ProceduralOracle oracle(spec);
  Ray ray;
  ray.origin = {0.05, 0.1, 4.0};
  ray.direction = {0.0, 0.0, -1.0};
  const auto exact = oracle.ray_color(ray);
  double prev = 1e9;
  for (int n : {64, 128, 256, 512}) {
    const auto t = midpoints(2.0, 6.0, n);
    std::vector<double> sigma(n), rgb(3 * n);
    for (int i = 0; i < n; ++i) {
      const auto [s, c] = oracle.sample(ray.origin + t[i] * ray.direction);
      sigma[i] = s;
      for (int k = 0; k < 3; ++k) rgb[3 * i + k] = c[k];
    }
    const auto r = composite(sigma, rgb, t, 6.0, spec.background);
    double err = 0.0;
    for (int k = 0; k < 3; ++k) err = std::max(err, std::abs(r.rgb[k] - exact[k]));
    CHECK(err < prev);
    prev = err;
  }
  CHECK(prev < 1e-2);
}

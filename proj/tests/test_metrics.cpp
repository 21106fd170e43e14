#include <doctest.h>

#include "nasnerf/error.hpp"
#include "nasnerf/metrics.hpp"
#include "oracles.hpp"

using namespace nasnerf;

TEST_CASE("psnr: identical images hit the cap; 0.5 offset is 6.0206 dB") {
  Image a(8, 8, 3, 0.25f);
  CHECK(psnr(a, a) == kPsnrCap);
  Image b(8, 8, 3, 0.75f);
  CHECK(std::abs(psnr(a, b) - 20.0 * std::log10(2.0)) < 1e-9);
  CHECK_THROWS_AS(psnr(a, Image(4, 8, 3)), ShapeError);
}

TEST_CASE("ssim: identity, inversion and size errors") {
  const auto x = oracle::random_image(24, 24, 1);
  CHECK(ssim(x, x) == 1.0);
  Image board(16, 16, 3), inv(16, 16, 3);
  for (int y = 0; y < 16; ++y) {
    for (int xx = 0; xx < 16; ++xx) {
      for (int c = 0; c < 3; ++c) {
        board.at(xx, y, c) = static_cast<float>((xx + y) % 2);
        inv.at(xx, y, c) = 1.0f - board.at(xx, y, c);
      }
    }
  }
  CHECK(ssim(board, inv) < 0.0);
  CHECK_THROWS_AS(ssim(Image(10, 10, 3), Image(10, 10, 3)), ShapeError);
}

TEST_CASE("ssim: matches the brute-force window oracle") {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto a = oracle::random_image(32, 32, 100 + s);
    const auto b = oracle::perturb(a, 0.4, 200 + s);
    CHECK(std::abs(ssim(a, b) - oracle::brute_force_ssim(a, b)) < 1e-6);
  }
}

TEST_CASE("metric rows: CSV round trip and malformed rows") {
  MetricRow r{"lego", "lego_xs", 28.5, 0.91, 0.09, 56.9, 3.5};
  const auto line = to_csv(r);
  CHECK(line.substr(line.size() - 3) == ",NA");
  const auto back = parse_metric_row(line);
  CHECK(back.architecture == "lego_xs");
  CHECK(back.ssim == doctest::Approx(0.91));
  CHECK(back.fps == doctest::Approx(3.5));
  CHECK_THROWS_AS(parse_metric_row("a,b,c"), ConfigError);
  CHECK_THROWS_AS(parse_metric_row("a,b,1,x,1,1,1,NA"), ConfigError);
  r.architecture = "bad,label";
  CHECK_THROWS_AS(to_csv(r), ConfigError);
}

TEST_CASE("make_report: per-view and mean") {
  const auto a = oracle::random_image(16, 16, 5);
  const auto b = oracle::perturb(a, 0.2, 6);
  const auto rep = make_report({a, b}, {a, a});
  REQUIRE(rep.psnr.size() == 2);
  CHECK(rep.ssim[0] == 1.0);
  CHECK(rep.mean_ssim == doctest::Approx((1.0 + rep.ssim[1]) / 2));
}

#include <doctest.h>

#include "nasnerf/search.hpp"
#include "nasnerf/train.hpp"

using namespace nasnerf;

namespace {

SceneDataset small_scene(int size) {
  auto spec = default_procedural_spec(2);
  spec.width = size;
  spec.height = size;
  spec.train_views = 6;
  spec.eval_views = 2;
  return generate_procedural(spec);
}

ArchitectureDescriptor tiny() {
  ArchitectureDescriptor d;
  d.coarse = {{1, 1, 1}, {8, 8, 8}};
  d.fine = {{1, 1, 1}, {16, 16, 16}};
  return d;
}

}  // namespace

TEST_CASE("train: zero iterations keeps the initial weights") {
  const auto ds = small_scene(16);
  TrainConfig cfg;
  cfg.iterations = 0;
  const auto init = build_model<float>(tiny(), 1);
  const auto r = train(init, ds, cfg);
  CHECK(r.steps == 0);
  CHECK(r.model.fine.trunk.layers[0].weights == init.fine.trunk.layers[0].weights);
  CHECK(r.final.report.ssim.size() == 2);
  CHECK(r.final.report.mean_ssim == doctest::Approx(r.initial.report.mean_ssim));
}

TEST_CASE("train: identical seeds reproduce the trace; loss falls") {
  const auto ds = small_scene(16);
  TrainConfig cfg;
  cfg.iterations = 150;
  cfg.log_every = 50;
  cfg.seed = 4;
  const auto a = train(build_model<float>(tiny(), 4), ds, cfg);
  const auto b = train(build_model<float>(tiny(), 4), ds, cfg);
  REQUIRE(a.trace.size() == b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    CHECK(a.trace[i].iteration == b.trace[i].iteration);
    if (!std::isnan(a.trace[i].loss)) CHECK(a.trace[i].loss == b.trace[i].loss);
  }
  CHECK(a.model.fine.trunk.layers[0].weights == b.model.fine.trunk.layers[0].weights);
  double first = std::nan(""), last = std::nan("");
  for (const auto& p : a.trace) {
    if (std::isnan(p.loss)) continue;
    if (std::isnan(first)) first = p.loss;
    last = p.loss;
  }
  CHECK(last < first);
}

TEST_CASE("train: XXS-scale model improves SSIM over 2000 iterations") {
  const auto spec = default_procedural_spec(0);
  const auto ds = generate_procedural(spec);
  TrainConfig cfg;
  cfg.iterations = 2000;
  cfg.log_every = 0;
  const auto r = train(build_model<float>(desk_search_space().minimum(), 0), ds, cfg);
  CHECK(r.final.report.mean_ssim > r.initial.report.mean_ssim);
}

TEST_CASE("evaluate: identical across thread counts") {
  const auto ds = small_scene(16);
  const auto m = build_model<float>(tiny(), 3);
  RenderSettings rs{8, 8, {1, 1, 1}, 64, 2.0, 6.0, false};
  const auto a = evaluate(m, ds, rs, 0, 1, 0);
  const auto b = evaluate(m, ds, rs, 0, 2, 0);
  CHECK(a.report.mean_psnr == b.report.mean_psnr);
  CHECK(a.renders[1].data == b.renders[1].data);
}

#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "nasnerf/data.hpp"
#include "nasnerf/field.hpp"
#include "nasnerf/metrics.hpp"
#include "nasnerf/optimizer.hpp"
#include "nasnerf/render.hpp"

namespace nasnerf {

// Desk-scale defaults; the full-size protocol is 4096 rays of 64 + 128
// samples per step at learning rate 5e-4.
struct TrainConfig {
  std::uint64_t iterations = 2000;
  int rays_per_batch = 64;
  RenderSettings render{16, 16, {1.0, 1.0, 1.0}, 4096, 2.0, 6.0, true};
  RenderSettings eval_render{32, 32, {1.0, 1.0, 1.0}, 4096, 2.0, 6.0, false};
  // Small batches on one core converge far faster with a larger step than
  // the full-size 5e-4.
  OptimizerConfig optimizer{OptimizerKind::kRAdam, 5e-3};
  std::uint64_t seed = 0;
  std::uint64_t log_every = 100;
  std::uint64_t eval_every = 0;  // 0: evaluate only before and after training
  std::size_t max_eval_views = 0;  // 0: all eval views
  int threads = 1;                 // rendering threads for evaluation only
};

struct TracePoint {
  std::uint64_t iteration = 0;
  double loss = std::numeric_limits<double>::quiet_NaN();  // mean over the logging window
  double eval_psnr = std::numeric_limits<double>::quiet_NaN();
  double eval_ssim = std::numeric_limits<double>::quiet_NaN();
};

struct Evaluation {
  MetricReport report;
  std::vector<Image> renders;
};

struct TrainResult {
  NerfModel<float> model;
  std::vector<TracePoint> trace;
  Evaluation initial;
  Evaluation final;
  std::uint64_t steps = 0;
};

// Renders the eval split (midpoint sampling) and scores it against the
// ground-truth frames.
Evaluation evaluate(const NerfModel<float>& model, const SceneDataset& dataset, const RenderSettings& settings,
                    std::size_t max_views = 0, int threads = 1, std::uint64_t seed = 0);

// Loss: MSE of the coarse render plus MSE of the fine render. Each step draws
// rays_per_batch pixels uniformly over all training pixels. Throws
// NumericError if the loss stops being finite.
TrainResult train(NerfModel<float> model, const SceneDataset& dataset, const TrainConfig& config,
                  const std::function<void(const TracePoint&)>& on_log = {});

// Model dataset render settings with near/far taken from the dataset.
RenderSettings with_bounds(RenderSettings settings, const SceneDataset& dataset);

}  // namespace nasnerf

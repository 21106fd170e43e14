#include "nasnerf/train.hpp"

#include <cmath>

#include "nasnerf/error.hpp"
#include "nasnerf/rng.hpp"

namespace nasnerf {

RenderSettings with_bounds(RenderSettings s, const SceneDataset& ds) {
  s.near = ds.near;
  s.far = ds.far;
  s.background = ds.background;
  return s;
}

Evaluation evaluate(const NerfModel<float>& model, const SceneDataset& ds, const RenderSettings& settings,
                    std::size_t max_views, int threads, std::uint64_t seed) {
  const RenderSettings s = with_bounds(settings, ds);
  Evaluation ev;
  std::vector<Image> targets;
  const std::size_t n = max_views == 0 ? ds.eval.size() : std::min(max_views, ds.eval.size());
  for (std::size_t k = 0; k < n; ++k) {
    const Frame& f = ds.frames[ds.eval[k]];
    ev.renders.push_back(render_image(model, f.camera, s, derive_seed(seed, {k}), threads).fine);
    targets.push_back(f.image);
  }
  ev.report = make_report(ev.renders, targets);
  return ev;
}

namespace {

struct PixelRef {
  std::size_t frame;
  Pixel pixel;
};

}  // namespace

TrainResult train(NerfModel<float> model, const SceneDataset& ds, const TrainConfig& cfg,
                  const std::function<void(const TracePoint&)>& on_log) {
  ds.validate();
  if (ds.train.empty()) throw ConfigError("train: dataset has no training frames");
  if (cfg.rays_per_batch < 1) throw ConfigError("train: rays_per_batch must be >= 1");
  const RenderSettings rs = with_bounds(cfg.render, ds);
  rs.validate();

  TrainResult result;
  auto params = parameter_spans(model);
  OptimizerState<float> opt(cfg.optimizer, params);

  auto log_eval = [&](std::uint64_t it, double loss) {
    TracePoint p;
    p.iteration = it;
    p.loss = loss;
    Evaluation ev = evaluate(model, ds, cfg.eval_render, cfg.max_eval_views, cfg.threads, cfg.seed);
    p.eval_psnr = ev.report.mean_psnr;
    p.eval_ssim = ev.report.mean_ssim;
    result.trace.push_back(p);
    if (on_log) on_log(p);
    return ev;
  };
  if (!ds.eval.empty()) result.initial = log_eval(0, std::numeric_limits<double>::quiet_NaN());

  const std::size_t batch = static_cast<std::size_t>(cfg.rays_per_batch);
  std::vector<PixelRef> picks(batch);
  std::vector<Ray> rays(batch);
  std::vector<std::uint64_t> seeds(batch);
  std::vector<std::array<double, 3>> target(batch), gc(batch), gf(batch);
  double window_loss = 0.0;
  std::uint64_t window_count = 0;

  for (std::uint64_t it = 1; it <= cfg.iterations; ++it) {
    Rng rng(derive_seed(cfg.seed, {1, it}));
    for (std::size_t r = 0; r < batch; ++r) {
      const std::size_t fi = ds.train[rng.below(ds.train.size())];
      const Frame& f = ds.frames[fi];
      const Pixel px{static_cast<int>(rng.below(f.camera.width)), static_cast<int>(rng.below(f.camera.height))};
      rays[r] = generate_rays(f.camera, std::span<const Pixel>(&px, 1), rs.near, rs.far)[0];
      for (int c = 0; c < 3; ++c) target[r][c] = f.image.at(px.x, px.y, c);
      seeds[r] = derive_seed(cfg.seed, {2, it, r});
    }
    auto out = render_rays(model, rays, rs, seeds, true);
    double loss = 0.0;
    const double scale = 2.0 / (3.0 * static_cast<double>(batch));
    for (std::size_t r = 0; r < batch; ++r) {
      for (int c = 0; c < 3; ++c) {
        const double dc = out.coarse_rgb[r][c] - target[r][c];
        const double df = out.fine_rgb[r][c] - target[r][c];
        loss += (dc * dc + df * df) / (3.0 * static_cast<double>(batch));
        gc[r][c] = scale * dc;
        gf[r][c] = scale * df;
      }
    }
    if (!std::isfinite(loss)) {
      throw NumericError("train: non-finite loss at iteration " + std::to_string(it));
    }
    auto grads = render_rays_backward(model, out, rs, gc, gf);
    std::vector<std::span<float>> gspans = gradient_spans(grads.coarse);
    for (auto s : gradient_spans(grads.fine)) gspans.push_back(s);
    optimizer_step(opt, params, gspans);
    ++result.steps;

    window_loss += loss;
    ++window_count;
    const bool do_eval = cfg.eval_every > 0 && it % cfg.eval_every == 0 && it != cfg.iterations;
    const bool do_log = cfg.log_every > 0 && it % cfg.log_every == 0 && it != cfg.iterations;
    if (do_eval) {
      log_eval(it, window_loss / window_count);
    } else if (do_log) {
      TracePoint p;
      p.iteration = it;
      p.loss = window_loss / window_count;
      result.trace.push_back(p);
      if (on_log) on_log(p);
    }
    if (do_eval || do_log) {
      window_loss = 0.0;
      window_count = 0;
    }
  }
  const double last = window_count ? window_loss / window_count : std::numeric_limits<double>::quiet_NaN();
  if (!ds.eval.empty()) {
    result.final = cfg.iterations == 0 ? result.initial : log_eval(cfg.iterations, last);
  }
  result.model = std::move(model);
  return result;
}

}  // namespace nasnerf

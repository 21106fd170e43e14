// nasnerf command-line tool.
// Exit codes: 0 success, 1 usage error, 2 runtime or numeric failure.

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <map>
#include <sstream>

#include "nasnerf/checkpoint.hpp"
#include "nasnerf/cost.hpp"
#include "nasnerf/data.hpp"
#include "nasnerf/error.hpp"
#include "nasnerf/metrics.hpp"
#include "nasnerf/search.hpp"
#include "nasnerf/train.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace nasnerf;

namespace {

constexpr const char* kVersion = "0.1.0";

// Every option of the invoked subcommand with its effective value.
json run_config(const CLI::App& sub) {
  json j;
  j["tool"] = "nasnerf";
  j["version"] = kVersion;
  j["command"] = sub.get_name();
  json args;
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help") continue;
    if (opt->count() > 0) {
      const auto& r = opt->results();
      if (opt->get_expected_max() > 1) {
        args[name] = r;
      } else {
        args[name] = r.empty() ? std::string("true") : r.back();
      }
    } else {
      const std::string d = opt->get_default_str();
      args[name] = d.empty() && opt->get_expected_max() == 0 ? "false" : d;
    }
  }
  j["args"] = args;
  return j;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot write " + p.string());
  out << text;
  if (!out) throw IoError("failed writing " + p.string());
}

ArchitectureDescriptor load_arch(const std::string& arg) {
  if (arg == "baseline") return baseline_descriptor();
  for (const auto& r : reference_architectures()) {
    if (r.name == arg) return r.descriptor;
  }
  return load_descriptor(arg);
}

std::string arch_label(const std::string& arg) {
  if (arg == "baseline") return "NeRF";
  for (const auto& r : reference_architectures()) {
    if (r.name == arg) return r.name;
  }
  return fs::path(arg).stem().string();
}

void ensure_fresh_dir(const fs::path& dir) {
  if (fs::exists(dir) && !fs::is_empty(dir)) throw IoError("output directory " + dir.string() + " is not empty");
}

struct Common {
  std::uint64_t seed = 0;
  int threads = 1;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed, "Run seed");
  sub->add_option("--threads", c.threads, "Worker threads for rendering")->check(CLI::PositiveNumber);
}

struct TrainFlags {
  int rays = 64;
  int samples_coarse = 16;
  int samples_fine = 16;
  int eval_samples_coarse = 32;
  int eval_samples_fine = 32;
  double lr = 5e-3;
  std::string optimizer = "radam";
};

void add_train_flags(CLI::App* sub, TrainFlags& f) {
  sub->add_option("--rays", f.rays, "Rays per training batch")->check(CLI::PositiveNumber);
  sub->add_option("--samples-coarse", f.samples_coarse, "Coarse samples per training ray");
  sub->add_option("--samples-fine", f.samples_fine, "Fine samples per training ray");
  sub->add_option("--eval-samples-coarse", f.eval_samples_coarse, "Coarse samples per eval ray");
  sub->add_option("--eval-samples-fine", f.eval_samples_fine, "Fine samples per eval ray");
  sub->add_option("--lr", f.lr, "Learning rate");
  sub->add_option("--optimizer", f.optimizer, "radam | adam")->check(CLI::IsMember({"radam", "adam"}));
}

TrainConfig make_train_config(const TrainFlags& f, const Common& c) {
  TrainConfig t;
  t.rays_per_batch = f.rays;
  t.render.samples_coarse = f.samples_coarse;
  t.render.samples_fine = f.samples_fine;
  t.eval_render.samples_coarse = f.eval_samples_coarse;
  t.eval_render.samples_fine = f.eval_samples_fine;
  t.optimizer.learning_rate = f.lr;
  t.optimizer.kind = f.optimizer == "adam" ? OptimizerKind::kAdam : OptimizerKind::kRAdam;
  t.seed = c.seed;
  t.threads = c.threads;
  return t;
}

std::string metrics_file(const json& rc, const MetricRow& row) {
  return "# run_config: " + rc.dump() + "\n" + metric_csv_header() + "\n" + to_csv(row) + "\n";
}

void write_renders(const std::vector<Image>& renders, const fs::path& dir, bool pfm) {
  fs::create_directories(dir);
  for (std::size_t i = 0; i < renders.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "eval_%03zu", i);
    write_png(renders[i], dir / (std::string(name) + ".png"));
    if (pfm) write_pfm(renders[i], dir / (std::string(name) + ".pfm"));
  }
}

// Eval renders per second, measured around a full evaluation.
std::pair<Evaluation, double> timed_eval(const NerfModel<float>& m, const SceneDataset& ds, const RenderSettings& rs,
                                         int threads, std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  Evaluation ev = evaluate(m, ds, rs, 0, threads, seed);
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {std::move(ev), s > 0.0 ? static_cast<double>(ev.renders.size()) / s : 0.0};
}

// ---- scene-gen ----
struct SceneGenArgs {
  Common common;
  std::string spec;
  std::string out;
};

int cmd_scene_gen(const SceneGenArgs& a, const CLI::App& sub) {
  ProceduralSceneSpec spec;
  if (a.spec.empty()) {
    spec = default_procedural_spec(a.common.seed);
  } else {
    std::ifstream in(a.spec);
    if (!in) throw IoError("cannot read spec " + a.spec);
    std::stringstream ss;
    ss << in.rdbuf();
    spec = parse_procedural_spec(ss.str());
  }
  spec.validate();
  const fs::path out(a.out);
  ensure_fresh_dir(out);
  const SceneDataset ds = generate_procedural(spec);
  // Build in a sibling directory and rename, so failures leave nothing behind.
  const fs::path tmp = out.parent_path() / (out.filename().string() + ".partial");
  fs::remove_all(tmp);
  try {
    json rc = run_config(sub);
    json extra;
    extra["run_config"] = rc;
    save_blender(ds, tmp, extra.dump());
    write_text(tmp / "scene_spec.json", to_json(spec));
    write_text(tmp / "run_config.json", rc.dump(2) + "\n");
    if (fs::exists(out)) fs::remove(out);
    fs::rename(tmp, out);
  } catch (...) {
    fs::remove_all(tmp);
    throw;
  }
  std::cout << "wrote " << ds.train.size() << " train + " << ds.eval.size() << " eval frames to " << out.string()
            << "\n";
  return 0;
}

// ---- train ----
struct TrainArgs {
  Common common;
  TrainFlags flags;
  std::string scene;
  std::string arch = "baseline";
  std::string iterations = "2000";
  std::string policy = "inverse";
  std::uint64_t baseline_iters = 200000;
  std::uint64_t iter_floor = 16000;
  std::uint64_t log_every = 100;
  std::uint64_t eval_every = 0;
  std::string out;
  bool pfm = false;
  bool dry_run = false;
};

int cmd_train(const TrainArgs& a, const CLI::App& sub) {
  const SceneDataset ds = load_blender(a.scene);
  const ArchitectureDescriptor d = load_arch(a.arch);
  TrainConfig cfg = make_train_config(a.flags, a.common);
  cfg.log_every = a.log_every;
  cfg.eval_every = a.eval_every;
  const CostReport cost = cost_report(d);
  if (a.iterations == "auto") {
    cfg.iterations = scaled_iterations(cost.er_params, parse_iteration_policy(a.policy), a.baseline_iters, a.iter_floor);
    std::cout << "auto iterations: er_params " << cost.er_params << ", policy " << a.policy << " -> "
              << cfg.iterations << " iterations\n";
  } else {
    try {
      std::size_t pos = 0;
      cfg.iterations = std::stoull(a.iterations, &pos);
      if (pos != a.iterations.size()) throw std::invalid_argument(a.iterations);
    } catch (const std::exception&) {
      throw ConfigError("--iterations must be a non-negative integer or 'auto'");
    }
  }
  json rc = run_config(sub);
  rc["resolved_iterations"] = cfg.iterations;
  if (a.dry_run) {
    std::cout << rc.dump(2) << "\n";
    return 0;
  }
  const fs::path out(a.out);
  fs::create_directories(out);

  std::ofstream trace(out / "trace.csv");
  trace << "# run_config: " << rc.dump() << "\n" << "iteration,loss,eval_psnr,eval_ssim\n";
  trace.precision(10);
  auto on_log = [&](const TracePoint& p) {
    trace << p.iteration << "," << p.loss << "," << p.eval_psnr << "," << p.eval_ssim << "\n";
    std::cout << "iter " << p.iteration;
    if (!std::isnan(p.loss)) std::cout << " loss " << p.loss;
    if (!std::isnan(p.eval_ssim)) std::cout << " eval psnr " << p.eval_psnr << " ssim " << p.eval_ssim;
    std::cout << "\n";
  };
  const TrainResult r = train(build_model<float>(d, a.common.seed), ds, cfg, on_log);
  save_checkpoint(make_checkpoint(r.model, r.steps, cfg.optimizer, rc.dump()), out / "checkpoint.nnrf");
  save_descriptor(d, out / "architecture.json");
  write_text(out / "run_config.json", rc.dump(2) + "\n");

  auto [ev, fps] = timed_eval(r.model, ds, cfg.eval_render, a.common.threads, a.common.seed);
  write_renders(ev.renders, out / "renders", a.pfm);
  MetricRow row{ds.name, arch_label(a.arch), ev.report.mean_psnr, ev.report.mean_ssim, cost.params_M, cost.flops_G,
                fps};
  write_text(out / "metrics.csv", metrics_file(rc, row));
  std::cout << "final eval: psnr " << row.psnr << " ssim " << row.ssim << "\n";
  return 0;
}

// ---- eval ----
struct EvalArgs {
  Common common;
  TrainFlags flags;
  std::string scene;
  std::string checkpoint;
  std::string label;
  std::string out;
  bool pfm = false;
};

int cmd_eval(const EvalArgs& a, const CLI::App& sub) {
  const SceneDataset ds = load_blender(a.scene);
  const Checkpoint ck = load_checkpoint(a.checkpoint);
  const NerfModel<float> model = restore_model(ck);
  const TrainConfig cfg = make_train_config(a.flags, a.common);
  const json rc = run_config(sub);
  const fs::path out(a.out);
  fs::create_directories(out);
  auto [ev, fps] = timed_eval(model, ds, cfg.eval_render, a.common.threads, a.common.seed);
  write_renders(ev.renders, out / "renders", a.pfm);
  const CostReport cost = cost_report(ck.architecture);
  std::string label = a.label;
  if (label.empty()) label = fs::absolute(a.checkpoint).parent_path().filename().string();
  MetricRow row{ds.name, label, ev.report.mean_psnr, ev.report.mean_ssim, cost.params_M,
                cost.flops_G, fps};
  write_text(out / "metrics.csv", metrics_file(rc, row));
  write_text(out / "run_config.json", rc.dump(2) + "\n");
  std::cout << "eval: psnr " << row.psnr << " ssim " << row.ssim << " over " << ev.renders.size() << " views\n";
  return 0;
}

// ---- cost ----
struct CostArgs {
  Common common;
  std::vector<std::string> archs;
  bool table = false;
  std::string csv;
  Workload workload;
};

int cmd_cost(const CostArgs& a, const CLI::App&) {
  std::vector<std::pair<std::string, ArchitectureDescriptor>> items;
  if (a.table) {
    for (const auto& r : reference_architectures()) items.emplace_back(r.name, r.descriptor);
  }
  for (const auto& s : a.archs) items.emplace_back(arch_label(s), load_arch(s));
  if (items.empty()) throw ConfigError("cost: give --arch or --table");
  std::ofstream csv;
  if (!a.csv.empty()) {
    const bool fresh = !fs::exists(a.csv) || fs::file_size(a.csv) == 0;
    csv.open(a.csv, std::ios::app);
    if (!csv) throw IoError("cannot append to " + a.csv);
    if (fresh) csv << "name,params,params_M,flops,flops_G,er_params,er_flops\n";
    csv.precision(10);
  }
  json all = json::array();
  for (const auto& [name, d] : items) {
    const CostReport r = cost_report(d, a.workload);
    json j = json::parse(to_json(r));
    if (items.size() > 1) {
      json named{{"name", name}};
      named.update(j);
      j = named;
    }
    all.push_back(j);
    if (csv.is_open()) {
      csv << name << "," << r.params << "," << r.params_M << "," << r.flops << "," << r.flops_G << "," << r.er_params
          << "," << r.er_flops << "\n";
    }
  }
  std::cout << (items.size() == 1 ? all[0].dump(2) : all.dump(2)) << "\n";
  return 0;
}

// ---- search ----
struct SearchArgs {
  Common common;
  TrainFlags flags;
  std::string scene;
  std::string out;
  std::string name;
  std::string space = "desk";
  std::uint64_t boundary_iters = 2000;
  std::uint64_t proxy_iters = 1000;
  int proxy_downsample = 2;
  int rounds = 4;
  int samples = 6;
  double elite = 0.25;
  bool strict = false;
  bool no_retrain = false;
  std::string retrain_policy = "inverse";
  std::uint64_t retrain_baseline = 4000;
  std::uint64_t retrain_floor = 2000;
  UCoeffs coeffs;
};

int cmd_search(const SearchArgs& a, const CLI::App& sub) {
  const SceneDataset ds = load_blender(a.scene);
  SceneSearchConfig cfg;
  cfg.space = a.space == "full" ? full_search_space() : desk_search_space();
  cfg.constraints.strict_increase = a.strict;
  cfg.budget.rounds = a.rounds;
  cfg.budget.samples_per_round = a.samples;
  cfg.budget.elite_fraction = a.elite;
  cfg.coeffs = a.coeffs;
  const TrainConfig base = make_train_config(a.flags, a.common);
  cfg.boundary_train = base;
  cfg.boundary_train.iterations = a.boundary_iters;
  cfg.proxy_train = base;
  cfg.proxy_train.iterations = a.proxy_iters;
  cfg.retrain_train = base;
  for (TrainConfig* t : {&cfg.boundary_train, &cfg.proxy_train, &cfg.retrain_train}) t->log_every = 0;
  cfg.proxy_downsample = a.proxy_downsample;
  cfg.retrain = !a.no_retrain;
  cfg.retrain_policy = parse_iteration_policy(a.retrain_policy);
  cfg.retrain_baseline_iters = a.retrain_baseline;
  cfg.retrain_floor = a.retrain_floor;
  cfg.seed = a.common.seed;

  const std::string scene = a.name.empty() ? ds.name : a.name;
  const json rc = run_config(sub);
  const SceneSearchResult r = search_scene(ds, cfg, [](const std::string& s) { std::cout << s << std::endl; });
  const fs::path out(a.out);
  fs::create_directories(out);
  write_text(out / (scene + "_search.json"), to_json(r, rc.dump()));
  write_text(out / "run_config.json", rc.dump(2) + "\n");
  int missing = 0;
  for (const SizedResult& s : r.sizes) {
    if (!s.search.best) {
      std::cerr << s.name << ": " << s.search.message << "\n";
      ++missing;
      continue;
    }
    save_descriptor(s.search.best->descriptor, out / (scene + "_" + s.name + ".json"));
    std::cout << s.name << ": " << describe(s.search.best->descriptor) << " params " << s.search.best->cost.params
              << " proxy ssim " << s.search.best->proxy_ssim;
    if (!std::isnan(s.retrain_ssim)) std::cout << " retrained ssim " << s.retrain_ssim;
    std::cout << "\n";
  }
  return missing == 3 ? 2 : 0;
}

// ---- bench ----
struct BenchArgs {
  Common common;
  std::vector<std::string> archs;
  bool table = false;
  int width = 16;
  int height = 16;
  int reps = 3;
  int samples_coarse = 64;
  int samples_fine = 128;
  std::string csv;
};

int cmd_bench(const BenchArgs& a, const CLI::App& sub) {
  std::vector<std::pair<std::string, ArchitectureDescriptor>> items{{"NeRF", baseline_descriptor()}};
  if (a.table) {
    for (const auto& r : reference_architectures()) {
      if (r.name != "NeRF") items.emplace_back(r.name, r.descriptor);
    }
  }
  for (const auto& s : a.archs) {
    if (s != "baseline") items.emplace_back(arch_label(s), load_arch(s));
  }
  BenchmarkSettings bs;
  bs.width = a.width;
  bs.height = a.height;
  bs.repetitions = a.reps;
  bs.threads = a.common.threads;
  bs.seed = a.common.seed;
  bs.render.samples_coarse = a.samples_coarse;
  bs.render.samples_fine = a.samples_fine;
  std::map<ArchitectureDescriptor, FpsResult> measured;
  std::ostringstream table;
  table << "# run_config: " << run_config(sub).dump() << "\n";
  table << "name,er_flops,fps,speedup,threads\n";
  table.precision(6);
  double base_fps = 0.0;
  std::vector<double> ers, speedups;
  for (const auto& [name, d] : items) {
    if (!measured.count(d)) measured[d] = benchmark_fps(d, bs);
    const FpsResult& f = measured[d];
    if (base_fps == 0.0) base_fps = f.fps;
    const double er = cost_report(d).er_flops;
    ers.push_back(er);
    speedups.push_back(f.fps / base_fps);
    table << name << "," << er << "," << f.fps << "," << f.fps / base_fps << "," << f.threads << "\n";
  }
  std::cout << table.str();
  if (items.size() > 2) std::cout << "spearman(er_flops, speedup) = " << spearman(ers, speedups) << "\n";
  if (!a.csv.empty()) write_text(a.csv, table.str());
  return 0;
}

// ---- report ----
struct ReportArgs {
  Common common;
  std::vector<std::string> inputs;
  std::string out;
  std::string svg;
  double baseline_flops_G = 0.0;
};

struct ReportRow {
  std::string architecture;
  double er_flops;
  double ssim;
  double fps;
  double params_M;
};

std::string render_svg(const std::vector<ReportRow>& rows) {
  const double w = 640, h = 420, ml = 60, mr = 20, mt = 20, mb = 50;
  double xmax = 1.0, ymin = 1.0, ymax = 0.0, pmax = 0.0;
  for (const auto& r : rows) {
    xmax = std::max(xmax, r.er_flops);
    ymin = std::min(ymin, r.ssim);
    ymax = std::max(ymax, r.ssim);
    pmax = std::max(pmax, r.params_M);
  }
  if (ymax <= ymin) {
    ymin -= 0.05;
    ymax += 0.05;
  }
  xmax *= 1.05;
  auto px = [&](double x) { return ml + (w - ml - mr) * x / xmax; };
  auto py = [&](double y) { return h - mb - (h - mt - mb) * (y - ymin) / (ymax - ymin); };
  std::ostringstream s;
  s.precision(6);
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - mr << "\" y2=\"" << h - mb
    << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << h - mb << "\" stroke=\"black\"/>\n";
  s << "<text x=\"" << w / 2 << "\" y=\"" << h - 10 << "\" text-anchor=\"middle\">efficiency ratio (FLOPs)</text>\n";
  s << "<text x=\"15\" y=\"" << h / 2 << "\" transform=\"rotate(-90 15 " << h / 2
    << ")\" text-anchor=\"middle\">SSIM</text>\n";
  for (const auto& r : rows) {
    // Marker area scales with parameter count.
    const double radius = pmax > 0.0 ? 3.0 + 15.0 * std::sqrt(r.params_M / pmax) : 5.0;
    s << "<circle cx=\"" << px(r.er_flops) << "\" cy=\"" << py(r.ssim) << "\" r=\"" << radius
      << "\" fill=\"steelblue\" fill-opacity=\"0.6\"><title>" << r.architecture << "</title></circle>\n";
  }
  s << "</svg>\n";
  return s.str();
}

int cmd_report(const ReportArgs& a, const CLI::App& sub) {
  const double base_flops = a.baseline_flops_G > 0.0 ? a.baseline_flops_G : estimate_flops(baseline_descriptor()) / 1e9;
  std::vector<ReportRow> rows;
  for (const auto& path : a.inputs) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    std::string line;
    for (int ln = 1; std::getline(in, line); ++ln) {
      if (line.empty() || line[0] == '#' || line == metric_csv_header()) continue;
      try {
        const MetricRow m = parse_metric_row(line);
        if (!(m.flops_G > 0.0)) throw ConfigError("flops_G must be positive");
        rows.push_back({m.architecture, base_flops / m.flops_G, m.ssim, m.fps, m.params_M});
      } catch (const ConfigError& e) {
        std::cerr << "warning: " << path << ":" << ln << ": skipped (" << e.what() << ")\n";
      }
    }
  }
  if (rows.empty()) throw ConfigError("report: no valid rows");
  std::stable_sort(rows.begin(), rows.end(), [](const auto& x, const auto& y) { return x.er_flops < y.er_flops; });
  std::ostringstream csv;
  csv.precision(6);
  csv << "# run_config: " << run_config(sub).dump() << "\n";
  csv << "architecture,er_flops,ssim,fps,params_M\n";
  for (const auto& r : rows) {
    csv << r.architecture << "," << r.er_flops << "," << r.ssim << "," << r.fps << "," << r.params_M << "\n";
  }
  if (a.out.empty()) {
    std::cout << csv.str();
  } else {
    write_text(a.out, csv.str());
  }
  if (!a.svg.empty()) write_text(a.svg, render_svg(rows));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nasnerf: compact radiance-field architectures, cost model and search"};
  app.set_version_flag("--version", kVersion);
  app.set_config("--config", "", "TOML-style key = value file; flags override it");
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  SceneGenArgs sg;
  auto* c_sg = app.add_subcommand("scene-gen", "Generate a procedural sphere scene in Blender layout");
  add_common(c_sg, sg.common);
  c_sg->add_option("--spec", sg.spec, "Scene spec JSON (default: seeded three-sphere scene)");
  c_sg->add_option("--out", sg.out, "Output directory")->required();

  TrainArgs tr;
  auto* c_tr = app.add_subcommand("train", "Train an architecture on a scene");
  add_common(c_tr, tr.common);
  add_train_flags(c_tr, tr.flags);
  c_tr->add_option("--scene", tr.scene, "Scene directory")->required();
  c_tr->add_option("--arch", tr.arch, "Descriptor JSON, 'baseline' or a reference row name");
  c_tr->add_option("--iterations", tr.iterations, "Iteration count or 'auto'");
  c_tr->add_option("--policy", tr.policy, "Iteration scaling for auto: inverse | proportional | fixed");
  c_tr->add_option("--baseline-iters", tr.baseline_iters, "Baseline iterations for auto");
  c_tr->add_option("--iter-floor", tr.iter_floor, "Minimum iterations for auto");
  c_tr->add_option("--log-every", tr.log_every, "Loss logging interval");
  c_tr->add_option("--eval-every", tr.eval_every, "Evaluation interval (0: start and end only)");
  c_tr->add_option("--out", tr.out, "Output directory")->required();
  c_tr->add_flag("--pfm", tr.pfm, "Also write float PFM renders");
  c_tr->add_flag("--dry-run", tr.dry_run, "Print the resolved run config and exit");

  EvalArgs ev;
  auto* c_ev = app.add_subcommand("eval", "Evaluate a checkpoint on a scene's eval split");
  add_common(c_ev, ev.common);
  add_train_flags(c_ev, ev.flags);
  c_ev->add_option("--scene", ev.scene, "Scene directory")->required();
  c_ev->add_option("--checkpoint", ev.checkpoint, "Checkpoint file")->required();
  c_ev->add_option("--label", ev.label, "Architecture label in metrics.csv (default: checkpoint directory name)");
  c_ev->add_option("--out", ev.out, "Output directory")->required();
  c_ev->add_flag("--pfm", ev.pfm, "Also write float PFM renders");

  CostArgs co;
  auto* c_co = app.add_subcommand("cost", "Parameter count, FLOPs and efficiency ratios");
  add_common(c_co, co.common);
  c_co->add_option("--arch", co.archs, "Descriptor JSON, 'baseline' or a reference row name (repeatable)");
  c_co->add_flag("--table", co.table, "Include every reference architecture");
  c_co->add_option("--csv", co.csv, "Append rows to this CSV file");
  c_co->add_option("--rays", co.workload.rays, "Workload rays");
  c_co->add_option("--samples-coarse", co.workload.samples_coarse, "Workload coarse samples per ray");
  c_co->add_option("--samples-fine", co.workload.samples_fine, "Workload fine samples per ray");
  c_co->add_option("--flops-per-mac", co.workload.flops_per_mac, "FLOPs counted per multiply-accumulate");
  c_co->add_option("--overhead", co.workload.per_query_overhead, "Per-query overhead in multiply-accumulates");

  SearchArgs se;
  auto* c_se = app.add_subcommand("search", "Boundary training, SSIM ladder and per-target architecture search");
  add_common(c_se, se.common);
  add_train_flags(c_se, se.flags);
  c_se->add_option("--scene", se.scene, "Scene directory")->required();
  c_se->add_option("--out", se.out, "Output directory")->required();
  c_se->add_option("--name", se.name, "Scene name used in output file names");
  c_se->add_option("--space", se.space, "desk | full")->check(CLI::IsMember({"desk", "full"}));
  c_se->add_option("--boundary-iters", se.boundary_iters, "Iterations per boundary architecture");
  c_se->add_option("--proxy-iters", se.proxy_iters, "Iterations per proxy training");
  c_se->add_option("--proxy-downsample", se.proxy_downsample, "Downsample factor of the proxy split");
  c_se->add_option("--rounds", se.rounds, "Search rounds per target");
  c_se->add_option("--samples", se.samples, "Candidates per round");
  c_se->add_option("--elite", se.elite, "Elite fraction");
  c_se->add_flag("--strict", se.strict, "Require strictly increasing stage widths");
  c_se->add_flag("--no-retrain", se.no_retrain, "Skip retraining the emitted architectures");
  c_se->add_option("--retrain-policy", se.retrain_policy, "inverse | proportional | fixed");
  c_se->add_option("--retrain-baseline", se.retrain_baseline, "Baseline iterations for retraining");
  c_se->add_option("--retrain-floor", se.retrain_floor, "Minimum retraining iterations");
  c_se->add_option("--alpha", se.coeffs.alpha, "U exponent on SSIM");
  c_se->add_option("--beta", se.coeffs.beta, "U exponent on parameters");
  c_se->add_option("--gamma", se.coeffs.gamma, "U exponent on FLOPs");

  BenchArgs be;
  auto* c_be = app.add_subcommand("bench", "Render throughput and speedup over the baseline");
  add_common(c_be, be.common);
  c_be->add_option("--arch", be.archs, "Descriptor JSON, 'baseline' or a reference row name (repeatable)");
  c_be->add_flag("--table", be.table, "Benchmark every reference architecture");
  c_be->add_option("--width", be.width, "Frame width")->check(CLI::PositiveNumber);
  c_be->add_option("--height", be.height, "Frame height")->check(CLI::PositiveNumber);
  c_be->add_option("--reps", be.reps, "Timed repetitions after one warmup")->check(CLI::PositiveNumber);
  c_be->add_option("--samples-coarse", be.samples_coarse, "Coarse samples per ray");
  c_be->add_option("--samples-fine", be.samples_fine, "Fine samples per ray");
  c_be->add_option("--csv", be.csv, "Write the table to this file");

  ReportArgs re;
  auto* c_re = app.add_subcommand("report", "Efficiency-ratio vs quality table and scatter plot");
  add_common(c_re, re.common);
  c_re->add_option("inputs", re.inputs, "Metric CSV files")->required();
  c_re->add_option("--out", re.out, "Output CSV (default: stdout)");
  c_re->add_option("--svg", re.svg, "Scatter plot output");
  c_re->add_option("--baseline-flops", re.baseline_flops_G, "Baseline GFLOPs (default: cost model)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (c_sg->parsed()) return cmd_scene_gen(sg, *c_sg);
    if (c_tr->parsed()) return cmd_train(tr, *c_tr);
    if (c_ev->parsed()) return cmd_eval(ev, *c_ev);
    if (c_co->parsed()) return cmd_cost(co, *c_co);
    if (c_se->parsed()) return cmd_search(se, *c_se);
    if (c_be->parsed()) return cmd_bench(be, *c_be);
    if (c_re->parsed()) return cmd_report(re, *c_re);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

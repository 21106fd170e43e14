#include "nasnerf/cost.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <json.hpp>
#include <numeric>

#include "nasnerf/error.hpp"
#include "nasnerf/field.hpp"

namespace nasnerf {

std::vector<LayerShape> field_layer_shapes(const FieldCellConfig& cell, int pos_enc_L, int dir_enc_L,
                                           int head_width) {
  cell.validate();
  const std::uint64_t e = PositionalEncoding{pos_enc_L, true}.output_dim(3);
  const std::uint64_t ed = PositionalEncoding{dir_enc_L, true}.output_dim(3);
  const auto [d1, d2, d3] = cell.depths;
  const std::uint64_t c1 = cell.channels[0], c2 = cell.channels[1], c3 = cell.channels[2];
  const std::uint64_t h = head_width;
  std::vector<LayerShape> s;
  std::uint64_t in = e;
  for (int i = 0; i < d1; ++i) {
    const std::uint64_t out = i + 1 == d1 ? c2 : c1;
    s.push_back({in, out});
    in = out;
  }
  for (int i = 0; i < d2; ++i) {
    s.push_back({in + e, c3});
    in = c3;
  }
  for (int i = 0; i < d3; ++i) s.push_back({c3, c3});
  s.push_back({c3, 1});
  s.push_back({c3 + ed, h});
  s.push_back({h, h});
  s.push_back({h, 3});
  return s;
}

namespace {

std::uint64_t layer_sum(const std::vector<LayerShape>& s) {
  std::uint64_t n = 0;
  for (const auto& l : s) n += l.in * l.out + l.out;
  return n;
}

}  // namespace

std::uint64_t count_params(const ArchitectureDescriptor& d) {
  d.validate();
  return layer_sum(field_layer_shapes(d.coarse, d.pos_enc_L, d.dir_enc_L, d.head_width)) +
         layer_sum(field_layer_shapes(d.fine, d.pos_enc_L, d.dir_enc_L, d.head_width));
}

std::uint64_t count_params_enumerated(const ArchitectureDescriptor& d) {
  NerfModel<float> m = build_model<float>(d, 0);
  std::uint64_t n = 0;
  for (const auto& span : parameter_spans(m)) n += span.size();
  return n;
}

std::string Workload::tag() const {
  return "rays=" + std::to_string(rays) + ",nc=" + std::to_string(samples_coarse) +
         ",nf=" + std::to_string(samples_fine) + ",flops_per_mac=" + std::to_string(flops_per_mac) +
         ",overhead=" + std::to_string(per_query_overhead);
}

std::uint64_t query_cost(const FieldCellConfig& cell, int pos_enc_L, int dir_enc_L, int head_width,
                         const Workload& w) {
  return layer_sum(field_layer_shapes(cell, pos_enc_L, dir_enc_L, head_width)) + w.per_query_overhead;
}

std::uint64_t estimate_flops(const ArchitectureDescriptor& d, const Workload& w) {
  d.validate();
  if (w.rays == 0 || w.samples_coarse == 0 || w.flops_per_mac == 0) throw ConfigError("workload: zero rays or samples");
  const std::uint64_t qc = query_cost(d.coarse, d.pos_enc_L, d.dir_enc_L, d.head_width, w);
  const std::uint64_t qf = query_cost(d.fine, d.pos_enc_L, d.dir_enc_L, d.head_width, w);
  return w.flops_per_mac * w.rays * (w.samples_coarse * qc + (w.samples_coarse + w.samples_fine) * qf);
}

EfficiencyRatio efficiency_ratio(double baseline_value, double generated_value, std::string metric) {
  if (!(baseline_value > 0.0) || !(generated_value > 0.0)) {
    throw ConfigError("efficiency_ratio: both values must be positive");
  }
  return {std::move(metric), baseline_value / generated_value};
}

CostReport cost_report(const ArchitectureDescriptor& d, const Workload& w) {
  CostReport r;
  r.workload = w;
  r.params = count_params(d);
  r.params_M = r.params / 1e6;
  r.flops = estimate_flops(d, w);
  r.flops_G = r.flops / 1e9;
  const ArchitectureDescriptor base = baseline_descriptor();
  r.er_params = efficiency_ratio(static_cast<double>(count_params(base)), static_cast<double>(r.params)).value;
  r.er_flops = efficiency_ratio(static_cast<double>(estimate_flops(base, w)), static_cast<double>(r.flops)).value;
  return r;
}

std::string to_json(const CostReport& r) {
  nlohmann::ordered_json j;
  j["params"] = r.params;
  j["params_M"] = r.params_M;
  j["flops"] = r.flops;
  j["flops_G"] = r.flops_G;
  j["er_params"] = r.er_params;
  j["er_flops"] = r.er_flops;
  j["workload"] = r.workload.tag();
  return j.dump(2);
}

FpsResult benchmark_fps(const ArchitectureDescriptor& d, const BenchmarkSettings& s) {
  if (s.repetitions < 1) throw ConfigError("benchmark: repetitions must be >= 1");
  const NerfModel<float> model = build_model<float>(d, s.seed);
  Camera cam;
  cam.width = s.width;
  cam.height = s.height;
  cam.pose(2, 3) = 4.0;
  using clock = std::chrono::steady_clock;
  FpsResult r;
  r.threads = std::max(1, s.threads);
  render_image(model, cam, s.render, s.seed, r.threads);  // warmup
  for (int i = 0; i < s.repetitions; ++i) {
    const auto t0 = clock::now();
    render_image(model, cam, s.render, s.seed, r.threads);
    r.seconds.push_back(std::chrono::duration<double>(clock::now() - t0).count());
  }
  std::vector<double> sorted = r.seconds;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  r.median_seconds = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  r.fps = 1.0 / r.median_seconds;
  return r;
}

namespace {

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ShapeError("spearman: need two equal-length series of size >= 2");
  const auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

namespace {

ArchitectureDescriptor arch(std::array<int, 3> cd, std::array<int, 3> cc, std::array<int, 3> fd,
                            std::array<int, 3> fc) {
  ArchitectureDescriptor d;
  d.coarse = {cd, cc};
  d.fine = {fd, fc};
  return d;
}

}  // namespace

const std::vector<ReferenceArchitecture>& reference_architectures() {
  static const std::vector<ReferenceArchitecture> table = {
      {"NeRF", baseline_descriptor(), 1.09, 1.0, 574.14, 1.0},
      {"Chair S", arch({2, 1, 1}, {9, 11, 12}, {3, 1, 2}, {200, 207, 214}), 0.32, 3.46, 237.57, 2.42},
      {"Chair XS", arch({2, 1, 1}, {12, 12, 12}, {3, 1, 2}, {53, 57, 61}), 0.08, 14.33, 48.56, 11.82},
      {"Chair XXS", arch({2, 1, 1}, {9, 11, 12}, {2, 1, 1}, {16, 18, 20}), 0.05, 21.92, 28.01, 20.49},
      {"Drums S", arch({2, 1, 1}, {9, 11, 12}, {3, 1, 2}, {200, 207, 214}), 0.32, 3.46, 237.57, 2.42},
      {"Drums XS", arch({2, 1, 1}, {20, 20, 20}, {3, 1, 2}, {53, 57, 61}), 0.08, 13.81, 49.29, 11.65},
      {"Drums XXS", arch({2, 1, 1}, {12, 12, 12}, {2, 1, 1}, {16, 18, 20}), 0.05, 21.82, 28.08, 20.45},
      {"Ficus S", arch({2, 1, 1}, {12, 12, 12}, {3, 1, 2}, {214, 214, 214}), 0.33, 3.32, 247.57, 2.32},
      {"Ficus XS", arch({2, 1, 1}, {9, 11, 12}, {2, 1, 1}, {167, 174, 180}), 0.18, 5.99, 132.33, 4.34},
      {"Ficus XXS", arch({2, 1, 1}, {9, 11, 12}, {2, 1, 1}, {33, 36, 39}), 0.06, 18.94, 34.17, 16.80},
      {"Hotdog S", arch({2, 1, 1}, {9, 11, 12}, {3, 1, 2}, {200, 207, 214}), 0.32, 3.46, 237.57, 2.42},
      {"Hotdog XS", arch({2, 1, 1}, {12, 12, 12}, {3, 1, 2}, {51, 51, 51}), 0.07, 15.51, 43.98, 13.05},
      {"Hotdog XXS", arch({2, 1, 1}, {12, 12, 12}, {2, 1, 1}, {9, 11, 12}), 0.05, 23.05, 25.98, 22.10},
      {"Lego S", arch({2, 1, 1}, {100, 104, 109}, {3, 1, 2}, {214, 214, 214}), 0.39, 2.83, 262.61, 2.19},
      {"Lego XS", arch({2, 1, 1}, {12, 12, 12}, {4, 1, 3}, {64, 64, 64}), 0.09, 12.19, 58.98, 9.73},
      {"Lego XXS", arch({2, 1, 1}, {16, 18, 20}, {2, 1, 1}, {20, 20, 20}), 0.05, 20.64, 29.03, 19.78},
      {"Materials S", arch({2, 1, 1}, {16, 18, 20}, {2, 1, 1}, {180, 180, 180}), 0.19, 5.74, 137.17, 4.19},
      {"Materials XS", arch({2, 1, 1}, {12, 12, 12}, {3, 1, 2}, {51, 51, 51}), 0.07, 15.51, 43.98, 13.05},
      {"Materials XXS", arch({2, 1, 1}, {9, 11, 12}, {2, 1, 1}, {16, 18, 20}), 0.05, 21.92, 28.01, 20.49},
      {"Mic S", arch({4, 1, 3}, {56, 60, 64}, {2, 1, 1}, {180, 180, 180}), 0.23, 4.83, 146.53, 3.92},
      {"Mic XS", arch({2, 1, 1}, {9, 11, 12}, {2, 1, 1}, {33, 36, 39}), 0.06, 18.94, 34.17, 16.80},
      {"Mic XXS", arch({2, 1, 1}, {12, 12, 12}, {2, 1, 1}, {16, 18, 20}), 0.05, 21.82, 28.08, 20.45},
      {"Ship S", arch({2, 1, 1}, {9, 11, 12}, {3, 1, 2}, {200, 207, 214}), 0.32, 3.46, 237.57, 2.42},
      {"Ship XS", arch({2, 1, 1}, {12, 12, 12}, {2, 1, 1}, {33, 36, 39}), 0.06, 18.86, 34.23, 16.77},
      {"Ship XXS", arch({2, 1, 1}, {9, 11, 12}, {2, 1, 1}, {12, 12, 12}), 0.05, 23.05, 26.11, 21.99},
  };
  return table;
}

}  // namespace nasnerf

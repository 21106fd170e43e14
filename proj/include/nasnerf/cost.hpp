#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nasnerf/descriptor.hpp"
#include "nasnerf/render.hpp"

namespace nasnerf {

struct LayerShape {
  std::uint64_t in = 0;
  std::uint64_t out = 0;
};

// Every linear layer of one field (trunk, density head, radiance head) in
// build order, derived from the cell definition without building anything.
std::vector<LayerShape> field_layer_shapes(const FieldCellConfig& cell, int pos_enc_L, int dir_enc_L, int head_width);

// Closed form: sum over both fields of out*in + out.
std::uint64_t count_params(const ArchitectureDescriptor& d);
// Builds the model and counts its scalars.
std::uint64_t count_params_enumerated(const ArchitectureDescriptor& d);

// FLOPs workload. The per-query cost is sum(in*out + out) + per_query_overhead
// multiply-accumulates; the coarse field sees samples_coarse queries per ray
// and the fine field samples_coarse + samples_fine. flops_per_mac scales the
// whole total, so ratios do not depend on it.
struct Workload {
  std::uint64_t rays = 4096;
  std::uint64_t samples_coarse = 64;
  std::uint64_t samples_fine = 128;
  std::uint64_t flops_per_mac = 1;
  std::uint64_t per_query_overhead = 979;

  std::string tag() const;
};

std::uint64_t query_cost(const FieldCellConfig& cell, int pos_enc_L, int dir_enc_L, int head_width,
                         const Workload& w);
std::uint64_t estimate_flops(const ArchitectureDescriptor& d, const Workload& w = {});

struct EfficiencyRatio {
  std::string metric;  // params | flops | fps
  double value = 1.0;
};

// baseline / generated. Throws ConfigError unless both are positive.
EfficiencyRatio efficiency_ratio(double baseline_value, double generated_value, std::string metric = "params");

struct CostReport {
  std::uint64_t params = 0;
  double params_M = 0.0;
  std::uint64_t flops = 0;
  double flops_G = 0.0;
  double er_params = 1.0;
  double er_flops = 1.0;
  Workload workload;
};

// Ratios are taken against baseline_descriptor() under the same workload.
CostReport cost_report(const ArchitectureDescriptor& d, const Workload& w = {});
std::string to_json(const CostReport& r);

struct BenchmarkSettings {
  int width = 16;
  int height = 16;
  RenderSettings render;
  int repetitions = 3;
  int threads = 1;
  std::uint64_t seed = 0;
};

struct FpsResult {
  double fps = 0.0;
  double median_seconds = 0.0;
  std::vector<double> seconds;
  int threads = 1;
};

// Median wall clock of full-frame renders after one warmup frame.
FpsResult benchmark_fps(const ArchitectureDescriptor& d, const BenchmarkSettings& settings);

// Spearman rank correlation with average ranks for ties.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

// Architectures from the published per-scene table, with the reported
// parameter (M), FLOPs (G) and ratio columns.
struct ReferenceArchitecture {
  std::string name;
  ArchitectureDescriptor descriptor;
  double params_M = 0.0;
  double er_params = 0.0;
  double flops_G = 0.0;
  double er_flops = 0.0;
};

// Baseline first, then the 24 generated rows.
const std::vector<ReferenceArchitecture>& reference_architectures();

}  // namespace nasnerf

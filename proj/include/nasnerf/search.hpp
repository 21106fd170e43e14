#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nasnerf/cost.hpp"
#include "nasnerf/data.hpp"
#include "nasnerf/descriptor.hpp"
#include "nasnerf/train.hpp"

namespace nasnerf {

// Allowed values per factor of one field. D2 is always 1.
struct FieldSpace {
  std::vector<int> d1;
  std::vector<int> d3;
  std::vector<int> c1;
  std::vector<int> c2;
  std::vector<int> c3;
};

inline constexpr std::size_t kSearchFactors = 10;  // coarse d1 d3 c1 c2 c3, fine d1 d3 c1 c2 c3
using FactorIndex = std::array<std::size_t, kSearchFactors>;

struct SearchSpace {
  FieldSpace coarse;
  FieldSpace fine;
  int pos_enc_L = 10;
  int dir_enc_L = 4;
  int head_width = 128;

  void validate() const;
  std::array<std::size_t, kSearchFactors> factor_sizes() const;
  double size() const;  // number of points, structurally feasible or not
  ArchitectureDescriptor at(const FactorIndex& index) const;
  std::optional<FactorIndex> index_of(const ArchitectureDescriptor& d) const;
  // Smallest / largest value of every factor.
  ArchitectureDescriptor minimum() const;
  ArchitectureDescriptor maximum() const;
};

// D1, D3 in 1..8 and every channel width in 8..256, for both fields.
SearchSpace full_search_space();
// D1, D3 in 1..4 and widths {8, 16, 32, 64}: trainable on one CPU core.
SearchSpace desk_search_space();

struct ConstraintSet {
  bool non_decreasing_widths = true;  // C1 <= C2 <= C3 in each field
  bool strict_increase = false;       // C1 < C2 < C3 instead
  std::optional<std::uint64_t> max_params;
  std::optional<std::uint64_t> max_flops;
  double ssim_target = 0.0;
};

struct Feasibility {
  bool feasible = true;
  std::string reason = "ok";
};

// Structural and budget checks only.
Feasibility check_structure(const ArchitectureDescriptor& d, const ConstraintSet& c, const Workload& w = {});
// Adds the quality target when an SSIM is supplied.
Feasibility check_constraints(const ArchitectureDescriptor& d, std::optional<double> ssim, const ConstraintSet& c,
                              const Workload& w = {});

struct TargetLadder {
  double ssim_min = 0.0;
  double ssim_max = 0.0;
  std::array<double, 3> targets{};  // XXS, XS, S
};

inline constexpr std::array<double, 3> kLadderFractions{0.1, 0.5, 0.9};
inline constexpr std::array<const char*, 3> kSizeNames{"xxs", "xs", "s"};

// T_k = min + f_k (max - min). Throws ConfigError if min > max or either
// value lies outside [0, 1].
TargetLadder compute_targets(double ssim_min, double ssim_max);

struct UCoeffs {
  double alpha = 2.0;
  double beta = 0.5;
  double gamma = 0.5;
};

// 20 log10((100 ssim)^alpha / (params_M^beta flops_G^gamma)). Throws
// ConfigError on nonpositive input.
double universal_metric(double ssim, double params_M, double flops_G, const UCoeffs& coeffs = {});

struct Candidate {
  ArchitectureDescriptor descriptor;
  CostReport cost;
  double proxy_ssim = std::numeric_limits<double>::quiet_NaN();  // NaN: not trained
  std::optional<double> u_score;                                 // feasible candidates only
  bool feasible = false;
  std::string reason;
  int round = 0;
  int index = 0;
};

struct SearchBudget {
  int rounds = 8;
  int samples_per_round = 24;
  double elite_fraction = 0.25;
  double learning_rate = 0.7;  // weight of the elite frequencies in each refit
  int max_draw_attempts = 256;  // per sample, before falling back to a scan
  void validate() const;
};

// Independent categorical distribution per factor.
struct GeneratorState {
  std::vector<std::vector<double>> probs;
  double floor = 1e-3;
  int round = 0;

  static GeneratorState uniform(const SearchSpace& space);
  FactorIndex sample(Rng& rng) const;
  double probability(const FactorIndex& index) const;
  // Mixes the elite frequencies into the current distribution and
  // re-imposes the floor: p = floor + (1 - n floor) q.
  void refit(const std::vector<FactorIndex>& elites, double learning_rate);
};

// Proxy SSIM of a descriptor; the seed identifies the evaluation stream.
using Evaluator = std::function<double(const ArchitectureDescriptor&, std::uint64_t seed)>;

struct SearchResult {
  double target = 0.0;
  bool feasible = false;
  std::string message;
  std::optional<Candidate> best;
  std::vector<Candidate> log;
  std::uint64_t seed = 0;
  int rounds_run = 0;
};

// Proxy SSIM per descriptor hash, shared across searches on one scene.
using ProxyCache = std::map<std::uint64_t, double>;

// Generator-inquisitor loop. Each round draws samples_per_round structurally
// feasible descriptors not yet seen in this search (rejected draws are logged
// without training), scores them, then refits the generator on the elite
// fraction by U of all target-satisfying candidates so far (highest proxy
// SSIM when none satisfies the target). Never throws for infeasibility.
SearchResult run_search(const SearchSpace& space, const ConstraintSet& constraints, const SearchBudget& budget,
                        const Evaluator& evaluator, std::uint64_t seed, const Workload& workload = {},
                        const UCoeffs& coeffs = {}, ProxyCache* cache = nullptr);

// Recomputes feasibility, U and the winner from a candidate log.
std::optional<Candidate> replay(const std::vector<Candidate>& log, const ConstraintSet& constraints,
                                const Workload& workload = {}, const UCoeffs& coeffs = {});

// Exhaustive optimum of U over every structurally feasible point.
std::optional<Candidate> brute_force_optimum(const SearchSpace& space, const ConstraintSet& constraints,
                                             const Evaluator& evaluator, const Workload& workload = {},
                                             const UCoeffs& coeffs = {});

enum class IterationPolicy { kInverse, kProportional, kFixed };
std::string to_string(IterationPolicy p);
IterationPolicy parse_iteration_policy(const std::string& s);

// inverse: baseline / er, proportional: baseline * er, fixed: baseline;
// rounded and clamped to [floor, baseline_iters].
std::uint64_t scaled_iterations(double er_params, IterationPolicy policy, std::uint64_t baseline_iters = 200000,
                                std::uint64_t floor = 16000);

struct BoundaryResult {
  ArchitectureDescriptor a_min;
  ArchitectureDescriptor a_max;
  double ssim_min = 0.0;
  double ssim_max = 0.0;
  double er_params_min = 0.0;
  std::uint64_t iterations = 0;
};

// Trains the smallest and largest architectures of the space and scores them
// on the eval split.
BoundaryResult train_boundary(const SceneDataset& scene, const SearchSpace& space, const TrainConfig& config);

struct SceneSearchConfig {
  SearchSpace space = desk_search_space();
  ConstraintSet constraints;
  SearchBudget budget{4, 6, 0.25, 0.7, 256};
  UCoeffs coeffs;
  Workload workload;
  TrainConfig boundary_train;  // iterations default 2000
  TrainConfig proxy_train;     // iterations default 1000
  int proxy_downsample = 2;    // boundary and proxy runs use this split
  bool retrain = true;
  TrainConfig retrain_train;
  IterationPolicy retrain_policy = IterationPolicy::kInverse;
  std::uint64_t retrain_baseline_iters = 4000;
  std::uint64_t retrain_floor = 2000;
  std::uint64_t seed = 0;

  SceneSearchConfig();
};

struct SizedResult {
  std::string name;  // xxs | xs | s
  double target = 0.0;
  SearchResult search;
  bool reassigned = false;  // took a larger target's result to keep sizes ordered
  std::uint64_t retrain_iterations = 0;
  double retrain_ssim = std::numeric_limits<double>::quiet_NaN();
  double retrain_psnr = std::numeric_limits<double>::quiet_NaN();
};

struct SceneSearchResult {
  std::string scene;
  BoundaryResult boundary;
  TargetLadder ladder;
  std::array<SizedResult, 3> sizes;
};

// Boundary training, ladder, one search per target, size naming and
// optional retraining. Throws ConfigError on a degenerate ladder
// (ssim_min >= ssim_max).
SceneSearchResult search_scene(const SceneDataset& scene, const SceneSearchConfig& config,
                               const std::function<void(const std::string&)>& progress = {});

std::string to_json(const Candidate& c);
std::string to_json(const SearchResult& r);
std::string to_json(const SceneSearchResult& r, const std::string& run_config_json = "{}");

}  // namespace nasnerf

#include "nasnerf/search.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <set>
#include <sstream>

#include "nasnerf/error.hpp"
#include "nasnerf/rng.hpp"

namespace nasnerf {

using json = nlohmann::ordered_json;

namespace {

std::array<const std::vector<int>*, kSearchFactors> factor_lists(const SearchSpace& s) {
  return {&s.coarse.d1, &s.coarse.d3, &s.coarse.c1, &s.coarse.c2, &s.coarse.c3,
          &s.fine.d1,   &s.fine.d3,   &s.fine.c1,   &s.fine.c2,   &s.fine.c3};
}

std::vector<int> range(int lo, int hi) {
  std::vector<int> v;
  for (int i = lo; i <= hi; ++i) v.push_back(i);
  return v;
}

// Advances an odometer over the factor sizes; false after the last point.
bool next_index(FactorIndex& idx, const std::array<std::size_t, kSearchFactors>& sizes) {
  for (std::size_t f = kSearchFactors; f-- > 0;) {
    if (++idx[f] < sizes[f]) return true;
    idx[f] = 0;
  }
  return false;
}

// Ranking used everywhere a single winner is picked: higher U, then fewer
// parameters, fewer FLOPs, then descriptor order.
bool better(const Candidate& a, const Candidate& b) {
  if (*a.u_score != *b.u_score) return *a.u_score > *b.u_score;
  if (a.cost.params != b.cost.params) return a.cost.params < b.cost.params;
  if (a.cost.flops != b.cost.flops) return a.cost.flops < b.cost.flops;
  return a.descriptor < b.descriptor;
}

void score(Candidate& c, const ConstraintSet& constraints, const Workload& w, const UCoeffs& coeffs) {
  c.u_score.reset();
  if (std::isnan(c.proxy_ssim)) {
    const Feasibility st = check_structure(c.descriptor, constraints, w);
    c.feasible = false;
    c.reason = st.feasible ? "evaluation failed" : st.reason;
    return;
  }
  const Feasibility f = check_constraints(c.descriptor, c.proxy_ssim, constraints, w);
  c.feasible = f.feasible;
  c.reason = f.reason;
  if (c.feasible && !(c.proxy_ssim > 0.0)) {
    c.feasible = false;
    c.reason = "nonpositive ssim";
  }
  if (c.feasible) c.u_score = universal_metric(c.proxy_ssim, c.cost.params_M, c.cost.flops_G, coeffs);
}

constexpr double kScanLimit = 2e6;

}  // namespace

void SearchSpace::validate() const {
  for (const auto* list : factor_lists(*this)) {
    if (list->empty()) throw ConfigError("search space: every factor needs at least one value");
    for (int v : *list) {
      if (v < 1) throw ConfigError("search space: values must be >= 1");
    }
    if (list->size() >= 1000) throw ConfigError("search space: at most 999 values per factor");
  }
}

std::array<std::size_t, kSearchFactors> SearchSpace::factor_sizes() const {
  std::array<std::size_t, kSearchFactors> s{};
  const auto lists = factor_lists(*this);
  for (std::size_t f = 0; f < kSearchFactors; ++f) s[f] = lists[f]->size();
  return s;
}

double SearchSpace::size() const {
  double n = 1.0;
  for (auto s : factor_sizes()) n *= static_cast<double>(s);
  return n;
}

ArchitectureDescriptor SearchSpace::at(const FactorIndex& i) const {
  const auto l = factor_lists(*this);
  ArchitectureDescriptor d;
  d.coarse = {{(*l[0])[i[0]], 1, (*l[1])[i[1]]}, {(*l[2])[i[2]], (*l[3])[i[3]], (*l[4])[i[4]]}};
  d.fine = {{(*l[5])[i[5]], 1, (*l[6])[i[6]]}, {(*l[7])[i[7]], (*l[8])[i[8]], (*l[9])[i[9]]}};
  d.pos_enc_L = pos_enc_L;
  d.dir_enc_L = dir_enc_L;
  d.head_width = head_width;
  return d;
}

std::optional<FactorIndex> SearchSpace::index_of(const ArchitectureDescriptor& d) const {
  if (d.pos_enc_L != pos_enc_L || d.dir_enc_L != dir_enc_L || d.head_width != head_width) return std::nullopt;
  if (d.coarse.depths[1] != 1 || d.fine.depths[1] != 1) return std::nullopt;
  const std::array<int, kSearchFactors> values{d.coarse.depths[0], d.coarse.depths[2], d.coarse.channels[0],
                                               d.coarse.channels[1], d.coarse.channels[2], d.fine.depths[0],
                                               d.fine.depths[2], d.fine.channels[0], d.fine.channels[1],
                                               d.fine.channels[2]};
  const auto l = factor_lists(*this);
  FactorIndex idx{};
  for (std::size_t f = 0; f < kSearchFactors; ++f) {
    auto it = std::find(l[f]->begin(), l[f]->end(), values[f]);
    if (it == l[f]->end()) return std::nullopt;
    idx[f] = static_cast<std::size_t>(it - l[f]->begin());
  }
  return idx;
}

ArchitectureDescriptor SearchSpace::minimum() const {
  FactorIndex idx{};
  const auto l = factor_lists(*this);
  for (std::size_t f = 0; f < kSearchFactors; ++f) {
    idx[f] = static_cast<std::size_t>(std::min_element(l[f]->begin(), l[f]->end()) - l[f]->begin());
  }
  return at(idx);
}

ArchitectureDescriptor SearchSpace::maximum() const {
  FactorIndex idx{};
  const auto l = factor_lists(*this);
  for (std::size_t f = 0; f < kSearchFactors; ++f) {
    idx[f] = static_cast<std::size_t>(std::max_element(l[f]->begin(), l[f]->end()) - l[f]->begin());
  }
  return at(idx);
}

SearchSpace full_search_space() {
  FieldSpace f{range(1, 8), range(1, 8), range(8, 256), range(8, 256), range(8, 256)};
  return {f, f};
}

SearchSpace desk_search_space() {
  FieldSpace f{range(1, 4), range(1, 4), {8, 16, 32, 64}, {8, 16, 32, 64}, {8, 16, 32, 64}};
  return {f, f};
}

Feasibility check_structure(const ArchitectureDescriptor& d, const ConstraintSet& c, const Workload& w) {
  try {
    d.validate();
  } catch (const ConfigError& e) {
    return {false, std::string("invalid descriptor: ") + e.what()};
  }
  for (const FieldCellConfig* cell : {&d.coarse, &d.fine}) {
    const auto& ch = cell->channels;
    if (c.strict_increase && !(ch[0] < ch[1] && ch[1] < ch[2])) return {false, "widths not strictly increasing"};
    if (c.non_decreasing_widths && !(ch[0] <= ch[1] && ch[1] <= ch[2])) return {false, "widths decrease"};
  }
  if (c.max_params && count_params(d) > *c.max_params) return {false, "params over budget"};
  if (c.max_flops && estimate_flops(d, w) > *c.max_flops) return {false, "flops over budget"};
  return {};
}

Feasibility check_constraints(const ArchitectureDescriptor& d, std::optional<double> ssim, const ConstraintSet& c,
                              const Workload& w) {
  Feasibility f = check_structure(d, c, w);
  if (!f.feasible || !ssim) return f;
  if (!(*ssim >= c.ssim_target)) return {false, "below target"};
  return f;
}

TargetLadder compute_targets(double ssim_min, double ssim_max) {
  if (!(ssim_min >= 0.0 && ssim_min <= 1.0 && ssim_max >= 0.0 && ssim_max <= 1.0)) {
    throw ConfigError("compute_targets: SSIM bounds must lie in [0, 1]");
  }
  if (ssim_min > ssim_max) throw ConfigError("compute_targets: ssim_min exceeds ssim_max (degenerate scene signal)");
  TargetLadder l;
  l.ssim_min = ssim_min;
  l.ssim_max = ssim_max;
  for (std::size_t k = 0; k < 3; ++k) l.targets[k] = ssim_min + kLadderFractions[k] * (ssim_max - ssim_min);
  return l;
}

double universal_metric(double ssim, double params_M, double flops_G, const UCoeffs& c) {
  if (!(ssim > 0.0 && params_M > 0.0 && flops_G > 0.0)) throw ConfigError("universal_metric: inputs must be positive");
  return 20.0 * (c.alpha * std::log10(100.0 * ssim) - c.beta * std::log10(params_M) - c.gamma * std::log10(flops_G));
}

void SearchBudget::validate() const {
  if (rounds < 1 || samples_per_round < 1) throw ConfigError("search budget: rounds and samples must be >= 1");
  if (!(elite_fraction > 0.0 && elite_fraction <= 1.0)) throw ConfigError("search budget: elite fraction in (0, 1]");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw ConfigError("search budget: learning rate in (0, 1]");
  if (max_draw_attempts < 1) throw ConfigError("search budget: max_draw_attempts must be >= 1");
}

GeneratorState GeneratorState::uniform(const SearchSpace& space) {
  space.validate();
  GeneratorState g;
  for (auto n : space.factor_sizes()) g.probs.emplace_back(n, 1.0 / static_cast<double>(n));
  return g;
}

FactorIndex GeneratorState::sample(Rng& rng) const {
  FactorIndex idx{};
  for (std::size_t f = 0; f < kSearchFactors; ++f) {
    const double u = rng.uniform();
    double acc = 0.0;
    idx[f] = probs[f].size() - 1;
    for (std::size_t k = 0; k < probs[f].size(); ++k) {
      acc += probs[f][k];
      if (u < acc) {
        idx[f] = k;
        break;
      }
    }
  }
  return idx;
}

double GeneratorState::probability(const FactorIndex& idx) const {
  double p = 1.0;
  for (std::size_t f = 0; f < kSearchFactors; ++f) p *= probs[f][idx[f]];
  return p;
}

void GeneratorState::refit(const std::vector<FactorIndex>& elites, double learning_rate) {
  if (elites.empty()) return;
  for (std::size_t f = 0; f < kSearchFactors; ++f) {
    const std::size_t n = probs[f].size();
    std::vector<double> freq(n, 0.0);
    for (const auto& e : elites) freq[e[f]] += 1.0 / static_cast<double>(elites.size());
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      freq[k] = learning_rate * freq[k] + (1.0 - learning_rate) * probs[f][k];
      sum += freq[k];
    }
    const double scale = 1.0 - static_cast<double>(n) * floor;
    for (std::size_t k = 0; k < n; ++k) probs[f][k] = floor + scale * freq[k] / sum;
  }
  ++round;
}

SearchResult run_search(const SearchSpace& space, const ConstraintSet& constraints, const SearchBudget& budget,
                        const Evaluator& evaluator, std::uint64_t seed, const Workload& workload,
                        const UCoeffs& coeffs, ProxyCache* cache) {
  budget.validate();
  GeneratorState gen = GeneratorState::uniform(space);
  const auto sizes = space.factor_sizes();
  SearchResult res;
  res.target = constraints.ssim_target;
  res.seed = seed;
  std::set<ArchitectureDescriptor> seen;
  std::vector<std::size_t> scored;  // log positions of trained candidates

  auto reject = [&](const ArchitectureDescriptor& d, const Feasibility& st, int round, int& index) {
    Candidate c;
    c.descriptor = d;
    c.cost = cost_report(d, workload);
    c.feasible = false;
    c.reason = st.reason;
    c.round = round;
    c.index = index++;
    res.log.push_back(std::move(c));
  };

  // Highest-probability unseen feasible point; nullopt when none is left.
  auto scan = [&]() -> std::optional<FactorIndex> {
    if (space.size() > kScanLimit) return std::nullopt;
    std::optional<FactorIndex> best;
    double best_p = -1.0;
    FactorIndex idx{};
    do {
      const double p = gen.probability(idx);
      if (p <= best_p) continue;
      const ArchitectureDescriptor d = space.at(idx);
      if (seen.count(d) || !check_structure(d, constraints, workload).feasible) continue;
      best = idx;
      best_p = p;
    } while (next_index(idx, sizes));
    return best;
  };

  bool exhausted = false;
  for (int round = 0; round < budget.rounds && !exhausted; ++round) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(round)}));
    int index = 0;
    for (int k = 0; k < budget.samples_per_round; ++k) {
      std::optional<ArchitectureDescriptor> pick;
      for (int attempt = 0; attempt < budget.max_draw_attempts && !pick; ++attempt) {
        const ArchitectureDescriptor d = space.at(gen.sample(rng));
        if (!seen.insert(d).second) continue;
        const Feasibility st = check_structure(d, constraints, workload);
        if (!st.feasible) {
          reject(d, st, round, index);
          continue;
        }
        pick = d;
      }
      if (!pick) {
        if (auto idx = scan()) {
          pick = space.at(*idx);
          seen.insert(*pick);
        }
      }
      if (!pick) {
        exhausted = true;
        break;
      }
      Candidate c;
      c.descriptor = *pick;
      c.cost = cost_report(*pick, workload);
      c.round = round;
      c.index = index++;
      const std::uint64_t h = descriptor_hash(*pick);
      if (cache && cache->count(h)) {
        c.proxy_ssim = cache->at(h);
      } else {
        c.proxy_ssim = evaluator(*pick, derive_seed(seed, {h}));
        if (cache) (*cache)[h] = c.proxy_ssim;
      }
      score(c, constraints, workload, coeffs);
      scored.push_back(res.log.size());
      res.log.push_back(std::move(c));
    }

    // Inquisitor: refit on elites over every trained candidate so far.
    std::vector<const Candidate*> pool;
    for (std::size_t i : scored) {
      if (res.log[i].feasible) pool.push_back(&res.log[i]);
    }
    if (!pool.empty()) {
      std::sort(pool.begin(), pool.end(), [](const Candidate* a, const Candidate* b) { return better(*a, *b); });
    } else {
      for (std::size_t i : scored) {
        if (!std::isnan(res.log[i].proxy_ssim)) pool.push_back(&res.log[i]);
      }
      std::sort(pool.begin(), pool.end(), [](const Candidate* a, const Candidate* b) {
        if (a->proxy_ssim != b->proxy_ssim) return a->proxy_ssim > b->proxy_ssim;
        return a->descriptor < b->descriptor;
      });
    }
    const auto n_elite = std::min<std::size_t>(
        pool.size(), std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(budget.elite_fraction * pool.size()))));
    std::vector<FactorIndex> elites;
    for (std::size_t i = 0; i < n_elite; ++i) elites.push_back(*space.index_of(pool[i]->descriptor));
    gen.refit(elites, budget.learning_rate);
    ++res.rounds_run;
  }

  res.best = replay(res.log, constraints, workload, coeffs);
  res.feasible = res.best.has_value();
  if (res.feasible) {
    res.message = "ok";
  } else {
    std::ostringstream os;
    os << "infeasible at target T=" << constraints.ssim_target;
    res.message = os.str();
  }
  return res;
}

std::optional<Candidate> replay(const std::vector<Candidate>& log, const ConstraintSet& constraints,
                                const Workload& workload, const UCoeffs& coeffs) {
  std::optional<Candidate> best;
  for (const Candidate& logged : log) {
    if (std::isnan(logged.proxy_ssim)) continue;
    Candidate c = logged;
    c.cost = cost_report(c.descriptor, workload);
    score(c, constraints, workload, coeffs);
    if (c.feasible && (!best || better(c, *best))) best = std::move(c);
  }
  return best;
}

std::optional<Candidate> brute_force_optimum(const SearchSpace& space, const ConstraintSet& constraints,
                                             const Evaluator& evaluator, const Workload& workload,
                                             const UCoeffs& coeffs) {
  space.validate();
  if (space.size() > kScanLimit) throw ConfigError("brute_force_optimum: space too large to enumerate");
  const auto sizes = space.factor_sizes();
  std::optional<Candidate> best;
  FactorIndex idx{};
  do {
    const ArchitectureDescriptor d = space.at(idx);
    if (!check_structure(d, constraints, workload).feasible) continue;
    Candidate c;
    c.descriptor = d;
    c.cost = cost_report(d, workload);
    c.proxy_ssim = evaluator(d, 0);
    score(c, constraints, workload, coeffs);
    if (c.feasible && (!best || better(c, *best))) best = std::move(c);
  } while (next_index(idx, sizes));
  return best;
}

std::string to_string(IterationPolicy p) {
  switch (p) {
    case IterationPolicy::kInverse:
      return "inverse";
    case IterationPolicy::kProportional:
      return "proportional";
    case IterationPolicy::kFixed:
      return "fixed";
  }
  return "inverse";
}

IterationPolicy parse_iteration_policy(const std::string& s) {
  if (s == "inverse") return IterationPolicy::kInverse;
  if (s == "proportional") return IterationPolicy::kProportional;
  if (s == "fixed") return IterationPolicy::kFixed;
  throw ConfigError("unknown iteration policy '" + s + "' (inverse | proportional | fixed)");
}

std::uint64_t scaled_iterations(double er, IterationPolicy policy, std::uint64_t baseline_iters, std::uint64_t floor) {
  if (!(er > 0.0)) throw ConfigError("scaled_iterations: efficiency ratio must be positive");
  if (floor > baseline_iters) throw ConfigError("scaled_iterations: floor exceeds baseline iterations");
  double it = static_cast<double>(baseline_iters);
  if (policy == IterationPolicy::kInverse) it /= er;
  if (policy == IterationPolicy::kProportional) it *= er;
  it = std::clamp(std::round(it), static_cast<double>(floor), static_cast<double>(baseline_iters));
  return static_cast<std::uint64_t>(it);
}

BoundaryResult train_boundary(const SceneDataset& scene, const SearchSpace& space, const TrainConfig& config) {
  if (scene.eval.empty()) throw ConfigError("train_boundary: scene has no eval frames");
  BoundaryResult b;
  b.a_min = space.minimum();
  b.a_max = space.maximum();
  b.er_params_min = cost_report(b.a_min).er_params;
  b.iterations = config.iterations;
  auto run = [&](const ArchitectureDescriptor& d, std::uint64_t k) {
    TrainConfig c = config;
    c.seed = derive_seed(config.seed, {k});
    try {
      return train(build_model<float>(d, c.seed), scene, c).final.report.mean_ssim;
    } catch (const NumericError& e) {
      throw NumericError("boundary architecture " + describe(d) + ": " + e.what());
    }
  };
  b.ssim_min = run(b.a_min, 0);
  b.ssim_max = run(b.a_max, 1);
  return b;
}

SceneSearchConfig::SceneSearchConfig() {
  boundary_train.iterations = 2000;
  boundary_train.log_every = 0;
  proxy_train.iterations = 1000;
  proxy_train.log_every = 0;
  retrain_train.log_every = 0;
}

SceneSearchResult search_scene(const SceneDataset& scene, const SceneSearchConfig& cfg,
                               const std::function<void(const std::string&)>& progress) {
  auto say = [&](const std::string& s) {
    if (progress) progress(s);
  };
  SceneSearchResult out;
  out.scene = scene.name;
  const SceneDataset proxy_ds = downsample(scene, cfg.proxy_downsample);

  TrainConfig bc = cfg.boundary_train;
  bc.seed = derive_seed(cfg.seed, {1});
  say("boundary training: " + std::to_string(bc.iterations) + " iterations each");
  out.boundary = train_boundary(proxy_ds, cfg.space, bc);
  say("boundary ssim: min " + std::to_string(out.boundary.ssim_min) + ", max " + std::to_string(out.boundary.ssim_max));
  if (!(out.boundary.ssim_min < out.boundary.ssim_max)) {
    throw ConfigError("degenerate ladder: ssim_min " + std::to_string(out.boundary.ssim_min) +
                      " is not below ssim_max " + std::to_string(out.boundary.ssim_max));
  }
  out.ladder = compute_targets(out.boundary.ssim_min, out.boundary.ssim_max);

  ProxyCache cache;
  const Evaluator proxy = [&](const ArchitectureDescriptor& d, std::uint64_t) {
    TrainConfig pc = cfg.proxy_train;
    pc.seed = derive_seed(cfg.seed, {3, descriptor_hash(d)});
    try {
      return train(build_model<float>(d, pc.seed), proxy_ds, pc).final.report.mean_ssim;
    } catch (const NumericError&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  };
  for (std::size_t k = 0; k < 3; ++k) {
    SizedResult& s = out.sizes[k];
    s.name = kSizeNames[k];
    s.target = out.ladder.targets[k];
    ConstraintSet cons = cfg.constraints;
    cons.ssim_target = s.target;
    say("search " + s.name + ": target " + std::to_string(s.target));
    s.search = run_search(cfg.space, cons, cfg.budget, proxy, derive_seed(cfg.seed, {2, k}), cfg.workload, cfg.coeffs,
                          &cache);
    say("search " + s.name + ": " + s.search.message +
        (s.search.best ? " " + describe(s.search.best->descriptor) : std::string()));
  }

  // A larger target's winner also meets every smaller target; use it when it
  // is smaller or when the smaller search found nothing.
  for (std::size_t k = 2; k-- > 0;) {
    SizedResult& lo = out.sizes[k];
    const SizedResult& hi = out.sizes[k + 1];
    if (!hi.search.best) continue;
    if (!lo.search.best || hi.search.best->cost.params < lo.search.best->cost.params) {
      Candidate c = *hi.search.best;
      ConstraintSet cons = cfg.constraints;
      cons.ssim_target = lo.target;
      score(c, cons, cfg.workload, cfg.coeffs);
      lo.search.best = c;
      lo.search.feasible = true;
      lo.search.message = "ok (taken from the " + hi.name + " search)";
      lo.reassigned = true;
    }
  }

  if (cfg.retrain) {
    std::map<std::pair<std::uint64_t, std::uint64_t>, std::pair<double, double>> done;
    for (SizedResult& s : out.sizes) {
      if (!s.search.best) continue;
      const ArchitectureDescriptor& d = s.search.best->descriptor;
      s.retrain_iterations = scaled_iterations(s.search.best->cost.er_params, cfg.retrain_policy,
                                               cfg.retrain_baseline_iters, cfg.retrain_floor);
      const auto key = std::pair{descriptor_hash(d), s.retrain_iterations};
      if (!done.count(key)) {
        TrainConfig rc = cfg.retrain_train;
        rc.iterations = s.retrain_iterations;
        rc.seed = derive_seed(cfg.seed, {4, key.first});
        say("retrain " + s.name + ": " + std::to_string(rc.iterations) + " iterations");
        const Evaluation ev = train(build_model<float>(d, rc.seed), scene, rc).final;
        done[key] = {ev.report.mean_ssim, ev.report.mean_psnr};
      }
      s.retrain_ssim = done[key].first;
      s.retrain_psnr = done[key].second;
    }
  }
  return out;
}

namespace {

json descriptor_json(const ArchitectureDescriptor& d) { return json::parse(to_canonical_json(d)); }

json candidate_json(const Candidate& c) {
  json j;
  j["descriptor"] = descriptor_json(c.descriptor);
  j["params"] = c.cost.params;
  j["flops"] = c.cost.flops;
  j["er_params"] = c.cost.er_params;
  j["er_flops"] = c.cost.er_flops;
  j["proxy_ssim"] = std::isnan(c.proxy_ssim) ? json(nullptr) : json(c.proxy_ssim);
  j["u_score"] = c.u_score ? json(*c.u_score) : json(nullptr);
  j["feasible"] = c.feasible;
  j["reason"] = c.reason;
  j["round"] = c.round;
  j["index"] = c.index;
  return j;
}

json search_json(const SearchResult& r) {
  json j;
  j["target"] = r.target;
  j["feasible"] = r.feasible;
  j["message"] = r.message;
  j["seed"] = r.seed;
  j["rounds_run"] = r.rounds_run;
  j["best"] = r.best ? candidate_json(*r.best) : json(nullptr);
  j["log"] = json::array();
  for (const Candidate& c : r.log) j["log"].push_back(candidate_json(c));
  return j;
}

}  // namespace

std::string to_json(const Candidate& c) { return candidate_json(c).dump(2); }
std::string to_json(const SearchResult& r) { return search_json(r).dump(2); }

std::string to_json(const SceneSearchResult& r, const std::string& run_config_json) {
  json j;
  j["run_config"] = json::parse(run_config_json);
  j["scene"] = r.scene;
  j["boundary"] = {{"a_min", descriptor_json(r.boundary.a_min)},
                   {"a_max", descriptor_json(r.boundary.a_max)},
                   {"er_params_min", r.boundary.er_params_min},
                   {"iterations", r.boundary.iterations},
                   {"ssim_min", r.boundary.ssim_min},
                   {"ssim_max", r.boundary.ssim_max}};
  j["ladder"] = {{"ssim_min", r.ladder.ssim_min},
                 {"ssim_max", r.ladder.ssim_max},
                 {"fractions", kLadderFractions},
                 {"targets", {{"xxs", r.ladder.targets[0]}, {"xs", r.ladder.targets[1]}, {"s", r.ladder.targets[2]}}}};
  j["sizes"] = json::array();
  for (const SizedResult& s : r.sizes) {
    json e;
    e["name"] = s.name;
    e["target"] = s.target;
    e["reassigned"] = s.reassigned;
    e["retrain"] = {{"iterations", s.retrain_iterations},
                    {"ssim", std::isnan(s.retrain_ssim) ? json(nullptr) : json(s.retrain_ssim)},
                    {"psnr", std::isnan(s.retrain_psnr) ? json(nullptr) : json(s.retrain_psnr)}};
    e["search"] = search_json(s.search);
    j["sizes"].push_back(e);
  }
  return j.dump(2) + "\n";
}

}  // namespace nasnerf

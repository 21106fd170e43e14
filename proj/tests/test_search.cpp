#include <doctest.h>

#include "nasnerf/error.hpp"
#include "nasnerf/search.hpp"
#include "oracles.hpp"

using namespace nasnerf;

namespace {

ArchitectureDescriptor with_coarse(std::array<int, 3> channels) {
  ArchitectureDescriptor d;
  d.coarse = {{2, 1, 1}, channels};
  d.fine = {{2, 1, 1}, {16, 18, 20}};
  return d;
}

}  // namespace

TEST_CASE("constraints: structure, budgets and target") {
  ConstraintSet c;
  CHECK(check_structure(with_coarse({9, 11, 12}), c).feasible);
  const auto dec = check_structure(with_coarse({12, 11, 9}), c);
  CHECK_FALSE(dec.feasible);
  CHECK(dec.reason == "widths decrease");
  c.strict_increase = true;
  CHECK_FALSE(check_structure(with_coarse({12, 12, 12}), c).feasible);
  c.strict_increase = false;
  c.ssim_target = 0.85;
  const auto low = check_constraints(with_coarse({9, 11, 12}), 0.84, c);
  CHECK_FALSE(low.feasible);
  CHECK(low.reason == "below target");
  CHECK(check_constraints(with_coarse({9, 11, 12}), 0.86, c).feasible);
  c.max_params = 1000;
  CHECK(check_structure(with_coarse({9, 11, 12}), c).reason == "params over budget");
}

TEST_CASE("ladder: ten, fifty and ninety percent") {
  auto l = compute_targets(0.8, 0.9);
  CHECK(l.targets[0] == doctest::Approx(0.81));
  CHECK(l.targets[1] == doctest::Approx(0.85));
  CHECK(l.targets[2] == doctest::Approx(0.89));
  l = compute_targets(0.757, 0.827);
  CHECK(l.targets[0] == doctest::Approx(0.764));
  CHECK(l.targets[1] == doctest::Approx(0.792));
  CHECK(l.targets[2] == doctest::Approx(0.820));
  l = compute_targets(0.7, 0.7);
  for (double t : l.targets) CHECK(t == 0.7);
  CHECK_THROWS_AS(compute_targets(0.9, 0.8), ConfigError);
  CHECK_THROWS_AS(compute_targets(-0.1, 0.8), ConfigError);
}

TEST_CASE("universal metric: monotone in cost and quality") {
  CHECK(universal_metric(0.9, 0.1, 10.0) > universal_metric(0.9, 0.2, 20.0));
  CHECK(universal_metric(0.91, 0.1, 10.0) > universal_metric(0.9, 0.1, 10.0));
  CHECK_THROWS_AS(universal_metric(0.0, 0.1, 1.0), ConfigError);
}

TEST_CASE("search space: index round trip and boundary points") {
  const auto s = desk_search_space();
  CHECK(s.size() == doctest::Approx(std::pow(4.0 * 4 * 4 * 4 * 4, 2)));
  const auto mn = s.minimum();
  CHECK(mn.coarse == FieldCellConfig{{1, 1, 1}, {8, 8, 8}});
  CHECK(cost_report(mn).er_params > 23.2);
  FactorIndex idx{1, 2, 0, 1, 3, 0, 3, 2, 2, 2};
  CHECK(s.index_of(s.at(idx)) == idx);
  CHECK(full_search_space().maximum().fine.depths[0] == 8);
}

TEST_CASE("run_search: single feasible point is found in round one") {
  SearchSpace s;
  s.coarse = {{1}, {1}, {8}, {8}, {8}};
  // Of the eight width triples only (16, 16, 16) is non-decreasing.
  s.fine = {{1}, {1}, {16, 32}, {8, 16}, {16, 8}};
  SearchBudget b{3, 4, 0.25, 0.7, 64};
  const auto r = run_search(s, {}, b, oracle::surrogate_ssim, 1);
  REQUIRE(r.best);
  CHECK(r.best->round == 0);
  CHECK(r.best->descriptor.fine.channels == std::array<int, 3>{16, 16, 16});
}

TEST_CASE("run_search: matches the exhaustive optimum on a tiny space") {
  const auto space = oracle::small_space();
  ConstraintSet c;
  c.ssim_target = 0.8;
  const auto opt = brute_force_optimum(space, c, oracle::surrogate_ssim);
  REQUIRE(opt);
  const auto r = run_search(space, c, {12, 12, 0.25, 0.7, 256}, oracle::surrogate_ssim, 5);
  REQUIRE(r.best);
  CHECK(r.best->descriptor == opt->descriptor);
  CHECK(*r.best->u_score == doctest::Approx(*opt->u_score));
  const auto rep = replay(r.log, c);
  REQUIRE(rep);
  CHECK(rep->descriptor == r.best->descriptor);
}

TEST_CASE("run_search: infeasible target is reported, not thrown") {
  ConstraintSet c;
  c.ssim_target = 0.999;
  const auto r = run_search(oracle::small_space(), c, {2, 4, 0.25, 0.7, 64}, oracle::surrogate_ssim, 1);
  CHECK_FALSE(r.feasible);
  CHECK_FALSE(r.best);
  CHECK(r.message.find("infeasible at target") != std::string::npos);
}

TEST_CASE("run_search: same seed gives byte-identical results") {
  ConstraintSet c;
  c.ssim_target = 0.75;
  const SearchBudget b{3, 5, 0.25, 0.7, 64};
  const auto a = to_json(run_search(oracle::small_space(), c, b, oracle::surrogate_ssim, 9));
  const auto bb = to_json(run_search(oracle::small_space(), c, b, oracle::surrogate_ssim, 9));
  CHECK(a == bb);
  CHECK(a != to_json(run_search(oracle::small_space(), c, b, oracle::surrogate_ssim, 10)));
}

TEST_CASE("generator: floor and refit") {
  auto g = GeneratorState::uniform(oracle::small_space());
  const FactorIndex e{0, 0, 0, 0, 0, 1, 1, 2, 2, 2};
  g.refit({e, e}, 0.7);
  CHECK(g.probs[5][1] > g.probs[5][0]);
  for (const auto& p : g.probs) {
    double sum = 0.0;
    for (double v : p) {
      CHECK(v >= g.floor);
      sum += v;
    }
    CHECK(sum == doctest::Approx(1.0));
  }
}

TEST_CASE("scaled_iterations") {
  CHECK(scaled_iterations(1.0, IterationPolicy::kInverse) == 200000);
  CHECK(scaled_iterations(1.0, IterationPolicy::kProportional) == 200000);
  CHECK(scaled_iterations(5.74, IterationPolicy::kInverse) == 34843);
  CHECK(scaled_iterations(21.92, IterationPolicy::kInverse) == 16000);
  CHECK(scaled_iterations(3.0, IterationPolicy::kFixed) == 200000);
  CHECK(parse_iteration_policy("proportional") == IterationPolicy::kProportional);
  CHECK_THROWS_AS(parse_iteration_policy("sideways"), ConfigError);
}

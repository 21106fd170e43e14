#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace nasnerf {

enum class OptimizerKind { kRAdam, kAdam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kRAdam;
  double learning_rate = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Moment accumulators for a fixed list of parameter tensors.
template <typename T>
struct OptimizerState {
  OptimizerConfig config;
  std::uint64_t step = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;

  OptimizerState() = default;
  OptimizerState(OptimizerConfig cfg, const std::vector<std::span<T>>& params);
};

// Applies one update. Rectified Adam: while the variance estimate is
// untrustworthy (rho_t <= 5) the step is plain bias-corrected momentum,
// afterwards it is the adaptive step scaled by the rectification term.
// Throws ShapeError on mismatched lists and NumericError on non-finite grads.
template <typename T>
void optimizer_step(OptimizerState<T>& state, const std::vector<std::span<T>>& params,
                    const std::vector<std::span<T>>& grads);

// Rectification factor r_t, or 0 when the adaptive term is disabled at step t.
double radam_rectification(std::uint64_t step, double beta2);

}  // namespace nasnerf

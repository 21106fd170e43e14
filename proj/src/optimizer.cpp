#include "nasnerf/optimizer.hpp"

#include <cmath>

#include "nasnerf/error.hpp"

namespace nasnerf {

template <typename T>
OptimizerState<T>::OptimizerState(OptimizerConfig cfg, const std::vector<std::span<T>>& params) : config(cfg) {
  for (const auto& p : params) {
    first_moment.emplace_back(p.size(), 0.0);
    second_moment.emplace_back(p.size(), 0.0);
  }
}

double radam_rectification(std::uint64_t step, double beta2) {
  const double t = static_cast<double>(step);
  const double beta2_t = std::pow(beta2, t);
  const double rho_inf = 2.0 / (1.0 - beta2) - 1.0;
  const double rho_t = rho_inf - 2.0 * t * beta2_t / (1.0 - beta2_t);
  if (rho_t <= 5.0) return 0.0;
  return std::sqrt((rho_t - 4.0) * (rho_t - 2.0) * rho_inf / ((rho_inf - 4.0) * (rho_inf - 2.0) * rho_t));
}

template <typename T>
void optimizer_step(OptimizerState<T>& state, const std::vector<std::span<T>>& params,
                    const std::vector<std::span<T>>& grads) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size()) {
    throw ShapeError("optimizer_step: parameter/gradient/state count mismatch");
  }
  for (std::size_t g = 0; g < params.size(); ++g) {
    if (params[g].size() != grads[g].size() || params[g].size() != state.first_moment[g].size()) {
      throw ShapeError("optimizer_step: tensor " + std::to_string(g) + " size mismatch");
    }
    for (const T& v : grads[g]) {
      if (!std::isfinite(v)) throw NumericError("optimizer_step: non-finite gradient");
    }
  }

  const OptimizerConfig& c = state.config;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(c.beta1, t);
  const double bias2 = 1.0 - std::pow(c.beta2, t);

  bool adaptive = true;
  double rect = 1.0;
  if (c.kind == OptimizerKind::kRAdam) {
    rect = radam_rectification(state.step, c.beta2);
    adaptive = rect > 0.0;
  }

  for (std::size_t g = 0; g < params.size(); ++g) {
    auto& m = state.first_moment[g];
    auto& v = state.second_moment[g];
    for (std::size_t i = 0; i < params[g].size(); ++i) {
      const double grad = static_cast<double>(grads[g][i]);
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * grad;
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * grad * grad;
      const double m_hat = m[i] / bias1;
      double delta;
      if (c.kind == OptimizerKind::kAdam) {
        delta = c.learning_rate * m_hat / (std::sqrt(v[i] / bias2) + c.epsilon);
      } else if (adaptive) {
        delta = c.learning_rate * rect * m_hat * std::sqrt(bias2) / (std::sqrt(v[i]) + c.epsilon);
      } else {
        delta = c.learning_rate * m_hat;
      }
      params[g][i] = static_cast<T>(static_cast<double>(params[g][i]) - delta);
    }
  }
}

template struct OptimizerState<float>;
template struct OptimizerState<double>;
template void optimizer_step<float>(OptimizerState<float>&, const std::vector<std::span<float>>&,
                                    const std::vector<std::span<float>>&);
template void optimizer_step<double>(OptimizerState<double>&, const std::vector<std::span<double>>&,
                                     const std::vector<std::span<double>>&);

}  // namespace nasnerf

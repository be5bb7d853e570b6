#ifndef AMC_NN_OPTIMIZER_HPP
#define AMC_NN_OPTIMIZER_HPP

#include <cmath>
#include <string>
#include <vector>

#include "amc/nn/graph.hpp"

namespace amc::nn {

struct OptimizerConfig {
  enum class Kind { sgd, adam } kind = Kind::sgd;
  double learning_rate = 0.01;
  double momentum = 0.9; // sgd
  double beta1 = 0.9;    // adam
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0; // L2, added to the gradient

  void validate() const
  {
    if (!(learning_rate >= 0.0)) reject("learning rate must be >= 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) reject("momentum must lie in [0, 1)");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) reject("Adam betas must lie in [0, 1)");
    if (!(epsilon > 0.0)) reject("Adam epsilon must be positive");
    if (!(weight_decay >= 0.0)) reject("weight decay must be >= 0");
  }
};

/// SGD with (heavy-ball) momentum: v = mu v + g; p -= lr v.  Adam with bias
/// correction. Both are deterministic functions of (params, grads, state).
template <typename T>
class Optimizer {
public:
  Optimizer(const LayerGraph<T>& graph, OptimizerConfig cfg) : cfg_(cfg)
  {
    cfg_.validate();
    for (const auto& p : graph.params()) {
      first_.emplace_back(p.value.size(), 0.0);
      if (cfg_.kind == OptimizerConfig::Kind::adam) second_.emplace_back(p.value.size(), 0.0);
    }
  }

  void set_learning_rate(double lr) { cfg_.learning_rate = lr; }
  double learning_rate() const { return cfg_.learning_rate; }
  const OptimizerConfig& config() const { return cfg_; }
  long steps() const { return steps_; }

  void step(LayerGraph<T>& graph, const Gradients<T>& grads)
  {
    auto& params = graph.params();
    if (grads.values.size() != params.size() || first_.size() != params.size())
      reject("optimizer_step: gradient set does not match parameter set");
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (grads.values[i].size() != params[i].value.size())
        reject("optimizer_step: gradient for '", params[i].name, "' has wrong size");
      for (T g : grads.values[i])
        if (!std::isfinite(g)) reject("optimizer_step: non-finite gradient in '", params[i].name, "'");
    }
    ++steps_;
    const double lr = cfg_.learning_rate;
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& p = params[i].value;
      const auto& g = grads.values[i];
      auto& m = first_[i];
      if (cfg_.kind == OptimizerConfig::Kind::sgd) {
        for (std::size_t k = 0; k < p.size(); ++k) {
          const double gk = static_cast<double>(g[k]) + cfg_.weight_decay * static_cast<double>(p[k]);
          m[k] = cfg_.momentum * m[k] + gk;
          p[k] = static_cast<T>(static_cast<double>(p[k]) - lr * m[k]);
        }
      } else {
        auto& v = second_[i];
        const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(steps_));
        const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(steps_));
        for (std::size_t k = 0; k < p.size(); ++k) {
          const double gk = static_cast<double>(g[k]) + cfg_.weight_decay * static_cast<double>(p[k]);
          m[k] = cfg_.beta1 * m[k] + (1.0 - cfg_.beta1) * gk;
          v[k] = cfg_.beta2 * v[k] + (1.0 - cfg_.beta2) * gk * gk;
          p[k] = static_cast<T>(static_cast<double>(p[k]) - lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + cfg_.epsilon));
        }
      }
    }
  }

private:
  OptimizerConfig cfg_;
  std::vector<std::vector<double>> first_;
  std::vector<std::vector<double>> second_;
  long steps_ = 0;
};

} // namespace amc::nn

#endif // AMC_NN_OPTIMIZER_HPP

#include "verirl/optim.hpp"

#include <string>

namespace verirl::optim {

void TokenLogProbs::validate() const {
  if (tokens.empty()) throw std::invalid_argument("empty token sequence");
  if (old_logp.size() != tokens.size() || new_logp.size() != tokens.size()) {
    throw std::invalid_argument("log-probability length mismatch");
  }
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    if (!(old_logp[t] <= 0.0) || !(new_logp[t] <= 0.0)) {
      throw std::invalid_argument("log-probability above zero at position " +
                                  std::to_string(t));
    }
  }
}

void OptimConfig::validate() const {
  if (group_size < 2) throw std::invalid_argument("group_size must be >= 2");
  if (!(eps_low > 0.0) || !(eps_high > 0.0)) {
    throw std::invalid_argument("clip thresholds must be positive");
  }
  if (eps_low >= 1.0) throw std::invalid_argument("eps_low must be < 1");
  if (!(learning_rate >= 0.0)) {
    throw std::invalid_argument("learning_rate must be non-negative");
  }
  if (mini_batch_size < 1 || updates_per_batch < 1) {
    throw std::invalid_argument("mini_batch_size and updates_per_batch must "
                                "be >= 1");
  }
  if (!(std_floor > 0.0)) throw std::invalid_argument("std_floor must be > 0");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) ||
      !(adam_beta2 >= 0.0 && adam_beta2 < 1.0) || !(adam_eps > 0.0)) {
    throw std::invalid_argument("invalid Adam hyperparameters");
  }
  if (!(weight_decay >= 0.0)) {
    throw std::invalid_argument("weight_decay must be non-negative");
  }
}

void apply_ascent(std::span<double> params, std::span<const double> grad,
                  const OptimConfig& config, double lr, AdamState& state) {
  if (lr == 0.0) return;
  if (config.optimizer == OptimizerKind::sgd) {
    for (std::size_t k = 0; k < params.size(); ++k) params[k] += lr * grad[k];
    return;
  }
  if (state.m.size() != params.size()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
    state.step = 0;
  }
  ++state.step;
  const double b1 = config.adam_beta1;
  const double b2 = config.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    state.m[k] = b1 * state.m[k] + (1.0 - b1) * grad[k];
    state.v[k] = b2 * state.v[k] + (1.0 - b2) * grad[k] * grad[k];
    const double step = (state.m[k] / c1) / (std::sqrt(state.v[k] / c2) +
                                             config.adam_eps);
    params[k] += lr * step - lr * config.weight_decay * params[k];
  }
}

std::vector<double> group_advantages(std::span<const double> rewards,
                                     double std_floor) {
  const std::size_t n = rewards.size();
  if (n < 2) {
    throw UndersizedGroupError("advantage needs a group of at least 2, got " +
                               std::to_string(n));
  }
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double sd = std::sqrt(var / static_cast<double>(n));

  std::vector<double> adv(n, 0.0);
  if (sd < std_floor) return adv;
  for (std::size_t i = 0; i < n; ++i) adv[i] = (rewards[i] - mean) / sd;
  return adv;
}

void assign_advantages(RolloutGroup& group, double std_floor) {
  std::vector<double> rewards;
  rewards.reserve(group.members.size());
  for (const auto& m : group.members) rewards.push_back(m.reward);
  group.advantages = group_advantages(rewards, std_floor);
}

double seq_importance_ratio(const TokenLogProbs& lp) {
  if (lp.tokens.empty() || lp.old_logp.size() != lp.tokens.size() ||
      lp.new_logp.size() != lp.tokens.size()) {
    lp.validate();
  }
  double log_ratio = 0.0;
  for (std::size_t t = 0; t < lp.tokens.size(); ++t) {
    log_ratio += lp.new_logp[t] - lp.old_logp[t];
  }
  return std::exp(log_ratio / static_cast<double>(lp.tokens.size()));
}

double clipped_term(double ratio, double advantage, double eps_low,
                    double eps_high) {
  const double clipped = std::clamp(ratio, 1.0 - eps_low, 1.0 + eps_high);
  return std::min(ratio * advantage, clipped * advantage);
}

bool unclipped_active(double ratio, double advantage, double eps_low,
                      double eps_high) {
  if (advantage > 0.0) return ratio <= 1.0 + eps_high;
  if (advantage < 0.0) return ratio >= 1.0 - eps_low;
  return false;
}

double surrogate_objective(std::span<const RolloutGroup> groups,
                           const OptimConfig& config) {
  if (groups.empty()) throw std::invalid_argument("no rollout groups");
  double total = 0.0;
  for (const auto& g : groups) {
    if (g.members.empty()) throw std::invalid_argument("empty rollout group");
    if (g.advantages.size() != g.members.size()) {
      throw std::invalid_argument("group is missing advantages");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < g.members.size(); ++i) {
      const double s = seq_importance_ratio(g.members[i].logp);
      sum += clipped_term(s, g.advantages[i], config.eps_low, config.eps_high);
    }
    total += sum / static_cast<double>(g.members.size());
  }
  return total / static_cast<double>(groups.size());
}

}  // namespace verirl::optim

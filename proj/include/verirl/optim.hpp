#ifndef VERIRL_OPTIM_HPP_
#define VERIRL_OPTIM_HPP_

// Critic-free clipped policy optimization: group-normalized advantages,
// length-normalized sequence-level importance ratios and an asymmetrically
// clipped surrogate.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace verirl::optim {

struct TokenLogProbs {
  std::vector<int> tokens;
  std::vector<double> old_logp;  // under the sampling snapshot
  std::vector<double> new_logp;  // under the current parameters

  // Throws std::invalid_argument unless all three share length >= 1 and
  // every log-probability is <= 0.
  void validate() const;
};

struct GroupMember {
  TokenLogProbs logp;
  double reward = 0.0;
};

struct RolloutGroup {
  std::size_t prompt_id = 0;  // also the policy's conditioning context
  std::uint64_t snapshot_version = 0;
  std::vector<GroupMember> members;
  std::vector<double> advantages;
};

enum class OptimizerKind { adam, sgd };

struct OptimConfig {
  int group_size = 16;
  double eps_low = 3e-4;
  double eps_high = 4e-4;
  double learning_rate = 0.05;
  int mini_batch_size = 8;
  int updates_per_batch = 4;
  double std_floor = 1e-6;
  OptimizerKind optimizer = OptimizerKind::adam;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 0.0;  // decoupled (AdamW style)

  void validate() const;
  int train_batch_size() const noexcept {
    return mini_batch_size * updates_per_batch;
  }
};

class UndersizedGroupError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class StaleRolloutError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// (R_i - mean) / std with the population std. A group whose std falls
// below std_floor gets all-zero advantages.
std::vector<double> group_advantages(std::span<const double> rewards,
                                     double std_floor);

void assign_advantages(RolloutGroup& group, double std_floor);

// exp(mean_t(new_logp_t - old_logp_t)); a single exponentiation.
double seq_importance_ratio(const TokenLogProbs& lp);

double clipped_term(double ratio, double advantage, double eps_low,
                    double eps_high);

// True when the unclipped branch s*A is the one min() selects, i.e. the
// term depends on the parameters.
bool unclipped_active(double ratio, double advantage, double eps_low,
                      double eps_high);

// Mean over groups of (1/G) * sum_i clipped_term(s_i, A_i). Uses the
// members' stored new_logp.
double surrogate_objective(std::span<const RolloutGroup> groups,
                           const OptimConfig& config);

// A policy the optimizer can differentiate. Contexts index prompts.
template <class P>
concept DifferentiablePolicy = requires(P& p, const P& cp, std::size_t ctx,
                                        std::span<const int> tokens,
                                        std::span<double> out, double w) {
  { p.parameters() } -> std::same_as<std::span<double>>;
  { cp.snapshot_version() } -> std::convertible_to<std::uint64_t>;
  // Per-token log-probabilities under the current parameters.
  cp.token_log_probs(ctx, tokens, out);
  // out += w * sum_t d/dtheta log pi(y_t | ctx, y_<t).
  cp.accumulate_log_prob_grad(ctx, tokens, w, out);
};

template <DifferentiablePolicy P>
void refresh_new_logp(const P& policy, std::span<RolloutGroup> groups) {
  for (auto& g : groups) {
    for (auto& m : g.members) {
      auto& lp = m.logp;
      lp.new_logp.resize(lp.tokens.size());
      policy.token_log_probs(g.prompt_id, lp.tokens, lp.new_logp);
    }
  }
}

// Refreshes new_logp, then returns the surrogate at the current parameters.
template <DifferentiablePolicy P>
double evaluate_surrogate(const P& policy, std::span<RolloutGroup> groups,
                          const OptimConfig& config) {
  refresh_new_logp(policy, groups);
  return surrogate_objective(groups, config);
}

// Writes d(surrogate)/d(theta) into grad (overwritten) and returns the
// surrogate value. Clipped-active terms contribute exactly zero.
template <DifferentiablePolicy P>
double surrogate_gradient(const P& policy, std::span<RolloutGroup> groups,
                          const OptimConfig& config, std::span<double> grad) {
  std::fill(grad.begin(), grad.end(), 0.0);
  const double objective = evaluate_surrogate(policy, groups, config);
  const double group_weight = 1.0 / static_cast<double>(groups.size());
  for (const auto& g : groups) {
    if (g.advantages.size() != g.members.size()) {
      throw std::invalid_argument("group is missing advantages");
    }
    const double member_weight =
        group_weight / static_cast<double>(g.members.size());
    for (std::size_t i = 0; i < g.members.size(); ++i) {
      const double adv = g.advantages[i];
      if (adv == 0.0) continue;
      const auto& lp = g.members[i].logp;
      const double s = seq_importance_ratio(lp);
      if (!unclipped_active(s, adv, config.eps_low, config.eps_high)) continue;
      const double w = member_weight * adv * s /
                       static_cast<double>(lp.tokens.size());
      policy.accumulate_log_prob_grad(g.prompt_id, lp.tokens, w, grad);
    }
  }
  return objective;
}

// First/second moment estimates carried across update steps. Sized on
// first use.
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long step = 0;
};

// Applies one ascent step along grad (maximization).
void apply_ascent(std::span<double> params, std::span<const double> grad,
                  const OptimConfig& config, double lr, AdamState& state);

struct UpdateResult {
  double objective = 0.0;     // surrogate over all groups after the update
  int ascent_steps = 0;
};

// Gradient ascent over shuffled mini-batches of groups. Groups must have
// been sampled under the policy's current snapshot.
template <DifferentiablePolicy P, class Rng>
UpdateResult policy_update_step(P& policy, std::span<RolloutGroup> groups,
                                const OptimConfig& config, AdamState& state,
                                Rng& rng, double lr_scale = 1.0) {
  config.validate();
  if (groups.empty()) throw std::invalid_argument("no rollout groups");
  for (const auto& g : groups) {
    if (g.snapshot_version != policy.snapshot_version()) {
      throw StaleRolloutError("rollout group sampled under snapshot " +
                              std::to_string(g.snapshot_version) +
                              " but policy snapshot is " +
                              std::to_string(policy.snapshot_version()));
    }
  }

  std::vector<std::size_t> order(groups.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto mb = static_cast<std::size_t>(config.mini_batch_size);
  const double lr = config.learning_rate * lr_scale;

  std::span<double> params = policy.parameters();
  std::vector<double> grad(params.size());
  std::vector<RolloutGroup> batch;
  std::size_t cursor = order.size();
  UpdateResult result;
  for (int step = 0; step < config.updates_per_batch; ++step) {
    if (cursor >= order.size()) {
      std::shuffle(order.begin(), order.end(), rng);
      cursor = 0;
    }
    const std::size_t end = std::min(order.size(), cursor + mb);
    batch.clear();
    for (std::size_t j = cursor; j < end; ++j) batch.push_back(groups[order[j]]);
    cursor = end;

    surrogate_gradient(policy, std::span<RolloutGroup>(batch), config, grad);
    apply_ascent(params, grad, config, lr, state);
    ++result.ascent_steps;
  }
  result.objective = evaluate_surrogate(policy, groups, config);
  return result;
}

}  // namespace verirl::optim

#endif  // VERIRL_OPTIM_HPP_

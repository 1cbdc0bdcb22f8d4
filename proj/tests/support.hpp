#ifndef VERIRL_TESTS_SUPPORT_HPP_
#define VERIRL_TESTS_SUPPORT_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "verirl/optim.hpp"
#include "verirl/policy.hpp"
#include "verirl/toytask.hpp"

namespace testsupport {

using verirl::optim::OptimConfig;
using verirl::optim::RolloutGroup;
using verirl::toytask::ToyPolicy;

struct FdFixture {
  ToyPolicy policy;
  std::vector<RolloutGroup> groups;
  OptimConfig config;
};

// Random policy drifted away from its snapshot, with sampled groups whose
// ratios sit clear of the clip boundaries (so the objective is smooth at
// the evaluation point). Wide clip range so both branches occur.
inline FdFixture make_fd_fixture(std::uint64_t seed, std::size_t contexts = 2,
                                 int vocab = 9, int n_groups = 6) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  OptimConfig cfg;
  cfg.group_size = 4;
  cfg.eps_low = 0.02;
  cfg.eps_high = 0.03;
  for (int attempt = 0;; ++attempt) {
    ToyPolicy policy(contexts, vocab, 1.0);
    for (double& p : policy.parameters()) p = noise(rng);
    policy.refresh_snapshot();
    std::vector<RolloutGroup> groups(static_cast<std::size_t>(n_groups));
    for (int g = 0; g < n_groups; ++g) {
      auto& grp = groups[static_cast<std::size_t>(g)];
      grp.prompt_id = static_cast<std::size_t>(g) % contexts;
      grp.snapshot_version = policy.snapshot_version();
      std::vector<double> rewards;
      for (int i = 0; i < cfg.group_size; ++i) {
        auto r = verirl::toytask::sample_rollout(policy, grp.prompt_id, 6, rng());
        grp.members.push_back({std::move(r.logp), noise(rng)});
        rewards.push_back(grp.members.back().reward);
      }
      grp.advantages = verirl::optim::group_advantages(rewards, cfg.std_floor);
    }
    for (double& p : policy.parameters()) p += 0.05 * noise(rng);
    verirl::optim::refresh_new_logp(policy, std::span<RolloutGroup>(groups));
    bool clear = true;
    for (const auto& g : groups) {
      for (const auto& m : g.members) {
        const double s = verirl::optim::seq_importance_ratio(m.logp);
        if (std::abs(s - (1.0 - cfg.eps_low)) < 1e-3 ||
            std::abs(s - (1.0 + cfg.eps_high)) < 1e-3) {
          clear = false;
        }
      }
    }
    if (clear || attempt > 50) return {std::move(policy), std::move(groups), cfg};
  }
}

struct FdReport {
  double max_rel_error = 0.0;
  std::size_t n_params = 0;
  std::size_t clipped_terms = 0;
  std::size_t active_terms = 0;
};

inline FdReport check_gradient(FdFixture& fx, double h = 1e-5) {
  auto& pi = fx.policy;
  std::span<RolloutGroup> groups(fx.groups);
  auto params = pi.parameters();
  std::vector<double> grad(params.size());
  verirl::optim::surrogate_gradient(pi, groups, fx.config, grad);
  FdReport rep;
  rep.n_params = params.size();
  for (const auto& g : fx.groups) {
    for (std::size_t i = 0; i < g.members.size(); ++i) {
      const double s = verirl::optim::seq_importance_ratio(g.members[i].logp);
      if (verirl::optim::unclipped_active(s, g.advantages[i], fx.config.eps_low,
                                          fx.config.eps_high)) {
        ++rep.active_terms;
      } else {
        ++rep.clipped_terms;
      }
    }
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double keep = params[k];
    params[k] = keep + h;
    const double up = verirl::optim::evaluate_surrogate(pi, groups, fx.config);
    params[k] = keep - h;
    const double down = verirl::optim::evaluate_surrogate(pi, groups, fx.config);
    params[k] = keep;
    const double fd = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(fd), std::abs(grad[k]), 1e-7});
    rep.max_rel_error = std::max(rep.max_rel_error, std::abs(fd - grad[k]) / denom);
  }
  verirl::optim::refresh_new_logp(pi, groups);
  return rep;
}

}  // namespace testsupport

#endif  // VERIRL_TESTS_SUPPORT_HPP_

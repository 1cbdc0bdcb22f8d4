#include "doctest.h"

#include <cmath>
#include <numeric>
#include <random>

#include "support.hpp"
#include "verirl/optim.hpp"

using namespace verirl::optim;
using doctest::Approx;

namespace {

double pop_std(const std::vector<double>& v) {
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return std::sqrt(s / v.size());
}

TokenLogProbs lp(std::vector<double> old_lp, std::vector<double> new_lp) {
  TokenLogProbs out;
  out.tokens.assign(old_lp.size(), 5);
  out.old_logp = std::move(old_lp);
  out.new_logp = std::move(new_lp);
  return out;
}

}  // namespace

TEST_CASE("group_advantages examples") {
  const auto a = group_advantages(std::vector<double>{1.2, 0.2, 0.2, 0.2}, 1e-6);
  CHECK(a[0] == Approx(1.7321).epsilon(1e-3));
  for (int i = 1; i < 4; ++i) CHECK(a[i] == Approx(-0.5774).epsilon(1e-3));
  for (double x : group_advantages(std::vector<double>{0.2, 0.2, 0.2, 0.2}, 1e-6)) {
    CHECK(x == 0.0);
  }
  const auto b = group_advantages(std::vector<double>{1.0, -1.0}, 1e-6);
  CHECK(b[0] == Approx(1.0));
  CHECK(b[1] == Approx(-1.0));
  CHECK_THROWS_AS(group_advantages(std::vector<double>{1.0}, 1e-6),
                  UndersizedGroupError);
}

TEST_CASE("advantage normalization and scale invariance") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int trial = 0; trial < 500; ++trial) {
    const int g = 2 + static_cast<int>(rng() % 31);
    std::vector<double> r(g);
    for (double& x : r) x = u(rng);
    const auto a = group_advantages(r, 1e-6);
    CHECK(std::abs(std::accumulate(a.begin(), a.end(), 0.0) / g) < 1e-9);
    CHECK(std::abs(pop_std(a) - 1.0) < 1e-9);
    const double scale = 0.1 + std::abs(u(rng));
    const double shift = u(rng);
    std::vector<double> r2(r);
    for (double& x : r2) x = scale * x + shift;
    const auto a2 = group_advantages(r2, 1e-6);
    for (int i = 0; i < g; ++i) CHECK(a2[i] == Approx(a[i]).epsilon(1e-9));
  }
}

TEST_CASE("seq_importance_ratio examples") {
  CHECK(seq_importance_ratio(lp({-1.0, -2.0, -0.5}, {-1.0, -2.0, -0.5})) == 1.0);
  const double l2 = std::log(2.0);
  CHECK(seq_importance_ratio(lp({-3.0, -3.0, -3.0, -3.0},
                                {-3.0 + l2, -3.0 + l2, -3.0 + l2, -3.0 + l2})) ==
        Approx(2.0).epsilon(1e-12));
  CHECK(seq_importance_ratio(lp({-1.0, -1.0}, {-0.5, -1.0})) ==
        Approx(std::exp(0.25)).epsilon(1e-12));
  CHECK(std::exp(0.25) == Approx(1.2840).epsilon(1e-4));
  CHECK_THROWS_AS(lp({-1.0}, {0.5}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(lp({}, {}).validate(), std::invalid_argument);
}

TEST_CASE("clipped_term examples") {
  CHECK(clipped_term(1.001, 1.0, 3e-4, 4e-4) == Approx(1.0004).epsilon(1e-12));
  CHECK(clipped_term(0.999, -1.0, 3e-4, 4e-4) == Approx(-0.9997).epsilon(1e-12));
  CHECK(clipped_term(1.7, 0.0, 3e-4, 4e-4) == 0.0);
  CHECK(clipped_term(0.3, 0.0, 3e-4, 4e-4) == 0.0);
}

TEST_CASE("clipping bound property") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> us(0.5, 1.5);
  std::uniform_real_distribution<double> ua(-3.0, 3.0);
  for (int i = 0; i < 5000; ++i) {
    const double s = us(rng);
    const double a = ua(rng);
    const double t = clipped_term(s, a, 3e-4, 4e-4);
    CHECK(std::abs(t) <= std::max(std::abs(s * a), (1 + 4e-4) * std::abs(a)) + 1e-15);
    CHECK(t <= s * a);
  }
}

TEST_CASE("surrogate_objective composition") {
  OptimConfig cfg;
  RolloutGroup g1;
  g1.members = {{lp({-1.0}, {-1.0}), 0.0}, {lp({-1.0}, {-1.0}), 0.0}};
  g1.advantages = {0.0, 0.0};
  CHECK(surrogate_objective(std::vector<RolloutGroup>{g1}, cfg) == 0.0);

  RolloutGroup g2;
  g2.members = {{lp({-1.0}, {-1.0}), 1.0}, {lp({-1.0}, {-1.0}), 0.0}};
  g2.advantages = {1.0, -1.0};
  CHECK(surrogate_objective(std::vector<RolloutGroup>{g2}, cfg) == 0.0);

  // Ratios 1.001 and 0.999 from single-token log differences.
  RolloutGroup g3;
  g3.members = {{lp({-1.0}, {-1.0 + std::log(1.001)}), 1.0},
                {lp({-1.0}, {-1.0 + std::log(0.999)}), 0.0}};
  g3.advantages = {1.0, -1.0};
  const double m3 = (1.0004 + -0.9997) / 2.0;
  const double m2 = 0.0;
  CHECK(surrogate_objective(std::vector<RolloutGroup>{g3, g2}, cfg) ==
        Approx((m3 + m2) / 2.0).epsilon(1e-9));
  CHECK_THROWS_AS(surrogate_objective(std::vector<RolloutGroup>{}, cfg),
                  std::invalid_argument);
}

TEST_CASE("analytic gradient matches finite differences") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    auto fx = testsupport::make_fd_fixture(seed);
    REQUIRE(fx.policy.parameters().size() <= 200);
    const auto rep = testsupport::check_gradient(fx);
    CHECK(rep.active_terms > 0);
    CHECK(rep.max_rel_error < 1e-4);
  }
}

TEST_CASE("clipped terms have zero gradient") {
  verirl::toytask::ToyPolicy pi(1, 6, 1.0);
  pi.refresh_snapshot();
  RolloutGroup g;
  g.snapshot_version = pi.snapshot_version();
  g.members = {{lp({-1.0, -1.0}, {0, 0}), 1.0}, {lp({-1.0, -1.0}, {0, 0}), 0.0}};
  g.advantages = {1.0, -1.0};
  // Move the policy so both ratios leave the trust region on the flat side.
  pi.row(0, verirl::toytask::kBos)[5] = 4.0;
  pi.row(0, 5)[5] = 4.0;
  std::vector<RolloutGroup> groups = {g};
  std::vector<double> grad(pi.parameters().size());
  OptimConfig cfg;
  surrogate_gradient(pi, std::span<RolloutGroup>(groups), cfg, grad);
  const double s = seq_importance_ratio(groups[0].members[0].logp);
  REQUIRE(s > 1.0 + cfg.eps_high);
  // Member 0 (A>0) is clipped; member 1 (A<0, s>1) stays active.
  CHECK_FALSE(unclipped_active(s, 1.0, cfg.eps_low, cfg.eps_high));
  CHECK(unclipped_active(s, -1.0, cfg.eps_low, cfg.eps_high));
  std::vector<double> expect(grad.size(), 0.0);
  const auto& m1 = groups[0].members[1].logp;
  pi.accumulate_log_prob_grad(0, m1.tokens, 0.5 * -1.0 * s / 2.0, expect);
  for (std::size_t k = 0; k < grad.size(); ++k) CHECK(grad[k] == Approx(expect[k]));
}

TEST_CASE("policy_update_step null updates and stale guard") {
  auto fx = testsupport::make_fd_fixture(4);
  const std::vector<double> before(fx.policy.parameters().begin(),
                                   fx.policy.parameters().end());
  const double obj0 = evaluate_surrogate(fx.policy, std::span<RolloutGroup>(fx.groups),
                                         fx.config);
  OptimConfig cfg = fx.config;
  cfg.learning_rate = 0.0;
  cfg.mini_batch_size = 2;
  AdamState st;
  std::mt19937_64 rng(1);
  auto res = policy_update_step(fx.policy, std::span<RolloutGroup>(fx.groups), cfg, st, rng);
  CHECK(res.ascent_steps == cfg.updates_per_batch);
  CHECK(res.objective == obj0);
  CHECK(std::equal(before.begin(), before.end(), fx.policy.parameters().begin()));

  // Equal rewards: zero advantages, zero gradient.
  cfg.learning_rate = 0.05;
  for (auto& g : fx.groups) {
    for (auto& m : g.members) m.reward = 0.2;
    assign_advantages(g, cfg.std_floor);
  }
  policy_update_step(fx.policy, std::span<RolloutGroup>(fx.groups), cfg, st, rng);
  CHECK(std::equal(before.begin(), before.end(), fx.policy.parameters().begin()));

  cfg.optimizer = OptimizerKind::sgd;
  policy_update_step(fx.policy, std::span<RolloutGroup>(fx.groups), cfg, st, rng);
  CHECK(std::equal(before.begin(), before.end(), fx.policy.parameters().begin()));

  fx.policy.refresh_snapshot();
  CHECK_THROWS_AS(
      policy_update_step(fx.policy, std::span<RolloutGroup>(fx.groups), cfg, st, rng),
      StaleRolloutError);
}

TEST_CASE("ascent improves the surrogate") {
  auto fx = testsupport::make_fd_fixture(8);
  for (auto& g : fx.groups) g.snapshot_version = fx.policy.snapshot_version();
  const double obj0 =
      evaluate_surrogate(fx.policy, std::span<RolloutGroup>(fx.groups), fx.config);
  OptimConfig cfg = fx.config;
  cfg.optimizer = OptimizerKind::sgd;
  cfg.learning_rate = 1e-3;
  cfg.mini_batch_size = static_cast<int>(fx.groups.size());
  cfg.updates_per_batch = 1;
  AdamState st;
  std::mt19937_64 rng(2);
  const auto res =
      policy_update_step(fx.policy, std::span<RolloutGroup>(fx.groups), cfg, st, rng);
  CHECK(res.objective > obj0);
}

TEST_CASE("config validation") {
  OptimConfig cfg;
  cfg.validate();
  CHECK(cfg.train_batch_size() == 32);
  cfg.group_size = 1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.eps_low = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.learning_rate = -1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

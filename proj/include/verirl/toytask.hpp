#ifndef VERIRL_TOYTASK_HPP_
#define VERIRL_TOYTASK_HPP_

// Synthetic entity-translation environment. A response is a token
// sequence <think> ... </think> translation <eos> generated by a tabular
// policy conditioned on the entity; it is rendered to text and scored by
// the same reward code used for external rollouts.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "verirl/lexicon.hpp"
#include "verirl/optim.hpp"
#include "verirl/policy.hpp"
#include "verirl/reward.hpp"

namespace verirl::toytask {

// Logit layout shared by every entity before the knowledge bump.
struct PriorShape {
  double format_logit = 6.0;          // BOS -> <think>
  double think_close_logit = 4.0;     // <think> -> </think>
  double content_close_logit = -1.0;  // word -> </think>
  double eos_logit = 3.0;             // word -> EOS
  double blocked_logit = -6.0;        // tokens that are never sensible
  // Knowledge bump multipliers: on alias first tokens right after
  // </think>, on alias first tokens after any word, and on in-alias
  // bigrams.
  double first_scale = 0.0;
  double anywhere_scale = 1.0;
  double continue_scale = 1.0;
};

// Policy whose rows follow `shape`, plus a per-entity bump of
// strengths[e] on the first alias tokens after </think> and on every
// in-alias bigram of that entity's aliases.
ToyPolicy init_structured(const SyntheticLexicon& lexicon,
                          const PriorShape& shape,
                          std::span<const double> strengths,
                          double temperature = 1.0);

ToyPolicy init_uniform(const SyntheticLexicon& lexicon,
                       double temperature = 1.0);

struct ActivationPriorOptions {
  double target_pass1_max = 0.10;
  double min_pass_at_k = 0.70;
  int k = 64;
  int mc_samples = 256;
  int max_len = 24;
  double temperature = 1.0;
  std::uint64_t seed = 7;
  int max_attempts = 8;
  PriorShape shape;
};

struct PriorReport {
  double pass1 = 0.0;
  double pass_at_k = 0.0;
  int attempts = 0;
  std::vector<double> strengths;  // per entity
};

class ActivationPriorError : public std::runtime_error {
 public:
  ActivationPriorError(const std::string& what, double pass1, double pass_at_k)
      : std::runtime_error(what), pass1_(pass1), pass_at_k_(pass_at_k) {}
  double pass1() const noexcept { return pass1_; }
  double pass_at_k() const noexcept { return pass_at_k_; }

 private:
  double pass1_;
  double pass_at_k_;
};

// Latent-knowledge initialization: every entity's aliases are reachable
// but rarely sampled. Per-entity strengths are calibrated by bisection so
// that the Monte Carlo pass@1 on eval_ids is at most target_pass1_max while
// pass@k stays at least min_pass_at_k. Throws ActivationPriorError with the
// last measured rates when no attempt lands in that regime.
ToyPolicy init_activation_prior(const SyntheticLexicon& lexicon,
                                std::span<const std::size_t> eval_ids,
                                const ActivationPriorOptions& options,
                                PriorReport* report = nullptr);

struct Rollout {
  std::size_t entity = 0;
  optim::TokenLogProbs logp;  // tokens and old_logp filled
  bool truncated = false;     // hit max_len before EOS
  double entropy_sum = 0.0;   // per-token entropies of the sampling policy
};

// Ancestral sampling; stops at EOS (kept in the sequence) or max_len.
Rollout sample_rollout(const ToyPolicy& policy, std::size_t entity,
                       int max_len, std::uint64_t seed,
                       ParamSource source = ParamSource::snapshot);

enum class Ablation { full, no_len_gate, soft_format, no_think };

const char* to_string(Ablation ablation) noexcept;
Ablation parse_ablation(std::string_view name);

// Toy-task reward settings: token length unit, the lexicon's markers,
// and the gates selected by the ablation.
reward::RewardConfig toy_reward_config(reward::RewardConfig base,
                                       Ablation ablation);

struct ScoredRollout {
  reward::RewardBreakdown breakdown;
  std::size_t trans_length = 0;       // tokens
  std::size_t alias_occurrences = 0;  // in the translation part
  bool within_bound = false;          // trans_length <= tau * ref length
  bool truncated = false;
};

ScoredRollout score_rollout(const SyntheticLexicon& lexicon,
                            const Rollout& rollout,
                            const reward::RewardConfig& config);

// Tokens after the first </think> when present, else the whole output.
std::span<const int> translation_tokens(std::span<const int> tokens,
                                        const reward::RewardConfig& config);

struct CorrectCounts {
  int n = 0;                // samples per entity
  std::vector<int> counts;  // match = 1 samples, parallel to the ids
};

CorrectCounts sample_correct_counts(const ToyPolicy& policy,
                                    const SyntheticLexicon& lexicon,
                                    std::span<const std::size_t> ids, int n,
                                    int max_len,
                                    const reward::RewardConfig& config,
                                    std::uint64_t seed,
                                    ParamSource source = ParamSource::current);

// Mean unbiased pass@k over the entities in `counts`.
double pass_at_k(const CorrectCounts& counts, int k);

enum class LrSchedule { constant, cosine };

struct TrainOptions {
  int steps = 2000;
  int max_len = 24;
  double temperature = 1.0;
  std::uint64_t seed = 0;
  int eval_samples = 16;  // per train entity, for pass1_eval
  int eval_every = 1;
  int workers = 1;
  LrSchedule schedule = LrSchedule::constant;
  double warmup_ratio = 0.0;

  void validate() const;
};

struct TrainMetricsRow {
  int step = 0;
  double mean_reward = 0.0;
  double mean_trans_length = 0.0;
  double mean_entropy = 0.0;
  double pass1_eval = 0.0;
};

struct TrainResult {
  ToyPolicy policy;
  std::vector<TrainMetricsRow> metrics;  // steps + 1 rows, step 0 first
  std::vector<ScoredRollout> final_rollouts;
};

// Row s describes the policy after s updates; the rollouts behind row s
// (s < steps) feed update s + 1. Deterministic for a fixed seed and
// independent of the worker count.
TrainResult train(const SyntheticLexicon& lexicon,
                  std::span<const std::size_t> train_ids, ToyPolicy policy,
                  const reward::RewardConfig& reward_config,
                  const optim::OptimConfig& optim_config,
                  const TrainOptions& options, Ablation ablation);

void write_metrics_csv(std::ostream& out,
                       std::span<const TrainMetricsRow> rows);

}  // namespace verirl::toytask

#endif  // VERIRL_TOYTASK_HPP_

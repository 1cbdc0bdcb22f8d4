#include "verirl/toytask.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>
#include <thread>

#include "verirl/evalkit.hpp"
#include "verirl/rng.hpp"

namespace verirl::toytask {

namespace {

void write_entity_rows(ToyPolicy& policy, const SyntheticLexicon& lex,
                       const PriorShape& shape, std::size_t e,
                       double strength) {
  const int v = lex.vocab_size;
  for (int prev = 0; prev < v; ++prev) {
    auto r = policy.row(e, prev);
    std::fill(r.begin(), r.end(), 0.0);
    if (prev == kEos || prev == kSrcMark) continue;  // never visited
    r[kBos] = shape.blocked_logit;
    r[kSrcMark] = shape.blocked_logit;
    r[kThinkOpen] = shape.blocked_logit;
    if (prev == kBos) {
      r[kThinkOpen] = shape.format_logit;
      r[kEos] = shape.blocked_logit;
      r[kThinkClose] = shape.blocked_logit;
    } else if (prev == kThinkOpen) {
      r[kThinkClose] = shape.think_close_logit;
      r[kEos] = shape.blocked_logit;
    } else if (prev == kThinkClose) {
      r[kThinkClose] = shape.blocked_logit;
      r[kEos] = shape.blocked_logit;
    } else {
      r[kThinkClose] = shape.content_close_logit;
      r[kEos] = shape.eos_logit;
    }
  }
  for (const auto& alias : lex.entities[e].aliases) {
    const auto first = static_cast<std::size_t>(alias.front());
    if (shape.anywhere_scale != 0.0) {
      for (int prev = kNumSpecial; prev < v; ++prev) {
        policy.row(e, prev)[first] = shape.anywhere_scale * strength;
      }
    }
    policy.row(e, kThinkClose)[first] = shape.first_scale * strength;
    for (std::size_t j = 0; j + 1 < alias.size(); ++j) {
      policy.row(e, alias[j])[static_cast<std::size_t>(alias[j + 1])] =
          shape.continue_scale * strength;
    }
  }
}

double entity_match_rate(const ToyPolicy& policy, const SyntheticLexicon& lex,
                         const textnorm::GoldEntitySet& gold, std::size_t e,
                         int samples, int max_len,
                         const reward::RewardConfig& cfg,
                         std::uint64_t seed);

template <class Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
  std::vector<std::jthread> pool;
  pool.reserve(w);
  for (std::size_t t = 0; t < w; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < n; i += w) fn(i);
    });
  }
}

ScoredRollout score_with_gold(const SyntheticLexicon& lex,
                              const textnorm::GoldEntitySet& gold,
                              const Rollout& rollout,
                              const reward::RewardConfig& cfg) {
  ScoredRollout out;
  const std::size_t ref = lex.ref_length(rollout.entity);
  const std::size_t refs[] = {ref};
  out.breakdown = reward::compute_reward(lex.render(rollout.logp.tokens), gold,
                                         refs, cfg);
  const auto trans = translation_tokens(rollout.logp.tokens, cfg);
  out.trans_length = trans.size();
  out.alias_occurrences =
      textnorm::count_alias_occurrences(lex.render(trans), gold);
  out.within_bound = static_cast<double>(out.trans_length) <=
                     cfg.tau * static_cast<double>(ref);
  out.truncated = rollout.truncated;
  return out;
}

double entity_match_rate(const ToyPolicy& policy, const SyntheticLexicon& lex,
                         const textnorm::GoldEntitySet& gold, std::size_t e,
                         int samples, int max_len,
                         const reward::RewardConfig& cfg,
                         std::uint64_t seed) {
  int hits = 0;
  for (int i = 0; i < samples; ++i) {
    const Rollout r =
        sample_rollout(policy, e, max_len,
                       derive_seed(seed, {e, static_cast<std::uint64_t>(i)}),
                       ParamSource::current);
    if (score_with_gold(lex, gold, r, cfg).breakdown.match) ++hits;
  }
  return static_cast<double>(hits) / samples;
}

}  // namespace

ToyPolicy init_structured(const SyntheticLexicon& lexicon,
                          const PriorShape& shape,
                          std::span<const double> strengths,
                          double temperature) {
  lexicon.validate();
  if (strengths.size() != lexicon.entities.size()) {
    throw std::invalid_argument("one prior strength per entity required");
  }
  ToyPolicy policy(lexicon.entities.size(), lexicon.vocab_size, temperature);
  for (std::size_t e = 0; e < lexicon.entities.size(); ++e) {
    write_entity_rows(policy, lexicon, shape, e, strengths[e]);
  }
  policy.refresh_snapshot();
  return policy;
}

ToyPolicy init_uniform(const SyntheticLexicon& lexicon, double temperature) {
  lexicon.validate();
  ToyPolicy policy(lexicon.entities.size(), lexicon.vocab_size, temperature);
  policy.refresh_snapshot();
  return policy;
}

ToyPolicy init_activation_prior(const SyntheticLexicon& lexicon,
                                std::span<const std::size_t> eval_ids,
                                const ActivationPriorOptions& options,
                                PriorReport* report) {
  if (!(options.target_pass1_max > 0.0 && options.target_pass1_max < 1.0)) {
    throw std::invalid_argument("target_pass1_max must lie in (0, 1)");
  }
  if (eval_ids.empty()) throw std::invalid_argument("no eval entities");
  if (options.k < 1 || options.k > options.mc_samples) {
    throw std::invalid_argument("pass@k needs 1 <= k <= mc_samples");
  }
  const auto cfg = toy_reward_config({}, Ablation::full);
  const std::size_t n_ent = lexicon.entities.size();
  std::vector<double> strengths(n_ent, 0.0);
  ToyPolicy policy = init_structured(lexicon, options.shape, strengths,
                                     options.temperature);
  std::vector<textnorm::GoldEntitySet> golds;
  for (std::size_t e = 0; e < n_ent; ++e) golds.push_back(lexicon.gold(e));

  double aim = 0.6 * options.target_pass1_max;
  double pass1 = 0.0;
  double passk = 0.0;
  for (int attempt = 1; attempt <= options.max_attempts; ++attempt) {
    for (std::size_t e = 0; e < n_ent; ++e) {
      const std::uint64_t s = derive_seed(options.seed, {0xCA1B, e});
      double lo = 0.0;
      double hi = 16.0;
      for (int it = 0; it < 14; ++it) {
        const double mid = 0.5 * (lo + hi);
        write_entity_rows(policy, lexicon, options.shape, e, mid);
        const double rate =
            entity_match_rate(policy, lexicon, golds[e], e, options.mc_samples,
                              options.max_len, cfg, s);
        (rate < aim ? lo : hi) = mid;
      }
      strengths[e] = 0.5 * (lo + hi);
      write_entity_rows(policy, lexicon, options.shape, e, strengths[e]);
    }
    policy.refresh_snapshot();

    const CorrectCounts counts = sample_correct_counts(
        policy, lexicon, eval_ids, options.mc_samples, options.max_len, cfg,
        derive_seed(options.seed, {0x7E51, static_cast<std::uint64_t>(attempt)}));
    pass1 = pass_at_k(counts, 1);
    passk = pass_at_k(counts, options.k);
    if (report) *report = {pass1, passk, attempt, strengths};
    if (pass1 <= options.target_pass1_max && passk >= options.min_pass_at_k) {
      return policy;
    }
    aim = pass1 > options.target_pass1_max ? 0.8 * aim
                                            : std::min(0.95 * options.target_pass1_max, 1.15 * aim);
  }
  throw ActivationPriorError(
      "activation prior missed the target regime: pass@1=" +
          std::to_string(pass1) + " pass@" + std::to_string(options.k) + "=" +
          std::to_string(passk),
      pass1, passk);
}

Rollout sample_rollout(const ToyPolicy& policy, std::size_t entity,
                       int max_len, std::uint64_t seed, ParamSource source) {
  if (max_len < 1) throw std::invalid_argument("max_len must be >= 1");
  Rollout r;
  r.entity = entity;
  Engine eng(seed);
  std::vector<double> probs(static_cast<std::size_t>(policy.vocab()));
  int prev = kBos;
  for (int t = 0; t < max_len; ++t) {
    policy.next_probs(entity, prev, probs, source);
    double h = 0.0;
    for (double p : probs) {
      if (p > 0.0) h -= p * std::log(p);
    }
    int tok = 0;
    if (policy.temperature() == 0.0) {
      tok = static_cast<int>(std::max_element(probs.begin(), probs.end()) -
                             probs.begin());
    } else {
      const double u = uniform01(eng);
      double acc = 0.0;
      tok = -1;
      for (std::size_t j = 0; j < probs.size(); ++j) {
        if (probs[j] <= 0.0) continue;
        acc += probs[j];
        tok = static_cast<int>(j);
        if (u < acc) break;
      }
    }
    r.logp.tokens.push_back(tok);
    r.logp.old_logp.push_back(policy.log_prob(entity, prev, tok, source));
    r.entropy_sum += h;
    prev = tok;
    if (tok == kEos) break;
  }
  r.truncated = r.logp.tokens.back() != kEos;
  return r;
}

const char* to_string(Ablation ablation) noexcept {
  switch (ablation) {
    case Ablation::full:
      return "full";
    case Ablation::no_len_gate:
      return "no_len_gate";
    case Ablation::soft_format:
      return "soft_format";
    case Ablation::no_think:
      return "no_think";
  }
  return "?";
}

Ablation parse_ablation(std::string_view name) {
  if (name == "full") return Ablation::full;
  if (name == "no_len_gate") return Ablation::no_len_gate;
  if (name == "soft_format") return Ablation::soft_format;
  if (name == "no_think") return Ablation::no_think;
  throw std::invalid_argument("unknown ablation '" + std::string(name) +
                              "' (full, no_len_gate, soft_format, no_think)");
}

reward::RewardConfig toy_reward_config(reward::RewardConfig base,
                                       Ablation ablation) {
  base.length_unit = reward::LengthUnit::tokens;
  base.open_marker = "<think>";
  base.close_marker = "</think>";
  base.format_mode = reward::FormatMode::strict;
  base.length_gate_enabled = true;
  switch (ablation) {
    case Ablation::full:
      break;
    case Ablation::no_len_gate:
      base.length_gate_enabled = false;
      break;
    case Ablation::soft_format:
      base.format_mode = reward::FormatMode::soft;
      base.length_gate_enabled = false;
      break;
    case Ablation::no_think:
      base.format_mode = reward::FormatMode::none;
      break;
  }
  base.validate();
  return base;
}

std::span<const int> translation_tokens(std::span<const int> tokens,
                                        const reward::RewardConfig& config) {
  if (!tokens.empty() && tokens.back() == kEos) tokens = tokens.first(tokens.size() - 1);
  if (config.format_mode == reward::FormatMode::none) return tokens;
  const auto close = std::find(tokens.begin(), tokens.end(), kThinkClose);
  if (close == tokens.end()) return tokens;
  return tokens.subspan(static_cast<std::size_t>(close - tokens.begin()) + 1);
}

ScoredRollout score_rollout(const SyntheticLexicon& lexicon,
                            const Rollout& rollout,
                            const reward::RewardConfig& config) {
  return score_with_gold(lexicon, lexicon.gold(rollout.entity), rollout,
                         config);
}

CorrectCounts sample_correct_counts(const ToyPolicy& policy,
                                    const SyntheticLexicon& lexicon,
                                    std::span<const std::size_t> ids, int n,
                                    int max_len,
                                    const reward::RewardConfig& config,
                                    std::uint64_t seed, ParamSource source) {
  if (n < 1) throw std::invalid_argument("need at least one sample");
  CorrectCounts out{n, {}};
  out.counts.reserve(ids.size());
  for (std::size_t e : ids) {
    const auto gold = lexicon.gold(e);
    int hits = 0;
    for (int i = 0; i < n; ++i) {
      const Rollout r = sample_rollout(
          policy, e, max_len,
          derive_seed(seed, {e, static_cast<std::uint64_t>(i)}), source);
      if (score_with_gold(lexicon, gold, r, config).breakdown.match) ++hits;
    }
    out.counts.push_back(hits);
  }
  return out;
}

double pass_at_k(const CorrectCounts& counts, int k) {
  return evalkit::pass_at_k_curve({counts.n, counts.counts, {k}}).estimates[0];
}

void TrainOptions::validate() const {
  if (steps < 0) throw std::invalid_argument("steps must be >= 0");
  if (max_len < 1) throw std::invalid_argument("max_len must be >= 1");
  if (!(temperature > 0.0)) {
    throw std::invalid_argument("training temperature must be > 0");
  }
  if (eval_samples < 1 || eval_every < 1) {
    throw std::invalid_argument("eval_samples and eval_every must be >= 1");
  }
  if (!(warmup_ratio >= 0.0 && warmup_ratio < 1.0)) {
    throw std::invalid_argument("warmup_ratio must lie in [0, 1)");
  }
}

TrainResult train(const SyntheticLexicon& lexicon,
                  std::span<const std::size_t> train_ids, ToyPolicy policy,
                  const reward::RewardConfig& reward_config,
                  const optim::OptimConfig& optim_config,
                  const TrainOptions& options, Ablation ablation) {
  options.validate();
  optim_config.validate();
  lexicon.validate();
  if (train_ids.empty()) throw std::invalid_argument("no train entities");
  if (policy.contexts() != lexicon.entities.size() ||
      policy.vocab() != lexicon.vocab_size) {
    throw std::invalid_argument("policy shape does not match the lexicon");
  }
  const reward::RewardConfig cfg = toy_reward_config(reward_config, ablation);
  policy.set_temperature(options.temperature);

  std::vector<textnorm::GoldEntitySet> golds;
  golds.reserve(lexicon.entities.size());
  for (std::size_t e = 0; e < lexicon.entities.size(); ++e) {
    golds.push_back(lexicon.gold(e));
  }

  const auto batch = static_cast<std::size_t>(optim_config.train_batch_size());
  const auto group = static_cast<std::size_t>(optim_config.group_size);
  const auto warmup = static_cast<int>(options.warmup_ratio * options.steps);
  auto lr_scale = [&](int step) {
    if (step < warmup) return static_cast<double>(step + 1) / warmup;
    if (options.schedule == LrSchedule::constant) return 1.0;
    const double span = std::max(1, options.steps - warmup);
    return 0.5 * (1.0 + std::cos(std::numbers::pi * (step - warmup) / span));
  };

  // Prompts cycle through per-epoch shuffles of the train split.
  std::vector<std::size_t> epoch_order;
  std::uint64_t cached_epoch = std::numeric_limits<std::uint64_t>::max();
  auto prompt_at = [&](std::uint64_t global) {
    const std::uint64_t epoch = global / train_ids.size();
    if (epoch != cached_epoch) {
      epoch_order.assign(train_ids.begin(), train_ids.end());
      Engine eng(derive_seed(options.seed, {0xE90C, epoch}));
      fisher_yates(epoch_order, eng);
      cached_epoch = epoch;
    }
    return epoch_order[global % train_ids.size()];
  };

  TrainResult result{std::move(policy), {}, {}};
  ToyPolicy& pi = result.policy;
  optim::AdamState adam;
  double pass1 = 0.0;
  std::vector<optim::RolloutGroup> groups(batch);
  std::vector<std::vector<ScoredRollout>> scored(batch);
  std::vector<std::vector<double>> entropies(batch);

  for (int step = 0; step <= options.steps; ++step) {
    const auto ustep = static_cast<std::uint64_t>(step);
    pi.refresh_snapshot();

    if (step % options.eval_every == 0 || step == options.steps) {
      const CorrectCounts counts = sample_correct_counts(
          pi, lexicon, train_ids, options.eval_samples, options.max_len, cfg,
          derive_seed(options.seed, {0xE7A1, ustep}), ParamSource::snapshot);
      pass1 = pass_at_k(counts, 1);
    }

    for (std::size_t j = 0; j < batch; ++j) {
      groups[j].prompt_id = prompt_at(ustep * batch + j);
      groups[j].snapshot_version = pi.snapshot_version();
      groups[j].members.assign(group, {});
      groups[j].advantages.clear();
      scored[j].assign(group, {});
      entropies[j].assign(group, 0.0);
    }
    parallel_for(batch, options.workers, [&](std::size_t j) {
      const std::size_t e = groups[j].prompt_id;
      for (std::size_t i = 0; i < group; ++i) {
        Rollout r = sample_rollout(
            pi, e, options.max_len,
            derive_seed(options.seed, {ustep, j, i}), ParamSource::snapshot);
        scored[j][i] = score_with_gold(lexicon, golds[e], r, cfg);
        entropies[j][i] =
            r.entropy_sum / static_cast<double>(r.logp.tokens.size());
        groups[j].members[i].reward = scored[j][i].breakdown.reward;
        groups[j].members[i].logp = std::move(r.logp);
      }
    });

    TrainMetricsRow row;
    row.step = step;
    double n = 0.0;
    for (std::size_t j = 0; j < batch; ++j) {
      for (std::size_t i = 0; i < group; ++i) {
        row.mean_reward += scored[j][i].breakdown.reward;
        row.mean_trans_length += static_cast<double>(scored[j][i].trans_length);
        row.mean_entropy += entropies[j][i];
        n += 1.0;
      }
    }
    row.mean_reward /= n;
    row.mean_trans_length /= n;
    row.mean_entropy /= n;
    row.pass1_eval = pass1;
    result.metrics.push_back(row);

    if (step == options.steps) {
      for (auto& s : scored) {
        result.final_rollouts.insert(result.final_rollouts.end(), s.begin(),
                                     s.end());
      }
      break;
    }

    for (auto& g : groups) optim::assign_advantages(g, optim_config.std_floor);
    Engine update_rng(derive_seed(options.seed, {0x0DD, ustep}));
    optim::policy_update_step(pi, std::span<optim::RolloutGroup>(groups),
                              optim_config, adam, update_rng, lr_scale(step));
  }
  return result;
}

void write_metrics_csv(std::ostream& out,
                       std::span<const TrainMetricsRow> rows) {
  out << "step,mean_reward,mean_trans_length,mean_entropy,pass1_eval\n";
  char line[160];
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%d,%.6f,%.6f,%.6f,%.6f\n", r.step,
                  r.mean_reward, r.mean_trans_length, r.mean_entropy,
                  r.pass1_eval);
    out << line;
  }
}

}  // namespace verirl::toytask

#ifndef VERIRL_POLICY_HPP_
#define VERIRL_POLICY_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "json.hpp"

namespace verirl::toytask {

enum class ParamSource { current, snapshot };

// Context-conditioned bigram softmax policy: one logit row per
// (context, previous token). The first generated token is conditioned on
// BOS. Temperature 0 means greedy (first maximal logit).
class ToyPolicy {
 public:
  ToyPolicy(std::size_t contexts, int vocab, double temperature = 1.0);

  std::size_t contexts() const noexcept { return contexts_; }
  int vocab() const noexcept { return vocab_; }
  double temperature() const noexcept { return temperature_; }
  void set_temperature(double temperature);

  std::span<double> parameters() noexcept { return logits_; }
  std::span<const double> parameters() const noexcept { return logits_; }
  std::span<const double> snapshot() const noexcept { return old_logits_; }
  std::uint64_t snapshot_version() const noexcept { return version_; }

  // params_old <- params, and bumps the snapshot version.
  void refresh_snapshot();

  std::span<double> row(std::size_t ctx, int prev);
  std::span<const double> row(std::size_t ctx, int prev,
                              ParamSource src = ParamSource::current) const;

  void next_probs(std::size_t ctx, int prev, std::span<double> out,
                  ParamSource src = ParamSource::current) const;
  double log_prob(std::size_t ctx, int prev, int next,
                  ParamSource src = ParamSource::current) const;
  double entropy(std::size_t ctx, int prev,
                 ParamSource src = ParamSource::current) const;

  // Per-token log-probabilities of a generated sequence.
  void token_log_probs(std::size_t ctx, std::span<const int> tokens,
                       std::span<double> out,
                       ParamSource src = ParamSource::current) const;

  // grad += w * sum_t d log pi(y_t | ctx, y_{t-1}) / d logits.
  void accumulate_log_prob_grad(std::size_t ctx, std::span<const int> tokens,
                                double w, std::span<double> grad) const;

  nlohmann::json to_json() const;
  static ToyPolicy from_json(const nlohmann::json& doc);

 private:
  std::size_t offset(std::size_t ctx, int prev) const;

  std::size_t contexts_;
  int vocab_;
  double temperature_;
  std::uint64_t version_ = 0;
  std::vector<double> logits_;
  std::vector<double> old_logits_;
};

}  // namespace verirl::toytask

#endif  // VERIRL_POLICY_HPP_

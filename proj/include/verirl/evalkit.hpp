#ifndef VERIRL_EVALKIT_HPP_
#define VERIRL_EVALKIT_HPP_

#include <span>
#include <string_view>
#include <vector>

#include "verirl/reward.hpp"

namespace verirl::evalkit {

/// Unbiased pass@k from n samples with c correct: the probability that a
/// uniformly drawn k-subset holds at least one correct sample,
/// 1 - prod_{j<k} (n-c-j)/(n-j). Returns exactly 1.0 when n - c < k.
/// Throws std::invalid_argument unless 0 <= c <= n and 1 <= k <= n.
double pass_at_k(int n, int c, int k);

struct PassAtKInput {
  int n = 0;
  std::vector<int> counts;  // correct samples per problem
  std::vector<int> ks;      // sorted, each in [1, n]

  void validate() const;
};

struct PassAtKCurve {
  std::vector<int> ks;
  std::vector<double> estimates;
};

/// Mean over problems of pass_at_k(n, c_p, k) for every requested k.
PassAtKCurve pass_at_k_curve(const PassAtKInput& input);

/// Percentage of breakdowns with match = 1. With gated = true a sample
/// only counts when both gates also passed.
double entity_accuracy(std::span<const reward::RewardBreakdown> breakdowns,
                       bool gated = false);

/// Sentence-level character n-gram F-score in [0, 100]. Whitespace is
/// dropped before n-gram extraction; precision and recall are averaged
/// uniformly over orders 1..max_n before the F-beta combination.
double chrf(std::string_view hypothesis, std::string_view reference,
            int max_n = 6, double beta = 2.0);

}  // namespace verirl::evalkit

#endif  // VERIRL_EVALKIT_HPP_

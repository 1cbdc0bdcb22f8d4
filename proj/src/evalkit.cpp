#include "verirl/evalkit.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>

#include "verirl/textnorm.hpp"

namespace verirl::evalkit {

double pass_at_k(int n, int c, int k) {
  if (n < 1 || c < 0 || c > n || k < 1 || k > n) {
    throw std::invalid_argument(
        "pass@k needs 0 <= c <= n and 1 <= k <= n (n=" + std::to_string(n) +
        ", c=" + std::to_string(c) + ", k=" + std::to_string(k) + ")");
  }
  if (n - c < k) return 1.0;
  double all_wrong = 1.0;
  for (int j = 0; j < k; ++j) {
    all_wrong *= static_cast<double>(n - c - j) / static_cast<double>(n - j);
  }
  return 1.0 - all_wrong;
}

void PassAtKInput::validate() const {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  if (counts.empty()) throw std::invalid_argument("no problems in pass@k input");
  for (int c : counts) {
    if (c < 0 || c > n) {
      throw std::invalid_argument("correct count " + std::to_string(c) +
                                  " outside [0, " + std::to_string(n) + "]");
    }
  }
  if (!std::is_sorted(ks.begin(), ks.end())) {
    throw std::invalid_argument("ks must be sorted");
  }
  for (int k : ks) {
    if (k < 1 || k > n) {
      throw std::invalid_argument("k=" + std::to_string(k) + " outside [1, " +
                                  std::to_string(n) + "]");
    }
  }
}

PassAtKCurve pass_at_k_curve(const PassAtKInput& input) {
  input.validate();
  PassAtKCurve curve{input.ks, {}};
  curve.estimates.reserve(input.ks.size());
  for (int k : input.ks) {
    double sum = 0.0;
    for (int c : input.counts) sum += pass_at_k(input.n, c, k);
    curve.estimates.push_back(sum / static_cast<double>(input.counts.size()));
  }
  return curve;
}

double entity_accuracy(std::span<const reward::RewardBreakdown> breakdowns,
                       bool gated) {
  if (breakdowns.empty()) {
    throw std::invalid_argument("entity accuracy of an empty set");
  }
  std::size_t hits = 0;
  for (const auto& b : breakdowns) {
    if (b.match && (!gated || (b.fmt_gate && b.len_gate))) ++hits;
  }
  return 100.0 * static_cast<double>(hits) /
         static_cast<double>(breakdowns.size());
}

namespace {

using NgramCounts = std::map<std::u32string, int>;

std::u32string strip_whitespace(std::string_view text) {
  std::u32string out;
  for (char32_t cp : textnorm::to_codepoints(text)) {
    if (!textnorm::is_unicode_whitespace(cp)) out.push_back(cp);
  }
  return out;
}

NgramCounts ngrams(const std::u32string& s, std::size_t order) {
  NgramCounts counts;
  if (s.size() < order) return counts;
  for (std::size_t i = 0; i + order <= s.size(); ++i) {
    ++counts[s.substr(i, order)];
  }
  return counts;
}

}  // namespace

double chrf(std::string_view hypothesis, std::string_view reference,
            int max_n, double beta) {
  if (max_n < 1) throw std::invalid_argument("chrF max_n must be >= 1");
  if (!(beta > 0.0)) throw std::invalid_argument("chrF beta must be > 0");

  const std::u32string hyp = strip_whitespace(hypothesis);
  const std::u32string ref = strip_whitespace(reference);

  double precision_sum = 0.0;
  double recall_sum = 0.0;
  int orders = 0;
  for (int n = 1; n <= max_n; ++n) {
    const auto order = static_cast<std::size_t>(n);
    const NgramCounts h = ngrams(hyp, order);
    const NgramCounts r = ngrams(ref, order);
    if (h.empty() && r.empty()) continue;
    ++orders;
    if (h.empty() || r.empty()) continue;  // contributes P = R = 0

    int hyp_total = 0;
    int ref_total = 0;
    int matched = 0;
    for (const auto& [gram, count] : h) {
      hyp_total += count;
      if (auto it = r.find(gram); it != r.end()) {
        matched += std::min(count, it->second);
      }
    }
    for (const auto& [gram, count] : r) ref_total += count;
    precision_sum += static_cast<double>(matched) / hyp_total;
    recall_sum += static_cast<double>(matched) / ref_total;
  }

  if (orders == 0) return 100.0;  // both sides empty
  const double p = precision_sum / orders;
  const double r = recall_sum / orders;
  const double b2 = beta * beta;
  const double denom = b2 * p + r;
  if (denom == 0.0) return 0.0;
  return 100.0 * (1.0 + b2) * p * r / denom;
}

}  // namespace verirl::evalkit

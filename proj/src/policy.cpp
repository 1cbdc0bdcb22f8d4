#include "verirl/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "verirl/lexicon.hpp"

namespace verirl::toytask {

ToyPolicy::ToyPolicy(std::size_t contexts, int vocab, double temperature)
    : contexts_(contexts),
      vocab_(vocab),
      temperature_(temperature),
      logits_(contexts * static_cast<std::size_t>(vocab) *
                  static_cast<std::size_t>(vocab),
              0.0),
      old_logits_(logits_) {
  if (contexts == 0 || vocab < 2) {
    throw std::invalid_argument("policy needs >= 1 context and >= 2 tokens");
  }
  set_temperature(temperature);
}

void ToyPolicy::set_temperature(double temperature) {
  if (!(temperature >= 0.0) || !std::isfinite(temperature)) {
    throw std::invalid_argument("temperature must be >= 0");
  }
  temperature_ = temperature;
}

void ToyPolicy::refresh_snapshot() {
  old_logits_ = logits_;
  ++version_;
}

std::size_t ToyPolicy::offset(std::size_t ctx, int prev) const {
  if (ctx >= contexts_ || prev < 0 || prev >= vocab_) {
    throw std::out_of_range("policy row (" + std::to_string(ctx) + ", " +
                            std::to_string(prev) + ") out of range");
  }
  const auto v = static_cast<std::size_t>(vocab_);
  return (ctx * v + static_cast<std::size_t>(prev)) * v;
}

std::span<double> ToyPolicy::row(std::size_t ctx, int prev) {
  return std::span<double>(logits_).subspan(offset(ctx, prev),
                                            static_cast<std::size_t>(vocab_));
}

std::span<const double> ToyPolicy::row(std::size_t ctx, int prev,
                                       ParamSource src) const {
  const auto& table = src == ParamSource::current ? logits_ : old_logits_;
  return std::span<const double>(table).subspan(
      offset(ctx, prev), static_cast<std::size_t>(vocab_));
}

void ToyPolicy::next_probs(std::size_t ctx, int prev, std::span<double> out,
                           ParamSource src) const {
  const auto r = row(ctx, prev, src);
  if (temperature_ == 0.0) {
    std::fill(out.begin(), out.end(), 0.0);
    out[static_cast<std::size_t>(std::max_element(r.begin(), r.end()) -
                                 r.begin())] = 1.0;
    return;
  }
  const double top = *std::max_element(r.begin(), r.end());
  double z = 0.0;
  for (std::size_t j = 0; j < r.size(); ++j) {
    out[j] = std::exp((r[j] - top) / temperature_);
    z += out[j];
  }
  for (double& p : out) p /= z;
}

double ToyPolicy::log_prob(std::size_t ctx, int prev, int next,
                           ParamSource src) const {
  const auto r = row(ctx, prev, src);
  if (temperature_ == 0.0) {
    const auto best = std::max_element(r.begin(), r.end()) - r.begin();
    return best == next ? 0.0 : -std::numeric_limits<double>::infinity();
  }
  const double top = *std::max_element(r.begin(), r.end());
  double z = 0.0;
  for (double l : r) z += std::exp((l - top) / temperature_);
  return (r[static_cast<std::size_t>(next)] - top) / temperature_ - std::log(z);
}

double ToyPolicy::entropy(std::size_t ctx, int prev, ParamSource src) const {
  std::vector<double> p(static_cast<std::size_t>(vocab_));
  next_probs(ctx, prev, p, src);
  double h = 0.0;
  for (double q : p) {
    if (q > 0.0) h -= q * std::log(q);
  }
  return h;
}

void ToyPolicy::token_log_probs(std::size_t ctx, std::span<const int> tokens,
                                std::span<double> out, ParamSource src) const {
  int prev = kBos;
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    out[t] = log_prob(ctx, prev, tokens[t], src);
    prev = tokens[t];
  }
}

void ToyPolicy::accumulate_log_prob_grad(std::size_t ctx,
                                         std::span<const int> tokens, double w,
                                         std::span<double> grad) const {
  if (temperature_ == 0.0) {
    throw std::logic_error("greedy policy has no log-probability gradient");
  }
  const auto v = static_cast<std::size_t>(vocab_);
  std::vector<double> p(v);
  const double scale = w / temperature_;
  int prev = kBos;
  for (int tok : tokens) {
    next_probs(ctx, prev, p);
    const std::size_t base = offset(ctx, prev);
    for (std::size_t j = 0; j < v; ++j) grad[base + j] -= scale * p[j];
    grad[base + static_cast<std::size_t>(tok)] += scale;
    prev = tok;
  }
}

nlohmann::json ToyPolicy::to_json() const {
  return {{"contexts", contexts_},
          {"vocab", vocab_},
          {"temperature", temperature_},
          {"logits", logits_}};
}

ToyPolicy ToyPolicy::from_json(const nlohmann::json& doc) {
  ToyPolicy policy(doc.at("contexts").get<std::size_t>(),
                   doc.at("vocab").get<int>(),
                   doc.at("temperature").get<double>());
  auto logits = doc.at("logits").get<std::vector<double>>();
  if (logits.size() != policy.logits_.size()) {
    throw std::invalid_argument("policy logit table has the wrong size");
  }
  policy.logits_ = std::move(logits);
  policy.refresh_snapshot();
  return policy;
}

}  // namespace verirl::toytask

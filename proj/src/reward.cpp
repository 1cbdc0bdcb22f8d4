#include "verirl/reward.hpp"

#include <cmath>
#include <numeric>

namespace verirl::reward {

namespace {

bool is_space(char c) noexcept {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

std::size_t count_occurrences(std::string_view hay, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string_view::npos;
       pos = hay.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

ResponseSegments parse_strict(std::string_view raw, const RewardConfig& cfg) {
  ResponseSegments out{std::string(raw), false, {}, {}};
  const std::string_view open = cfg.open_marker;
  const std::string_view close = cfg.close_marker;

  std::size_t start = 0;
  while (start < raw.size() && is_space(raw[start])) ++start;
  if (raw.substr(start, open.size()) != open) return out;
  if (count_occurrences(raw, open) != 1) return out;
  if (count_occurrences(raw, close) != 1) return out;

  const std::size_t body = start + open.size();
  const std::size_t close_pos = raw.find(close, body);
  if (close_pos == std::string_view::npos) return out;

  const std::string_view trans = trim(raw.substr(close_pos + close.size()));
  if (trans.empty()) return out;

  out.format_valid = true;
  out.think = std::string(raw.substr(body, close_pos - body));
  out.trans = std::string(trans);
  return out;
}

ResponseSegments parse_soft(std::string_view raw, const RewardConfig& cfg) {
  ResponseSegments out{std::string(raw), false, {}, {}};
  const std::size_t open_pos = raw.find(cfg.open_marker);
  if (open_pos == std::string_view::npos) return out;
  const std::size_t body = open_pos + cfg.open_marker.size();
  const std::size_t close_pos = raw.find(cfg.close_marker, body);
  if (close_pos == std::string_view::npos) return out;

  out.format_valid = true;
  out.think = std::string(raw.substr(body, close_pos - body));
  std::string outside(trim(raw.substr(0, open_pos)));
  const std::string_view tail =
      trim(raw.substr(close_pos + cfg.close_marker.size()));
  if (!outside.empty() && !tail.empty()) outside += ' ';
  outside += tail;
  out.trans = std::move(outside);
  return out;
}

ResponseSegments parse_unformatted(std::string_view raw) {
  const std::string_view trans = trim(raw);
  return {std::string(raw), !trans.empty(), {}, std::string(trans)};
}

void check_refs(std::span<const std::size_t> ref_lengths) {
  if (ref_lengths.empty()) {
    throw MissingReferenceError("no reference lengths supplied");
  }
  for (std::size_t len : ref_lengths) {
    if (len == 0) throw MissingReferenceError("reference length must be > 0");
  }
}

}  // namespace

void RewardConfig::validate() const {
  if (!(alpha >= 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("alpha must lie in [0, 1)");
  }
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw std::invalid_argument("tau must be positive");
  }
  if (open_marker.empty() || close_marker.empty()) {
    throw std::invalid_argument("format markers must be non-empty");
  }
  if (open_marker == close_marker) {
    throw std::invalid_argument("open and close markers must differ");
  }
}

std::string_view trim(std::string_view text) noexcept {
  std::size_t b = 0;
  std::size_t e = text.size();
  while (b < e && is_space(text[b])) ++b;
  while (e > b && is_space(text[e - 1])) --e;
  return text.substr(b, e - b);
}

ResponseSegments parse_segments(std::string_view raw,
                                const RewardConfig& config) {
  switch (config.format_mode) {
    case FormatMode::strict:
      return parse_strict(raw, config);
    case FormatMode::soft:
      return parse_soft(raw, config);
    case FormatMode::none:
      return parse_unformatted(raw);
  }
  return {};
}

std::size_t measure_length(std::string_view text, LengthUnit unit) {
  const std::string_view t = trim(text);
  if (unit == LengthUnit::characters) return textnorm::codepoint_count(t);
  std::size_t tokens = 0;
  bool in_token = false;
  for (char c : t) {
    if (is_space(c)) {
      in_token = false;
    } else if (!in_token) {
      in_token = true;
      ++tokens;
    }
  }
  return tokens;
}

bool length_gate(std::string_view trans,
                 std::span<const std::size_t> ref_lengths,
                 const RewardConfig& config) {
  check_refs(ref_lengths);
  const double mean =
      static_cast<double>(std::accumulate(ref_lengths.begin(),
                                          ref_lengths.end(), std::size_t{0})) /
      static_cast<double>(ref_lengths.size());
  const double len =
      static_cast<double>(measure_length(trans, config.length_unit));
  return len <= config.tau * mean;
}

RewardBreakdown compute_reward(std::string_view raw,
                               const textnorm::GoldEntitySet& gold,
                               std::span<const std::size_t> ref_lengths,
                               const RewardConfig& config) {
  check_refs(ref_lengths);
  RewardBreakdown out;
  const ResponseSegments seg = parse_segments(raw, config);
  if (!seg.format_valid) return out;
  out.fmt_gate = true;
  out.len_gate = !config.length_gate_enabled ||
                 length_gate(seg.trans, ref_lengths, config);
  out.match = textnorm::match_entity(seg.trans, gold);
  if (out.len_gate) out.reward = config.alpha + (out.match ? 1.0 : 0.0);
  return out;
}

const char* to_string(LengthUnit unit) noexcept {
  return unit == LengthUnit::characters ? "characters" : "tokens";
}

const char* to_string(FormatMode mode) noexcept {
  switch (mode) {
    case FormatMode::strict:
      return "strict";
    case FormatMode::soft:
      return "soft";
    case FormatMode::none:
      return "none";
  }
  return "?";
}

LengthUnit parse_length_unit(std::string_view name) {
  if (name == "characters" || name == "chars") return LengthUnit::characters;
  if (name == "tokens") return LengthUnit::tokens;
  throw std::invalid_argument("unknown length unit '" + std::string(name) +
                              "'");
}

FormatMode parse_format_mode(std::string_view name) {
  if (name == "strict") return FormatMode::strict;
  if (name == "soft") return FormatMode::soft;
  if (name == "none") return FormatMode::none;
  throw std::invalid_argument("unknown format mode '" + std::string(name) +
                              "'");
}

}  // namespace verirl::reward

#ifndef VERIRL_REWARD_HPP_
#define VERIRL_REWARD_HPP_

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include "verirl/textnorm.hpp"

namespace verirl::reward {

enum class LengthUnit { characters, tokens };

// strict: exactly one OPEN at the start (modulo whitespace), exactly one
//         CLOSE after it, non-empty translation after CLOSE.
// soft:   any output containing OPEN ... CLOSE somewhere is eligible; the
//         translation is everything outside the first such block.
// none:   no format gate; the whole output is the translation.
enum class FormatMode { strict, soft, none };

struct RewardConfig {
  double alpha = 0.2;
  double tau = 2.0;
  std::string open_marker = "<think>";
  std::string close_marker = "</think>";
  LengthUnit length_unit = LengthUnit::characters;
  FormatMode format_mode = FormatMode::strict;
  bool length_gate_enabled = true;

  // Throws std::invalid_argument on alpha outside [0,1), tau <= 0 or
  // empty markers.
  void validate() const;

  double max_reward() const noexcept { return alpha + 1.0; }
};

struct ResponseSegments {
  std::string raw;
  bool format_valid = false;
  std::string think;
  std::string trans;
};

struct RewardBreakdown {
  bool fmt_gate = false;
  bool len_gate = false;
  bool match = false;
  double reward = 0.0;

  friend bool operator==(const RewardBreakdown&,
                         const RewardBreakdown&) = default;
};

// Raised when a scoring call has no usable reference lengths.
class MissingReferenceError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

ResponseSegments parse_segments(std::string_view raw,
                                const RewardConfig& config);

// Code points, or whitespace-delimited tokens, of the trimmed text.
std::size_t measure_length(std::string_view text, LengthUnit unit);

// Inclusive bound: len(trans) <= tau * mean(ref_lengths).
// Throws MissingReferenceError for an empty list or a zero length.
bool length_gate(std::string_view trans,
                 std::span<const std::size_t> ref_lengths,
                 const RewardConfig& config);

RewardBreakdown compute_reward(std::string_view raw,
                               const textnorm::GoldEntitySet& gold,
                               std::span<const std::size_t> ref_lengths,
                               const RewardConfig& config);

std::string_view trim(std::string_view text) noexcept;

const char* to_string(LengthUnit unit) noexcept;
const char* to_string(FormatMode mode) noexcept;
LengthUnit parse_length_unit(std::string_view name);
FormatMode parse_format_mode(std::string_view name);

}  // namespace verirl::reward

#endif  // VERIRL_REWARD_HPP_

#ifndef VERIRL_TEXTNORM_HPP_
#define VERIRL_TEXTNORM_HPP_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace verirl::textnorm {

// Text that is lowercased, stripped of diacritics, with whitespace runs
// collapsed to one space and no leading/trailing whitespace. Only
// normalize() can produce one.
class NormalizedText {
 public:
  NormalizedText() = default;

  const std::string& str() const noexcept { return value_; }
  bool empty() const noexcept { return value_.empty(); }

  // Byte-level search is exact here: both sides are NFC UTF-8.
  bool contains(const NormalizedText& needle) const noexcept {
    return value_.find(needle.value_) != std::string::npos;
  }

  friend bool operator==(const NormalizedText&, const NormalizedText&) = default;

 private:
  friend NormalizedText normalize(std::string_view text);
  explicit NormalizedText(std::string value) : value_(std::move(value)) {}

  std::string value_;
};

// Lowercase (default Unicode simple mapping, no locale tailoring), strip
// diacritics via canonical decomposition, collapse whitespace, recompose.
// Ill-formed UTF-8 sequences are replaced by U+FFFD; callers that care
// should check is_valid_utf8() first.
NormalizedText normalize(std::string_view text);

bool is_valid_utf8(std::string_view text) noexcept;

// Decodes UTF-8 into code points. Invalid sequences become U+FFFD.
std::u32string to_codepoints(std::string_view text);

std::size_t codepoint_count(std::string_view text);

bool is_unicode_whitespace(char32_t cp) noexcept;

// True for code points in the combining diacritical mark blocks that
// normalize() deletes after decomposition.
bool is_stripped_diacritic(char32_t cp) noexcept;

// The acceptable surface forms for one entity.
class GoldEntitySet {
 public:
  // Throws std::invalid_argument when aliases is empty or any alias
  // normalizes to the empty string.
  GoldEntitySet(std::string entity_id, std::vector<std::string> aliases);

  const std::string& entity_id() const noexcept { return entity_id_; }
  const std::vector<std::string>& aliases() const noexcept { return aliases_; }
  const std::vector<NormalizedText>& normalized_aliases() const noexcept {
    return normalized_;
  }

 private:
  std::string entity_id_;
  std::vector<std::string> aliases_;
  std::vector<NormalizedText> normalized_;
};

// 1 iff some normalized alias is a contiguous substring of the normalized
// translation.
bool match_entity(std::string_view translation, const GoldEntitySet& gold);

// Number of non-overlapping alias occurrences in the normalized
// translation, scanning left to right and taking the longest alias that
// matches at each position.
std::size_t count_alias_occurrences(std::string_view translation,
                                    const GoldEntitySet& gold);

}  // namespace verirl::textnorm

#endif  // VERIRL_TEXTNORM_HPP_

#include "verirl/textnorm.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <stdexcept>

namespace verirl::textnorm {

namespace {

const icu::Normalizer2& nfd() {
  static const icu::Normalizer2* instance = [] {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* n = icu::Normalizer2::getNFDInstance(status);
    if (U_FAILURE(status)) throw std::runtime_error("ICU NFD unavailable");
    return n;
  }();
  return *instance;
}

const icu::Normalizer2& nfc() {
  static const icu::Normalizer2* instance = [] {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* n = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status)) throw std::runtime_error("ICU NFC unavailable");
    return n;
  }();
  return *instance;
}

}  // namespace

bool is_stripped_diacritic(char32_t cp) noexcept {
  return (cp >= 0x0300 && cp <= 0x036F) ||  // Combining Diacritical Marks
         (cp >= 0x1AB0 && cp <= 0x1AFF) ||  // ... Extended
         (cp >= 0x1DC0 && cp <= 0x1DFF) ||  // ... Supplement
         (cp >= 0x20D0 && cp <= 0x20FF) ||  // ... for Symbols
         (cp >= 0xFE20 && cp <= 0xFE2F);    // Combining Half Marks
}

bool is_unicode_whitespace(char32_t cp) noexcept {
  return u_isUWhiteSpace(static_cast<UChar32>(cp));
}

NormalizedText normalize(std::string_view text) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::UnicodeString source = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  const icu::UnicodeString decomposed = nfd().normalize(source, status);
  if (U_FAILURE(status)) throw std::runtime_error("NFD normalization failed");

  icu::UnicodeString folded;
  bool pending_space = false;
  for (int32_t i = 0; i < decomposed.length();) {
    const UChar32 cp = decomposed.char32At(i);
    i += U16_LENGTH(cp);
    if (u_isUWhiteSpace(cp)) {
      pending_space = !folded.isEmpty();
      continue;
    }
    if (is_stripped_diacritic(static_cast<char32_t>(cp))) continue;
    if (pending_space) {
      folded.append(static_cast<UChar>(u' '));
      pending_space = false;
    }
    folded.append(u_tolower(cp));
  }

  const icu::UnicodeString composed = nfc().normalize(folded, status);
  if (U_FAILURE(status)) throw std::runtime_error("NFC normalization failed");
  std::string out;
  composed.toUTF8String(out);
  return NormalizedText(std::move(out));
}

bool is_valid_utf8(std::string_view text) noexcept {
  const auto* bytes = reinterpret_cast<const uint8_t*>(text.data());
  const auto length = static_cast<int32_t>(text.size());
  int32_t i = 0;
  while (i < length) {
    UChar32 cp;
    U8_NEXT(bytes, i, length, cp);
    if (cp < 0) return false;
  }
  return true;
}

std::u32string to_codepoints(std::string_view text) {
  const auto* bytes = reinterpret_cast<const uint8_t*>(text.data());
  const auto length = static_cast<int32_t>(text.size());
  std::u32string out;
  out.reserve(text.size());
  int32_t i = 0;
  while (i < length) {
    UChar32 cp;
    U8_NEXT(bytes, i, length, cp);
    out.push_back(cp < 0 ? U'�' : static_cast<char32_t>(cp));
  }
  return out;
}

std::size_t codepoint_count(std::string_view text) {
  return to_codepoints(text).size();
}

GoldEntitySet::GoldEntitySet(std::string entity_id,
                             std::vector<std::string> aliases)
    : entity_id_(std::move(entity_id)), aliases_(std::move(aliases)) {
  if (aliases_.empty()) {
    throw std::invalid_argument("gold entity set '" + entity_id_ +
                                "' has no aliases");
  }
  normalized_.reserve(aliases_.size());
  for (const auto& alias : aliases_) {
    NormalizedText n = normalize(alias);
    if (n.empty()) {
      throw std::invalid_argument("gold entity set '" + entity_id_ +
                                  "' has an alias that normalizes to empty");
    }
    normalized_.push_back(std::move(n));
  }
}

bool match_entity(std::string_view translation, const GoldEntitySet& gold) {
  const NormalizedText hay = normalize(translation);
  for (const auto& alias : gold.normalized_aliases()) {
    if (hay.contains(alias)) return true;
  }
  return false;
}

std::size_t count_alias_occurrences(std::string_view translation,
                                    const GoldEntitySet& gold) {
  const std::string hay = normalize(translation).str();
  std::size_t count = 0;
  std::size_t pos = 0;
  while (pos < hay.size()) {
    std::size_t best = 0;
    for (const auto& alias : gold.normalized_aliases()) {
      const std::string& a = alias.str();
      if (a.size() > best && hay.compare(pos, a.size(), a) == 0) best = a.size();
    }
    if (best > 0) {
      ++count;
      pos += best;
    } else {
      ++pos;
    }
  }
  return count;
}

}  // namespace verirl::textnorm

#ifndef VERIRL_LEXICON_HPP_
#define VERIRL_LEXICON_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "verirl/textnorm.hpp"

namespace verirl::toytask {

enum SpecialToken : int {
  kBos = 0,
  kEos = 1,
  kThinkOpen = 2,
  kThinkClose = 3,
  kSrcMark = 4,
  kNumSpecial = 5,
};

using TokenSeq = std::vector<int>;

struct EntityEntry {
  std::string entity_id;
  int source_token = 0;  // index into the source-side alphabet
  std::vector<TokenSeq> aliases;
  TokenSeq canonical_ref;  // reference for the length gate
};

// A synthetic target-language vocabulary with entity aliases. Tokens
// render as fixed-width words ("w07") so character-level substring
// matching on the rendered text lines up with token boundaries.
struct SyntheticLexicon {
  int vocab_size = 0;
  std::vector<EntityEntry> entities;

  bool is_content(int token) const noexcept {
    return token >= kNumSpecial && token < vocab_size;
  }
  int content_count() const noexcept { return vocab_size - kNumSpecial; }

  std::string token_text(int token) const;
  // Space-joined rendering; BOS and EOS are omitted.
  std::string render(std::span<const int> tokens) const;
  std::string render_prompt(std::size_t entity) const;
  textnorm::GoldEntitySet gold(std::size_t entity) const;
  std::size_t ref_length(std::size_t entity) const {
    return entities.at(entity).canonical_ref.size();
  }

  // Throws std::invalid_argument on any broken invariant.
  void validate() const;
};

struct LexiconOptions {
  std::uint64_t seed = 42;
  int vocab_size = 48;
  int n_entities = 20;
  int aliases_per_entity = 3;
  int alias_len_min = 2;
  int alias_len_max = 4;
  double train_fraction = 0.75;
  int max_retries = 10000;

  void validate() const;
};

struct GeneratedLexicon {
  SyntheticLexicon lexicon;
  std::vector<std::size_t> train_ids;  // indices into lexicon.entities
  std::vector<std::size_t> test_ids;
};

// Deterministic for a fixed seed. Aliases never contain (or are contained
// in) an alias of another entity; collisions are redrawn up to
// max_retries times before giving up with std::runtime_error.
GeneratedLexicon gen_lexicon(const LexiconOptions& options);

// True when needle occurs as a contiguous run inside hay.
bool contains_run(std::span<const int> hay, std::span<const int> needle);

nlohmann::json to_json(const GeneratedLexicon& generated);
GeneratedLexicon lexicon_from_json(const nlohmann::json& doc);

// Prompt records for one split, in the batch-scoring record layout
// (id, source, gold_aliases, ref_lengths).
nlohmann::json split_prompts_json(const GeneratedLexicon& generated,
                                  std::span<const std::size_t> ids);

}  // namespace verirl::toytask

#endif  // VERIRL_LEXICON_HPP_

#include "verirl/lexicon.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <stdexcept>

#include "verirl/rng.hpp"

namespace verirl::toytask {

namespace {

int digits(int v) {
  int d = 1;
  while (v >= 10) {
    v /= 10;
    ++d;
  }
  return d;
}

std::string padded(char prefix, int index, int width) {
  std::string num = std::to_string(index);
  if (static_cast<int>(num.size()) < width) {
    num.insert(0, static_cast<std::size_t>(width) - num.size(), '0');
  }
  return prefix + num;
}

bool conflicts(const TokenSeq& a, const TokenSeq& b) {
  return a.size() <= b.size() ? contains_run(b, a) : contains_run(a, b);
}

}  // namespace

bool contains_run(std::span<const int> hay, std::span<const int> needle) {
  if (needle.empty()) return true;
  return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) !=
         hay.end();
}

std::string SyntheticLexicon::token_text(int token) const {
  switch (token) {
    case kBos:
      return "<bos>";
    case kEos:
      return "<eos>";
    case kThinkOpen:
      return "<think>";
    case kThinkClose:
      return "</think>";
    case kSrcMark:
      return "<src>";
    default:
      break;
  }
  if (!is_content(token)) {
    throw std::out_of_range("token " + std::to_string(token) +
                            " outside vocabulary");
  }
  return padded('w', token - kNumSpecial,
                std::max(2, digits(content_count() - 1)));
}

std::string SyntheticLexicon::render(std::span<const int> tokens) const {
  std::string out;
  for (int t : tokens) {
    if (t == kBos || t == kEos) continue;
    if (!out.empty()) out += ' ';
    out += token_text(t);
  }
  return out;
}

std::string SyntheticLexicon::render_prompt(std::size_t entity) const {
  const int width = std::max(2, digits(static_cast<int>(entities.size()) - 1));
  return "<src> " + padded('s', entities.at(entity).source_token, width);
}

textnorm::GoldEntitySet SyntheticLexicon::gold(std::size_t entity) const {
  const EntityEntry& e = entities.at(entity);
  std::vector<std::string> aliases;
  aliases.reserve(e.aliases.size());
  for (const auto& a : e.aliases) aliases.push_back(render(a));
  return {e.entity_id, std::move(aliases)};
}

void SyntheticLexicon::validate() const {
  if (vocab_size <= kNumSpecial) {
    throw std::invalid_argument("vocabulary has no content tokens");
  }
  std::set<std::string> ids;
  for (const auto& e : entities) {
    if (!ids.insert(e.entity_id).second) {
      throw std::invalid_argument("duplicate entity id " + e.entity_id);
    }
    if (e.aliases.empty()) {
      throw std::invalid_argument("entity " + e.entity_id + " has no aliases");
    }
    for (const auto& a : e.aliases) {
      if (a.empty()) throw std::invalid_argument("empty alias");
      for (int t : a) {
        if (!is_content(t)) {
          throw std::invalid_argument("alias of " + e.entity_id +
                                      " holds a non-content token");
        }
      }
    }
    if (e.canonical_ref.empty()) {
      throw std::invalid_argument("entity " + e.entity_id +
                                  " has no canonical reference");
    }
  }
}

void LexiconOptions::validate() const {
  if (n_entities < 2) throw std::invalid_argument("need at least 2 entities");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("train_fraction must lie in (0, 1)");
  }
  if (aliases_per_entity < 1) {
    throw std::invalid_argument("aliases_per_entity must be >= 1");
  }
  if (alias_len_min < 1 || alias_len_max < alias_len_min) {
    throw std::invalid_argument("invalid alias length range");
  }
  if (vocab_size <= kNumSpecial + 1) {
    throw std::invalid_argument("vocab_size leaves fewer than 2 content tokens");
  }
}

GeneratedLexicon gen_lexicon(const LexiconOptions& options) {
  options.validate();
  Engine eng(derive_seed(options.seed, {0x1e1c0}));
  GeneratedLexicon out;
  SyntheticLexicon& lex = out.lexicon;
  lex.vocab_size = options.vocab_size;
  const auto content = static_cast<std::size_t>(lex.content_count());
  const auto len_span =
      static_cast<std::size_t>(options.alias_len_max - options.alias_len_min + 1);

  std::vector<TokenSeq> taken;  // aliases of previously built entities
  int retries = 0;
  const int id_width = std::max(3, digits(options.n_entities - 1));
  for (int e = 0; e < options.n_entities; ++e) {
    EntityEntry entry;
    entry.entity_id = padded('e', e, id_width);
    entry.source_token = e;
    while (static_cast<int>(entry.aliases.size()) < options.aliases_per_entity) {
      TokenSeq alias(static_cast<std::size_t>(options.alias_len_min) +
                     uniform_index(eng, len_span));
      for (int& t : alias) {
        t = kNumSpecial + static_cast<int>(uniform_index(eng, content));
      }
      const bool clash =
          std::any_of(taken.begin(), taken.end(),
                      [&](const TokenSeq& o) { return conflicts(alias, o); }) ||
          std::any_of(entry.aliases.begin(), entry.aliases.end(),
                      [&](const TokenSeq& o) { return conflicts(alias, o); });
      if (clash) {
        if (++retries > options.max_retries) {
          throw std::runtime_error(
              "could not draw collision-free aliases after " +
              std::to_string(options.max_retries) +
              " retries; enlarge the vocabulary or shorten the lexicon");
        }
        continue;
      }
      entry.aliases.push_back(std::move(alias));
    }
    entry.canonical_ref = entry.aliases.front();
    taken.insert(taken.end(), entry.aliases.begin(), entry.aliases.end());
    lex.entities.push_back(std::move(entry));
  }

  std::vector<std::size_t> order(lex.entities.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  fisher_yates(order, eng);
  auto n_train = static_cast<std::size_t>(
      std::lround(options.train_fraction * options.n_entities));
  n_train = std::clamp<std::size_t>(n_train, 1, order.size() - 1);
  out.train_ids.assign(order.begin(), order.begin() + static_cast<long>(n_train));
  out.test_ids.assign(order.begin() + static_cast<long>(n_train), order.end());
  std::sort(out.train_ids.begin(), out.train_ids.end());
  std::sort(out.test_ids.begin(), out.test_ids.end());
  lex.validate();
  return out;
}

nlohmann::json to_json(const GeneratedLexicon& generated) {
  const SyntheticLexicon& lex = generated.lexicon;
  nlohmann::json entities = nlohmann::json::array();
  for (const auto& e : lex.entities) {
    entities.push_back({{"entity_id", e.entity_id},
                        {"source_token", e.source_token},
                        {"aliases", e.aliases},
                        {"canonical_ref", e.canonical_ref}});
  }
  return {{"vocab_size", lex.vocab_size},
          {"special_tokens",
           {{"BOS", kBos},
            {"EOS", kEos},
            {"THINK_OPEN", kThinkOpen},
            {"THINK_CLOSE", kThinkClose},
            {"SRC_MARK", kSrcMark}}},
          {"entities", std::move(entities)},
          {"train_ids", generated.train_ids},
          {"test_ids", generated.test_ids}};
}

GeneratedLexicon lexicon_from_json(const nlohmann::json& doc) {
  GeneratedLexicon out;
  out.lexicon.vocab_size = doc.at("vocab_size").get<int>();
  for (const auto& e : doc.at("entities")) {
    EntityEntry entry;
    entry.entity_id = e.at("entity_id").get<std::string>();
    entry.source_token = e.at("source_token").get<int>();
    entry.aliases = e.at("aliases").get<std::vector<TokenSeq>>();
    entry.canonical_ref = e.at("canonical_ref").get<TokenSeq>();
    out.lexicon.entities.push_back(std::move(entry));
  }
  out.train_ids = doc.at("train_ids").get<std::vector<std::size_t>>();
  out.test_ids = doc.at("test_ids").get<std::vector<std::size_t>>();
  out.lexicon.validate();
  for (auto id : out.train_ids) {
    if (id >= out.lexicon.entities.size()) {
      throw std::invalid_argument("train id out of range");
    }
  }
  for (auto id : out.test_ids) {
    if (id >= out.lexicon.entities.size()) {
      throw std::invalid_argument("test id out of range");
    }
  }
  return out;
}

nlohmann::json split_prompts_json(const GeneratedLexicon& generated,
                                  std::span<const std::size_t> ids) {
  const SyntheticLexicon& lex = generated.lexicon;
  nlohmann::json prompts = nlohmann::json::array();
  for (std::size_t id : ids) {
    const EntityEntry& e = lex.entities.at(id);
    std::vector<std::string> aliases;
    for (const auto& a : e.aliases) aliases.push_back(lex.render(a));
    prompts.push_back({{"id", e.entity_id},
                       {"entity_index", id},
                       {"source", lex.render_prompt(id)},
                       {"gold_aliases", aliases},
                       {"ref_lengths", {e.canonical_ref.size()}},
                       {"length_unit", "tokens"}});
  }
  return prompts;
}

}  // namespace verirl::toytask

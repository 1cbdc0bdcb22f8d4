#include "verirl/records.hpp"

#include "verirl/evalkit.hpp"
#include "verirl/textnorm.hpp"

namespace verirl::app {

namespace {

using nlohmann::json;

std::string utf8_field(const json& v, const std::string& what) {
  if (!v.is_string()) throw RecordError(what + " must be a string");
  std::string s = v.get<std::string>();
  if (!textnorm::is_valid_utf8(s)) {
    throw RecordError(what + " is not valid UTF-8");
  }
  return s;
}

}  // namespace

RolloutRecord parse_record(const json& doc, const reward::RewardConfig& config) {
  if (!doc.is_object()) throw RecordError("record must be a JSON object");
  RolloutRecord r;
  if (!doc.contains("id")) throw RecordError("missing field 'id'");
  const json& id = doc.at("id");
  if (id.is_string()) {
    r.id = utf8_field(id, "id");
  } else if (id.is_number_integer()) {
    r.id = id.dump();
  } else {
    throw RecordError("id must be a string or integer");
  }
  if (!doc.contains("response")) throw RecordError("missing field 'response'");
  r.response = utf8_field(doc.at("response"), "response");

  if (!doc.contains("gold_aliases")) {
    throw RecordError("missing field 'gold_aliases'");
  }
  const json& gold = doc.at("gold_aliases");
  if (!gold.is_array() || gold.empty()) {
    throw RecordError("gold_aliases must be a non-empty list of strings");
  }
  for (const auto& a : gold) r.gold_aliases.push_back(utf8_field(a, "alias"));

  const bool has_lengths = doc.contains("ref_lengths");
  const bool has_refs = doc.contains("refs");
  if (has_lengths == has_refs) {
    throw RecordError("exactly one of 'ref_lengths' or 'refs' is required");
  }
  if (has_lengths) {
    const json& lens = doc.at("ref_lengths");
    if (!lens.is_array() || lens.empty()) {
      throw RecordError("ref_lengths must be a non-empty list");
    }
    for (const auto& l : lens) {
      if (!l.is_number_integer() || l.get<long long>() < 1) {
        throw RecordError("ref_lengths must hold positive integers");
      }
      r.ref_lengths.push_back(l.get<std::size_t>());
    }
  } else {
    const json& refs = doc.at("refs");
    if (!refs.is_array() || refs.empty()) {
      throw RecordError("refs must be a non-empty list of strings");
    }
    for (const auto& ref : refs) {
      const std::size_t n =
          reward::measure_length(utf8_field(ref, "ref"), config.length_unit);
      if (n == 0) throw RecordError("empty reference translation");
      r.ref_lengths.push_back(n);
    }
  }
  return r;
}

reward::RewardBreakdown score_record(const RolloutRecord& record,
                                     const reward::RewardConfig& config) {
  try {
    const textnorm::GoldEntitySet gold(record.id, record.gold_aliases);
    return reward::compute_reward(record.response, gold, record.ref_lengths,
                                  config);
  } catch (const std::invalid_argument& e) {
    throw RecordError(e.what());
  }
}

json breakdown_json(const std::string& id, const reward::RewardBreakdown& b) {
  return {{"id", id},
          {"reward", b.reward},
          {"fmt", b.fmt_gate ? 1 : 0},
          {"len", b.len_gate ? 1 : 0},
          {"match", b.match ? 1 : 0}};
}

json error_json(const json& id, const std::string& message,
                std::optional<std::size_t> line) {
  json out = {{"id", id}, {"error", message}};
  if (line) out["line"] = *line;
  return out;
}

json score_line(std::string_view line, const reward::RewardConfig& config,
                std::optional<std::size_t> line_no) {
  json doc;
  try {
    doc = json::parse(line);
  } catch (const json::parse_error& e) {
    return error_json(nullptr, std::string("malformed JSON: ") + e.what(),
                      line_no);
  }
  json id = nullptr;
  if (doc.is_object() && doc.contains("id") &&
      (doc["id"].is_string() || doc["id"].is_number_integer())) {
    id = doc["id"];
  }
  try {
    const RolloutRecord rec = parse_record(doc, config);
    return breakdown_json(rec.id, score_record(rec, config));
  } catch (const std::invalid_argument& e) {
    return error_json(id, e.what(), line_no);
  }
}

std::string to_line(const json& reply) {
  return reply.dump(-1, ' ', false, json::error_handler_t::replace);
}

std::optional<reward::RewardBreakdown> parse_breakdown(const json& reply) {
  if (!reply.is_object() || reply.contains("error")) return std::nullopt;
  reward::RewardBreakdown b;
  b.reward = reply.at("reward").get<double>();
  b.fmt_gate = reply.at("fmt").get<int>() == 1;
  b.len_gate = reply.at("len").get<int>() == 1;
  b.match = reply.at("match").get<int>() == 1;
  return b;
}

ScoreSummary summarize(std::span<const reward::RewardBreakdown> breakdowns,
                       std::size_t n_errors) {
  ScoreSummary s;
  s.n_records = breakdowns.size();
  s.n_errors = n_errors;
  if (breakdowns.empty()) return s;
  double total = 0.0;
  for (const auto& b : breakdowns) {
    total += b.reward;
    if (!b.fmt_gate) {
      ++s.fmt_failures;
    } else if (!b.len_gate) {
      ++s.len_failures;
    }
  }
  s.mean_reward = total / static_cast<double>(breakdowns.size());
  s.entity_accuracy_pct = evalkit::entity_accuracy(breakdowns);
  return s;
}

ScoreSummary summarize_replies(std::span<const json> replies) {
  std::vector<reward::RewardBreakdown> bs;
  std::size_t errors = 0;
  for (const auto& r : replies) {
    if (auto b = parse_breakdown(r)) {
      bs.push_back(*b);
    } else {
      ++errors;
    }
  }
  return summarize(bs, errors);
}

json to_json(const ScoreSummary& s) {
  return {{"n_records", s.n_records},
          {"n_errors", s.n_errors},
          {"entity_accuracy_pct", s.entity_accuracy_pct},
          {"mean_reward", s.mean_reward},
          {"gate_failure_counts",
           {{"fmt", s.fmt_failures}, {"len", s.len_failures}}}};
}

}  // namespace verirl::app

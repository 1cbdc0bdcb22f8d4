#ifndef VERIRL_RECORDS_HPP_
#define VERIRL_RECORDS_HPP_

// Line-delimited JSON records shared by batch scoring and the service.

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "verirl/reward.hpp"

namespace verirl::app {

class RecordError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct RolloutRecord {
  std::string id;
  std::string response;
  std::vector<std::string> gold_aliases;
  std::vector<std::size_t> ref_lengths;  // derived from refs when given
};

// Accepts ref_lengths or refs (exactly one). All strings must be valid
// UTF-8. Throws RecordError with a readable message otherwise.
RolloutRecord parse_record(const nlohmann::json& doc,
                           const reward::RewardConfig& config);

reward::RewardBreakdown score_record(const RolloutRecord& record,
                                     const reward::RewardConfig& config);

// {id, reward, fmt, len, match}
nlohmann::json breakdown_json(const std::string& id,
                              const reward::RewardBreakdown& b);

// {id or null, error[, line]}
nlohmann::json error_json(const nlohmann::json& id, const std::string& message,
                          std::optional<std::size_t> line = std::nullopt);

// Scores one request line and returns the reply object. Never throws on
// bad input; line numbers, when given, are attached to error replies.
nlohmann::json score_line(std::string_view line,
                          const reward::RewardConfig& config,
                          std::optional<std::size_t> line_no = std::nullopt);

// Compact single-line serialization; invalid UTF-8 in error messages is
// replaced rather than thrown on.
std::string to_line(const nlohmann::json& reply);

// Reads a breakdown back from a reply; nullopt for error replies.
std::optional<reward::RewardBreakdown> parse_breakdown(
    const nlohmann::json& reply);

struct ScoreSummary {
  std::size_t n_records = 0;  // scored records
  std::size_t n_errors = 0;   // lines answered with an error object
  double entity_accuracy_pct = 0.0;
  double mean_reward = 0.0;
  std::size_t fmt_failures = 0;
  std::size_t len_failures = 0;  // among format-valid records

  friend bool operator==(const ScoreSummary&, const ScoreSummary&) = default;
};

ScoreSummary summarize(std::span<const reward::RewardBreakdown> breakdowns,
                       std::size_t n_errors);
// Summary over a list of reply objects.
ScoreSummary summarize_replies(std::span<const nlohmann::json> replies);

nlohmann::json to_json(const ScoreSummary& summary);

}  // namespace verirl::app

#endif  // VERIRL_RECORDS_HPP_

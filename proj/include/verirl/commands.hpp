#ifndef VERIRL_COMMANDS_HPP_
#define VERIRL_COMMANDS_HPP_

// Subcommand implementations behind the verirl executable. Each returns a
// process exit status and reports on the given streams.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "verirl/config.hpp"
#include "verirl/lexicon.hpp"
#include "verirl/records.hpp"
#include "verirl/toytask.hpp"

namespace verirl::app {

namespace fs = std::filesystem;

// Flag values that, when set, win over the config file.
struct RewardOverrides {
  std::optional<double> alpha;
  std::optional<double> tau;
  std::optional<std::string> length_unit;
  std::optional<std::string> format_mode;
};

AppConfig resolve_config(const std::string& config_flag,
                         const RewardOverrides& overrides = {});

struct ScoreOptions {
  fs::path input;
  fs::path output;
  std::string config;  // empty: fall back to $VERIRL_CONFIG
  RewardOverrides overrides;
};

// Scores every line of `input` into `output`, one reply per line. Throws
// std::runtime_error for unreadable or empty input; nothing is written
// in that case.
ScoreSummary score_file(const fs::path& input, const fs::path& output,
                        const reward::RewardConfig& config);

int cmd_score(const ScoreOptions& options, std::ostream& out,
              std::ostream& err);

struct ServeOptions {
  std::string bind = "127.0.0.1:8765";
  std::string config;
  bool stdio = false;
  RewardOverrides overrides;
};

int cmd_serve(const ServeOptions& options, std::istream& in, std::ostream& out,
              std::ostream& err);

// "1,2,4,...,128" style lists; "..." continues the ratio (or step) of the
// two preceding values up to the value after it. Result is sorted and
// de-duplicated; every k must lie in [1, n].
std::vector<int> parse_ks(const std::string& text, int n);

struct PassKOptions {
  fs::path input;
  std::string ks;  // empty: powers of two up to n
  fs::path output;
};

int cmd_passk(const PassKOptions& options, std::ostream& out,
              std::ostream& err);

struct GenOptions {
  toytask::LexiconOptions lexicon;
  fs::path out_dir;
};

int cmd_gen(const GenOptions& options, std::ostream& out, std::ostream& err);

struct TrainCmdOptions {
  std::string config;
  std::string ablation = "full";
  std::optional<std::uint64_t> seed;
  std::optional<int> steps;
  std::optional<int> workers;
  std::optional<std::string> lexicon;
  fs::path out_dir;
};

int cmd_train(const TrainCmdOptions& options, std::ostream& out,
              std::ostream& err);

}  // namespace verirl::app

#endif  // VERIRL_COMMANDS_HPP_

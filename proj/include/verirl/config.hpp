#ifndef VERIRL_CONFIG_HPP_
#define VERIRL_CONFIG_HPP_

// Run configuration: one JSON document with reward, optim, train and
// prior sections. Every key is optional; unknown keys are rejected.

#include <filesystem>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "verirl/optim.hpp"
#include "verirl/reward.hpp"
#include "verirl/toytask.hpp"

namespace verirl::app {

// Consulted when no --config flag is given.
inline constexpr const char* kConfigEnvVar = "VERIRL_CONFIG";

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AppConfig {
  reward::RewardConfig reward;
  optim::OptimConfig optim;
  toytask::TrainOptions train;
  toytask::ActivationPriorOptions prior;
  std::filesystem::path lexicon;  // resolved against the config file dir
  bool uniform_init = false;

  void validate() const;
};

// Overlays the keys present in doc onto base.
AppConfig config_from_json(const nlohmann::json& doc, AppConfig base = {},
                           const std::filesystem::path& base_dir = {});

// Explicit path, else $VERIRL_CONFIG, else empty (built-in defaults).
std::filesystem::path resolve_config_path(const std::string& flag_value);

// Defaults overlaid with the file at path (if non-empty).
AppConfig load_config(const std::filesystem::path& path);

nlohmann::json to_json(const AppConfig& config);

}  // namespace verirl::app

#endif  // VERIRL_CONFIG_HPP_

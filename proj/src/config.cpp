#include "verirl/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

namespace verirl::app {

namespace {

using nlohmann::json;

void check_keys(const json& section, const char* name,
                const std::set<std::string>& allowed) {
  if (!section.is_object()) {
    throw ConfigError(std::string("config section '") + name +
                      "' must be an object");
  }
  for (const auto& [key, _] : section.items()) {
    if (!allowed.contains(key)) {
      throw ConfigError(std::string("unknown key '") + key + "' in section '" +
                        name + "'");
    }
  }
}

template <class T>
void take(const json& section, const char* key, T& out, const char* name) {
  if (!section.contains(key)) return;
  try {
    out = section.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string(name) + "." + key + " has the wrong type");
  }
}

void read_reward(const json& s, reward::RewardConfig& r) {
  check_keys(s, "reward",
             {"alpha", "tau", "length_unit", "markers", "format_mode",
              "length_gate"});
  take(s, "alpha", r.alpha, "reward");
  take(s, "tau", r.tau, "reward");
  take(s, "length_gate", r.length_gate_enabled, "reward");
  try {
    if (s.contains("length_unit")) {
      r.length_unit = reward::parse_length_unit(s.at("length_unit").get<std::string>());
    }
    if (s.contains("format_mode")) {
      r.format_mode = reward::parse_format_mode(s.at("format_mode").get<std::string>());
    }
  } catch (const std::exception& e) {
    throw ConfigError(std::string("reward: ") + e.what());
  }
  if (s.contains("markers")) {
    const json& m = s.at("markers");
    if (m.is_array() && m.size() == 2 && m[0].is_string() && m[1].is_string()) {
      r.open_marker = m[0].get<std::string>();
      r.close_marker = m[1].get<std::string>();
    } else if (m.is_object() && m.contains("open") && m.contains("close")) {
      take(m, "open", r.open_marker, "reward.markers");
      take(m, "close", r.close_marker, "reward.markers");
    } else {
      throw ConfigError("reward.markers must be [open, close]");
    }
  }
}

void read_optim(const json& s, optim::OptimConfig& o) {
  check_keys(s, "optim",
             {"G", "eps_low", "eps_high", "learning_rate", "mini_batch",
              "updates_per_batch", "std_floor", "optimizer", "weight_decay"});
  take(s, "G", o.group_size, "optim");
  take(s, "eps_low", o.eps_low, "optim");
  take(s, "eps_high", o.eps_high, "optim");
  take(s, "learning_rate", o.learning_rate, "optim");
  take(s, "mini_batch", o.mini_batch_size, "optim");
  take(s, "updates_per_batch", o.updates_per_batch, "optim");
  take(s, "std_floor", o.std_floor, "optim");
  take(s, "weight_decay", o.weight_decay, "optim");
  if (s.contains("optimizer")) {
    const auto name = s.at("optimizer").get<std::string>();
    if (name == "adam") {
      o.optimizer = optim::OptimizerKind::adam;
    } else if (name == "sgd") {
      o.optimizer = optim::OptimizerKind::sgd;
    } else {
      throw ConfigError("optim.optimizer must be adam or sgd");
    }
  }
}

void read_train(const json& s, AppConfig& c, const std::filesystem::path& dir) {
  check_keys(s, "train",
             {"steps", "max_len", "temperature", "seed", "lexicon",
              "eval_samples", "eval_every", "workers", "schedule",
              "warmup_ratio", "init"});
  auto& t = c.train;
  take(s, "steps", t.steps, "train");
  take(s, "max_len", t.max_len, "train");
  take(s, "temperature", t.temperature, "train");
  take(s, "seed", t.seed, "train");
  take(s, "eval_samples", t.eval_samples, "train");
  take(s, "eval_every", t.eval_every, "train");
  take(s, "workers", t.workers, "train");
  take(s, "warmup_ratio", t.warmup_ratio, "train");
  if (s.contains("schedule")) {
    const auto name = s.at("schedule").get<std::string>();
    if (name == "constant") {
      t.schedule = toytask::LrSchedule::constant;
    } else if (name == "cosine") {
      t.schedule = toytask::LrSchedule::cosine;
    } else {
      throw ConfigError("train.schedule must be constant or cosine");
    }
  }
  if (s.contains("init")) {
    const auto name = s.at("init").get<std::string>();
    if (name != "activation" && name != "uniform") {
      throw ConfigError("train.init must be activation or uniform");
    }
    c.uniform_init = name == "uniform";
  }
  if (s.contains("lexicon")) {
    std::filesystem::path p = s.at("lexicon").get<std::string>();
    c.lexicon = p.is_relative() && !dir.empty() ? dir / p : p;
  }
}

void read_prior(const json& s, toytask::ActivationPriorOptions& p) {
  check_keys(s, "prior",
             {"target_pass1_max", "min_pass_at_k", "k", "mc_samples", "seed",
              "max_attempts"});
  take(s, "target_pass1_max", p.target_pass1_max, "prior");
  take(s, "min_pass_at_k", p.min_pass_at_k, "prior");
  take(s, "k", p.k, "prior");
  take(s, "mc_samples", p.mc_samples, "prior");
  take(s, "seed", p.seed, "prior");
  take(s, "max_attempts", p.max_attempts, "prior");
}

}  // namespace

void AppConfig::validate() const {
  try {
    reward.validate();
    optim.validate();
    train.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

AppConfig config_from_json(const nlohmann::json& doc, AppConfig base,
                           const std::filesystem::path& base_dir) {
  check_keys(doc, "<root>", {"reward", "optim", "train", "prior"});
  if (doc.contains("reward")) read_reward(doc.at("reward"), base.reward);
  if (doc.contains("optim")) read_optim(doc.at("optim"), base.optim);
  if (doc.contains("train")) read_train(doc.at("train"), base, base_dir);
  if (doc.contains("prior")) read_prior(doc.at("prior"), base.prior);
  base.prior.max_len = base.train.max_len;
  base.validate();
  return base;
}

std::filesystem::path resolve_config_path(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv(kConfigEnvVar); env && *env) return env;
  return {};
}

AppConfig load_config(const std::filesystem::path& path) {
  if (path.empty()) return config_from_json(nlohmann::json::object());
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file " + path.string() + ": " + e.what());
  }
  return config_from_json(doc, {}, path.parent_path());
}

nlohmann::json to_json(const AppConfig& c) {
  const auto& r = c.reward;
  const auto& o = c.optim;
  const auto& t = c.train;
  return {
      {"reward",
       {{"alpha", r.alpha},
        {"tau", r.tau},
        {"length_unit", reward::to_string(r.length_unit)},
        {"markers", {r.open_marker, r.close_marker}},
        {"format_mode", reward::to_string(r.format_mode)},
        {"length_gate", r.length_gate_enabled}}},
      {"optim",
       {{"G", o.group_size},
        {"eps_low", o.eps_low},
        {"eps_high", o.eps_high},
        {"learning_rate", o.learning_rate},
        {"mini_batch", o.mini_batch_size},
        {"updates_per_batch", o.updates_per_batch},
        {"std_floor", o.std_floor},
        {"optimizer", o.optimizer == optim::OptimizerKind::adam ? "adam" : "sgd"},
        {"weight_decay", o.weight_decay}}},
      {"train",
       {{"steps", t.steps},
        {"max_len", t.max_len},
        {"temperature", t.temperature},
        {"seed", t.seed},
        {"lexicon", c.lexicon.string()},
        {"eval_samples", t.eval_samples},
        {"eval_every", t.eval_every},
        {"workers", t.workers},
        {"schedule",
         t.schedule == toytask::LrSchedule::constant ? "constant" : "cosine"},
        {"warmup_ratio", t.warmup_ratio},
        {"init", c.uniform_init ? "uniform" : "activation"}}},
      {"prior",
       {{"target_pass1_max", c.prior.target_pass1_max},
        {"min_pass_at_k", c.prior.min_pass_at_k},
        {"k", c.prior.k},
        {"mc_samples", c.prior.mc_samples},
        {"seed", c.prior.seed},
        {"max_attempts", c.prior.max_attempts}}}};
}

}  // namespace verirl::app

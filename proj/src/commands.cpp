#include "verirl/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <boost/asio/io_context.hpp>
#include <boost/asio/signal_set.hpp>

#include "verirl/evalkit.hpp"
#include "verirl/service.hpp"

namespace verirl::app {

namespace {

using nlohmann::json;

void write_json_file(const fs::path& path, const json& doc) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << doc.dump(2) << '\n';
}

json read_json_file(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path.string());
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

int to_int(const std::string& s) {
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) {
    throw std::invalid_argument("not an integer: '" + s + "'");
  }
  return v;
}

}  // namespace

AppConfig resolve_config(const std::string& config_flag,
                         const RewardOverrides& o) {
  AppConfig cfg = load_config(resolve_config_path(config_flag));
  auto& r = cfg.reward;
  try {
    if (o.alpha) r.alpha = *o.alpha;
    if (o.tau) r.tau = *o.tau;
    if (o.length_unit) r.length_unit = reward::parse_length_unit(*o.length_unit);
    if (o.format_mode) r.format_mode = reward::parse_format_mode(*o.format_mode);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  cfg.validate();
  return cfg;
}

ScoreSummary score_file(const fs::path& input, const fs::path& output,
                        const reward::RewardConfig& config) {
  std::ifstream in(input, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + input.string());
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  if (in.bad()) throw std::runtime_error("read error on " + input.string());
  if (lines.empty()) throw std::runtime_error(input.string() + " is empty");

  std::vector<json> replies;
  replies.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    replies.push_back(score_line(lines[i], config, i + 1));
  }
  std::ofstream out(output, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + output.string());
  for (const auto& r : replies) out << to_line(r) << '\n';
  if (!out) throw std::runtime_error("write error on " + output.string());
  return summarize_replies(replies);
}

int cmd_score(const ScoreOptions& o, std::ostream& out, std::ostream& err) {
  try {
    const AppConfig cfg = resolve_config(o.config, o.overrides);
    const ScoreSummary s = score_file(o.input, o.output, cfg.reward);
    out << to_json(s).dump() << '\n';
    return 0;
  } catch (const std::exception& e) {
    err << "score: " << e.what() << '\n';
    return 1;
  }
}

int cmd_serve(const ServeOptions& o, std::istream& in, std::ostream& out,
              std::ostream& err) {
  try {
    const AppConfig cfg = resolve_config(o.config, o.overrides);
    if (o.stdio) {
      serve_stream(in, out, cfg.reward);
      return 0;
    }
    RewardServer server(cfg.reward, parse_bind_address(o.bind));
    server.start();
    err << "listening on port " << server.port() << std::endl;
    boost::asio::io_context io;
    boost::asio::signal_set signals(io, SIGINT, SIGTERM);
    signals.async_wait([](const boost::system::error_code&, int) {});
    io.run();
    server.stop();
    return 0;
  } catch (const std::exception& e) {
    err << "serve: " << e.what() << '\n';
    return 1;
  }
}

std::vector<int> parse_ks(const std::string& text, int n) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string p; std::getline(ss, p, ',');) {
    p.erase(0, p.find_first_not_of(" \t"));
    p.erase(p.find_last_not_of(" \t") + 1);
    parts.push_back(p);
  }
  std::vector<int> ks;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (parts[i] != "...") {
      ks.push_back(to_int(parts[i]));
      continue;
    }
    if (ks.size() < 2 || i + 1 >= parts.size() || parts[i + 1] == "...") {
      throw std::invalid_argument(
          "'...' needs two values before it and one after it");
    }
    const int a = ks[ks.size() - 2];
    const int b = ks.back();
    const int last = to_int(parts[i + 1]);
    if (a > 0 && b > a && b % a == 0 && b / a > 1) {
      for (long long k = static_cast<long long>(b) * (b / a); k < last;
           k *= b / a) {
        ks.push_back(static_cast<int>(k));
      }
    } else if (b > a) {
      for (int k = b + (b - a); k < last; k += b - a) ks.push_back(k);
    } else {
      throw std::invalid_argument("'...' needs an increasing sequence");
    }
  }
  if (ks.empty()) throw std::invalid_argument("empty k list");
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  for (int k : ks) {
    if (k < 1 || k > n) {
      throw std::invalid_argument("k=" + std::to_string(k) +
                                  " outside [1, n=" + std::to_string(n) + "]");
    }
  }
  return ks;
}

int cmd_passk(const PassKOptions& o, std::ostream& out, std::ostream& err) {
  try {
    std::ifstream in(o.input);
    if (!in) throw std::runtime_error("cannot read " + o.input.string());
    evalkit::PassAtKInput input;
    std::size_t line_no = 0;
    std::size_t n_line = 0;
    for (std::string line; std::getline(in, line);) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      json doc;
      int n = 0;
      int c = 0;
      try {
        doc = json::parse(line);
        n = doc.at("n").get<int>();
        c = doc.at("c").get<int>();
      } catch (const json::exception& e) {
        throw std::runtime_error("line " + std::to_string(line_no) +
                                 ": expected {id, n, c}: " + e.what());
      }
      if (n_line == 0) {
        input.n = n;
        n_line = line_no;
      } else if (n != input.n) {
        throw std::runtime_error(
            "inconsistent n: line " + std::to_string(n_line) + " has n=" +
            std::to_string(input.n) + " but line " + std::to_string(line_no) +
            " has n=" + std::to_string(n));
      }
      if (c < 0 || c > n) {
        throw std::runtime_error("line " + std::to_string(line_no) + ": c=" +
                                 std::to_string(c) + " outside [0, n]");
      }
      input.counts.push_back(c);
    }
    if (input.counts.empty()) throw std::runtime_error("no problems in input");
    if (o.ks.empty()) {
      for (int k = 1; k <= input.n; k *= 2) input.ks.push_back(k);
    } else {
      input.ks = parse_ks(o.ks, input.n);
    }
    const auto curve = evalkit::pass_at_k_curve(input);

    std::ofstream csv(o.output);
    if (!csv) throw std::runtime_error("cannot write " + o.output.string());
    csv << "k,estimate\n";
    char buf[64];
    for (std::size_t i = 0; i < curve.ks.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%d,%.10f\n", curve.ks[i],
                    curve.estimates[i]);
      csv << buf;
      out << buf;
    }
    return 0;
  } catch (const std::exception& e) {
    err << "passk: " << e.what() << '\n';
    return 1;
  }
}

int cmd_gen(const GenOptions& o, std::ostream& out, std::ostream& err) {
  try {
    const auto gen = toytask::gen_lexicon(o.lexicon);
    fs::create_directories(o.out_dir);
    write_json_file(o.out_dir / "lexicon.json", toytask::to_json(gen));
    write_json_file(o.out_dir / "train.json",
                    toytask::split_prompts_json(gen, gen.train_ids));
    write_json_file(o.out_dir / "test.json",
                    toytask::split_prompts_json(gen, gen.test_ids));
    json starter = to_json(AppConfig{});
    starter["train"]["lexicon"] = "lexicon.json";
    write_json_file(o.out_dir / "config.json", starter);
    out << "wrote " << gen.lexicon.entities.size() << " entities ("
        << gen.train_ids.size() << " train, " << gen.test_ids.size()
        << " test) to " << o.out_dir.string() << '\n';
    return 0;
  } catch (const std::exception& e) {
    err << "gen: " << e.what() << '\n';
    return 1;
  }
}

int cmd_train(const TrainCmdOptions& o, std::ostream& out, std::ostream& err) {
  try {
    AppConfig cfg = resolve_config(o.config);
    if (o.seed) cfg.train.seed = *o.seed;
    if (o.steps) cfg.train.steps = *o.steps;
    if (o.workers) cfg.train.workers = *o.workers;
    if (o.lexicon) cfg.lexicon = *o.lexicon;
    cfg.validate();
    const auto ablation = toytask::parse_ablation(o.ablation);
    if (cfg.lexicon.empty()) {
      throw std::runtime_error(
          "no lexicon configured (set train.lexicon or pass --lexicon)");
    }
    if (!fs::exists(cfg.lexicon)) {
      throw std::runtime_error("lexicon not found: " + cfg.lexicon.string());
    }
    const auto gen = toytask::lexicon_from_json(read_json_file(cfg.lexicon));

    toytask::PriorReport prior;
    toytask::ToyPolicy policy =
        cfg.uniform_init
            ? toytask::init_uniform(gen.lexicon, cfg.train.temperature)
            : toytask::init_activation_prior(gen.lexicon, gen.train_ids,
                                             cfg.prior, &prior);
    const auto result = toytask::train(gen.lexicon, gen.train_ids,
                                       std::move(policy), cfg.reward,
                                       cfg.optim, cfg.train, ablation);

    fs::create_directories(o.out_dir);
    {
      std::ofstream csv(o.out_dir / "metrics.csv");
      if (!csv) throw std::runtime_error("cannot write metrics.csv");
      toytask::write_metrics_csv(csv, result.metrics);
    }
    write_json_file(o.out_dir / "policy.json", result.policy.to_json());

    std::size_t within = 0;
    std::size_t multi = 0;
    for (const auto& r : result.final_rollouts) {
      within += r.within_bound;
      multi += r.alias_occurrences >= 2;
    }
    const double n_final = static_cast<double>(result.final_rollouts.size());
    const auto& last = result.metrics.back();
    json summary = {{"ablation", toytask::to_string(ablation)},
                    {"seed", cfg.train.seed},
                    {"steps", cfg.train.steps},
                    {"final_pass1", last.pass1_eval},
                    {"final_mean_reward", last.mean_reward},
                    {"final_mean_trans_length", last.mean_trans_length},
                    {"within_bound_fraction", within / n_final},
                    {"multi_alias_fraction", multi / n_final}};
    if (!cfg.uniform_init) {
      summary["prior"] = {{"pass1", prior.pass1},
                          {"pass_at_k", prior.pass_at_k},
                          {"k", cfg.prior.k},
                          {"attempts", prior.attempts}};
    }
    write_json_file(o.out_dir / "summary.json", summary);

    char line[128];
    std::snprintf(line, sizeof line, "final pass@1=%.4f mean_reward=%.4f\n",
                  last.pass1_eval, last.mean_reward);
    out << line;
    return 0;
  } catch (const toytask::ActivationPriorError& e) {
    err << "train: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "train: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace verirl::app

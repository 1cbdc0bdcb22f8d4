#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>
#include <thread>

#include <boost/asio.hpp>

#include "verirl/commands.hpp"
#include "verirl/config.hpp"
#include "verirl/records.hpp"
#include "verirl/service.hpp"

using namespace verirl;
using namespace verirl::app;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("verirl_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

std::vector<std::string> read_lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::string rec(const std::string& id, const std::string& response) {
  return json{{"id", id},
              {"response", response},
              {"gold_aliases", {"La Casa de Papel"}},
              {"ref_lengths", {20}}}
      .dump();
}

std::vector<std::string> roundtrip(std::uint16_t port,
                                   const std::vector<std::string>& lines) {
  namespace asio = boost::asio;
  asio::io_context io;
  asio::ip::tcp::socket sock(io);
  sock.connect({asio::ip::make_address("127.0.0.1"), port});
  std::string payload;
  for (const auto& l : lines) payload += l + "\n";
  asio::write(sock, asio::buffer(payload));
  asio::streambuf buf;
  std::istream in(&buf);
  std::vector<std::string> replies;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    asio::read_until(sock, buf, '\n');
    std::string r;
    std::getline(in, r);
    replies.push_back(r);
  }
  return replies;
}

}  // namespace

TEST_CASE("config defaults and overlay") {
  const AppConfig d = config_from_json(json::object());
  CHECK(d.reward.alpha == 0.2);
  CHECK(d.reward.tau == 2.0);
  CHECK(d.optim.group_size == 16);
  CHECK(d.optim.eps_low == 3e-4);
  CHECK(d.optim.eps_high == 4e-4);
  CHECK(d.train.temperature == 1.0);

  const json doc = {{"reward", {{"alpha", 0.3}, {"markers", {"<r>", "</r>"}}}},
                    {"optim", {{"G", 8}, {"mini_batch", 4}}},
                    {"train", {{"steps", 10}, {"lexicon", "lex.json"}}}};
  const AppConfig c = config_from_json(doc, {}, "/base");
  CHECK(c.reward.alpha == 0.3);
  CHECK(c.reward.open_marker == "<r>");
  CHECK(c.optim.group_size == 8);
  CHECK(c.optim.mini_batch_size == 4);
  CHECK(c.train.steps == 10);
  CHECK(c.lexicon == fs::path("/base/lex.json"));
  CHECK(config_from_json(to_json(c)).optim.group_size == 8);

  CHECK_THROWS_AS(config_from_json({{"reward", {{"alpah", 0.3}}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json({{"reward", {{"alpha", "x"}}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json({{"reward", {{"alpha", 1.5}}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json({{"optim", {{"G", 1}}}}), ConfigError);
}

TEST_CASE("config precedence: flags over file over defaults") {
  const auto dir = scratch("prec");
  write_text(dir / "a.json", R"({"reward":{"alpha":0.3,"tau":3.0}})");
  write_text(dir / "b.json", R"({"reward":{"alpha":0.1}})");

  ::unsetenv(kConfigEnvVar);
  CHECK(resolve_config("").reward.alpha == 0.2);
  CHECK(resolve_config((dir / "a.json").string()).reward.alpha == 0.3);
  RewardOverrides o;
  o.alpha = 0.05;
  const auto c = resolve_config((dir / "a.json").string(), o);
  CHECK(c.reward.alpha == 0.05);
  CHECK(c.reward.tau == 3.0);

  ::setenv(kConfigEnvVar, (dir / "b.json").c_str(), 1);
  CHECK(resolve_config("").reward.alpha == 0.1);
  CHECK(resolve_config((dir / "a.json").string()).reward.alpha == 0.3);
  ::unsetenv(kConfigEnvVar);
  CHECK_THROWS_AS(resolve_config((dir / "missing.json").string()), ConfigError);
}

TEST_CASE("record parsing") {
  const reward::RewardConfig cfg;
  auto r = parse_record(json::parse(rec("a", "<think>x</think>y")), cfg);
  CHECK(r.ref_lengths == std::vector<std::size_t>{20});
  r = parse_record({{"id", 7},
                    {"response", "r"},
                    {"gold_aliases", {"g"}},
                    {"refs", {"abcd", "abcdef"}}},
                   cfg);
  CHECK(r.id == "7");
  CHECK(r.ref_lengths == std::vector<std::size_t>{4, 6});
  const json both = {{"id", "x"},
                     {"response", "r"},
                     {"gold_aliases", {"g"}},
                     {"refs", {"a"}},
                     {"ref_lengths", {1}}};
  CHECK_THROWS_AS(parse_record(both, cfg), RecordError);
  CHECK_THROWS_AS(parse_record({{"id", "x"}, {"response", "r"}, {"ref_lengths", {1}}}, cfg),
                  RecordError);
  CHECK_THROWS_AS(parse_record({{"id", "x"},
                                {"response", "r"},
                                {"gold_aliases", {"g"}},
                                {"ref_lengths", {0}}},
                               cfg),
                  RecordError);
}

TEST_CASE("score_line replies") {
  const reward::RewardConfig cfg;
  auto r = score_line(rec("a", "<think>x</think>Me encanta La Casa de Papel"), cfg);
  CHECK(r == json{{"id", "a"}, {"reward", 1.2}, {"fmt", 1}, {"len", 1}, {"match", 1}});
  CHECK(to_line(r) == R"({"fmt":1,"id":"a","len":1,"match":1,"reward":1.2})");
  r = score_line("{not json", cfg, 4);
  CHECK(r["id"].is_null());
  CHECK(r["line"] == 4);
  CHECK(r.contains("error"));
  r = score_line(R"({"id":"q","response":"x","ref_lengths":[3]})", cfg);
  CHECK(r["id"] == "q");
  CHECK(r.contains("error"));
  // Invalid UTF-8 is a record error, never silently replaced.
  r = score_line("{\"id\":\"u\",\"response\":\"\xff\",\"gold_aliases\":[\"g\"],\"ref_lengths\":[3]}", cfg);
  CHECK(r.contains("error"));
  CHECK_NOTHROW(to_line(r));
}

TEST_CASE("score_file round trip and summary") {
  const auto dir = scratch("score");
  std::string text;
  for (int i = 0; i < 10; ++i) {
    text += rec("r" + std::to_string(i),
                i < 3 ? "<think>x</think>La Casa de Papel" : "<think>x</think>otra") +
            "\n";
  }
  write_text(dir / "in.ndjson", text);
  const auto s = score_file(dir / "in.ndjson", dir / "out.ndjson", {});
  CHECK(s.n_records == 10);
  CHECK(s.entity_accuracy_pct == doctest::Approx(30.0));
  CHECK(s.mean_reward == doctest::Approx(0.5));
  CHECK(s.fmt_failures == 0);
  CHECK(read_lines(dir / "out.ndjson").size() == 10);

  write_text(dir / "mixed.ndjson", rec("a", "no tags") + "\n\n{bad\n" +
                                       rec("b", "<think>x</think>" + std::string(50, 'z')) + "\n");
  const auto m = score_file(dir / "mixed.ndjson", dir / "mixed.out", {});
  const auto lines = read_lines(dir / "mixed.out");
  REQUIRE(lines.size() == 4);
  CHECK(json::parse(lines[0])["reward"] == 0.0);
  CHECK(json::parse(lines[1])["line"] == 2);
  CHECK(json::parse(lines[2])["line"] == 3);
  CHECK(m.n_records == 2);
  CHECK(m.n_errors == 2);
  CHECK(m.fmt_failures == 1);
  CHECK(m.len_failures == 1);

  write_text(dir / "empty.ndjson", "");
  CHECK_THROWS_AS(score_file(dir / "empty.ndjson", dir / "e.out", {}), std::runtime_error);
  CHECK_FALSE(fs::exists(dir / "e.out"));
  std::ostringstream out, err;
  CHECK(cmd_score({dir / "nope.ndjson", dir / "n.out", "", {}}, out, err) != 0);
  CHECK(cmd_score({dir / "in.ndjson", dir / "o2.out", "", {}}, out, err) == 0);
  CHECK(json::parse(out.str())["entity_accuracy_pct"] == doctest::Approx(30.0));
}

TEST_CASE("service replies in order and survives bad requests") {
  RewardServer server({}, parse_bind_address("127.0.0.1:0"));
  server.start();
  REQUIRE(server.port() != 0);
  const auto replies = roundtrip(
      server.port(),
      {rec("a", "<think>x</think>La Casa de Papel"),
       R"({"id":"m","response":"x","ref_lengths":[3]})", "garbage",
       rec("b", "<think>x</think>otra")});
  REQUIRE(replies.size() == 4);
  CHECK(json::parse(replies[0]) ==
        json{{"id", "a"}, {"reward", 1.2}, {"fmt", 1}, {"len", 1}, {"match", 1}});
  CHECK(json::parse(replies[1])["id"] == "m");
  CHECK(json::parse(replies[1]).contains("error"));
  CHECK(json::parse(replies[2])["id"].is_null());
  CHECK(json::parse(replies[3])["reward"] == 0.2);
  server.stop();
}

TEST_CASE("concurrent identical requests get identical replies") {
  RewardServer server({}, parse_bind_address("127.0.0.1:0"));
  server.start();
  const std::string line = rec("same", "<think>x</think>La Casa de Papel");
  std::vector<std::future<std::vector<std::string>>> futs;
  for (int c = 0; c < 20; ++c) {
    futs.push_back(std::async(std::launch::async, [&] {
      return roundtrip(server.port(), std::vector<std::string>(50, line));
    }));
  }
  std::size_t n = 0;
  const std::string expect = to_line(score_line(line, {}));
  for (auto& f : futs) {
    for (const auto& r : f.get()) {
      CHECK(r == expect);
      ++n;
    }
  }
  CHECK(n == 1000);
}

TEST_CASE("stdio service mode") {
  std::istringstream in(rec("a", "<think>x</think>La Casa de Papel") + "\nbad\n");
  std::ostringstream out;
  CHECK(serve_stream(in, out, {}) == 2);
  std::istringstream back(out.str());
  std::string l1, l2;
  std::getline(back, l1);
  std::getline(back, l2);
  CHECK(json::parse(l1)["reward"] == 1.2);
  CHECK(json::parse(l2).contains("error"));
}

TEST_CASE("bind address parsing") {
  auto b = parse_bind_address("0.0.0.0:9000");
  CHECK(b.host == "0.0.0.0");
  CHECK(b.port == 9000);
  b = parse_bind_address("[::1]:80");
  CHECK(b.host == "::1");
  b = parse_bind_address(":7");
  CHECK(b.host.empty());
  CHECK_THROWS_AS(parse_bind_address("nohost"), std::invalid_argument);
  CHECK_THROWS_AS(parse_bind_address("h:99999"), std::invalid_argument);
  CHECK_THROWS_AS(parse_bind_address("h:x1"), std::invalid_argument);
}

TEST_CASE("parse_ks") {
  CHECK(parse_ks("1,2,4,...,128", 128) ==
        std::vector<int>{1, 2, 4, 8, 16, 32, 64, 128});
  CHECK(parse_ks("2, 5, ..., 11", 12) == std::vector<int>{2, 5, 8, 11});
  CHECK(parse_ks("1,3,...,27", 27) == std::vector<int>{1, 3, 9, 27});
  CHECK(parse_ks("4,1,4", 4) == std::vector<int>{1, 4});
  CHECK_THROWS_AS(parse_ks("1,2,4,...,128", 64), std::invalid_argument);
  CHECK_THROWS_AS(parse_ks("...,4", 8), std::invalid_argument);
  CHECK_THROWS_AS(parse_ks("1,x", 8), std::invalid_argument);
}

TEST_CASE("passk command") {
  const auto dir = scratch("passk");
  write_text(dir / "c.ndjson", "{\"id\":\"p1\",\"n\":4,\"c\":4}\n{\"id\":\"p2\",\"n\":4,\"c\":0}\n");
  std::ostringstream out, err;
  REQUIRE(cmd_passk({dir / "c.ndjson", "4", dir / "c.csv"}, out, err) == 0);
  auto lines = read_lines(dir / "c.csv");
  REQUIRE(lines.size() == 2);
  CHECK(lines[0] == "k,estimate");
  CHECK(lines[1] == "4,0.5000000000");

  write_text(dir / "d.ndjson", "{\"id\":\"p1\",\"n\":4,\"c\":2}\n");
  REQUIRE(cmd_passk({dir / "d.ndjson", "2", dir / "d.csv"}, out, err) == 0);
  CHECK(read_lines(dir / "d.csv")[1] == "2,0.8333333333");

  write_text(dir / "bad.ndjson", "{\"id\":\"p1\",\"n\":4,\"c\":2}\n{\"id\":\"p2\",\"n\":8,\"c\":2}\n");
  std::ostringstream err2;
  CHECK(cmd_passk({dir / "bad.ndjson", "", dir / "bad.csv"}, out, err2) != 0);
  CHECK(err2.str().find("n=4") != std::string::npos);
  CHECK(err2.str().find("n=8") != std::string::npos);
}

TEST_CASE("gen and train commands") {
  const auto dir = scratch("train");
  std::ostringstream out, err;
  GenOptions g;
  g.out_dir = dir / "lex";
  REQUIRE(cmd_gen(g, out, err) == 0);
  for (const char* f : {"lexicon.json", "train.json", "test.json", "config.json"}) {
    CHECK(fs::exists(dir / "lex" / f));
  }
  std::ifstream tj(dir / "lex" / "train.json");
  CHECK(json::parse(tj).size() == 15);

  TrainCmdOptions t;
  t.config = (dir / "lex" / "config.json").string();
  t.steps = 0;
  t.out_dir = dir / "run0";
  REQUIRE(cmd_train(t, out, err) == 0);
  auto lines = read_lines(dir / "run0" / "metrics.csv");
  REQUIRE(lines.size() == 2);
  CHECK(lines[1].rfind("0,", 0) == 0);
  CHECK(fs::exists(dir / "run0" / "policy.json"));

  t.steps = 3;
  t.seed = 5;
  t.out_dir = dir / "runA";
  REQUIRE(cmd_train(t, out, err) == 0);
  t.out_dir = dir / "runB";
  REQUIRE(cmd_train(t, out, err) == 0);
  CHECK(read_lines(dir / "runA" / "metrics.csv") ==
        read_lines(dir / "runB" / "metrics.csv"));
  CHECK(out.str().find("final pass@1=") != std::string::npos);

  TrainCmdOptions missing;
  missing.out_dir = dir / "runC";
  missing.lexicon = (dir / "absent.json").string();
  std::ostringstream err2;
  CHECK(cmd_train(missing, out, err2) != 0);
  CHECK(err2.str().find("lexicon") != std::string::npos);
  missing.ablation = "bogus";
  CHECK(cmd_train(missing, out, err2) != 0);
}

#include <iostream>

#include "CLI11.hpp"
#include "verirl/commands.hpp"

namespace {

void add_reward_flags(CLI::App* cmd, verirl::app::RewardOverrides& o) {
  cmd->add_option("--alpha", o.alpha, "format bonus (overrides config)");
  cmd->add_option("--tau", o.tau, "length tolerance (overrides config)");
  cmd->add_option("--length-unit", o.length_unit, "characters or tokens")
      ->check(CLI::IsMember({"characters", "tokens"}));
  cmd->add_option("--format-mode", o.format_mode, "strict, soft or none")
      ->check(CLI::IsMember({"strict", "soft", "none"}));
}

}  // namespace

int main(int argc, char** argv) {
  using namespace verirl::app;
  CLI::App app{"Verifiable entity-translation rewards and RL toolkit"};
  app.require_subcommand(1);
  const std::string env_note =
      std::string("config file (default: $") + kConfigEnvVar + ")";

  ScoreOptions score;
  auto* sc = app.add_subcommand("score", "score NDJSON rollout records");
  sc->add_option("--input", score.input, "NDJSON records")->required();
  sc->add_option("--output", score.output, "NDJSON breakdowns")->required();
  sc->add_option("--config", score.config, env_note);
  add_reward_flags(sc, score.overrides);

  ServeOptions serve;
  auto* sv = app.add_subcommand("serve", "NDJSON reward service");
  sv->add_option("--bind", serve.bind, "host:port")->capture_default_str();
  sv->add_option("--config", serve.config, env_note);
  sv->add_flag("--stdio", serve.stdio, "serve stdin to stdout instead");
  add_reward_flags(sv, serve.overrides);

  PassKOptions passk;
  auto* pk = app.add_subcommand("passk", "pass@k curve from {id,n,c} lines");
  pk->add_option("--input", passk.input, "NDJSON counts")->required();
  pk->add_option("--ks", passk.ks, "e.g. 1,2,4,...,128 (default powers of 2)");
  pk->add_option("--output", passk.output, "CSV k,estimate")->required();

  GenOptions gen;
  auto* gn = app.add_subcommand("gen", "generate a synthetic lexicon");
  gn->add_option("--seed", gen.lexicon.seed)->capture_default_str();
  gn->add_option("--entities", gen.lexicon.n_entities)->capture_default_str();
  gn->add_option("--aliases", gen.lexicon.aliases_per_entity)
      ->capture_default_str();
  gn->add_option("--train-frac", gen.lexicon.train_fraction)
      ->capture_default_str();
  gn->add_option("--vocab", gen.lexicon.vocab_size)->capture_default_str();
  gn->add_option("--alias-len-min", gen.lexicon.alias_len_min)
      ->capture_default_str();
  gn->add_option("--alias-len-max", gen.lexicon.alias_len_max)
      ->capture_default_str();
  gn->add_option("--out", gen.out_dir, "output directory")->required();

  TrainCmdOptions train;
  auto* tr = app.add_subcommand("train", "train the toy policy");
  tr->add_option("--config", train.config, env_note);
  tr->add_option("--ablation", train.ablation)
      ->check(CLI::IsMember({"full", "no_len_gate", "soft_format", "no_think"}))
      ->capture_default_str();
  tr->add_option("--seed", train.seed, "overrides train.seed");
  tr->add_option("--steps", train.steps, "overrides train.steps");
  tr->add_option("--workers", train.workers, "rollout threads");
  tr->add_option("--lexicon", train.lexicon, "overrides train.lexicon");
  tr->add_option("--out", train.out_dir, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  if (sc->parsed()) return cmd_score(score, std::cout, std::cerr);
  if (sv->parsed()) return cmd_serve(serve, std::cin, std::cout, std::cerr);
  if (pk->parsed()) return cmd_passk(passk, std::cout, std::cerr);
  if (gn->parsed()) return cmd_gen(gen, std::cout, std::cerr);
  if (tr->parsed()) return cmd_train(train, std::cout, std::cerr);
  return 1;
}

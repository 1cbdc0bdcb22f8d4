#include <optional>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "verirl/commands.hpp"
#include "verirl/evalkit.hpp"
#include "verirl/optim.hpp"
#include "verirl/records.hpp"
#include "verirl/reward.hpp"
#include "verirl/textnorm.hpp"
#include "verirl/toytask.hpp"

namespace py = pybind11;
using namespace verirl;

namespace {

reward::RewardConfig make_reward_config(double alpha, double tau,
                                        const std::string& length_unit,
                                        const std::string& format_mode,
                                        bool length_gate) {
  reward::RewardConfig c;
  c.alpha = alpha;
  c.tau = tau;
  c.length_unit = reward::parse_length_unit(length_unit);
  c.format_mode = reward::parse_format_mode(format_mode);
  c.length_gate_enabled = length_gate;
  c.validate();
  return c;
}

py::dict breakdown_dict(const reward::RewardBreakdown& b) {
  py::dict d;
  d["reward"] = b.reward;
  d["fmt"] = static_cast<int>(b.fmt_gate);
  d["len"] = static_cast<int>(b.len_gate);
  d["match"] = static_cast<int>(b.match);
  return d;
}

}  // namespace

PYBIND11_MODULE(_verirl, m) {
  m.doc() = "verirl native core";

  py::register_exception<std::invalid_argument>(m, "InvalidArgument",
                                                PyExc_ValueError);

  m.def("normalize",
        [](const std::string& s) { return textnorm::normalize(s).str(); },
        py::arg("text"));
  m.def(
      "match_entity",
      [](const std::string& t, const std::vector<std::string>& aliases) {
        return textnorm::match_entity(t, textnorm::GoldEntitySet("x", aliases));
      },
      py::arg("translation"), py::arg("aliases"));
  m.def(
      "count_alias_occurrences",
      [](const std::string& t, const std::vector<std::string>& aliases) {
        return textnorm::count_alias_occurrences(
            t, textnorm::GoldEntitySet("x", aliases));
      },
      py::arg("translation"), py::arg("aliases"));

  m.def(
      "compute_reward",
      [](const std::string& response, const std::vector<std::string>& aliases,
         const std::vector<std::size_t>& ref_lengths, double alpha, double tau,
         const std::string& length_unit, const std::string& format_mode,
         bool length_gate) {
        const auto cfg = make_reward_config(alpha, tau, length_unit,
                                            format_mode, length_gate);
        return breakdown_dict(reward::compute_reward(
            response, textnorm::GoldEntitySet("x", aliases), ref_lengths, cfg));
      },
      py::arg("response"), py::arg("gold_aliases"), py::arg("ref_lengths"),
      py::arg("alpha") = 0.2, py::arg("tau") = 2.0,
      py::arg("length_unit") = "characters", py::arg("format_mode") = "strict",
      py::arg("length_gate") = true);

  m.def(
      "score_line",
      [](const std::string& line, double alpha, double tau,
         const std::string& length_unit) {
        const auto cfg =
            make_reward_config(alpha, tau, length_unit, "strict", true);
        return app::to_line(app::score_line(line, cfg));
      },
      py::arg("line"), py::arg("alpha") = 0.2, py::arg("tau") = 2.0,
      py::arg("length_unit") = "characters");

  m.def("pass_at_k", &evalkit::pass_at_k, py::arg("n"), py::arg("c"),
        py::arg("k"));
  m.def(
      "pass_at_k_curve",
      [](int n, const std::vector<int>& counts, const std::vector<int>& ks) {
        return evalkit::pass_at_k_curve({n, counts, ks}).estimates;
      },
      py::arg("n"), py::arg("counts"), py::arg("ks"));
  m.def("chrf", &evalkit::chrf, py::arg("hypothesis"), py::arg("reference"),
        py::arg("max_n") = 6, py::arg("beta") = 2.0);

  m.def(
      "group_advantages",
      [](const std::vector<double>& rewards, double std_floor) {
        return optim::group_advantages(rewards, std_floor);
      },
      py::arg("rewards"), py::arg("std_floor") = 1e-6);
  m.def(
      "seq_importance_ratio",
      [](const std::vector<double>& old_logp,
         const std::vector<double>& new_logp) {
        optim::TokenLogProbs lp;
        lp.tokens.assign(old_logp.size(), 0);
        lp.old_logp = old_logp;
        lp.new_logp = new_logp;
        lp.validate();
        return optim::seq_importance_ratio(lp);
      },
      py::arg("old_logp"), py::arg("new_logp"));
  m.def("clipped_term", &optim::clipped_term, py::arg("ratio"),
        py::arg("advantage"), py::arg("eps_low") = 3e-4,
        py::arg("eps_high") = 4e-4);

  m.def(
      "gen_lexicon_json",
      [](std::uint64_t seed, int entities, int aliases, double train_frac,
         int vocab) {
        toytask::LexiconOptions o;
        o.seed = seed;
        o.n_entities = entities;
        o.aliases_per_entity = aliases;
        o.train_fraction = train_frac;
        o.vocab_size = vocab;
        return toytask::to_json(toytask::gen_lexicon(o)).dump();
      },
      py::arg("seed") = 42, py::arg("entities") = 20, py::arg("aliases") = 3,
      py::arg("train_frac") = 0.75, py::arg("vocab") = 48);

  m.def(
      "train_toy",
      [](const std::string& lexicon_json, int steps, const std::string& ablation,
         std::uint64_t seed, int workers) {
        const auto gen =
            toytask::lexicon_from_json(nlohmann::json::parse(lexicon_json));
        auto policy = toytask::init_activation_prior(gen.lexicon, gen.train_ids,
                                                     {});
        toytask::TrainOptions to;
        to.steps = steps;
        to.seed = seed;
        to.workers = workers;
        std::optional<toytask::TrainResult> res;
        {
          py::gil_scoped_release release;
          res.emplace(toytask::train(gen.lexicon, gen.train_ids, std::move(policy),
                               {}, {}, to, toytask::parse_ablation(ablation)));
        }
        py::list rows;
        for (const auto& r : res->metrics) {
          py::dict d;
          d["step"] = r.step;
          d["mean_reward"] = r.mean_reward;
          d["mean_trans_length"] = r.mean_trans_length;
          d["mean_entropy"] = r.mean_entropy;
          d["pass1_eval"] = r.pass1_eval;
          rows.append(d);
        }
        return rows;
      },
      py::arg("lexicon_json"), py::arg("steps"), py::arg("ablation") = "full",
      py::arg("seed") = 0, py::arg("workers") = 1);
}

// Copyright 2026 The SAICL Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "saicl/bench.hpp"
#include "saicl/checkpoint.hpp"
#include "saicl/error.hpp"
#include "saicl/train.hpp"
#include "saicl/verify.hpp"

namespace saicl {
namespace {

// Flat key=value file; '#' starts a comment.
std::map<std::string, std::string> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file '" + path + "'");
  std::map<std::string, std::string> out;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    line = line.substr(0, line.find('#'));
    const auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      if (a == std::string::npos) return std::string();
      return s.substr(a, s.find_last_not_of(" \t\r") - a + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error("config line " + std::to_string(n) + ": expected key=value");
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

bool has_flag(const std::vector<std::string>& args, const std::string& name) {
  return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
    return a == "--" + name || a.rfind("--" + name + "=", 0) == 0;
  });
}

struct ModelFlags {
  ModelConfig config;
  std::string variant = "saicl";

  void add(CLI::App& app) {
    app.add_option("--vocab", config.vocab, "vocabulary size")->capture_default_str();
    app.add_option("--d-model", config.d_model, "model width")->capture_default_str();
    app.add_option("--heads", config.heads, "attention heads")->capture_default_str();
    app.add_option("--enc-layers", config.encoder_layers, "encoder layers")->capture_default_str();
    app.add_option("--dec-layers", config.decoder_layers, "decoder layers")->capture_default_str();
    app.add_option("--d-ff", config.d_ff, "feed-forward width")->capture_default_str();
    app.add_option("--variant", variant, "encoder attention: saicl|full")->capture_default_str();
    app.add_option("--dropout", config.dropout, "attention dropout rate")->capture_default_str();
    app.add_option("--init-std", config.init_std, "weight init std")->capture_default_str();
  }
  ModelConfig resolve(std::uint64_t seed) {
    config.variant = parse_variant(variant);
    config.seed = seed;
    config.validate();
    return config;
  }
};

TaskFamily family_for(const std::string& name, std::size_t vocab) {
  switch (parse_task_kind(name)) {
    case TaskKind::lookup: return TaskFamily::lookup(vocab);
    case TaskKind::classify: return TaskFamily::classify(vocab);
    case TaskKind::copy_offset: return TaskFamily::copy_offset(vocab);
  }
  throw Error("unknown family");
}

std::vector<std::uint64_t> seed_list(std::size_t n, std::uint64_t base) {
  std::vector<std::uint64_t> s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = base + i;
  return s;
}

void print_eval(std::ostream& out, std::size_t k, const EvalResult& r) {
  out << "test_k=" << k << " accuracy=" << std::fixed << std::setprecision(4) << r.mean
      << " std=" << r.std << " per_seed=";
  for (std::size_t i = 0; i < r.per_seed.size(); ++i) out << (i ? "," : "") << r.per_seed[i];
  out << std::defaultfloat << '\n';
}

// Groups consecutive examples sharing a task id into episodes; the last
// example of each group is the test.
std::vector<Episode> episodes_from_dataset(const std::vector<TaskExample>& data) {
  std::vector<Episode> out;
  std::size_t i = 0;
  while (i < data.size()) {
    std::size_t j = i;
    while (j < data.size() && data[j].task == data[i].task) ++j;
    if (j - i < 2) throw Error("task '" + data[i].task + "' needs at least one demonstration and a test");
    Episode e;
    e.demos.assign(data.begin() + static_cast<std::ptrdiff_t>(i), data.begin() + static_cast<std::ptrdiff_t>(j - 1));
    e.test = data[j - 1];
    if (e.test.options.empty()) throw Error("test example of task '" + e.test.task + "' has no options");
    out.push_back(std::move(e));
    i = j;
  }
  return out;
}

}  // namespace

int cli(const std::vector<std::string>& input_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Structured attention for in-context learning: train, evaluate, benchmark, verify."};
  app.name("saicl");
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "expand all help");

  // verify
  bool quick = false;
  std::uint64_t seed = 0;
  auto* verify = app.add_subcommand("verify", "run oracle, invariance and gradient suites");
  verify->add_flag("--quick", quick, "fewer random instances");
  verify->add_option("--seed", seed, "random seed")->capture_default_str();

  // train
  ModelFlags train_model;
  TrainConfig tc;
  std::string family = "lookup", optimizer = "adam", format = "direct";
  std::string checkpoint_out, log_path;
  std::size_t eval_episodes = 200;
  auto* train_cmd = app.add_subcommand("train", "meta-train a model on a synthetic task family");
  train_model.add(*train_cmd);
  train_cmd->add_option("--family", family, "lookup|classify|copy_offset")->capture_default_str();
  train_cmd->add_option("--steps", tc.steps, "optimizer steps")->capture_default_str();
  train_cmd->add_option("--batch", tc.batch, "episodes per step")->capture_default_str();
  train_cmd->add_option("--lr", tc.lr, "peak learning rate")->capture_default_str();
  train_cmd->add_option("--warmup", tc.warmup, "warmup fraction of steps")->capture_default_str();
  train_cmd->add_option("--train-k", tc.train_k, "demonstrations per training prompt")->capture_default_str();
  train_cmd->add_option("--test-k", tc.test_k, "demonstration counts evaluated after training")
      ->delimiter(',')->capture_default_str();
  train_cmd->add_option("--seed", seed, "random seed (env SAICL_SEED)")->capture_default_str();
  train_cmd->add_option("--optimizer", optimizer, "adam|adafactor")->capture_default_str();
  train_cmd->add_option("--clip", tc.clip_norm, "global gradient norm clip, <=0 disables")->capture_default_str();
  train_cmd->add_option("--l-max", tc.l_max, "per-sample token cap")->capture_default_str();
  train_cmd->add_option("--checkpoint", checkpoint_out, "write the trained model here");
  train_cmd->add_option("--log", log_path, "write step,loss,lr CSV here");
  train_cmd->add_option("--eval-episodes", eval_episodes, "episodes per seed after training, 0 skips")
      ->capture_default_str();

  // eval
  ModelFlags eval_model;
  std::string checkpoint_in, scheme = "single", data_path, eval_family = "lookup", eval_format = "direct";
  std::vector<std::size_t> test_k{8};
  std::size_t groups = 1, episodes = 200, seeds = 5, l_max = 256;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a model under a fusion scheme");
  eval_model.add(*eval_cmd);
  eval_cmd->add_option("--checkpoint", checkpoint_in, "trained model (default: fresh model from flags)");
  eval_cmd->add_option("--family", eval_family, "lookup|classify|copy_offset")->capture_default_str();
  eval_cmd->add_option("--data", data_path, "JSON-lines episodes instead of a synthetic family");
  eval_cmd->add_option("--test-k", test_k, "demonstration counts")->delimiter(',')->capture_default_str();
  eval_cmd->add_option("--episodes", episodes, "episodes per seed")->capture_default_str();
  eval_cmd->add_option("--seeds", seeds, "number of demonstration seeds")->capture_default_str();
  eval_cmd->add_option("--seed", seed, "base seed (env SAICL_SEED)")->capture_default_str();
  eval_cmd->add_option("--scheme", scheme, "single|fid|group-fid|ensemble")->capture_default_str();
  eval_cmd->add_option("--groups", groups, "G for group-fid and ensemble")->capture_default_str();
  eval_cmd->add_option("--format", eval_format, "direct|channel")->capture_default_str();
  eval_cmd->add_option("--l-max", l_max, "per-sample token cap")->capture_default_str();

  // bench
  BenchSpec spec;
  std::vector<std::string> variants{"saicl", "full"};
  std::size_t memory_mb = 1024;
  std::string bench_out;
  auto* bench = app.add_subcommand("bench", "time full vs SAICL attention as k grows");
  bench->add_option("--k", spec.ks, "demonstration counts, increasing")->delimiter(',')->capture_default_str();
  bench->add_option("--L", spec.lengths, "segment lengths")->delimiter(',')->capture_default_str();
  bench->add_option("--reps", spec.repetitions, "timed repetitions (>= 3)")->capture_default_str();
  bench->add_option("--warmup", spec.warmup, "discarded warmup runs")->capture_default_str();
  bench->add_option("--variants", variants, "saicl,full")->delimiter(',')->capture_default_str();
  bench->add_option("--heads", spec.heads, "heads")->capture_default_str();
  bench->add_option("--head-dim", spec.head_dim, "per-head width")->capture_default_str();
  bench->add_option("--memory-mb", memory_mb, "score-buffer ceiling; larger rows are OOM")->capture_default_str();
  bench->add_option("--seed", seed, "random seed (env SAICL_SEED)")->capture_default_str();
  bench->add_option("--out", bench_out, "CSV path (default stdout)");

  // gen-data
  std::string gen_family = "lookup", gen_out;
  std::size_t gen_episodes = 100, gen_k = 8, gen_vocab = 64;
  auto* gen = app.add_subcommand("gen-data", "write synthetic episodes as JSON lines");
  gen->add_option("--family", gen_family, "lookup|classify|copy_offset")->capture_default_str();
  gen->add_option("--episodes", gen_episodes, "episodes")->capture_default_str();
  gen->add_option("--k", gen_k, "demonstrations per episode")->capture_default_str();
  gen->add_option("--vocab", gen_vocab, "vocabulary size")->capture_default_str();
  gen->add_option("--seed", seed, "random seed (env SAICL_SEED)")->capture_default_str();
  gen->add_option("--out", gen_out, "output path (default stdout)");

  for (CLI::App* sub : {verify, train_cmd, eval_cmd, bench, gen})
    sub->add_option("--config", "flat key=value file; flags take precedence");

  // Expand --config and SAICL_SEED into explicit flags, lower precedence
  // than anything on the command line.
  std::vector<std::string> args = input_args;
  try {
    if (!args.empty()) {
      std::string config_path;
      for (std::size_t i = 1; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
          config_path = args[i + 1];
          args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i + 2));
          break;
        }
        if (args[i].rfind("--config=", 0) == 0) {
          config_path = args[i].substr(9);
          args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
          break;
        }
      }
      CLI::App* sub = nullptr;
      try {
        sub = app.get_subcommand(args[0]);
      } catch (const CLI::OptionNotFound&) {
      }
      std::vector<std::string> extra;
      if (sub && !has_flag(args, "seed"))
        if (const char* env = std::getenv("SAICL_SEED")) {
          extra.push_back("--seed");
          extra.push_back(env);
        }
      if (sub && !config_path.empty())
        for (const auto& [key, value] : read_config(config_path)) {
          if (has_flag(args, key) || (key == "seed" && !extra.empty())) continue;
          const CLI::Option* opt = sub->get_option_no_throw("--" + key);
          if (!opt) continue;
          if (opt->get_type_size() == 0) {
            if (value == "true" || value == "1") extra.push_back("--" + key);
          } else {
            extra.push_back("--" + key);
            extra.push_back(value);
          }
        }
      args.insert(args.begin() + 1, extra.begin(), extra.end());
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (verify->parsed()) {
      const VerifyReport report = run_verify(quick, seed, &out);
      out << (report.ok() ? "verify: all checks passed" : "verify: FAILED") << '\n';
      return report.ok() ? kExitOk : kExitVerifyFailed;
    }

    if (train_cmd->parsed()) {
      tc.seed = seed;
      tc.optimizer = parse_optimizer(optimizer);
      tc.format = PromptFormat::direct;
      const ModelConfig mc = train_model.resolve(seed);
      tc.validate();
      Model model(mc);
      const TaskFamily fam = family_for(family, mc.vocab);
      std::ofstream log_file;
      if (!log_path.empty()) {
        log_file.open(log_path);
        if (!log_file) throw Error("cannot open '" + log_path + "'");
      }
      const std::size_t every = std::max<std::size_t>(1, tc.steps / 10);
      const TrainLog log = train(model, fam, tc, log_path.empty() ? nullptr : &log_file,
                                 [&](std::size_t s, double loss) {
                                   if (s % every == 0 || s == tc.steps)
                                     out << "step " << s << " loss " << loss << '\n';
                                 });
      if (!checkpoint_out.empty()) {
        save_checkpoint(model, checkpoint_out);
        out << "wrote " << checkpoint_out << '\n';
      }
      if (eval_episodes > 0)
        for (std::size_t k : tc.test_k) print_eval(out, k, evaluate(model, fam, k, eval_episodes, seed_list(5, seed)));
      return kExitOk;
    }

    if (eval_cmd->parsed()) {
      const Model model = checkpoint_in.empty() ? Model(eval_model.resolve(seed)) : load_checkpoint(checkpoint_in);
      FusionOptions fusion;
      fusion.scheme = parse_scheme(scheme);
      fusion.groups = groups;
      fusion.pack = {parse_format(eval_format), l_max};
      out << "scheme=" << scheme_name(fusion.scheme) << " groups=" << groups
          << " format=" << format_name(fusion.pack.format) << " variant=" << variant_name(model.config().variant)
          << '\n';
      if (!data_path.empty()) {
        const auto eps = episodes_from_dataset(read_dataset(data_path));
        std::size_t correct = 0;
        for (const Episode& e : eps) {
          const CandidateSet c{e.test.options};
          const auto gold = static_cast<std::size_t>(std::find(c.options.begin(), c.options.end(), e.test.y) - c.options.begin());
          if (fused_predict(model, e.demos, e.test.x, c, fusion.scheme, fusion.groups, fusion.pack) == gold) ++correct;
        }
        out << "episodes=" << eps.size() << " accuracy=" << std::fixed << std::setprecision(4)
            << (eps.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(eps.size()))
            << std::defaultfloat << '\n';
        return kExitOk;
      }
      const TaskFamily fam = family_for(eval_family, model.config().vocab);
      for (std::size_t k : test_k)
        print_eval(out, k, evaluate(model, fam, k, episodes, seed_list(seeds, seed), fusion));
      return kExitOk;
    }

    if (bench->parsed()) {
      spec.variants.clear();
      for (const auto& v : variants) spec.variants.push_back(parse_variant(v));
      spec.memory_ceiling_bytes = memory_mb << 20;
      spec.seed = seed;
      if (bench_out.empty()) {
        run_bench(spec, &out);
      } else {
        std::ofstream f(bench_out);
        if (!f) throw Error("cannot open '" + bench_out + "'");
        run_bench(spec, &f);
        out << "wrote " << bench_out << '\n';
      }
      return kExitOk;
    }

    if (gen->parsed()) {
      const TaskFamily fam = family_for(gen_family, gen_vocab);
      std::vector<TaskExample> rows;
      for (std::size_t i = 0; i < gen_episodes; ++i) {
        Episode e = sample_episode(fam, gen_k, episode_seed(seed, i));
        const std::string id = std::string(task_kind_name(fam.kind)) + "/" + std::to_string(i);
        for (auto& d : e.demos) d.task = id, rows.push_back(std::move(d));
        e.test.task = id;
        rows.push_back(std::move(e.test));
      }
      if (gen_out.empty()) {
        write_dataset(out, rows);
      } else {
        write_dataset(gen_out, rows);
        out << "wrote " << rows.size() << " examples to " << gen_out << '\n';
      }
      return kExitOk;
    }
  } catch (const NumericError& e) {
    err << "error: " << e.what() << '\n';
    return kExitVerifyFailed;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace saicl

#include "pedsim/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "pedsim/config.hpp"
#include "pedsim/error.hpp"
#include "pedsim/evalrig.hpp"
#include "pedsim/nn.hpp"
#include "pedsim/ppo.hpp"

namespace pedsim {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class ReplayMismatch : public Error {
  using Error::Error;
};

struct Overrides {
  std::string out;
  std::optional<std::uint64_t> seed;
};

std::optional<std::string> env_var(const char* name) {
  const char* v = std::getenv(name);
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

// flag > environment > config file
std::string resolve_output(const Overrides& o, const RunConfig& cfg) {
  if (!o.out.empty()) return o.out;
  if (auto v = env_var("PEDSIM_OUTPUT_DIR")) return *v;
  return cfg.output_dir;
}

std::optional<std::uint64_t> resolve_seed(const Overrides& o) {
  if (o.seed) return o.seed;
  if (auto v = env_var("PEDSIM_SEED")) {
    try {
      std::size_t used = 0;
      const auto s = std::stoull(*v, &used);
      if (used == v->size()) return s;
    } catch (const std::exception&) {
    }
    throw ConfigError("PEDSIM_SEED is not an unsigned integer: " + *v);
  }
  return std::nullopt;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

std::string checkpoint_name(int update) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "checkpoint_%04d.json", update);
  return buf;
}

int cmd_train(const std::string& config_path, const Overrides& o) {
  RunConfig cfg = load_run_config(config_path);
  if (auto seed = resolve_seed(o)) {
    cfg.env.seed = *seed;
    cfg.ppo.seed = *seed;
  }
  cfg.output_dir = resolve_output(o, cfg);
  cfg.validate();
  const fs::path out = cfg.output_dir;
  fs::create_directories(out);

  const auto on_checkpoint = [&](int update, const PolicyParams& p) {
    save_checkpoint((out / checkpoint_name(update)).string(), p);
  };
  const auto on_update = [&](const TrainStats& s) {
    if (s.update % 50 == 0) {
      std::fprintf(stderr, "update %d  steps %ld  mean_reward %.3f\n", s.update,
                   s.steps, s.mean_reward);
    }
  };
  const TrainResult r = train(cfg.env, cfg.ppo, on_checkpoint, on_update);
  save_checkpoint((out / "policy.json").string(), r.params);
  write_stats_csv((out / "stats.csv").string(), r.stats);

  const json manifest = {
      {"config", to_json(cfg)},
      {"config_hash", config_hash(cfg)},
      {"env_config_hash", config_hash(cfg.env)},
      {"seeds",
       {{"env", cfg.env.seed},
        {"ppo", cfg.ppo.seed},
        {"init_stream", Rng::derive(cfg.ppo.seed, 0)},
        {"policy_stream", Rng::derive(cfg.ppo.seed, 1)},
        {"shuffle_stream", Rng::derive(cfg.ppo.seed, 2)}}},
      {"updates", cfg.ppo.updates()},
      {"final_checkpoint", "policy.json"}};
  write_text(out / "manifest.json", manifest.dump(2) + "\n");
  std::fprintf(stderr, "wrote %s\n", (out / "policy.json").string().c_str());
  return kExitOk;
}

int cmd_eval(const std::string& config_path, const std::string& checkpoint,
             const Overrides& o) {
  RunConfig cfg = load_run_config(config_path);
  if (!checkpoint.empty()) cfg.eval.checkpoint = checkpoint;
  if (cfg.eval.checkpoint.empty()) {
    throw ConfigError("eval: no checkpoint given");
  }
  if (auto seed = resolve_seed(o)) cfg.eval.base_seed = *seed;
  cfg.output_dir = resolve_output(o, cfg);
  cfg.validate();
  const fs::path out = cfg.output_dir;
  const fs::path logs = out / "logs";
  fs::create_directories(logs);

  const PolicyParams params = load_checkpoint(cfg.eval.checkpoint);
  const auto sink = [&](std::size_t cell, int k, const EpisodeLog& log) {
    if (k >= cfg.eval.save_logs) return;
    char name[160];
    std::snprintf(name, sizeof name, "cell%02zu_%s_%s_ep%03d.jsonl", cell,
                  fs::path(log.header.env.town).stem().string().c_str(),
                  policy_name(log.header.env.driving_policy), k);
    write_log((logs / name).string(), log);
  };
  const MatrixReport report = cross_matrix(cfg.eval, cfg.env, params, sink);
  write_text(out / "results.csv", report.results_csv());
  write_text(out / "aggregate.csv", report.aggregate_csv());
  write_text(out / "table.txt", report.table());
  const json manifest = {{"config", to_json(cfg)},
                         {"config_hash", config_hash(cfg)},
                         {"checkpoint", cfg.eval.checkpoint},
                         {"base_seed", cfg.eval.base_seed}};
  write_text(out / "eval_manifest.json", manifest.dump(2) + "\n");
  std::cerr << report.table();
  return kExitOk;
}

int cmd_replay(const std::string& log_path, const std::string& config_path) {
  const EpisodeLog log = read_log(log_path);
  const ReplayVerdict v = config_path.empty()
                              ? replay(log)
                              : replay(log, load_run_config(config_path).env);
  if (!v.pass) {
    throw ReplayMismatch("replay mismatch at tick " +
                         std::to_string(v.first_divergent_tick) + ": " + v.reason);
  }
  std::fprintf(stderr, "replay ok: %zu ticks\n", log.ticks.size());
  return kExitOk;
}

int cmd_render(const std::string& log_path, const std::string& out) {
  render_svg_file(read_log(log_path), out);
  return kExitOk;
}

int cmd_validate(const std::string& config_path) {
  const RunConfig cfg = load_run_config(config_path);
  std::fprintf(stderr, "config ok (hash %s)\n", config_hash(cfg).c_str());
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Adversarial pedestrian training and evaluation", "pedsim"};
  app.require_subcommand(1);

  std::string config;
  std::string checkpoint;
  std::string log_path;
  std::string render_out;
  Overrides o;
  std::uint64_t seed = 0;

  auto* train_cmd = app.add_subcommand("train", "Train a pedestrian policy");
  train_cmd->add_option("--config", config, "Run config (JSON)")->required();
  train_cmd->add_option("--out", o.out, "Output directory");
  auto* train_seed = train_cmd->add_option("--seed", seed, "Override env and PPO seeds");

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint across towns and policies");
  eval_cmd->add_option("--config", config, "Run config (JSON)")->required();
  eval_cmd->add_option("--checkpoint", checkpoint, "Policy checkpoint");
  eval_cmd->add_option("--out", o.out, "Output directory");
  auto* eval_seed = eval_cmd->add_option("--seed", seed, "Override the base episode seed");

  auto* replay_cmd = app.add_subcommand("replay", "Re-simulate an episode log");
  replay_cmd->add_option("--log", log_path, "Episode log (JSONL)")->required();
  replay_cmd->add_option("--config", config, "Require the log to match this config");

  auto* render_cmd = app.add_subcommand("render", "Draw an episode log as SVG");
  render_cmd->add_option("--log", log_path, "Episode log (JSONL)")->required();
  render_cmd->add_option("--out", render_out, "SVG file")->required();

  auto* validate_cmd = app.add_subcommand("validate-config", "Check a run config");
  validate_cmd->add_option("--config", config, "Run config (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    std::cerr << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (train_cmd->parsed()) {
      if (train_seed->count() > 0) o.seed = seed;
      return cmd_train(config, o);
    }
    if (eval_cmd->parsed()) {
      if (eval_seed->count() > 0) o.seed = seed;
      return cmd_eval(config, checkpoint, o);
    }
    if (replay_cmd->parsed()) return cmd_replay(log_path, config);
    if (render_cmd->parsed()) return cmd_render(log_path, render_out);
    if (validate_cmd->parsed()) return cmd_validate(config);
  } catch (const ReplayMismatch& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitReplayMismatch;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  std::cerr << app.help();
  return kExitUsage;
}

int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace pedsim

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "pedsim/cli.hpp"
#include "pedsim/evalrig.hpp"

using namespace pedsim;
namespace fs = std::filesystem;

namespace {

const std::string kDefault = PEDSIM_SOURCE_DIR "/configs/default.json";

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "pedsim");
  return run_cli(args);
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

// Small config: a few PPO updates and a 2-episode matrix.
std::string write_small_config(const fs::path& dir) {
  nlohmann::json j;
  std::ifstream(kDefault) >> j;
  j["output_dir"] = (dir / "from_config").string();
  j["ppo"]["total_steps"] = 300;
  j["ppo"]["checkpoint_every"] = 1;
  j["eval"]["episodes_per_cell"] = 2;
  j["eval"]["save_logs"] = 1;
  const auto path = (dir / "small.json").string();
  std::ofstream(path) << j.dump(2);
  return path;
}

}  // namespace

TEST_CASE("usage errors") {
  CHECK(cli({"validate-config", "--config", kDefault}) == kExitOk);
  CHECK(cli({"frobnicate"}) == kExitUsage);
  CHECK(cli({}) == kExitUsage);
  CHECK(cli({"train"}) == kExitUsage);
  CHECK(cli({"eval", "--config", kDefault, "--seed", "abc"}) == kExitUsage);
  CHECK(cli({"validate-config", "--config", "/nonexistent.json"}) == kExitRuntime);
  CHECK(cli({"eval", "--config", kDefault}) == kExitRuntime);  // no checkpoint
}

TEST_CASE("train, eval, replay, render") {
  TempDir tmp("pedsim_cli_test");
  const std::string cfg = write_small_config(tmp.path);
  const fs::path run = tmp.path / "run";

  ::unsetenv("PEDSIM_OUTPUT_DIR");
  ::unsetenv("PEDSIM_SEED");
  REQUIRE(cli({"train", "--config", cfg, "--out", run.string()}) == kExitOk);
  CHECK(fs::exists(run / "policy.json"));
  CHECK(fs::exists(run / "checkpoint_0001.json"));
  CHECK(fs::exists(run / "checkpoint_0002.json"));
  CHECK(fs::exists(run / "stats.csv"));
  nlohmann::json manifest;
  std::ifstream(run / "manifest.json") >> manifest;
  CHECK(manifest["updates"] == 2);
  CHECK(manifest["seeds"]["ppo"] == 1);

  const fs::path ev = tmp.path / "eval";
  REQUIRE(cli({"eval", "--config", cfg, "--checkpoint", (run / "policy.json").string(),
               "--out", ev.string()}) == kExitOk);
  CHECK(fs::exists(ev / "results.csv"));
  CHECK(fs::exists(ev / "aggregate.csv"));
  CHECK(fs::exists(ev / "table.txt"));
  CHECK(fs::exists(ev / "eval_manifest.json"));

  std::vector<fs::path> logs;
  for (const auto& e : fs::directory_iterator(ev / "logs")) logs.push_back(e.path());
  REQUIRE(logs.size() == 6);
  const std::string log = logs.front().string();

  CHECK(cli({"replay", "--log", log}) == kExitOk);
  const std::string svg = (tmp.path / "ep.svg").string();
  CHECK(cli({"render", "--log", log, "--out", svg}) == kExitOk);
  CHECK(fs::file_size(svg) > 0);

  // a log from a different driving policy fails the config guard
  EpisodeLog parsed = read_log(log);
  nlohmann::json other;
  std::ifstream(cfg) >> other;
  other["env"]["driving_policy"] =
      parsed.header.env.driving_policy == DrivingPolicyId::Oblivious ? "Cautious" : "Oblivious";
  const auto other_path = (tmp.path / "other.json").string();
  std::ofstream(other_path) << other.dump();
  CHECK(cli({"replay", "--log", log, "--config", other_path}) == kExitReplayMismatch);

  REQUIRE(parsed.ticks.size() > 5);
  parsed.ticks[5].pedestrian.x += 0.25;
  const std::string bad = (tmp.path / "tampered.jsonl").string();
  write_log(bad, parsed);
  CHECK(cli({"replay", "--log", bad}) == kExitReplayMismatch);
}

TEST_CASE("environment overrides sit between flags and the config file") {
  TempDir tmp("pedsim_cli_env_test");
  const std::string cfg = write_small_config(tmp.path);
  const fs::path env_dir = tmp.path / "from_env";
  const fs::path flag_dir = tmp.path / "from_flag";

  ::setenv("PEDSIM_OUTPUT_DIR", env_dir.string().c_str(), 1);
  ::setenv("PEDSIM_SEED", "7", 1);
  REQUIRE(cli({"train", "--config", cfg}) == kExitOk);
  CHECK(fs::exists(env_dir / "policy.json"));
  CHECK_FALSE(fs::exists(tmp.path / "from_config"));
  nlohmann::json manifest;
  std::ifstream(env_dir / "manifest.json") >> manifest;
  CHECK(manifest["seeds"]["ppo"] == 7);
  CHECK(manifest["seeds"]["env"] == 7);

  REQUIRE(cli({"train", "--config", cfg, "--out", flag_dir.string(), "--seed", "9"}) == kExitOk);
  std::ifstream(flag_dir / "manifest.json") >> manifest;
  CHECK(manifest["seeds"]["ppo"] == 9);

  ::setenv("PEDSIM_SEED", "not-a-number", 1);
  CHECK(cli({"train", "--config", cfg}) == kExitRuntime);

  ::unsetenv("PEDSIM_OUTPUT_DIR");
  ::unsetenv("PEDSIM_SEED");
  REQUIRE(cli({"train", "--config", cfg}) == kExitOk);
  CHECK(fs::exists(tmp.path / "from_config" / "policy.json"));
}

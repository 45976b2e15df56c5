#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "pedsim/env.hpp"
#include "pedsim/nn.hpp"

namespace pedsim {

inline constexpr int kLogVersion = 1;
inline constexpr double kMovingThreshold = 0.5;  // m/s

struct TickRow {
  int tick = 0;
  Pose2D vehicle;
  double vehicle_speed = 0.0;
  Vec2 pedestrian;
  double pedestrian_heading = 0.0;
  double pedestrian_speed = 0.0;

  friend bool operator==(const TickRow&, const TickRow&) = default;
};

struct DecisionRow {
  int index = 0;
  int tick = 0;  // == index * action_repeat
  Observation observation;
  ActionRaw action_raw{};
  PedestrianAction action;
};

struct LogHeader {
  int version = kLogVersion;
  std::string config_hash;
  EnvConfig env;  // env.seed is the episode seed
  bool deterministic = true;
};

struct EpisodeLog {
  LogHeader header;
  std::vector<TickRow> ticks;          // contiguous from tick 0
  std::vector<DecisionRow> decisions;
  CollisionEvent outcome;

  int final_tick() const { return ticks.empty() ? 0 : ticks.back().tick; }
};

// JSONL: a header line, one line per tick (carrying the decision applied
// at that tick, if any), and an outcome line.
std::string log_to_jsonl(const EpisodeLog& log);
EpisodeLog log_from_jsonl(std::istream& in);
void write_log(const std::string& path, const EpisodeLog& log);
EpisodeLog read_log(const std::string& path);

EpisodeLog run_episode(const PedestrianEnv& env, const PolicyParams& params,
                       std::uint64_t seed, bool deterministic);
EpisodeLog run_episode(const EnvConfig& cfg, const PolicyParams& params,
                       std::uint64_t seed, bool deterministic);

struct Rate {
  double value = 0.0;
  double se = 0.0;  // binomial standard error
};

struct Metrics {
  int n_episodes = 0;
  Rate collision;
  Rate front;
  Rate moving;
  double front_share = 0.0;  // front collisions / collisions
};

Metrics compute_metrics(std::span<const CollisionEvent> outcomes,
                        double moving_threshold = kMovingThreshold);
Metrics compute_metrics(std::span<const EpisodeLog> logs,
                        double moving_threshold = kMovingThreshold);

struct EvalSpec {
  std::string checkpoint;
  std::vector<std::string> towns{"TownA", "TownB"};
  std::vector<DrivingPolicyId> policies{DrivingPolicyId::Baseline,
                                        DrivingPolicyId::Cautious,
                                        DrivingPolicyId::Oblivious};
  int episodes_per_cell = 100;
  std::uint64_t base_seed = 1000;
  bool deterministic_policy = true;
  int save_logs = 1;  // episode logs written per cell by the CLI

  void validate() const;
};

struct EpisodeResult {
  std::string town;
  DrivingPolicyId policy = DrivingPolicyId::Baseline;
  RewardId reward = RewardId::R2;
  std::uint64_t seed = 0;
  bool aborted = false;
  CollisionEvent outcome;
  int episode_ticks = 0;
  double pedestrian_reward = 0.0;  // always scored with R2
};

struct CellSummary {
  std::string town;
  DrivingPolicyId policy = DrivingPolicyId::Baseline;
  Metrics metrics;
  double mean_reward = 0.0;
  double reward_se = 0.0;
  int aborted = 0;
};

struct MatrixReport {
  std::vector<EpisodeResult> rows;
  std::vector<CellSummary> cells;

  std::string results_csv() const;
  std::string aggregate_csv() const;
  std::string table() const;
};

// Seed of episode k in cell c: base_seed + c * episodes_per_cell + k.
std::uint64_t cell_seed(const EvalSpec& spec, std::size_t cell, int episode);

// Receives every finished log (cell index, episode index, log).
using LogSink = std::function<void(std::size_t, int, const EpisodeLog&)>;

MatrixReport cross_matrix(const EvalSpec& spec, const EnvConfig& base,
                          const PolicyParams& params, const LogSink& sink = {});
MatrixReport cross_matrix(const EvalSpec& spec, const EnvConfig& base);

struct ReplayVerdict {
  bool pass = false;
  int first_divergent_tick = -1;
  std::string reason;
};

ReplayVerdict replay(const EpisodeLog& log);
// Also requires the log to have been produced under `expected`.
ReplayVerdict replay(const EpisodeLog& log, const EnvConfig& expected);

std::string render_svg(const EpisodeLog& log, const TownMap& map);
void render_svg_file(const EpisodeLog& log, const std::string& path);

}  // namespace pedsim

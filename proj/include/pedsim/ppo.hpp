#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pedsim/env.hpp"
#include "pedsim/nn.hpp"

namespace pedsim {

struct PpoConfig {
  int total_steps = 70000;      // pedestrian decision steps
  int epochs = 10;
  int steps_per_update = 150;
  int batch_size = 64;
  double lr = 3e-4;
  double gamma = 0.98;
  double gae_lambda = 0.95;
  double clip = 0.2;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  double max_grad_norm = 0.0;  // global gradient-norm clip; 0 disables
  double init_log_std = 0.0;   // initial action log-std, both dims
  std::uint64_t seed = 1;
  int checkpoint_every = 50;    // updates

  void validate() const;
  int updates() const {
    return (total_steps + steps_per_update - 1) / steps_per_update;
  }
};

// One row per decision step.
struct RolloutBuffer {
  std::vector<Obs> observations;       // normalized
  std::vector<ActionRaw> actions;      // pre-clip Gaussian samples
  std::vector<double> log_probs;
  std::vector<double> values;
  std::vector<double> rewards;
  std::vector<std::uint8_t> terminal;  // episode ended after this step
  std::vector<double> bootstrap;       // V(s_next) on time-limit endings
  double last_value = 0.0;             // V(s_n) when the last step is mid-episode

  // Episodes that finished inside this window.
  std::vector<double> episode_rewards;
  std::vector<int> episode_lengths;

  std::size_t size() const { return rewards.size(); }
  void push(const Obs& obs, const ActionRaw& a, double log_prob, double v,
            double r, bool done, double boot);
};

// Steps one environment with the current policy; episodes carry over
// between successive collect() calls.
class RolloutCollector {
 public:
  RolloutCollector(const EnvConfig& cfg);

  RolloutBuffer collect(const PolicyParams& params, int n, Rng& policy_rng);

 private:
  PedestrianEnv env_;
  Rng env_rng_;
  EnvState state_;
  Observation obs_;
  bool need_reset_ = true;
  double episode_reward_ = 0.0;
  int episode_length_ = 0;
};

struct GaeResult {
  std::vector<double> advantages;  // raw, not standardized
  std::vector<double> returns;     // advantages + values
};

GaeResult compute_gae(const RolloutBuffer& buf, double gamma, double lambda);

// In place: mean 0, std 1 (population std, eps 1e-8).
void standardize(std::vector<double>& x);

double clipped_surrogate(double ratio, double advantage, double clip);

// Rescales `grads` in place so its global L2 norm is at most max_norm.
void clip_grad_norm(PolicyParams& grads, double max_norm);

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
};

// Loss and (optionally) gradients over a minibatch. Advantages are taken
// as given, so callers standardize first.
struct Minibatch {
  std::span<const Obs> observations;
  std::span<const ActionRaw> actions;
  std::span<const double> old_log_probs;
  std::span<const double> advantages;
  std::span<const double> returns;
};

double ppo_loss(const PolicyParams& params, const Minibatch& mb,
                const PpoConfig& cfg, PolicyParams* grads = nullptr,
                UpdateStats* stats = nullptr);

UpdateStats ppo_update(PolicyParams& params, AdamState& adam,
                       const RolloutBuffer& buf, const GaeResult& gae,
                       const PpoConfig& cfg, Rng& rng);

struct TrainStats {
  int update = 0;
  long steps = 0;
  double mean_reward = 0.0;   // over episodes completed in the window
  double mean_ep_len = 0.0;   // decisions
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_frac = 0.0;
};

struct TrainResult {
  PolicyParams params;
  PolicyParams initial_params;
  std::vector<TrainStats> stats;
};

using CheckpointSink = std::function<void(int update, const PolicyParams&)>;
using ProgressSink = std::function<void(const TrainStats&)>;

TrainResult train(const EnvConfig& env_cfg, const PpoConfig& ppo_cfg,
                  const CheckpointSink& on_checkpoint = {},
                  const ProgressSink& on_update = {});

void write_stats_csv(const std::string& path,
                     const std::vector<TrainStats>& stats);

}  // namespace pedsim

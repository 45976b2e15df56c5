#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "pedsim/rng.hpp"

namespace pedsim {

inline constexpr std::size_t kObsDim = 4;
inline constexpr std::size_t kActDim = 2;
inline constexpr int kHiddenUnits = 64;
inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 2.0;

// Row-major weight: weight[o * in + i].
struct DenseLayer {
  int in = 0;
  int out = 0;
  std::vector<double> weight;
  std::vector<double> bias;
};

// Forward intermediates for one input. Filled by Mlp::forward, consumed by
// exactly one Mlp::backward.
struct GradTape {
  std::vector<std::vector<double>> activations;  // input, then each layer out
  bool consumed = false;
};

// Affine layers with tanh between them and a linear output.
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(const std::vector<int>& sizes);  // zero-initialized

  void init_orthogonal(Rng& rng, double hidden_gain, double output_gain);

  std::vector<double> forward(std::span<const double> x) const;
  std::vector<double> forward(std::span<const double> x, GradTape& tape) const;
  // Accumulates d(loss)/d(params) into `grads` (same shape as *this).
  void backward(GradTape& tape, std::span<const double> d_out,
                Mlp& grads) const;

  std::size_t input_size() const;
  std::size_t output_size() const;
  std::size_t parameter_count() const;

  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

 private:
  std::vector<DenseLayer> layers_;
};

// Gaussian actor with state-independent log std, plus a separate critic.
struct PolicyParams {
  Mlp actor;                      // 4 -> 64 -> 64 -> 2, action mean
  std::array<double, kActDim> log_std{0.0, 0.0};
  Mlp critic;                     // 4 -> 64 -> 64 -> 1

  static PolicyParams create(Rng& rng, double init_log_std = 0.0);
  static PolicyParams zeros();

  std::size_t size() const;
  std::vector<double> flat() const;
  void assign(std::span<const double> values);
  void clamp_log_std();
};

using Obs = std::array<double, kObsDim>;
using ActionRaw = std::array<double, kActDim>;

struct ActionSample {
  ActionRaw action_raw{};
  double log_prob = 0.0;
};

struct LogProbEntropy {
  double log_prob = 0.0;
  double entropy = 0.0;
};

ActionRaw policy_mean(const PolicyParams& p, const Obs& obs);
ActionSample policy_sample(const PolicyParams& p, const Obs& obs, Rng& rng);
LogProbEntropy policy_logprob_entropy(const PolicyParams& p, const Obs& obs,
                                      const ActionRaw& action_raw);
double gaussian_log_prob(const ActionRaw& mean,
                         const std::array<double, kActDim>& log_std,
                         const ActionRaw& x);
double gaussian_entropy(const std::array<double, kActDim>& log_std);
double value(const PolicyParams& p, const Obs& obs);

// Env-facing action: clip to [-1, 1], then rescale to theta in [-pi, pi]
// and speed in [0, 3.5].
struct PedestrianAction;
PedestrianAction to_env_action(const ActionRaw& raw);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long step = 0;
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState for_params(const PolicyParams& p, double lr = 3e-4);
};

void adam_step(PolicyParams& params, const PolicyParams& grads,
               AdamState& state);

nlohmann::json params_to_json(const PolicyParams& p);
PolicyParams params_from_json(const nlohmann::json& j);
void save_checkpoint(const std::string& path, const PolicyParams& p);
PolicyParams load_checkpoint(const std::string& path);

}  // namespace pedsim

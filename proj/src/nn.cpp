#include "pedsim/nn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "pedsim/env.hpp"
#include "pedsim/error.hpp"

namespace pedsim {

namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

// Rows x cols matrix (row-major) with orthonormal rows or columns, whichever
// is the shorter side, scaled by `gain`.
std::vector<double> orthogonal(int rows, int cols, double gain, Rng& rng) {
  const bool transpose = rows < cols;
  const int r = transpose ? cols : rows;  // tall matrix r x c, r >= c
  const int c = transpose ? rows : cols;
  std::vector<double> a(static_cast<std::size_t>(r) * c);
  for (auto& x : a) x = rng.normal();
  // modified Gram-Schmidt on columns
  for (int j = 0; j < c; ++j) {
    for (int k = 0; k < j; ++k) {
      double dot = 0.0;
      for (int i = 0; i < r; ++i) dot += a[i * c + j] * a[i * c + k];
      for (int i = 0; i < r; ++i) a[i * c + j] -= dot * a[i * c + k];
    }
    double norm = 0.0;
    for (int i = 0; i < r; ++i) norm += a[i * c + j] * a[i * c + j];
    norm = std::sqrt(norm);
    for (int i = 0; i < r; ++i) a[i * c + j] /= norm;
  }
  std::vector<double> out(static_cast<std::size_t>(rows) * cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      out[i * cols + j] = gain * (transpose ? a[j * c + i] : a[i * c + j]);
    }
  }
  return out;
}

nlohmann::json mlp_to_json(const Mlp& m) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : m.layers()) {
    layers.push_back({{"in", l.in},
                      {"out", l.out},
                      {"weight", l.weight},
                      {"bias", l.bias}});
  }
  return {{"layers", layers}};
}

Mlp mlp_from_json(const nlohmann::json& j, const std::vector<int>& sizes) {
  Mlp m(sizes);
  const auto& layers = j.at("layers");
  if (layers.size() != m.layers().size()) {
    throw Error("checkpoint: layer count mismatch");
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    DenseLayer& l = m.layers()[i];
    if (layers[i].at("in").get<int>() != l.in ||
        layers[i].at("out").get<int>() != l.out) {
      throw Error("checkpoint: layer shape mismatch");
    }
    l.weight = layers[i].at("weight").get<std::vector<double>>();
    l.bias = layers[i].at("bias").get<std::vector<double>>();
    if (l.weight.size() != static_cast<std::size_t>(l.in) * l.out ||
        l.bias.size() != static_cast<std::size_t>(l.out)) {
      throw Error("checkpoint: parameter length mismatch");
    }
  }
  return m;
}

const std::vector<int> kActorSizes{kObsDim, kHiddenUnits, kHiddenUnits, kActDim};
const std::vector<int> kCriticSizes{kObsDim, kHiddenUnits, kHiddenUnits, 1};

}  // namespace

Mlp::Mlp(const std::vector<int>& sizes) {
  if (sizes.size() < 2) throw Error("Mlp: need at least input and output size");
  for (std::size_t i = 1; i < sizes.size(); ++i) {
    DenseLayer l;
    l.in = sizes[i - 1];
    l.out = sizes[i];
    l.weight.assign(static_cast<std::size_t>(l.in) * l.out, 0.0);
    l.bias.assign(l.out, 0.0);
    layers_.push_back(std::move(l));
  }
}

void Mlp::init_orthogonal(Rng& rng, double hidden_gain, double output_gain) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    DenseLayer& l = layers_[i];
    const double gain = i + 1 == layers_.size() ? output_gain : hidden_gain;
    l.weight = orthogonal(l.out, l.in, gain, rng);
    std::fill(l.bias.begin(), l.bias.end(), 0.0);
  }
}

std::size_t Mlp::input_size() const {
  return layers_.empty() ? 0 : static_cast<std::size_t>(layers_.front().in);
}

std::size_t Mlp::output_size() const {
  return layers_.empty() ? 0 : static_cast<std::size_t>(layers_.back().out);
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
  return n;
}

std::vector<double> Mlp::forward(std::span<const double> x) const {
  GradTape tape;
  return forward(x, tape);
}

std::vector<double> Mlp::forward(std::span<const double> x,
                                 GradTape& tape) const {
  if (x.size() != input_size()) throw Error("Mlp::forward: input dimension mismatch");
  tape.activations.clear();
  tape.consumed = false;
  tape.activations.emplace_back(x.begin(), x.end());
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    const DenseLayer& l = layers_[li];
    const std::vector<double>& in = tape.activations.back();
    std::vector<double> out(l.out);
    const bool hidden = li + 1 < layers_.size();
    for (int o = 0; o < l.out; ++o) {
      double z = l.bias[o];
      const double* w = &l.weight[static_cast<std::size_t>(o) * l.in];
      for (int i = 0; i < l.in; ++i) z += w[i] * in[i];
      out[o] = hidden ? std::tanh(z) : z;
    }
    tape.activations.push_back(std::move(out));
  }
  return tape.activations.back();
}

void Mlp::backward(GradTape& tape, std::span<const double> d_out,
                   Mlp& grads) const {
  if (tape.consumed) throw Error("Mlp::backward: tape already consumed");
  if (tape.activations.size() != layers_.size() + 1) {
    throw Error("Mlp::backward: tape does not match this network");
  }
  if (d_out.size() != output_size()) {
    throw Error("Mlp::backward: output gradient dimension mismatch");
  }
  tape.consumed = true;

  std::vector<double> delta(d_out.begin(), d_out.end());
  for (std::size_t li = layers_.size(); li-- > 0;) {
    const DenseLayer& l = layers_[li];
    DenseLayer& g = grads.layers_[li];
    const std::vector<double>& in = tape.activations[li];
    if (li + 1 < layers_.size()) {
      const std::vector<double>& h = tape.activations[li + 1];
      for (int o = 0; o < l.out; ++o) delta[o] *= 1.0 - h[o] * h[o];
    }
    std::vector<double> d_in(l.in, 0.0);
    for (int o = 0; o < l.out; ++o) {
      const double d = delta[o];
      g.bias[o] += d;
      const std::size_t row = static_cast<std::size_t>(o) * l.in;
      for (int i = 0; i < l.in; ++i) {
        g.weight[row + i] += d * in[i];
        d_in[i] += l.weight[row + i] * d;
      }
    }
    delta = std::move(d_in);
  }
}

PolicyParams PolicyParams::create(Rng& rng, double init_log_std) {
  PolicyParams p = zeros();
  p.actor.init_orthogonal(rng, std::sqrt(2.0), 0.01);
  p.critic.init_orthogonal(rng, std::sqrt(2.0), 1.0);
  p.log_std = {init_log_std, init_log_std};
  p.clamp_log_std();
  return p;
}

PolicyParams PolicyParams::zeros() {
  PolicyParams p;
  p.actor = Mlp(kActorSizes);
  p.critic = Mlp(kCriticSizes);
  p.log_std = {0.0, 0.0};
  return p;
}

std::size_t PolicyParams::size() const {
  return actor.parameter_count() + kActDim + critic.parameter_count();
}

std::vector<double> PolicyParams::flat() const {
  std::vector<double> out;
  out.reserve(size());
  for (const Mlp* m : {&actor, &critic}) {
    for (const auto& l : m->layers()) {
      out.insert(out.end(), l.weight.begin(), l.weight.end());
      out.insert(out.end(), l.bias.begin(), l.bias.end());
    }
    if (m == &actor) out.insert(out.end(), log_std.begin(), log_std.end());
  }
  return out;
}

void PolicyParams::assign(std::span<const double> values) {
  if (values.size() != size()) throw Error("PolicyParams::assign: size mismatch");
  std::size_t k = 0;
  for (Mlp* m : {&actor, &critic}) {
    for (auto& l : m->layers()) {
      for (auto& w : l.weight) w = values[k++];
      for (auto& b : l.bias) b = values[k++];
    }
    if (m == &actor) {
      for (auto& s : log_std) s = values[k++];
    }
  }
}

void PolicyParams::clamp_log_std() {
  for (auto& s : log_std) s = std::clamp(s, kLogStdMin, kLogStdMax);
}

ActionRaw policy_mean(const PolicyParams& p, const Obs& obs) {
  const auto out = p.actor.forward(obs);
  return {out[0], out[1]};
}

double gaussian_log_prob(const ActionRaw& mean,
                         const std::array<double, kActDim>& log_std,
                         const ActionRaw& x) {
  double lp = 0.0;
  for (std::size_t i = 0; i < kActDim; ++i) {
    const double z = (x[i] - mean[i]) / std::exp(log_std[i]);
    lp += -0.5 * z * z - log_std[i] - kHalfLog2Pi;
  }
  return lp;
}

double gaussian_entropy(const std::array<double, kActDim>& log_std) {
  double h = 0.0;
  for (double s : log_std) h += s + 0.5 + kHalfLog2Pi;
  return h;
}

ActionSample policy_sample(const PolicyParams& p, const Obs& obs, Rng& rng) {
  const ActionRaw mean = policy_mean(p, obs);
  ActionSample s;
  for (std::size_t i = 0; i < kActDim; ++i) {
    s.action_raw[i] = mean[i] + std::exp(p.log_std[i]) * rng.normal();
  }
  s.log_prob = gaussian_log_prob(mean, p.log_std, s.action_raw);
  return s;
}

LogProbEntropy policy_logprob_entropy(const PolicyParams& p, const Obs& obs,
                                      const ActionRaw& action_raw) {
  return {gaussian_log_prob(policy_mean(p, obs), p.log_std, action_raw),
          gaussian_entropy(p.log_std)};
}

double value(const PolicyParams& p, const Obs& obs) {
  return p.critic.forward(obs)[0];
}

PedestrianAction to_env_action(const ActionRaw& raw) {
  const double a0 = std::clamp(raw[0], -1.0, 1.0);
  const double a1 = std::clamp(raw[1], -1.0, 1.0);
  return PedestrianAction::clamped(kPi * a0,
                                   0.5 * kMaxPedestrianSpeed * (a1 + 1.0));
}

AdamState AdamState::for_params(const PolicyParams& p, double lr) {
  AdamState s;
  s.m.assign(p.size(), 0.0);
  s.v.assign(p.size(), 0.0);
  s.lr = lr;
  return s;
}

void adam_step(PolicyParams& params, const PolicyParams& grads,
               AdamState& state) {
  std::vector<double> p = params.flat();
  const std::vector<double> g = grads.flat();
  if (g.size() != p.size() || state.m.size() != p.size() ||
      state.v.size() != p.size()) {
    throw Error("adam_step: shape mismatch");
  }
  for (double x : g) {
    if (!std::isfinite(x)) throw Error("adam_step: non-finite gradient");
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < p.size(); ++i) {
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g[i];
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g[i] * g[i];
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    p[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
  }
  params.assign(p);
  params.clamp_log_std();
}

nlohmann::json params_to_json(const PolicyParams& p) {
  return {{"format", "pedsim-policy"},
          {"version", 1},
          {"actor", mlp_to_json(p.actor)},
          {"log_std", p.log_std},
          {"critic", mlp_to_json(p.critic)}};
}

PolicyParams params_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "pedsim-policy") {
      throw Error("checkpoint: unexpected format tag");
    }
    if (j.at("version").get<int>() != 1) {
      throw Error("checkpoint: unsupported version");
    }
    PolicyParams p;
    p.actor = mlp_from_json(j.at("actor"), kActorSizes);
    p.critic = mlp_from_json(j.at("critic"), kCriticSizes);
    const auto ls = j.at("log_std").get<std::vector<double>>();
    if (ls.size() != kActDim) throw Error("checkpoint: log_std length mismatch");
    p.log_std = {ls[0], ls[1]};
    for (double x : p.flat()) {
      if (!std::isfinite(x)) throw Error("checkpoint: non-finite parameter");
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::string& path, const PolicyParams& p) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint: " + path);
  out << params_to_json(p).dump() << '\n';
  if (!out) throw Error("failed writing checkpoint: " + path);
}

PolicyParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error("checkpoint " + path + ": " + e.what());
  }
  return params_from_json(j);
}

}  // namespace pedsim

#include "pedsim/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "pedsim/error.hpp"

namespace pedsim {

void PpoConfig::validate() const {
  if (total_steps < 1 || epochs < 1 || steps_per_update < 1 || batch_size < 1) {
    throw ConfigError("ppo: step counts must be positive");
  }
  if (!(lr > 0 && gamma > 0 && gae_lambda > 0 && value_coef > 0 &&
        entropy_coef > 0)) {
    throw ConfigError("ppo: coefficients must be positive");
  }
  if (gamma > 1.0 || gae_lambda > 1.0) {
    throw ConfigError("ppo: gamma and gae_lambda must be <= 1");
  }
  if (!(clip > 0.0 && clip < 1.0)) throw ConfigError("ppo: clip must be in (0, 1)");
  if (max_grad_norm < 0.0) throw ConfigError("ppo: max_grad_norm must be >= 0");
  if (!(init_log_std >= kLogStdMin && init_log_std <= kLogStdMax)) {
    throw ConfigError("ppo: init_log_std outside the log-std clamp range");
  }
  if (checkpoint_every < 1) throw ConfigError("ppo: checkpoint_every must be >= 1");
}

void RolloutBuffer::push(const Obs& obs, const ActionRaw& a, double log_prob,
                         double v, double r, bool done, double boot) {
  observations.push_back(obs);
  actions.push_back(a);
  log_probs.push_back(log_prob);
  values.push_back(v);
  rewards.push_back(r);
  terminal.push_back(done ? 1 : 0);
  bootstrap.push_back(boot);
}

RolloutCollector::RolloutCollector(const EnvConfig& cfg)
    : env_(cfg), env_rng_(cfg.seed) {}

RolloutBuffer RolloutCollector::collect(const PolicyParams& params, int n,
                                        Rng& policy_rng) {
  if (n < 1) throw Error("collect: n must be >= 1");
  RolloutBuffer buf;
  for (int t = 0; t < n; ++t) {
    if (need_reset_) {
      std::tie(state_, obs_) = env_.reset(env_rng_);
      need_reset_ = false;
      episode_reward_ = 0.0;
      episode_length_ = 0;
    }
    const Obs obs = obs_.normalized();
    const ActionSample sample = policy_sample(params, obs, policy_rng);
    const double v = value(params, obs);
    StepResult r = env_.step(state_, to_env_action(sample.action_raw));
    episode_reward_ += r.reward;
    ++episode_length_;

    double boot = 0.0;
    if (r.done && !r.event.occurred) {
      // time limit: the episode was cut, not finished
      boot = value(params, r.observation.normalized());
    }
    buf.push(obs, sample.action_raw, sample.log_prob, v, r.reward, r.done, boot);

    if (r.done) {
      buf.episode_rewards.push_back(episode_reward_);
      buf.episode_lengths.push_back(episode_length_);
      need_reset_ = true;
    }
    state_ = std::move(r.state);
    obs_ = r.observation;
  }
  buf.last_value = need_reset_ ? 0.0 : value(params, obs_.normalized());
  return buf;
}

GaeResult compute_gae(const RolloutBuffer& buf, double gamma, double lambda) {
  const std::size_t n = buf.size();
  GaeResult g;
  g.advantages.assign(n, 0.0);
  g.returns.assign(n, 0.0);
  double next_adv = 0.0;
  for (std::size_t t = n; t-- > 0;) {
    const double not_done = buf.terminal[t] ? 0.0 : 1.0;
    const double next_value = t + 1 < n ? buf.values[t + 1] : buf.last_value;
    const double reward = buf.rewards[t] + gamma * buf.bootstrap[t];
    const double delta =
        reward + gamma * next_value * not_done - buf.values[t];
    next_adv = delta + gamma * lambda * not_done * next_adv;
    g.advantages[t] = next_adv;
    g.returns[t] = next_adv + buf.values[t];
  }
  return g;
}

void standardize(std::vector<double>& x) {
  if (x.empty()) return;
  const double n = static_cast<double>(x.size());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / n);
  for (double& v : x) v = (v - mean) / (sd + 1e-8);
}

double clipped_surrogate(double ratio, double advantage, double clip) {
  return std::min(ratio * advantage,
                  std::clamp(ratio, 1.0 - clip, 1.0 + clip) * advantage);
}

double ppo_loss(const PolicyParams& params, const Minibatch& mb,
                const PpoConfig& cfg, PolicyParams* grads,
                UpdateStats* stats) {
  const std::size_t b = mb.observations.size();
  if (b == 0) throw Error("ppo_loss: empty minibatch");
  const double inv_b = 1.0 / static_cast<double>(b);
  const std::array<double, kActDim> sigma{std::exp(params.log_std[0]),
                                          std::exp(params.log_std[1])};

  double policy_loss = 0.0;
  double value_loss = 0.0;
  double clipped = 0.0;
  GradTape actor_tape;
  GradTape critic_tape;
  for (std::size_t i = 0; i < b; ++i) {
    const Obs& obs = mb.observations[i];
    const ActionRaw& a = mb.actions[i];
    const auto mean = params.actor.forward(obs, actor_tape);
    const ActionRaw mu{mean[0], mean[1]};
    const double lp = gaussian_log_prob(mu, params.log_std, a);
    const double ratio = std::exp(lp - mb.old_log_probs[i]);
    const double adv = mb.advantages[i];
    const double unclipped = ratio * adv;
    const double clipped_term =
        std::clamp(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip) * adv;
    policy_loss -= std::min(unclipped, clipped_term) * inv_b;
    if (std::abs(ratio - 1.0) > cfg.clip) clipped += inv_b;

    const double v = params.critic.forward(obs, critic_tape)[0];
    const double err = v - mb.returns[i];
    value_loss += err * err * inv_b;

    if (grads != nullptr) {
      // d(policy term)/d(log_prob); zero where the clipped branch is active
      const double d_lp = unclipped <= clipped_term ? -adv * ratio * inv_b : 0.0;
      std::array<double, kActDim> d_mean{};
      for (std::size_t k = 0; k < kActDim; ++k) {
        const double z = (a[k] - mu[k]) / sigma[k];
        d_mean[k] = d_lp * z / sigma[k];
        grads->log_std[k] += d_lp * (z * z - 1.0);
      }
      params.actor.backward(actor_tape, d_mean, grads->actor);
      const double d_v = cfg.value_coef * 2.0 * err * inv_b;
      params.critic.backward(critic_tape, std::span<const double>(&d_v, 1),
                             grads->critic);
    }
  }
  const double entropy = gaussian_entropy(params.log_std);
  if (grads != nullptr) {
    for (auto& g : grads->log_std) g -= cfg.entropy_coef;
  }
  if (stats != nullptr) {
    stats->policy_loss = policy_loss;
    stats->value_loss = value_loss;
    stats->entropy = entropy;
    stats->clip_fraction = clipped;
  }
  return policy_loss + cfg.value_coef * value_loss - cfg.entropy_coef * entropy;
}

void clip_grad_norm(PolicyParams& grads, double max_norm) {
  std::vector<double> g = grads.flat();
  double sq = 0.0;
  for (double x : g) sq += x * x;
  const double norm = std::sqrt(sq);
  if (!(norm > max_norm)) return;
  const double scale = max_norm / (norm + 1e-6);
  for (double& x : g) x *= scale;
  grads.assign(g);
}

UpdateStats ppo_update(PolicyParams& params, AdamState& adam,
                       const RolloutBuffer& buf, const GaeResult& gae,
                       const PpoConfig& cfg, Rng& rng) {
  const std::size_t n = buf.size();
  std::vector<double> adv = gae.advantages;
  standardize(adv);

  std::vector<std::size_t> order(n);
  std::vector<Obs> obs(n);
  std::vector<ActionRaw> act(n);
  std::vector<double> old_lp(n), mb_adv(n), ret(n);

  UpdateStats total;
  int batches = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = n; i > 1; --i) {  // Fisher-Yates
      std::swap(order[i - 1], order[rng.uniform_index(i)]);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t k = order[i];
      obs[i] = buf.observations[k];
      act[i] = buf.actions[k];
      old_lp[i] = buf.log_probs[k];
      mb_adv[i] = adv[k];
      ret[i] = gae.returns[k];
    }
    for (std::size_t start = 0; start < n;
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t len =
          std::min<std::size_t>(cfg.batch_size, n - start);
      const Minibatch mb{{obs.data() + start, len},
                         {act.data() + start, len},
                         {old_lp.data() + start, len},
                         {mb_adv.data() + start, len},
                         {ret.data() + start, len}};
      PolicyParams grads = PolicyParams::zeros();
      UpdateStats s;
      const double loss = ppo_loss(params, mb, cfg, &grads, &s);
      if (!std::isfinite(loss)) {
        std::ostringstream msg;
        msg << "ppo_update: non-finite loss (policy " << s.policy_loss
            << ", value " << s.value_loss << ", entropy " << s.entropy
            << ") at epoch " << epoch;
        throw Error(msg.str());
      }
      if (cfg.max_grad_norm > 0.0) clip_grad_norm(grads, cfg.max_grad_norm);
      adam_step(params, grads, adam);
      total.policy_loss += s.policy_loss;
      total.value_loss += s.value_loss;
      total.entropy += s.entropy;
      total.clip_fraction += s.clip_fraction;
      ++batches;
    }
  }
  total.policy_loss /= batches;
  total.value_loss /= batches;
  total.entropy /= batches;
  total.clip_fraction /= batches;
  return total;
}

TrainResult train(const EnvConfig& env_cfg, const PpoConfig& ppo_cfg,
                  const CheckpointSink& on_checkpoint,
                  const ProgressSink& on_update) {
  env_cfg.validate();
  ppo_cfg.validate();

  Rng init_rng(Rng::derive(ppo_cfg.seed, 0));
  Rng policy_rng(Rng::derive(ppo_cfg.seed, 1));
  Rng shuffle_rng(Rng::derive(ppo_cfg.seed, 2));

  TrainResult result;
  result.params = PolicyParams::create(init_rng, ppo_cfg.init_log_std);
  result.initial_params = result.params;
  AdamState adam = AdamState::for_params(result.params, ppo_cfg.lr);
  RolloutCollector collector(env_cfg);

  const int updates = ppo_cfg.updates();
  long steps = 0;
  for (int u = 1; u <= updates; ++u) {
    const RolloutBuffer buf =
        collector.collect(result.params, ppo_cfg.steps_per_update, policy_rng);
    steps += static_cast<long>(buf.size());
    const GaeResult gae = compute_gae(buf, ppo_cfg.gamma, ppo_cfg.gae_lambda);
    const UpdateStats us =
        ppo_update(result.params, adam, buf, gae, ppo_cfg, shuffle_rng);

    TrainStats ts;
    ts.update = u;
    ts.steps = steps;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const auto& er = buf.episode_rewards;
    const auto& el = buf.episode_lengths;
    ts.mean_reward =
        er.empty() ? nan : std::accumulate(er.begin(), er.end(), 0.0) / er.size();
    ts.mean_ep_len =
        el.empty() ? nan
                   : std::accumulate(el.begin(), el.end(), 0.0) / el.size();
    ts.policy_loss = us.policy_loss;
    ts.value_loss = us.value_loss;
    ts.entropy = us.entropy;
    ts.clip_frac = us.clip_fraction;
    result.stats.push_back(ts);
    if (on_update) on_update(ts);
    if (on_checkpoint && (u % ppo_cfg.checkpoint_every == 0 || u == updates)) {
      on_checkpoint(u, result.params);
    }
  }
  return result;
}

void write_stats_csv(const std::string& path,
                     const std::vector<TrainStats>& stats) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write stats: " + path);
  out << "update,steps,mean_reward,mean_ep_len,policy_loss,value_loss,"
         "entropy,clip_frac\n";
  char line[512];
  for (const auto& s : stats) {
    std::snprintf(line, sizeof line, "%d,%ld,%.6f,%.4f,%.8g,%.8g,%.8g,%.6f\n",
                  s.update, s.steps, s.mean_reward, s.mean_ep_len,
                  s.policy_loss, s.value_loss, s.entropy, s.clip_frac);
    out << line;
  }
}

}  // namespace pedsim

// Independent reference implementations used by the unit and acceptance
// tests. Nothing here calls into the code under test except to obtain the
// quantity being checked.
#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "pedsim/nn.hpp"
#include "pedsim/ppo.hpp"
#include "pedsim/rng.hpp"

namespace oracle {

// Kolmogorov distribution tail P(K > x).
inline double kolmogorov_q(double x) {
  if (x < 1e-3) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    sum += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

// One-sample KS test of `xs` against Uniform(lo, hi); returns the p-value
// (asymptotic, with the usual small-sample correction of the statistic).
inline double ks_uniform_p(std::vector<double> xs, double lo, double hi) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = (xs[i] - lo) / (hi - lo);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  const double sn = std::sqrt(n);
  return kolmogorov_q((sn + 0.12 + 0.11 / sn) * d);
}

// GAE by explicit summation of discounted TD errors, episode by episode.
inline std::vector<double> gae_brute_force(const pedsim::RolloutBuffer& b,
                                           double gamma, double lambda) {
  const std::size_t n = b.size();
  std::vector<double> delta(n);
  for (std::size_t t = 0; t < n; ++t) {
    double next = t + 1 < n ? b.values[t + 1] : b.last_value;
    if (b.terminal[t]) next = 0.0;
    delta[t] = b.rewards[t] + gamma * b.bootstrap[t] + gamma * next - b.values[t];
  }
  std::vector<double> adv(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    double w = 1.0;
    for (std::size_t k = t; k < n; ++k) {
      adv[t] += w * delta[k];
      if (b.terminal[k]) break;
      w *= gamma * lambda;
    }
  }
  return adv;
}

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
};

// Compares analytic gradients with central differences of `loss` over every
// flat parameter. Relative error uses max(|a|, |b|, floor) in the denominator.
template <class Loss>
GradCheck check_gradient(const pedsim::PolicyParams& p,
                         const std::vector<double>& analytic, Loss&& loss,
                         double h = 1e-5, double floor = 1e-6) {
  GradCheck out;
  std::vector<double> flat = p.flat();
  pedsim::PolicyParams probe = p;
  for (std::size_t i = 0; i < flat.size(); ++i) {
    const double saved = flat[i];
    flat[i] = saved + h;
    probe.assign(flat);
    const double up = loss(probe);
    flat[i] = saved - h;
    probe.assign(flat);
    const double down = loss(probe);
    flat[i] = saved;
    const double fd = (up - down) / (2.0 * h);
    const double a = analytic[i];
    const double rel =
        std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), floor});
    if (rel > out.max_rel_error) {
      out.max_rel_error = rel;
      out.worst_index = i;
    }
  }
  return out;
}

// Random minibatch with ratios kept away from the clip boundaries so the
// loss is smooth at the probe points.
struct RandomBatch {
  std::vector<pedsim::Obs> obs;
  std::vector<pedsim::ActionRaw> act;
  std::vector<double> old_lp, adv, ret;

  pedsim::Minibatch view() const { return {obs, act, old_lp, adv, ret}; }
};

inline RandomBatch random_batch(const pedsim::PolicyParams& p, pedsim::Rng& rng,
                                std::size_t n, double clip) {
  RandomBatch b;
  for (std::size_t i = 0; i < n; ++i) {
    pedsim::Obs o;
    for (auto& x : o) x = rng.uniform(-1.0, 1.0);
    const auto s = pedsim::policy_sample(p, o, rng);
    // ratio either well inside the trust region or well outside it
    const double shift = rng.uniform() < 0.7
                             ? rng.uniform(-0.5, 0.5) * clip
                             : (rng.uniform() < 0.5 ? -1.0 : 1.0) * 3.0 * clip;
    b.obs.push_back(o);
    b.act.push_back(s.action_raw);
    b.old_lp.push_back(s.log_prob + shift);
    b.adv.push_back(rng.normal());
    b.ret.push_back(rng.normal());
  }
  return b;
}

inline pedsim::PolicyParams random_params(pedsim::Rng& rng) {
  pedsim::PolicyParams p = pedsim::PolicyParams::create(rng);
  std::vector<double> flat = p.flat();
  for (auto& x : flat) x += 0.3 * rng.normal();
  p.assign(flat);
  p.log_std = {rng.uniform(-1.5, 0.5), rng.uniform(-1.5, 0.5)};
  return p;
}

}  // namespace oracle

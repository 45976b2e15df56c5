#include "pedsim/evalrig.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <memory>
#include <sstream>

#include "pedsim/config.hpp"
#include "pedsim/error.hpp"

namespace pedsim {

using nlohmann::json;

namespace {

TickRow make_row(const EnvState& s) {
  return {s.tick,
          s.vehicle.pose,
          s.vehicle.speed,
          s.pedestrian.position,
          s.pedestrian.heading,
          s.pedestrian.speed};
}

json row_json(const TickRow& r) {
  return {{"type", "tick"},
          {"tick", r.tick},
          {"vehicle", {r.vehicle.x, r.vehicle.y, r.vehicle.heading, r.vehicle_speed}},
          {"pedestrian",
           {r.pedestrian.x, r.pedestrian.y, r.pedestrian_heading,
            r.pedestrian_speed}}};
}

json decision_json(const DecisionRow& d) {
  const Observation& o = d.observation;
  return {{"index", d.index},
          {"observation", {o.alpha, o.d, o.beta, o.v}},
          {"action_raw", d.action_raw},
          {"action", {d.action.theta, d.action.speed}}};
}

std::vector<double> numbers(const json& j, std::size_t n, const char* what) {
  auto v = j.get<std::vector<double>>();
  if (v.size() != n) throw Error(std::string("episode log: bad ") + what);
  return v;
}

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

Rate rate(int count, int n) {
  if (n == 0) return {};
  const double p = static_cast<double>(count) / n;
  return {p, std::sqrt(p * (1.0 - p) / n)};
}

}  // namespace

void EvalSpec::validate() const {
  if (episodes_per_cell < 1) throw ConfigError("eval: episodes_per_cell must be >= 1");
  if (towns.empty()) throw ConfigError("eval: towns must not be empty");
  if (policies.empty()) throw ConfigError("eval: policies must not be empty");
  if (save_logs < 0) throw ConfigError("eval: save_logs must be >= 0");
}

std::string log_to_jsonl(const EpisodeLog& log) {
  std::string out;
  const LogHeader& h = log.header;
  json header = {{"type", "header"},
                 {"version", h.version},
                 {"config_hash", h.config_hash},
                 {"seed", h.env.seed},
                 {"town", h.env.town},
                 {"policy", policy_name(h.env.driving_policy)},
                 {"reward", reward_name(h.env.reward)},
                 {"deterministic", h.deterministic},
                 {"env", to_json(h.env)}};
  out += header.dump();
  out += '\n';
  std::size_t d = 0;
  for (const TickRow& r : log.ticks) {
    json line = row_json(r);
    if (d < log.decisions.size() && log.decisions[d].tick == r.tick) {
      line["decision"] = decision_json(log.decisions[d++]);
    }
    out += line.dump();
    out += '\n';
  }
  const CollisionEvent& e = log.outcome;
  json outcome = {{"type", "outcome"}, {"occurred", e.occurred}};
  if (e.occurred) {
    outcome["zone"] = zone_name(e.zone);
    outcome["v_c"] = e.v_c;
    outcome["tick"] = e.tick;
  }
  out += outcome.dump();
  out += '\n';
  return out;
}

EpisodeLog log_from_jsonl(std::istream& in) {
  EpisodeLog log;
  std::string line;
  bool have_header = false;
  bool have_outcome = false;
  try {
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const json j = json::parse(line);
      const std::string type = j.at("type").get<std::string>();
      if (type == "header") {
        log.header.version = j.at("version").get<int>();
        if (log.header.version != kLogVersion) {
          throw Error("episode log: unsupported version");
        }
        log.header.config_hash = j.at("config_hash").get<std::string>();
        log.header.env = env_config_from_json(j.at("env"));
        log.header.deterministic = j.at("deterministic").get<bool>();
        have_header = true;
      } else if (type == "tick") {
        TickRow r;
        r.tick = j.at("tick").get<int>();
        const auto v = numbers(j.at("vehicle"), 4, "vehicle row");
        const auto p = numbers(j.at("pedestrian"), 4, "pedestrian row");
        r.vehicle = Pose2D{v[0], v[1], v[2]};
        r.vehicle_speed = v[3];
        r.pedestrian = Vec2{p[0], p[1]};
        r.pedestrian_heading = p[2];
        r.pedestrian_speed = p[3];
        if (j.contains("decision")) {
          const json& dj = j["decision"];
          DecisionRow d;
          d.index = dj.at("index").get<int>();
          d.tick = r.tick;
          const auto o = numbers(dj.at("observation"), 4, "observation");
          d.observation = Observation{o[0], o[1], o[2], o[3]};
          const auto raw = numbers(dj.at("action_raw"), 2, "action_raw");
          d.action_raw = {raw[0], raw[1]};
          const auto a = numbers(dj.at("action"), 2, "action");
          d.action = PedestrianAction{a[0], a[1]};
          log.decisions.push_back(d);
        }
        log.ticks.push_back(r);
      } else if (type == "outcome") {
        if (j.at("occurred").get<bool>()) {
          log.outcome = CollisionEvent::hit(
              zone_from_name(j.at("zone").get<std::string>()),
              j.at("v_c").get<double>(), j.at("tick").get<int>());
        }
        have_outcome = true;
      } else {
        throw Error("episode log: unknown line type " + type);
      }
    }
  } catch (const json::exception& e) {
    throw Error(std::string("episode log: ") + e.what());
  }
  if (!have_header || !have_outcome) {
    throw Error("episode log: missing header or outcome line");
  }
  return log;
}

void write_log(const std::string& path, const EpisodeLog& log) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write episode log: " + path);
  out << log_to_jsonl(log);
}

EpisodeLog read_log(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open episode log: " + path);
  return log_from_jsonl(in);
}

EpisodeLog run_episode(const PedestrianEnv& env, const PolicyParams& params,
                       std::uint64_t seed, bool deterministic) {
  EpisodeLog log;
  log.header.env = env.config();
  log.header.env.seed = seed;
  log.header.config_hash = config_hash(log.header.env);
  log.header.deterministic = deterministic;

  Rng rng(seed);
  Rng action_rng(Rng::derive(seed, 7));
  auto [state, obs] = env.reset(rng);
  log.ticks.push_back(make_row(state));
  const TickSink sink = [&log](const EnvState& s) {
    log.ticks.push_back(make_row(s));
  };
  int index = 0;
  while (!state.done) {
    const Obs o = obs.normalized();
    const ActionRaw raw = deterministic
                              ? policy_mean(params, o)
                              : policy_sample(params, o, action_rng).action_raw;
    const PedestrianAction action = to_env_action(raw);
    log.decisions.push_back({index++, state.tick, obs, raw, action});
    StepResult r = env.step(state, action, sink);
    state = std::move(r.state);
    obs = r.observation;
  }
  log.outcome = state.collision;
  return log;
}

EpisodeLog run_episode(const EnvConfig& cfg, const PolicyParams& params,
                       std::uint64_t seed, bool deterministic) {
  return run_episode(PedestrianEnv(cfg), params, seed, deterministic);
}

Metrics compute_metrics(std::span<const CollisionEvent> outcomes,
                        double moving_threshold) {
  if (outcomes.empty()) throw Error("compute_metrics: no episodes");
  int hits = 0;
  int front = 0;
  int moving = 0;
  for (const auto& e : outcomes) {
    if (!e.occurred) continue;
    ++hits;
    if (e.zone == Zone::Front) ++front;
    if (e.v_c > moving_threshold) ++moving;
  }
  const int n = static_cast<int>(outcomes.size());
  Metrics m;
  m.n_episodes = n;
  m.collision = rate(hits, n);
  m.front = rate(front, n);
  m.moving = rate(moving, n);
  m.front_share = hits > 0 ? static_cast<double>(front) / hits : 0.0;
  return m;
}

Metrics compute_metrics(std::span<const EpisodeLog> logs,
                        double moving_threshold) {
  std::vector<CollisionEvent> outcomes;
  outcomes.reserve(logs.size());
  for (const auto& l : logs) outcomes.push_back(l.outcome);
  return compute_metrics(outcomes, moving_threshold);
}

std::uint64_t cell_seed(const EvalSpec& spec, std::size_t cell, int episode) {
  return spec.base_seed +
         static_cast<std::uint64_t>(cell) * spec.episodes_per_cell +
         static_cast<std::uint64_t>(episode);
}

MatrixReport cross_matrix(const EvalSpec& spec, const EnvConfig& base,
                          const PolicyParams& params, const LogSink& sink) {
  spec.validate();
  MatrixReport report;
  std::size_t cell = 0;
  for (const auto& town : spec.towns) {
    const auto map = load_town(town);
    for (const DrivingPolicyId policy : spec.policies) {
      EnvConfig cfg = base;
      cfg.town = town;
      cfg.driving_policy = policy;
      const PedestrianEnv env(cfg, map);

      std::vector<CollisionEvent> outcomes;
      double reward_sum = 0.0;
      double reward_sq = 0.0;
      CellSummary summary;
      summary.town = town;
      summary.policy = policy;
      for (int k = 0; k < spec.episodes_per_cell; ++k) {
        EpisodeResult row;
        row.town = town;
        row.policy = policy;
        row.reward = cfg.reward;
        row.seed = cell_seed(spec, cell, k);
        try {
          const EpisodeLog log =
              run_episode(env, params, row.seed, spec.deterministic_policy);
          row.outcome = log.outcome;
          row.episode_ticks = log.final_tick();
          row.pedestrian_reward = reward_r2(log.outcome);
          outcomes.push_back(log.outcome);
          reward_sum += row.pedestrian_reward;
          reward_sq += row.pedestrian_reward * row.pedestrian_reward;
          if (sink) sink(cell, k, log);
        } catch (const Error&) {
          row.aborted = true;
          ++summary.aborted;
        }
        report.rows.push_back(row);
      }
      if (!outcomes.empty()) {
        const double n = static_cast<double>(outcomes.size());
        summary.metrics = compute_metrics(outcomes);
        summary.mean_reward = reward_sum / n;
        const double var =
            n > 1 ? std::max(0.0, (reward_sq - n * summary.mean_reward *
                                                   summary.mean_reward) /
                                      (n - 1))
                  : 0.0;
        summary.reward_se = std::sqrt(var / n);
      }
      report.cells.push_back(summary);
      ++cell;
    }
  }
  return report;
}

MatrixReport cross_matrix(const EvalSpec& spec, const EnvConfig& base) {
  return cross_matrix(spec, base, load_checkpoint(spec.checkpoint));
}

std::string MatrixReport::results_csv() const {
  std::ostringstream out;
  out << "town,policy,reward_id,seed,collided,zone,v_c,episode_ticks,"
         "pedestrian_reward\n";
  for (const auto& r : rows) {
    out << r.town << ',' << policy_name(r.policy) << ','
        << reward_name(r.reward) << ',' << r.seed << ','
        << (r.outcome.occurred ? 1 : 0) << ','
        << (r.aborted ? "aborted"
                      : (r.outcome.occurred ? zone_name(r.outcome.zone) : "none"))
        << ',' << fmt("%.6f", r.outcome.occurred ? r.outcome.v_c : 0.0) << ','
        << r.episode_ticks << ',' << fmt("%.6f", r.pedestrian_reward) << '\n';
  }
  return out.str();
}

std::string MatrixReport::aggregate_csv() const {
  std::ostringstream out;
  out << "town,policy,n,collision_rate,se,front_rate,se,moving_rate,se,"
         "mean_reward,se\n";
  for (const auto& c : cells) {
    const Metrics& m = c.metrics;
    out << c.town << ',' << policy_name(c.policy) << ',' << m.n_episodes << ','
        << fmt("%.6f", m.collision.value) << ',' << fmt("%.6f", m.collision.se)
        << ',' << fmt("%.6f", m.front.value) << ',' << fmt("%.6f", m.front.se)
        << ',' << fmt("%.6f", m.moving.value) << ',' << fmt("%.6f", m.moving.se)
        << ',' << fmt("%.6f", c.mean_reward) << ',' << fmt("%.6f", c.reward_se)
        << '\n';
  }
  return out.str();
}

std::string MatrixReport::table() const {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-8s %-10s %5s %15s %15s %15s %13s %9s %7s\n",
                "town", "policy", "n", "collision", "front", "moving",
                "reward", "front/col", "aborted");
  out << line;
  for (const auto& c : cells) {
    const Metrics& m = c.metrics;
    std::snprintf(line, sizeof line,
                  "%-8s %-10s %5d   %5.3f +- %5.3f   %5.3f +- %5.3f   "
                  "%5.3f +- %5.3f  %5.2f +- %4.2f %9.3f %7d\n",
                  c.town.c_str(), policy_name(c.policy), m.n_episodes,
                  m.collision.value, m.collision.se, m.front.value, m.front.se,
                  m.moving.value, m.moving.se, c.mean_reward, c.reward_se,
                  m.front_share, c.aborted);
    out << line;
  }
  return out.str();
}

ReplayVerdict replay(const EpisodeLog& log) {
  auto fail = [](int tick, std::string why) {
    return ReplayVerdict{false, tick, std::move(why)};
  };
  if (config_hash(log.header.env) != log.header.config_hash) {
    return fail(-1, "config hash mismatch");
  }
  if (log.ticks.empty()) return fail(0, "log has no tick rows");

  std::unique_ptr<PedestrianEnv> env;
  try {
    env = std::make_unique<PedestrianEnv>(log.header.env);
  } catch (const Error& e) {
    return fail(-1, std::string("cannot rebuild environment: ") + e.what());
  }
  Rng rng(log.header.env.seed);
  auto [state, obs] = env->reset(rng);
  if (!(make_row(state) == log.ticks[0])) return fail(0, "initial state differs");

  std::size_t next = 1;
  int diverged = -1;
  const TickSink sink = [&](const EnvState& s) {
    if (diverged >= 0) return;
    if (next >= log.ticks.size() || !(make_row(s) == log.ticks[next])) {
      diverged = s.tick;
    }
    ++next;
  };
  for (const DecisionRow& d : log.decisions) {
    if (state.done) return fail(state.tick, "decision recorded after episode end");
    if (d.tick != state.tick) return fail(state.tick, "decision tick misaligned");
    StepResult r = env->step(state, d.action, sink);
    if (diverged >= 0) return fail(diverged, "tick row differs");
    state = std::move(r.state);
  }
  if (!state.done) return fail(state.tick, "log ends before the episode does");
  if (next != log.ticks.size()) return fail(state.tick, "extra tick rows in log");
  const CollisionEvent& e = log.outcome;
  const CollisionEvent& g = state.collision;
  if (e.occurred != g.occurred ||
      (e.occurred && (e.zone != g.zone || e.v_c != g.v_c || e.tick != g.tick))) {
    return fail(state.tick, "outcome differs");
  }
  return {true, -1, "ok"};
}

ReplayVerdict replay(const EpisodeLog& log, const EnvConfig& expected) {
  EnvConfig cfg = expected;
  cfg.seed = log.header.env.seed;
  if (config_hash(cfg) != log.header.config_hash) {
    return {false, -1, "log was produced under a different configuration"};
  }
  return replay(log);
}

}  // namespace pedsim

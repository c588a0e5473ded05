#include "skillgrid/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "skillgrid/error.hpp"

namespace skillgrid {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::string& scope,
                    const std::set<std::string>& allowed) {
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) {
      throw ConfigError("config: unknown key \"" + scope + key + "\"");
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) {
    try {
      out = j.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(std::string("config: invalid value for \"") + key + "\"");
    }
  }
}

void parse_phase(const json& j, const std::string& scope, PhaseConfig& phase) {
  reject_unknown(j, scope,
                 {"num_envs", "num_updates", "num_minibatches", "seed", "learning_rate"});
  read(j, "num_envs", phase.num_envs);
  read(j, "num_updates", phase.num_updates);
  read(j, "num_minibatches", phase.num_minibatches);
  read(j, "seed", phase.seed);
  read(j, "learning_rate", phase.learning_rate);
}

}  // namespace

void RunConfig::validate() const {
  train.validate();
  if (eval.episodes <= 0) throw ConfigError("config: eval.episodes must be positive");
  if (es.plan_budget <= 0) throw ConfigError("config: es.plan_budget must be positive");
  if (es.oracle_state_budget <= 0) {
    throw ConfigError("config: es.oracle_state_budget must be positive");
  }
  const RewardWeights& w = train.weights;
  for (double weight : {w.w_attraction, w.w_target, w.w_wrong_target, w.w_step, w.w_solve_time,
                        w.w_terminal}) {
    if (weight < 0.0) throw ConfigError("config: reward weights must be non-negative");
  }
  if (w.c_attraction <= 0.0) throw ConfigError("config: reward.c_attraction must be positive");
}

RunConfig default_run_config() {
  RunConfig config;
  // Full-scale five-target profile: 32x32 grid, three agents, five targets,
  // horizon 128, the published reward weights, and the published two-phase
  // batch geometry. Network sizes and PPO coefficients are not published;
  // these are the desk defaults.
  config.train.env = GenerationConfig{32, 32, 3, 5, 2, 128};
  config.train.weights = RewardWeights{};  // 1.0/1.0/0.25/0.3/0.5/0.2, c 0.0075
  config.train.dense_dim = 64;
  config.train.hidden_dim = 64;
  config.train.bootstrap = PhaseConfig{16384, 572, 16, 2};
  config.train.refinement = PhaseConfig{30720, 1271, 32, 4};
  config.train.rollout_steps = 128;
  return config;
}

RunConfig parse_run_config(const std::string& json_text) {
  json j;
  if (json_text.empty()) {
    j = json::object();
  } else {
    try {
      j = json::parse(json_text);
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("config: parse error: ") + e.what());
    }
  }
  if (!j.is_object()) throw ConfigError("config: top level must be an object");

  RunConfig config = default_run_config();
  reject_unknown(j, "", {"seed", "out_dir", "env", "reward", "net", "train", "eval", "es"});
  read(j, "seed", config.seed);
  read(j, "out_dir", config.out_dir);
  config.train.seed = config.seed;

  if (j.contains("env")) {
    const json& env = j.at("env");
    reject_unknown(env, "env.",
                   {"grid_width", "grid_height", "num_agents", "num_targets", "num_skills",
                    "horizon"});
    read(env, "grid_width", config.train.env.grid_width);
    read(env, "grid_height", config.train.env.grid_height);
    read(env, "num_agents", config.train.env.num_agents);
    read(env, "num_targets", config.train.env.num_targets);
    read(env, "num_skills", config.train.env.num_skills);
    read(env, "horizon", config.train.env.horizon);
  }
  if (j.contains("reward")) {
    const json& reward = j.at("reward");
    reject_unknown(reward, "reward.",
                   {"w_attraction", "w_target", "w_wrong_target", "w_step", "w_solve_time",
                    "w_terminal", "c_attraction"});
    read(reward, "w_attraction", config.train.weights.w_attraction);
    read(reward, "w_target", config.train.weights.w_target);
    read(reward, "w_wrong_target", config.train.weights.w_wrong_target);
    read(reward, "w_step", config.train.weights.w_step);
    read(reward, "w_solve_time", config.train.weights.w_solve_time);
    read(reward, "w_terminal", config.train.weights.w_terminal);
    read(reward, "c_attraction", config.train.weights.c_attraction);
  }
  if (j.contains("net")) {
    const json& net = j.at("net");
    reject_unknown(net, "net.", {"dense_dim", "hidden_dim"});
    read(net, "dense_dim", config.train.dense_dim);
    read(net, "hidden_dim", config.train.hidden_dim);
  }
  if (j.contains("train")) {
    const json& train = j.at("train");
    reject_unknown(train, "train.",
                   {"bootstrap", "refinement", "rollout_steps", "ppo_epochs", "gamma",
                    "gae_lambda", "clip_eps", "value_coef", "entropy_coef", "learning_rate",
                    "max_grad_norm", "normalize_advantages", "num_workers",
                    "checkpoint_every"});
    if (train.contains("bootstrap")) {
      parse_phase(train.at("bootstrap"), "train.bootstrap.", config.train.bootstrap);
    }
    if (train.contains("refinement")) {
      parse_phase(train.at("refinement"), "train.refinement.", config.train.refinement);
    }
    read(train, "rollout_steps", config.train.rollout_steps);
    read(train, "ppo_epochs", config.train.ppo_epochs);
    read(train, "gamma", config.train.gamma);
    read(train, "gae_lambda", config.train.gae_lambda);
    read(train, "clip_eps", config.train.clip_eps);
    read(train, "value_coef", config.train.value_coef);
    read(train, "entropy_coef", config.train.entropy_coef);
    read(train, "learning_rate", config.train.learning_rate);
    read(train, "max_grad_norm", config.train.max_grad_norm);
    read(train, "normalize_advantages", config.train.normalize_advantages);
    read(train, "num_workers", config.train.num_workers);
    read(train, "checkpoint_every", config.train.checkpoint_every);
  }
  if (j.contains("eval")) {
    const json& eval = j.at("eval");
    reject_unknown(eval, "eval.", {"episodes", "seed"});
    read(eval, "episodes", config.eval.episodes);
    read(eval, "seed", config.eval.seed);
  }
  if (j.contains("es")) {
    const json& es = j.at("es");
    reject_unknown(es, "es.", {"plan_budget", "oracle_state_budget"});
    read(es, "plan_budget", config.es.plan_budget);
    read(es, "oracle_state_budget", config.es.oracle_state_budget);
  }

  config.validate();
  return config;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str());
}

std::string run_config_to_json(const RunConfig& config) {
  json j;
  j["seed"] = config.seed;
  j["out_dir"] = config.out_dir;
  j["env"] = {{"grid_width", config.train.env.grid_width},
              {"grid_height", config.train.env.grid_height},
              {"num_agents", config.train.env.num_agents},
              {"num_targets", config.train.env.num_targets},
              {"num_skills", config.train.env.num_skills},
              {"horizon", config.train.env.horizon}};
  j["reward"] = {{"w_attraction", config.train.weights.w_attraction},
                 {"w_target", config.train.weights.w_target},
                 {"w_wrong_target", config.train.weights.w_wrong_target},
                 {"w_step", config.train.weights.w_step},
                 {"w_solve_time", config.train.weights.w_solve_time},
                 {"w_terminal", config.train.weights.w_terminal},
                 {"c_attraction", config.train.weights.c_attraction}};
  j["net"] = {{"dense_dim", config.train.dense_dim},
              {"hidden_dim", config.train.hidden_dim}};
  auto phase_json = [](const PhaseConfig& p) {
    json out{{"num_envs", p.num_envs},
             {"num_updates", p.num_updates},
             {"num_minibatches", p.num_minibatches},
             {"seed", p.seed}};
    if (p.learning_rate > 0.0) out["learning_rate"] = p.learning_rate;
    return out;
  };
  j["train"] = {{"bootstrap", phase_json(config.train.bootstrap)},
                {"refinement", phase_json(config.train.refinement)},
                {"rollout_steps", config.train.rollout_steps},
                {"ppo_epochs", config.train.ppo_epochs},
                {"gamma", config.train.gamma},
                {"gae_lambda", config.train.gae_lambda},
                {"clip_eps", config.train.clip_eps},
                {"value_coef", config.train.value_coef},
                {"entropy_coef", config.train.entropy_coef},
                {"learning_rate", config.train.learning_rate},
                {"max_grad_norm", config.train.max_grad_norm},
                {"normalize_advantages", config.train.normalize_advantages},
                {"num_workers", config.train.num_workers},
                {"checkpoint_every", config.train.checkpoint_every}};
  j["eval"] = {{"episodes", config.eval.episodes}, {"seed", config.eval.seed}};
  j["es"] = {{"plan_budget", config.es.plan_budget},
             {"oracle_state_budget", config.es.oracle_state_budget}};
  return j.dump(2);
}

}  // namespace skillgrid

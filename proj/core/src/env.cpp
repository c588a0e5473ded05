#include "skillgrid/env.hpp"

#include <algorithm>

#include "json.hpp"
#include "skillgrid/error.hpp"

namespace skillgrid {

namespace {

GridPos apply_action(GridPos p, Action a) {
  switch (a) {
    case Action::Up: return {p.row - 1, p.col};
    case Action::Down: return {p.row + 1, p.col};
    case Action::Left: return {p.row, p.col - 1};
    case Action::Right: return {p.row, p.col + 1};
    case Action::Stay: return p;
  }
  return p;
}

bool slot_satisfied(const EnvState& state, const Scenario& scenario, int k) {
  const Target& target = effective_target(state, scenario, k);
  SkillSet present;
  for (int i = 0; i < scenario.num_agents(); ++i) {
    if (state.positions[i] == target.pos) {
      present = present.unite(scenario.agents[i].skills);
    }
  }
  if (target.kind == TargetKind::Or) return present.intersects(target.required);
  return present.covers(target.required);
}

void run_solve_pass(EnvState& state, const Scenario& scenario, StepEvents& events) {
  for (int k = 0; k < scenario.num_targets(); ++k) {
    if (state.solved[k]) continue;
    if (slot_satisfied(state, scenario, k)) {
      state.solved[k] = true;
      events.newly_solved.push_back(k);
    }
  }
}

}  // namespace

const char* action_name(Action a) {
  switch (a) {
    case Action::Up: return "up";
    case Action::Down: return "down";
    case Action::Left: return "left";
    case Action::Right: return "right";
    case Action::Stay: return "stay";
  }
  return "?";
}

const Target& effective_target(const EnvState& state, const Scenario& scenario, int k) {
  const auto& slot = state.injection_slots[k];
  return slot.has_value() ? *slot : scenario.targets[k];
}

Scenario generate_scenario(const GenerationConfig& config, std::uint64_t seed) {
  if (config.num_agents <= 0 || config.num_targets <= 0 || config.num_skills <= 0 ||
      config.grid_width <= 0 || config.grid_height <= 0 || config.horizon <= 0) {
    throw ConfigError("generate_scenario: all generation counts must be positive");
  }
  if (config.num_skills > 16) {
    throw ConfigError("generate_scenario: skill alphabet larger than 16 is unsupported");
  }
  const std::uint64_t cells =
      static_cast<std::uint64_t>(config.grid_width) * config.grid_height;
  if (cells < static_cast<std::uint64_t>(config.num_targets)) {
    throw ConfigError("generate_scenario: more targets than grid cells");
  }

  Rng rng(mix_seed(seed, 0x5eedULL));
  const std::uint32_t subsets = (1u << config.num_skills) - 1u;  // non-empty subsets

  auto random_pos = [&]() -> GridPos {
    int row = static_cast<int>(rng.next_below(config.grid_height));
    int col = static_cast<int>(rng.next_below(config.grid_width));
    return {row, col};
  };

  Scenario scenario;
  scenario.grid_width = config.grid_width;
  scenario.grid_height = config.grid_height;
  scenario.horizon = config.horizon;
  scenario.seed = seed;

  scenario.agents.reserve(config.num_agents);
  for (int i = 0; i < config.num_agents; ++i) {
    AgentSpec agent;
    agent.start = random_pos();
    agent.skills = SkillSet(1u + static_cast<std::uint32_t>(rng.next_below(subsets)));
    scenario.agents.push_back(agent);
  }

  scenario.targets.reserve(config.num_targets);
  for (int k = 0; k < config.num_targets; ++k) {
    Target target;
    do {
      target.pos = random_pos();
    } while (std::any_of(scenario.targets.begin(), scenario.targets.end(),
                         [&](const Target& t) { return t.pos == target.pos; }));
    target.required = SkillSet(1u + static_cast<std::uint32_t>(rng.next_below(subsets)));
    if (target.required.count() > 1) {
      target.kind = rng.next_below(2) == 0 ? TargetKind::And : TargetKind::Or;
    } else {
      target.kind = TargetKind::Or;
    }
    scenario.targets.push_back(target);
  }

  // Solvability repair: grant every demanded-but-missing skill to a random agent.
  SkillSet demanded;
  for (const Target& t : scenario.targets) demanded = demanded.unite(t.required);
  SkillSet held;
  for (const AgentSpec& a : scenario.agents) held = held.unite(a.skills);
  for (int s = 0; s < config.num_skills; ++s) {
    if (demanded.has(s) && !held.has(s)) {
      auto& lucky = scenario.agents[rng.next_below(config.num_agents)];
      lucky.skills = lucky.skills.unite(SkillSet::single(s));
    }
  }
  return scenario;
}

EnvState reset_env(const Scenario& scenario, StepEvents* events) {
  EnvState state;
  state.positions.reserve(scenario.num_agents());
  for (const AgentSpec& a : scenario.agents) state.positions.push_back(a.start);
  state.solved.assign(scenario.num_targets(), false);
  state.step = 0;
  state.last_actions.assign(scenario.num_agents(), Action::Stay);
  state.injection_slots.assign(scenario.num_targets(), std::nullopt);

  StepEvents ev;
  ev.prev_solved_count = 0;
  run_solve_pass(state, scenario, ev);
  if (events != nullptr) *events = ev;
  return state;
}

std::pair<EnvState, StepEvents> step_env(const EnvState& state, const Scenario& scenario,
                                         const std::vector<Action>& joint_action) {
  if (is_terminal(state, scenario)) {
    throw EpisodeOverError("step_env: episode is terminal (all solved or horizon reached)");
  }
  if (static_cast<int>(joint_action.size()) != scenario.num_agents()) {
    throw DimensionError("step_env: joint action size does not match agent count");
  }

  EnvState next = state;
  StepEvents events;
  events.prev_solved_count = state.solved_count();

  for (int i = 0; i < scenario.num_agents(); ++i) {
    GridPos moved = apply_action(state.positions[i], joint_action[i]);
    next.positions[i] = scenario.in_bounds(moved) ? moved : state.positions[i];
  }
  run_solve_pass(next, scenario, events);
  next.step = state.step + 1;
  next.last_actions = joint_action;
  return {std::move(next), std::move(events)};
}

bool is_terminal(const EnvState& state, const Scenario& scenario) {
  return state.all_solved() || state.step >= scenario.horizon;
}

std::string scenario_to_json(const Scenario& scenario) {
  nlohmann::json j;
  j["version"] = 1;
  j["grid"] = {{"width", scenario.grid_width}, {"height", scenario.grid_height}};
  j["horizon"] = scenario.horizon;
  j["seed"] = scenario.seed;
  j["agents"] = nlohmann::json::array();
  for (const AgentSpec& a : scenario.agents) {
    j["agents"].push_back({{"pos", {a.start.row, a.start.col}}, {"skills", a.skills.mask()}});
  }
  j["targets"] = nlohmann::json::array();
  for (const Target& t : scenario.targets) {
    j["targets"].push_back({{"pos", {t.pos.row, t.pos.col}},
                            {"skills", t.required.mask()},
                            {"kind", t.kind == TargetKind::And ? "and" : "or"}});
  }
  return j.dump(2);
}

Scenario scenario_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("scenario_from_json: ") + e.what());
  }
  try {
    if (j.at("version").get<int>() != 1) {
      throw ConfigError("scenario_from_json: unsupported schema version");
    }
    Scenario s;
    s.grid_width = j.at("grid").at("width").get<int>();
    s.grid_height = j.at("grid").at("height").get<int>();
    s.horizon = j.at("horizon").get<int>();
    s.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& ja : j.at("agents")) {
      AgentSpec a;
      a.start = {ja.at("pos").at(0).get<int>(), ja.at("pos").at(1).get<int>()};
      a.skills = SkillSet(ja.at("skills").get<std::uint32_t>());
      s.agents.push_back(a);
    }
    for (const auto& jt : j.at("targets")) {
      Target t;
      t.pos = {jt.at("pos").at(0).get<int>(), jt.at("pos").at(1).get<int>()};
      t.required = SkillSet(jt.at("skills").get<std::uint32_t>());
      const std::string kind = jt.at("kind").get<std::string>();
      if (kind != "and" && kind != "or") {
        throw ConfigError("scenario_from_json: target kind must be \"and\" or \"or\"");
      }
      t.kind = kind == "and" ? TargetKind::And : TargetKind::Or;
      s.targets.push_back(t);
    }
    for (const AgentSpec& a : s.agents) {
      if (!s.in_bounds(a.start)) throw ConfigError("scenario_from_json: agent start out of bounds");
      if (a.skills.empty()) throw ConfigError("scenario_from_json: agent skill set empty");
    }
    for (const Target& t : s.targets) {
      if (!s.in_bounds(t.pos)) throw ConfigError("scenario_from_json: target out of bounds");
      if (t.required.empty()) throw ConfigError("scenario_from_json: target requirement empty");
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("scenario_from_json: ") + e.what());
  }
}

}  // namespace skillgrid

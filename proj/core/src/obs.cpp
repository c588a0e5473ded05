#include "skillgrid/obs.hpp"

#include <algorithm>

#include "skillgrid/error.hpp"

namespace skillgrid {

std::pair<int, int> masked_offset(const EnvState& state, const Scenario& scenario,
                                  int agent_index, int target_index) {
  if (state.solved[target_index]) return {0, 0};
  const Target& target = effective_target(state, scenario, target_index);
  const GridPos& p = state.positions[agent_index];
  return {target.pos.row - p.row, target.pos.col - p.col};
}

Observation build_observation(const EnvState& state, const Scenario& scenario, int agent_index) {
  const int n = scenario.num_agents();
  const int m = scenario.num_targets();
  Observation obs;
  obs.reserve(observation_length(n, m));

  // Positions, observer first.
  obs.push_back(state.positions[agent_index].row);
  obs.push_back(state.positions[agent_index].col);
  for (int i = 0; i < n; ++i) {
    if (i == agent_index) continue;
    obs.push_back(state.positions[i].row);
    obs.push_back(state.positions[i].col);
  }

  for (int k = 0; k < m; ++k) {
    auto [dr, dc] = masked_offset(state, scenario, agent_index, k);
    obs.push_back(dr);
    obs.push_back(dc);
  }

  obs.push_back(encode_skill_set(scenario.agents[agent_index].skills));
  for (int i = 0; i < n; ++i) {
    if (i == agent_index) continue;
    obs.push_back(encode_skill_set(scenario.agents[i].skills));
  }

  for (int k = 0; k < m; ++k) {
    obs.push_back(encode_skill_set(effective_target(state, scenario, k).required));
  }
  for (int k = 0; k < m; ++k) {
    obs.push_back(effective_target(state, scenario, k).kind == TargetKind::And ? 1.0 : 0.0);
  }
  return obs;
}

Observation build_joint_observation(const EnvState& state, const Scenario& scenario) {
  Observation joint;
  joint.reserve(scenario.num_agents() *
                observation_length(scenario.num_agents(), scenario.num_targets()));
  for (int i = 0; i < scenario.num_agents(); ++i) {
    Observation obs = build_observation(state, scenario, i);
    joint.insert(joint.end(), obs.begin(), obs.end());
  }
  return joint;
}

namespace {

Observation scale_blocks(const Observation& obs, const Scenario& scenario, int num_repeats) {
  const int n = scenario.num_agents();
  const int m = scenario.num_targets();
  const int len = observation_length(n, m);
  const double scale = 1.0 / std::max(scenario.grid_width, scenario.grid_height);
  Observation out = obs;
  for (int rep = 0; rep < num_repeats; ++rep) {
    const int base = rep * len;
    for (int i = 0; i < 2 * n + 2 * m; ++i) out[base + i] *= scale;
  }
  return out;
}

}  // namespace

Observation normalize_observation(const Observation& obs, const Scenario& scenario) {
  if (static_cast<int>(obs.size()) !=
      observation_length(scenario.num_agents(), scenario.num_targets())) {
    throw DimensionError("normalize_observation: length mismatch");
  }
  return scale_blocks(obs, scenario, 1);
}

Observation normalize_joint_observation(const Observation& joint, const Scenario& scenario) {
  const int n = scenario.num_agents();
  if (static_cast<int>(joint.size()) !=
      n * observation_length(n, scenario.num_targets())) {
    throw DimensionError("normalize_joint_observation: length mismatch");
  }
  return scale_blocks(joint, scenario, n);
}

std::pair<EnvState, int> inject_target(const EnvState& state, const Scenario& scenario,
                                       const Target& new_target) {
  if (!scenario.in_bounds(new_target.pos)) {
    throw ConfigError("inject_target: target position out of bounds");
  }
  if (new_target.required.empty()) {
    throw ConfigError("inject_target: target requirement empty");
  }
  auto it = std::find(state.solved.begin(), state.solved.end(), true);
  if (it == state.solved.end()) {
    throw BufferFullError("inject_target: no solved slot available");
  }
  const int slot = static_cast<int>(it - state.solved.begin());
  EnvState next = state;
  next.injection_slots[slot] = new_target;
  next.solved[slot] = false;
  return {std::move(next), slot};
}

}  // namespace skillgrid

#include "skillgrid/reward.hpp"

#include <cmath>

namespace skillgrid {

const char* phase_name(Phase p) {
  return p == Phase::Bootstrap ? "bootstrap" : "refinement";
}

double attraction_reward(const EnvState& state, const Scenario& scenario, int agent_index,
                         double c_attraction) {
  const int m = scenario.num_targets();
  const GridPos& p = state.positions[agent_index];
  double sum = 0.0;
  for (int k = 0; k < m; ++k) {
    if (state.solved[k]) continue;
    const Target& target = effective_target(state, scenario, k);
    if (!scenario.agents[agent_index].skills.intersects(target.required)) continue;
    const double dr = target.pos.row - p.row;
    const double dc = target.pos.col - p.col;
    sum += std::exp(-c_attraction * std::sqrt(dr * dr + dc * dc));
  }
  return sum / (static_cast<double>(m) * scenario.horizon);
}

double target_reward(const StepEvents& events, int num_targets) {
  return static_cast<double>(events.newly_solved.size()) / num_targets;
}

double wrong_target_cost(const EnvState& state, const Scenario& scenario, int agent_index) {
  double cost = 0.0;
  for (int k = 0; k < scenario.num_targets(); ++k) {
    if (state.solved[k]) continue;
    const Target& target = effective_target(state, scenario, k);
    if (state.positions[agent_index] == target.pos &&
        !scenario.agents[agent_index].skills.intersects(target.required)) {
      cost -= 1.0;
    }
  }
  return cost;
}

double step_cost(Action previous_action) {
  return previous_action == Action::Stay ? 0.0 : -1.0;
}

double solve_time_cost(const EnvState& state, int num_targets, int horizon) {
  const int unsolved = num_targets - state.solved_count();
  return static_cast<double>(unsolved) / (static_cast<double>(num_targets) * horizon);
}

double terminal_bonus(const EnvState& prev_state, const EnvState& state) {
  return (!prev_state.all_solved() && state.all_solved()) ? 1.0 : 0.0;
}

double total_reward(const RewardBreakdown& b, const RewardWeights& w, Phase phase) {
  double total = w.w_attraction * b.attraction + w.w_target * b.target_payout +
                 w.w_wrong_target * b.wrong_target;
  if (phase == Phase::Refinement) {
    total += w.w_step * b.step_cost - w.w_solve_time * b.solve_time +
             w.w_terminal * b.terminal_bonus;
  }
  return total;
}

RewardBreakdown compute_breakdown(const EnvState& prev_state, const EnvState& state,
                                  const Scenario& scenario, const StepEvents& events,
                                  int agent_index, const RewardWeights& weights) {
  RewardBreakdown b;
  b.attraction = attraction_reward(state, scenario, agent_index, weights.c_attraction);
  b.target_payout = target_reward(events, scenario.num_targets());
  b.wrong_target = wrong_target_cost(state, scenario, agent_index);
  b.step_cost = step_cost(state.last_actions[agent_index]);
  b.solve_time = solve_time_cost(state, scenario.num_targets(), scenario.horizon);
  b.terminal_bonus = terminal_bonus(prev_state, state);
  return b;
}

std::vector<double> step_rewards(const EnvState& prev_state, const EnvState& state,
                                 const Scenario& scenario, const StepEvents& events,
                                 const RewardWeights& weights, Phase phase) {
  std::vector<double> rewards(scenario.num_agents());
  for (int i = 0; i < scenario.num_agents(); ++i) {
    rewards[i] =
        total_reward(compute_breakdown(prev_state, state, scenario, events, i, weights), weights,
                     phase);
  }
  return rewards;
}

}  // namespace skillgrid

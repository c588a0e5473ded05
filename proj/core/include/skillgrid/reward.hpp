#pragma once

#include <vector>

#include "skillgrid/env.hpp"

namespace skillgrid {

// Two-phase schedule: in Bootstrap only attraction, target payout and the
// wrong-target penalty are active; Refinement enables all six terms.
enum class Phase { Bootstrap, Refinement };

const char* phase_name(Phase p);

struct RewardWeights {
  double w_attraction = 1.0;
  double w_target = 1.0;
  double w_wrong_target = 0.25;
  double w_step = 0.3;
  double w_solve_time = 0.5;
  double w_terminal = 0.2;
  double c_attraction = 0.0075;  // spread of the attraction field
};

// One step's reward terms for one agent. Sign conventions: attraction,
// target_payout and terminal_bonus are non-negative payouts; wrong_target and
// step_cost are already negative; solve_time is a positive magnitude that the
// total subtracts.
struct RewardBreakdown {
  double attraction = 0.0;
  double target_payout = 0.0;
  double wrong_target = 0.0;
  double step_cost = 0.0;
  double solve_time = 0.0;
  double terminal_bonus = 0.0;
};

// Mean over targets of exp(-c * euclidean distance), counting only unsolved
// targets sharing at least one skill with the agent, normalized by horizon.
double attraction_reward(const EnvState& state, const Scenario& scenario, int agent_index,
                         double c_attraction);

// (newly solved)/M, identical for every agent.
double target_reward(const StepEvents& events, int num_targets);

// -1 per unsolved co-located target with no common skill.
double wrong_target_cost(const EnvState& state, const Scenario& scenario, int agent_index);

// 0 for stay, -1 for any move (boundary-reverted moves included).
double step_cost(Action previous_action);

// |unsolved| / (M * horizon), a positive magnitude.
double solve_time_cost(const EnvState& state, int num_targets, int horizon);

// 1 exactly at the transition that solves the last open slot.
double terminal_bonus(const EnvState& prev_state, const EnvState& state);

// Weighted, phase-gated sum of the six terms.
double total_reward(const RewardBreakdown& breakdown, const RewardWeights& weights, Phase phase);

// All terms for one agent over the transition prev_state -> state.
RewardBreakdown compute_breakdown(const EnvState& prev_state, const EnvState& state,
                                  const Scenario& scenario, const StepEvents& events,
                                  int agent_index, const RewardWeights& weights);

// Per-agent totals for a transition; convenience for rollout collection.
std::vector<double> step_rewards(const EnvState& prev_state, const EnvState& state,
                                 const Scenario& scenario, const StepEvents& events,
                                 const RewardWeights& weights, Phase phase);

}  // namespace skillgrid

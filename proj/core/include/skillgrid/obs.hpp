#pragma once

#include <utility>
#include <vector>

#include "skillgrid/env.hpp"

namespace skillgrid {

// Per-agent observation layout, in raw cell units (see docs/observation_layout.md
// for a worked example). For N agents and M target slots the vector is:
//
//   [0, 2N)            agent positions (row, col), observer first, then the
//                      remaining agents in ascending index order
//   [2N, 2N+2M)        per-slot relative offsets (target - observer), zeroed
//                      once the slot is solved
//   [2N+2M, 3N+2M)     agent skill-set codes, observer first
//   [3N+2M, 3N+3M)     target skill-set codes, slot order
//   [3N+3M, 3N+4M)     goal-type flags (1 = And, 0 = Or)
//
// Length = 3N + 4M, constant for a fixed (N, M) even across injections.
using Observation = std::vector<double>;

inline int observation_length(int num_agents, int num_targets) {
  return 3 * num_agents + 4 * num_targets;
}

// Canonical integer code of a skill set (the bitmask value itself).
inline std::uint32_t encode_skill_set(SkillSet s) { return s.mask(); }

// Offset from agent to target slot k, or (0,0) once the slot is solved.
std::pair<int, int> masked_offset(const EnvState& state, const Scenario& scenario,
                                  int agent_index, int target_index);

Observation build_observation(const EnvState& state, const Scenario& scenario, int agent_index);

// Critic input: per-agent observations concatenated in agent index order.
Observation build_joint_observation(const EnvState& state, const Scenario& scenario);

// Network-facing variant: position and offset entries scaled by
// 1/max(grid_width, grid_height). Skill codes and flags pass through.
Observation normalize_observation(const Observation& obs, const Scenario& scenario);
Observation normalize_joint_observation(const Observation& joint, const Scenario& scenario);

// Replanning buffer: overwrites the lowest-index solved slot with `new_target`
// and clears its solved flag. Returns the updated state and the slot used.
// Throws BufferFullError when no slot is solved.
std::pair<EnvState, int> inject_target(const EnvState& state, const Scenario& scenario,
                                       const Target& new_target);

}  // namespace skillgrid

#pragma once

#include <vector>

#include "skillgrid/env.hpp"

namespace skillgrid::test {

struct AgentInit {
  GridPos pos;
  std::uint32_t skills;
};

struct TargetInit {
  GridPos pos;
  std::uint32_t skills;
  TargetKind kind;
};

// Hand-built scenario: positions as {row, col}, skills as bitmasks.
inline Scenario make_scenario(int width, int height, std::vector<AgentInit> agents,
                              std::vector<TargetInit> targets, int horizon = 128) {
  Scenario s;
  s.grid_width = width;
  s.grid_height = height;
  s.horizon = horizon;
  for (const AgentInit& a : agents) s.agents.push_back({a.pos, SkillSet(a.skills)});
  for (const TargetInit& t : targets) s.targets.push_back({t.pos, SkillSet(t.skills), t.kind});
  return s;
}

inline std::vector<Action> all_stay(int n) { return std::vector<Action>(n, Action::Stay); }

}  // namespace skillgrid::test

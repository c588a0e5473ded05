#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "skillgrid/env.hpp"

namespace skillgrid {

// A minimal set of agents whose combined skills satisfy one target: a single
// qualifying agent for Or targets, an irreducible covering group for And.
struct CoverOption {
  int target_index = 0;
  std::vector<int> agents;  // ascending indices

  bool operator==(const CoverOption&) const = default;
};

// All minimal covers of `target`, deduplicated, ordered lexicographically by
// agent index list. Throws InfeasibleError when the team cannot satisfy it.
std::vector<CoverOption> enumerate_covers(const Target& target,
                                          const std::vector<AgentSpec>& agents);

enum class Objective { SolveTime, TeamEffort };

const char* objective_name(Objective o);

struct PlanVisit {
  int target_index = 0;
  GridPos cell;
  int ready = 0;      // when this agent reaches the cell
  int completes = 0;  // when the target is solved (max over contributors)
};

struct AgentPlan {
  std::vector<PlanVisit> visits;
  int moves = 0;  // Manhattan legs travelled; waiting costs nothing
};

struct PlanSchedule {
  std::vector<AgentPlan> agents;
  int t_solved = 0;
  int total_moves = 0;
};

// Simulates an (assignment, per-agent order) combination: agents travel
// between consecutive assigned cells at one cell per step along Manhattan
// distance; a multi-agent visit completes when the last contributor is ready,
// with earlier arrivers waiting on the cell. Throws InvalidPlanError for
// orders inconsistent with the assignment or mutually deadlocked.
PlanSchedule schedule_cost(const Scenario& scenario, const std::vector<CoverOption>& assignment,
                           const std::vector<std::vector<int>>& orders);

struct EsResult {
  PlanSchedule plan;
  double metric = 0.0;  // M_st (horizon - t_solved) or M_tte per objective
  std::int64_t plans_evaluated = 0;
};

// Enumerates every assignment of minimal covers and every per-agent visit
// order; targets already solved at reset are excluded. Ties resolve by the
// secondary objective, then by enumeration (lexicographic) order. `prune`
// enables branch-and-bound bounds; results are identical either way.
EsResult exhaustive_search(const Scenario& scenario, Objective objective,
                           std::int64_t plan_budget = 10'000'000, bool prune = true);

struct OracleResult {
  int cost = 0;  // steps (SolveTime) or total non-stay actions (TeamEffort)
  std::int64_t expanded = 0;
};

// Uniform-cost search over the joint state space (all agent positions plus
// the solved mask), expanding all 5^N joint actions with the exact step/solve
// semantics. The true optimum over the full action space.
OracleResult bfs_oracle(const Scenario& scenario, Objective objective,
                        std::int64_t state_budget = 50'000'000);

// Expands a schedule into explicit joint actions (row moves, then column
// moves, then waits). Replaying them solves every target by plan.t_solved.
std::vector<std::vector<Action>> plan_to_actions(const Scenario& scenario,
                                                 const PlanSchedule& plan);

// True when no target cell lies inside the Manhattan bounding box of any
// other pair of key points (agent starts and target cells). On such
// instances no shortest leg can pass through a foreign target, which is the
// geometry that lets the full action space beat the schedule model.
bool passthrough_free(const Scenario& scenario);

std::string plan_to_json(const PlanSchedule& plan, Objective objective,
                         const Scenario& scenario);

}  // namespace skillgrid

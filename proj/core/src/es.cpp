#include "skillgrid/es.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <unordered_map>

#include "json.hpp"
#include "skillgrid/error.hpp"

namespace skillgrid {

namespace {

int manhattan(GridPos a, GridPos b) {
  return std::abs(a.row - b.row) + std::abs(a.col - b.col);
}

}  // namespace

const char* objective_name(Objective o) {
  return o == Objective::SolveTime ? "solve_time" : "team_effort";
}

std::vector<CoverOption> enumerate_covers(const Target& target,
                                          const std::vector<AgentSpec>& agents) {
  const int n = static_cast<int>(agents.size());
  std::vector<CoverOption> covers;

  if (target.kind == TargetKind::Or) {
    for (int i = 0; i < n; ++i) {
      if (agents[i].skills.intersects(target.required)) {
        covers.push_back({0, {i}});
      }
    }
  } else {
    std::vector<std::uint32_t> covering;  // agent subsets whose union covers
    for (std::uint32_t subset = 1; subset < (1u << n); ++subset) {
      SkillSet pooled;
      for (int i = 0; i < n; ++i) {
        if ((subset >> i) & 1u) pooled = pooled.unite(agents[i].skills);
      }
      if (pooled.covers(target.required)) covering.push_back(subset);
    }
    for (std::uint32_t subset : covering) {
      bool minimal = true;
      for (std::uint32_t other : covering) {
        if (other != subset && (subset & other) == other) {
          minimal = false;
          break;
        }
      }
      if (!minimal) continue;
      CoverOption option;
      for (int i = 0; i < n; ++i) {
        if ((subset >> i) & 1u) option.agents.push_back(i);
      }
      covers.push_back(std::move(option));
    }
    std::sort(covers.begin(), covers.end(),
              [](const CoverOption& a, const CoverOption& b) { return a.agents < b.agents; });
  }

  if (covers.empty()) {
    throw InfeasibleError("enumerate_covers: no agent subset satisfies the target");
  }
  return covers;
}

PlanSchedule schedule_cost(const Scenario& scenario, const std::vector<CoverOption>& assignment,
                           const std::vector<std::vector<int>>& orders) {
  const int n = scenario.num_agents();
  if (static_cast<int>(orders.size()) != n) {
    throw InvalidPlanError("schedule_cost: one order sequence per agent required");
  }

  // Validate that orders contain exactly each agent's assigned targets.
  std::vector<std::vector<int>> expected(n);
  for (const CoverOption& cover : assignment) {
    for (int agent : cover.agents) expected[agent].push_back(cover.target_index);
  }
  for (int i = 0; i < n; ++i) {
    std::vector<int> got = orders[i];
    std::vector<int> want = expected[i];
    std::sort(got.begin(), got.end());
    std::sort(want.begin(), want.end());
    if (got != want) {
      throw InvalidPlanError("schedule_cost: orders do not match the assignment");
    }
  }

  PlanSchedule plan;
  plan.agents.resize(n);
  std::vector<GridPos> pos(n);
  std::vector<int> time(n, 0), cursor(n, 0);
  for (int i = 0; i < n; ++i) pos[i] = scenario.agents[i].start;

  std::vector<bool> done(assignment.size(), false);
  std::size_t remaining = assignment.size();
  while (remaining > 0) {
    bool progress = false;
    for (std::size_t v = 0; v < assignment.size(); ++v) {
      if (done[v]) continue;
      const CoverOption& cover = assignment[v];
      const bool ready = std::all_of(cover.agents.begin(), cover.agents.end(), [&](int agent) {
        return cursor[agent] < static_cast<int>(orders[agent].size()) &&
               orders[agent][cursor[agent]] == cover.target_index;
      });
      if (!ready) continue;

      const GridPos cell = scenario.targets[cover.target_index].pos;
      int completes = 0;
      for (int agent : cover.agents) {
        completes = std::max(completes, time[agent] + manhattan(pos[agent], cell));
      }
      for (int agent : cover.agents) {
        const int travel = manhattan(pos[agent], cell);
        plan.agents[agent].visits.push_back(
            {cover.target_index, cell, time[agent] + travel, completes});
        plan.agents[agent].moves += travel;
        plan.total_moves += travel;
        time[agent] = completes;
        pos[agent] = cell;
        cursor[agent] += 1;
      }
      plan.t_solved = std::max(plan.t_solved, completes);
      done[v] = true;
      remaining -= 1;
      progress = true;
    }
    if (!progress) {
      throw InvalidPlanError("schedule_cost: orders deadlock on a shared visit");
    }
  }
  return plan;
}

namespace {

struct SearchBest {
  bool found = false;
  long long primary = 0;
  long long secondary = 0;
  PlanSchedule plan;
};

long long plan_cost(const PlanSchedule& plan, Objective objective) {
  return objective == Objective::SolveTime ? plan.t_solved : plan.total_moves;
}

// Valid lower bounds for a fixed assignment: every contributor must reach its
// target, and any path via other cells is at least the direct distance.
long long assignment_bound(const Scenario& scenario,
                           const std::vector<CoverOption>& assignment, Objective objective) {
  const int n = scenario.num_agents();
  if (objective == Objective::SolveTime) {
    long long bound = 0;
    for (const CoverOption& cover : assignment) {
      const GridPos cell = scenario.targets[cover.target_index].pos;
      for (int agent : cover.agents) {
        bound = std::max(bound,
                         static_cast<long long>(manhattan(scenario.agents[agent].start, cell)));
      }
    }
    return bound;
  }
  std::vector<int> farthest(n, 0);
  for (const CoverOption& cover : assignment) {
    const GridPos cell = scenario.targets[cover.target_index].pos;
    for (int agent : cover.agents) {
      farthest[agent] = std::max(farthest[agent], manhattan(scenario.agents[agent].start, cell));
    }
  }
  long long bound = 0;
  for (int f : farthest) bound += f;
  return bound;
}

void consider_plan(const PlanSchedule& plan, Objective objective, SearchBest& best) {
  const Objective secondary_obj =
      objective == Objective::SolveTime ? Objective::TeamEffort : Objective::SolveTime;
  const long long primary = plan_cost(plan, objective);
  const long long secondary = plan_cost(plan, secondary_obj);
  if (!best.found || primary < best.primary ||
      (primary == best.primary && secondary < best.secondary)) {
    best.found = true;
    best.primary = primary;
    best.secondary = secondary;
    best.plan = plan;
  }
}

// Recursively enumerates per-agent permutations in lexicographic order.
void enumerate_orders(const Scenario& scenario, const std::vector<CoverOption>& assignment,
                      std::vector<std::vector<int>>& orders, int agent, Objective objective,
                      SearchBest& best, std::int64_t& evaluated, std::int64_t budget,
                      bool prune) {
  const int n = scenario.num_agents();
  if (agent == n) {
    evaluated += 1;
    if (evaluated > budget) {
      throw BudgetError("exhaustive_search: plan budget exceeded at " +
                        std::to_string(evaluated));
    }
    try {
      PlanSchedule plan = schedule_cost(scenario, assignment, orders);
      if (prune && best.found && plan_cost(plan, objective) > best.primary) return;
      consider_plan(plan, objective, best);
    } catch (const InvalidPlanError&) {
      // deadlocked interleaving; not a feasible schedule
    }
    return;
  }
  std::vector<int>& mine = orders[agent];
  std::sort(mine.begin(), mine.end());
  do {
    enumerate_orders(scenario, assignment, orders, agent + 1, objective, best, evaluated,
                     budget, prune);
  } while (std::next_permutation(mine.begin(), mine.end()));
  std::sort(mine.begin(), mine.end());
}

void enumerate_assignments(const Scenario& scenario,
                           const std::vector<std::vector<CoverOption>>& covers,
                           std::vector<CoverOption>& assignment, std::size_t k,
                           Objective objective, SearchBest& best, std::int64_t& evaluated,
                           std::int64_t budget, bool prune) {
  if (k == covers.size()) {
    if (prune && best.found &&
        assignment_bound(scenario, assignment, objective) > best.primary) {
      return;
    }
    std::vector<std::vector<int>> orders(scenario.num_agents());
    for (const CoverOption& cover : assignment) {
      for (int agent : cover.agents) orders[agent].push_back(cover.target_index);
    }
    enumerate_orders(scenario, assignment, orders, 0, objective, best, evaluated, budget,
                     prune);
    return;
  }
  for (const CoverOption& option : covers[k]) {
    assignment.push_back(option);
    enumerate_assignments(scenario, covers, assignment, k + 1, objective, best, evaluated,
                          budget, prune);
    assignment.pop_back();
  }
}

long long factorial_capped(int n, long long cap) {
  long long f = 1;
  for (int i = 2; i <= n; ++i) {
    f *= i;
    if (f > cap) return cap;
  }
  return f;
}

}  // namespace

EsResult exhaustive_search(const Scenario& scenario, Objective objective,
                           std::int64_t plan_budget, bool prune) {
  const EnvState at_reset = reset_env(scenario);

  std::vector<std::vector<CoverOption>> covers;
  for (int k = 0; k < scenario.num_targets(); ++k) {
    if (at_reset.solved[k]) continue;  // solved by initial co-location
    std::vector<CoverOption> options = enumerate_covers(scenario.targets[k], scenario.agents);
    for (CoverOption& o : options) o.target_index = k;
    covers.push_back(std::move(options));
  }

  // Upfront size guard: product of cover counts times per-agent permutations.
  double bound = 1.0;
  for (const auto& options : covers) bound *= static_cast<double>(options.size());
  const long long per_agent_orders =
      factorial_capped(static_cast<int>(covers.size()), plan_budget);
  for (int i = 0; i < scenario.num_agents(); ++i) {
    bound *= static_cast<double>(per_agent_orders);
    if (bound > static_cast<double>(plan_budget)) break;
  }
  if (bound > static_cast<double>(plan_budget)) {
    throw BudgetError("exhaustive_search: instance bound " + std::to_string(bound) +
                      " exceeds budget " + std::to_string(plan_budget));
  }

  SearchBest best;
  std::int64_t evaluated = 0;
  if (covers.empty()) {
    best.found = true;
    best.plan.agents.resize(scenario.num_agents());
  } else {
    std::vector<CoverOption> assignment;
    enumerate_assignments(scenario, covers, assignment, 0, objective, best, evaluated,
                          plan_budget, prune);
  }
  if (!best.found) {
    throw InfeasibleError("exhaustive_search: no feasible schedule found");
  }

  EsResult result;
  result.plan = best.plan;
  result.plans_evaluated = evaluated;
  if (objective == Objective::SolveTime) {
    result.metric = static_cast<double>(scenario.horizon - best.plan.t_solved);
  } else {
    double tte = 0.0;
    for (const AgentPlan& ap : best.plan.agents) tte += scenario.horizon - ap.moves;
    result.metric = tte;
  }
  return result;
}

OracleResult bfs_oracle(const Scenario& scenario, Objective objective,
                        std::int64_t state_budget) {
  const int n = scenario.num_agents();
  const int m = scenario.num_targets();
  const std::int64_t cells =
      static_cast<std::int64_t>(scenario.grid_width) * scenario.grid_height;
  double states = std::pow(static_cast<double>(cells), n) * std::pow(2.0, m);
  if (states > static_cast<double>(state_budget)) {
    throw BudgetError("bfs_oracle: joint state space of " + std::to_string(states) +
                      " states exceeds budget");
  }

  auto cell_index = [&](GridPos p) { return p.row * scenario.grid_width + p.col; };
  auto encode = [&](const std::vector<GridPos>& pos, std::uint32_t mask) {
    std::uint64_t key = 0;
    for (int i = 0; i < n; ++i) key = key * static_cast<std::uint64_t>(cells) + cell_index(pos[i]);
    return (key << m) | mask;
  };

  const EnvState start_state = reset_env(scenario);
  std::uint32_t start_mask = 0;
  for (int k = 0; k < m; ++k) {
    if (start_state.solved[k]) start_mask |= 1u << k;
  }
  const std::uint32_t full_mask = (1u << m) - 1u;

  std::vector<GridPos> start_pos = start_state.positions;
  if (start_mask == full_mask) return {0, 0};

  auto solve_mask = [&](const std::vector<GridPos>& pos, std::uint32_t mask) {
    for (int k = 0; k < m; ++k) {
      if ((mask >> k) & 1u) continue;
      const Target& target = scenario.targets[k];
      SkillSet present;
      for (int i = 0; i < n; ++i) {
        if (pos[i] == target.pos) present = present.unite(scenario.agents[i].skills);
      }
      const bool hit = target.kind == TargetKind::Or ? present.intersects(target.required)
                                                     : present.covers(target.required);
      if (hit) mask |= 1u << k;
    }
    return mask;
  };

  using Entry = std::pair<long long, std::uint64_t>;  // (cost, state)
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  std::unordered_map<std::uint64_t, long long> dist;
  const std::uint64_t start_key = encode(start_pos, start_mask);
  dist[start_key] = 0;
  open.push({0, start_key});

  auto decode = [&](std::uint64_t key, std::vector<GridPos>& pos, std::uint32_t& mask) {
    mask = static_cast<std::uint32_t>(key & ((1ull << m) - 1ull));
    std::uint64_t rest = key >> m;
    for (int i = n - 1; i >= 0; --i) {
      const auto idx = static_cast<int>(rest % cells);
      rest /= cells;
      pos[i] = {idx / scenario.grid_width, idx % scenario.grid_width};
    }
  };

  OracleResult result;
  std::vector<GridPos> pos(n), next_pos(n);
  std::vector<int> action(n, 0);
  while (!open.empty()) {
    auto [cost, key] = open.top();
    open.pop();
    auto it = dist.find(key);
    if (it != dist.end() && it->second < cost) continue;
    std::uint32_t mask;
    decode(key, pos, mask);
    if (mask == full_mask) {
      result.cost = static_cast<int>(cost);
      return result;
    }
    result.expanded += 1;

    std::fill(action.begin(), action.end(), 0);
    while (true) {
      int move_count = 0;
      for (int i = 0; i < n; ++i) {
        const Action a = static_cast<Action>(action[i]);
        if (a != Action::Stay) move_count += 1;
        GridPos moved = pos[i];
        switch (a) {
          case Action::Up: moved.row -= 1; break;
          case Action::Down: moved.row += 1; break;
          case Action::Left: moved.col -= 1; break;
          case Action::Right: moved.col += 1; break;
          case Action::Stay: break;
        }
        next_pos[i] = scenario.in_bounds(moved) ? moved : pos[i];
      }
      const std::uint32_t next_mask = solve_mask(next_pos, mask);
      const std::uint64_t next_key = encode(next_pos, next_mask);
      if (next_key != key) {
        const long long step_cost = objective == Objective::SolveTime ? 1 : move_count;
        const long long next_cost = cost + step_cost;
        auto found = dist.find(next_key);
        if (found == dist.end() || next_cost < found->second) {
          dist[next_key] = next_cost;
          open.push({next_cost, next_key});
        }
      }

      int digit = 0;
      while (digit < n) {
        action[digit] += 1;
        if (action[digit] < kNumActions) break;
        action[digit] = 0;
        digit += 1;
      }
      if (digit == n) break;
    }
  }
  throw InfeasibleError("bfs_oracle: goal unreachable (scenario not solvable)");
}

std::vector<std::vector<Action>> plan_to_actions(const Scenario& scenario,
                                                 const PlanSchedule& plan) {
  const int n = scenario.num_agents();
  std::vector<std::vector<Action>> actions(
      plan.t_solved, std::vector<Action>(n, Action::Stay));
  for (int i = 0; i < n; ++i) {
    GridPos pos = scenario.agents[i].start;
    int depart = 0;
    for (const PlanVisit& visit : plan.agents[i].visits) {
      int t = depart;
      while (pos.row != visit.cell.row) {
        actions[t][i] = pos.row < visit.cell.row ? Action::Down : Action::Up;
        pos.row += pos.row < visit.cell.row ? 1 : -1;
        t += 1;
      }
      while (pos.col != visit.cell.col) {
        actions[t][i] = pos.col < visit.cell.col ? Action::Right : Action::Left;
        pos.col += pos.col < visit.cell.col ? 1 : -1;
        t += 1;
      }
      depart = visit.completes;
    }
  }
  return actions;
}

bool passthrough_free(const Scenario& scenario) {
  std::vector<GridPos> points;
  for (const AgentSpec& a : scenario.agents) points.push_back(a.start);
  for (const Target& t : scenario.targets) points.push_back(t.pos);
  for (const Target& t : scenario.targets) {
    for (std::size_t i = 0; i < points.size(); ++i) {
      for (std::size_t j = 0; j < points.size(); ++j) {
        if (i == j) continue;
        const GridPos u = points[i], v = points[j];
        if (t.pos == u || t.pos == v) continue;
        const bool inside_rows =
            std::min(u.row, v.row) <= t.pos.row && t.pos.row <= std::max(u.row, v.row);
        const bool inside_cols =
            std::min(u.col, v.col) <= t.pos.col && t.pos.col <= std::max(u.col, v.col);
        if (inside_rows && inside_cols) return false;
      }
    }
  }
  return true;
}

std::string plan_to_json(const PlanSchedule& plan, Objective objective,
                         const Scenario& scenario) {
  nlohmann::json j;
  j["version"] = 1;
  j["objective"] = objective_name(objective);
  j["seed"] = scenario.seed;
  j["t_solved"] = plan.t_solved;
  j["total_moves"] = plan.total_moves;
  j["horizon"] = scenario.horizon;
  j["agents"] = nlohmann::json::array();
  for (const AgentPlan& ap : plan.agents) {
    nlohmann::json visits = nlohmann::json::array();
    for (const PlanVisit& v : ap.visits) {
      visits.push_back({{"target", v.target_index},
                        {"cell", {v.cell.row, v.cell.col}},
                        {"ready", v.ready},
                        {"time", v.completes}});
    }
    j["agents"].push_back({{"visits", std::move(visits)}, {"moves", ap.moves}});
  }
  return j.dump(2);
}

}  // namespace skillgrid

#pragma once

#include <bit>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "skillgrid/rng.hpp"

namespace skillgrid {

// Cell coordinates. Row 0 is the top row; Up decreases the row index.
struct GridPos {
  int row = 0;
  int col = 0;

  bool operator==(const GridPos&) const = default;
};

// A set of skills out of a small global alphabet, stored as a bitmask.
// The mask value doubles as the canonical integer code of the set.
class SkillSet {
 public:
  constexpr SkillSet() = default;
  constexpr explicit SkillSet(std::uint32_t mask) : mask_(mask) {}

  static constexpr SkillSet single(int skill) { return SkillSet(1u << skill); }

  constexpr std::uint32_t mask() const { return mask_; }
  constexpr bool empty() const { return mask_ == 0; }
  constexpr int count() const { return std::popcount(mask_); }
  constexpr bool has(int skill) const { return (mask_ >> skill) & 1u; }
  constexpr bool intersects(SkillSet other) const { return (mask_ & other.mask_) != 0; }
  constexpr bool covers(SkillSet other) const { return (mask_ & other.mask_) == other.mask_; }
  constexpr SkillSet unite(SkillSet other) const { return SkillSet(mask_ | other.mask_); }

  bool operator==(const SkillSet&) const = default;

 private:
  std::uint32_t mask_ = 0;
};

// Fixed action encoding; stable across serialization.
enum class Action : int {
  Up = 0,
  Down = 1,
  Left = 2,
  Right = 3,
  Stay = 4,
};
inline constexpr int kNumActions = 5;

const char* action_name(Action a);

enum class TargetKind : int {
  And = 0,  // every required skill must be present on the cell at one step
  Or = 1,   // any one required skill suffices
};

struct Target {
  GridPos pos;
  SkillSet required;
  TargetKind kind = TargetKind::Or;

  bool operator==(const Target&) const = default;
};

struct AgentSpec {
  GridPos start;
  SkillSet skills;

  bool operator==(const AgentSpec&) const = default;
};

// An immutable problem instance.
struct Scenario {
  int grid_width = 32;
  int grid_height = 32;
  std::vector<AgentSpec> agents;
  std::vector<Target> targets;
  int horizon = 128;
  std::uint64_t seed = 0;

  int num_agents() const { return static_cast<int>(agents.size()); }
  int num_targets() const { return static_cast<int>(targets.size()); }
  bool in_bounds(GridPos p) const {
    return p.row >= 0 && p.row < grid_height && p.col >= 0 && p.col < grid_width;
  }

  bool operator==(const Scenario&) const = default;
};

// Mutable per-episode state. Target slots can be re-occupied by injected
// targets during replanning; `injection_slots[k]`, when set, replaces
// `scenario.targets[k]` for every solve check, observation and reward.
struct EnvState {
  std::vector<GridPos> positions;
  std::vector<bool> solved;
  int step = 0;
  std::vector<Action> last_actions;
  std::vector<std::optional<Target>> injection_slots;

  int solved_count() const {
    int n = 0;
    for (bool s : solved) n += s ? 1 : 0;
    return n;
  }
  bool all_solved() const { return solved_count() == static_cast<int>(solved.size()); }
};

struct StepEvents {
  std::vector<int> newly_solved;  // target slots solved by this transition
  int prev_solved_count = 0;
};

struct GenerationConfig {
  int grid_width = 32;
  int grid_height = 32;
  int num_agents = 3;
  int num_targets = 5;
  int num_skills = 2;
  int horizon = 128;
};

// The target currently occupying slot `k` (an injected replacement, if any).
const Target& effective_target(const EnvState& state, const Scenario& scenario, int k);

// Randomized instance generation. Positions are uniform (targets mutually
// distinct by cell), skill sets uniform over non-empty subsets, and targets
// requiring more than one skill get an And/Or kind with equal probability.
// After the draw, any skill demanded by some target but held by no agent is
// granted to a uniformly chosen agent, so every instance is solvable.
Scenario generate_scenario(const GenerationConfig& config, std::uint64_t seed);

// Fresh state for a scenario. A solve check runs immediately, so agents that
// start on a satisfiable target count as solving it at step 0.
EnvState reset_env(const Scenario& scenario, StepEvents* events = nullptr);

// Advances all agents simultaneously, then runs one solve pass. Moves that
// would leave the grid keep the agent on its previous cell. Throws
// EpisodeOverError if the state is already terminal.
std::pair<EnvState, StepEvents> step_env(const EnvState& state, const Scenario& scenario,
                                         const std::vector<Action>& joint_action);

// True when every target slot is solved or the horizon is exhausted.
bool is_terminal(const EnvState& state, const Scenario& scenario);

// Scenario JSON round-trip (schema documented in docs/file_formats.md).
std::string scenario_to_json(const Scenario& scenario);
Scenario scenario_from_json(const std::string& text);

}  // namespace skillgrid

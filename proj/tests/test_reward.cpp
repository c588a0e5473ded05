#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "skillgrid/reward.hpp"

using namespace skillgrid;
using test::make_scenario;

namespace {

constexpr double kTol = 1e-12;

}  // namespace

TEST_CASE("attraction reward worked examples") {
  SUBCASE("on the only matching target: 1/(M*horizon)") {
    // Agent stands on an And target requiring both skills while holding one,
    // so the slot stays unsolved but still attracts.
    const Scenario s = make_scenario(32, 32, {{{4, 4}, 1}},
                                     {{{4, 4}, 3, TargetKind::And},
                                      {{0, 0}, 2, TargetKind::Or},
                                      {{0, 9}, 2, TargetKind::Or},
                                      {{9, 0}, 2, TargetKind::Or},
                                      {{9, 9}, 2, TargetKind::Or}});
    const EnvState state = reset_env(s);
    REQUIRE(!state.solved[0]);
    CHECK(std::abs(attraction_reward(state, s, 0, 0.0075) - 0.0015625) < kTol);
  }
  SUBCASE("no skill overlap anywhere: zero") {
    const Scenario s = make_scenario(32, 32, {{{4, 4}, 1}},
                                     {{{5, 5}, 2, TargetKind::Or},
                                      {{6, 6}, 2, TargetKind::Or},
                                      {{7, 7}, 2, TargetKind::Or},
                                      {{8, 8}, 2, TargetKind::Or},
                                      {{9, 9}, 2, TargetKind::Or}});
    const EnvState state = reset_env(s);
    CHECK(attraction_reward(state, s, 0, 0.0075) == 0.0);
  }
  SUBCASE("published spread constant at euclidean distance 100") {
    // Offset (60, 80) has norm exactly 100.
    const Scenario s = make_scenario(128, 128, {{{0, 0}, 1}},
                                     {{{60, 80}, 1, TargetKind::Or},
                                      {{1, 0}, 2, TargetKind::Or},
                                      {{2, 0}, 2, TargetKind::Or},
                                      {{3, 0}, 2, TargetKind::Or},
                                      {{4, 0}, 2, TargetKind::Or}});
    const EnvState state = reset_env(s);
    CHECK(std::abs(attraction_reward(state, s, 0, 0.0075) - 0.0007380727386578354) < kTol);
  }
}

TEST_CASE("target reward is a shared payout") {
  StepEvents events;
  CHECK(target_reward(events, 5) == 0.0);
  events.newly_solved = {2};
  CHECK(std::abs(target_reward(events, 5) - 0.2) < kTol);
  events.newly_solved = {0, 3};
  CHECK(std::abs(target_reward(events, 5) - 0.4) < kTol);
}

TEST_CASE("wrong target cost") {
  const Scenario s = make_scenario(8, 8, {{{2, 2}, 1}},
                                   {{{2, 2}, 2, TargetKind::Or}, {{5, 5}, 1, TargetKind::Or}});
  EnvState state = reset_env(s);
  SUBCASE("standing on a mismatched unsolved target") {
    CHECK(wrong_target_cost(state, s, 0) == -1.0);
  }
  SUBCASE("one common skill is enough to avoid the penalty") {
    const Scenario s2 = make_scenario(8, 8, {{{2, 2}, 1}}, {{{2, 2}, 3, TargetKind::And}});
    const EnvState st2 = reset_env(s2);
    REQUIRE(!st2.solved[0]);
    CHECK(wrong_target_cost(st2, s2, 0) == 0.0);
  }
  SUBCASE("solved mismatched targets do not count") {
    state.solved[0] = true;
    CHECK(wrong_target_cost(state, s, 0) == 0.0);
  }
}

TEST_CASE("step cost keys on the action, not displacement") {
  CHECK(step_cost(Action::Stay) == 0.0);
  CHECK(step_cost(Action::Up) == -1.0);
  CHECK(step_cost(Action::Left) == -1.0);

  // A boundary-reverted move still costs: the agent acted.
  const Scenario s = make_scenario(8, 8, {{{0, 0}, 1}}, {{{5, 5}, 1, TargetKind::Or}});
  EnvState state = reset_env(s);
  auto [next, events] = step_env(state, s, {Action::Up});
  CHECK(next.positions[0] == GridPos{0, 0});
  CHECK(step_cost(next.last_actions[0]) == -1.0);
}

TEST_CASE("solve time cost magnitude") {
  const Scenario s = make_scenario(32, 32, {{{0, 0}, 3}},
                                   {{{1, 1}, 1, TargetKind::Or},
                                    {{2, 2}, 1, TargetKind::Or},
                                    {{3, 3}, 1, TargetKind::Or},
                                    {{4, 4}, 1, TargetKind::Or},
                                    {{5, 5}, 1, TargetKind::Or}});
  EnvState state = reset_env(s);
  state.solved = {true, true, false, false, false};
  CHECK(std::abs(solve_time_cost(state, 5, 128) - 0.0046875) < kTol);
  state.solved = {true, true, true, true, true};
  CHECK(solve_time_cost(state, 5, 128) == 0.0);

  // Nothing ever solved: magnitudes over a full episode sum to exactly 1.
  state.solved = {false, false, false, false, false};
  double sum = 0.0;
  for (int j = 0; j < 128; ++j) sum += solve_time_cost(state, 5, 128);
  CHECK(std::abs(sum - 1.0) < kTol);
}

TEST_CASE("terminal bonus fires once") {
  EnvState prev, cur;
  prev.solved = {true, false};
  cur.solved = {true, true};
  CHECK(terminal_bonus(prev, cur) == 1.0);
  prev.solved = {true, true};
  CHECK(terminal_bonus(prev, cur) == 0.0);  // already complete
  prev.solved = {false, false};
  cur.solved = {false, true};
  CHECK(terminal_bonus(prev, cur) == 0.0);
}

TEST_CASE("total reward gating and the composite fixture") {
  const RewardWeights w;  // published weights
  RewardBreakdown b;
  SUBCASE("bootstrap ignores step, solve-time and terminal terms") {
    b.step_cost = -1.0;
    b.solve_time = 0.7;
    b.terminal_bonus = 1.0;
    CHECK(total_reward(b, w, Phase::Bootstrap) == 0.0);
  }
  SUBCASE("all zero gives zero") {
    CHECK(total_reward(b, w, Phase::Refinement) == 0.0);
  }
  SUBCASE("refinement composite") {
    b.attraction = 0.0015625;
    b.target_payout = 0.2;
    b.wrong_target = 0.0;
    b.step_cost = -1.0;
    b.solve_time = 0.0046875;
    b.terminal_bonus = 0.0;
    CHECK(std::abs(total_reward(b, w, Phase::Refinement) - (-0.10078125)) < kTol);
  }
}

TEST_CASE("target reward sums to solved fraction over random episodes") {
  Rng rng(2024);
  GenerationConfig config{8, 8, 2, 3, 2, 32};
  for (int episode = 0; episode < 100; ++episode) {
    const Scenario s = generate_scenario(config, rng.next_u64());
    StepEvents reset_events;
    EnvState state = reset_env(s, &reset_events);
    double tr_sum = 0.0;
    int solves_after_reset = 0;
    while (!is_terminal(state, s)) {
      std::vector<Action> joint(s.num_agents());
      for (auto& a : joint) a = static_cast<Action>(rng.next_below(kNumActions));
      auto [next, events] = step_env(state, s, joint);
      tr_sum += target_reward(events, s.num_targets());
      solves_after_reset += static_cast<int>(events.newly_solved.size());
      state = std::move(next);
    }
    CHECK(std::abs(tr_sum - static_cast<double>(solves_after_reset) / s.num_targets()) < kTol);
    CHECK(tr_sum <= 1.0 + kTol);
  }
}

TEST_CASE("reward terms are pure functions of the transition") {
  Rng rng(7);
  GenerationConfig config{8, 8, 3, 3, 2, 32};
  const Scenario s = generate_scenario(config, 1234);
  EnvState state = reset_env(s);
  const RewardWeights w;
  while (!is_terminal(state, s)) {
    std::vector<Action> joint(s.num_agents());
    for (auto& a : joint) a = static_cast<Action>(rng.next_below(kNumActions));
    auto [next, events] = step_env(state, s, joint);
    const auto once = step_rewards(state, next, s, events, w, Phase::Refinement);
    const auto twice = step_rewards(state, next, s, events, w, Phase::Refinement);
    CHECK(once == twice);
    for (int a = 0; a < s.num_agents(); ++a) {
      const RewardBreakdown b = compute_breakdown(state, next, s, events, a, w);
      CHECK(once[a] == total_reward(b, w, Phase::Refinement));
      CHECK(b.attraction >= 0.0);
      CHECK(b.attraction <= 1.0 / 32 + kTol);  // at most M matches at distance 0
    }
    // The shared payout is identical across agents.
    const RewardBreakdown b0 = compute_breakdown(state, next, s, events, 0, w);
    for (int a = 1; a < s.num_agents(); ++a) {
      const RewardBreakdown ba = compute_breakdown(state, next, s, events, a, w);
      CHECK(ba.target_payout == b0.target_payout);
    }
    state = std::move(next);
  }
}

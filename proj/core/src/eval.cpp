#include "skillgrid/eval.hpp"

#include <chrono>
#include <cmath>

#include "skillgrid/error.hpp"

namespace skillgrid {

double success_rate(const std::vector<EpisodeResult>& results) {
  if (results.empty()) throw EmptyBatchError("success_rate: empty result batch");
  int solved = 0;
  for (const EpisodeResult& r : results) solved += r.solved ? 1 : 0;
  return static_cast<double>(solved) / results.size();
}

int solve_time_metric(const EpisodeResult& result, int horizon) {
  if (!result.solved) {
    throw MetricUndefinedError("solve_time_metric: undefined for unsolved episodes");
  }
  return horizon - result.t_solved;
}

int team_effort_metric(const EpisodeResult& result, int horizon, int num_agents) {
  if (!result.solved) {
    throw MetricUndefinedError("team_effort_metric: undefined for unsolved episodes");
  }
  int total = 0;
  for (int i = 0; i < num_agents; ++i) total += horizon - result.moves[i];
  return total;
}

namespace {

void mean_std(const std::vector<double>& xs, double& mean, double& std_out) {
  mean = 0.0;
  std_out = 0.0;
  if (xs.empty()) return;
  for (double x : xs) mean += x;
  mean /= xs.size();
  if (xs.size() < 2) return;
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  std_out = std::sqrt(var / (xs.size() - 1));
}

}  // namespace

MetricsReport aggregate_metrics(const std::vector<EpisodeResult>& results, int horizon,
                                int num_agents, const std::string& policy_id) {
  MetricsReport report;
  report.policy_id = policy_id;
  report.episodes = static_cast<int>(results.size());
  report.success = success_rate(results);
  std::vector<double> st, tte;
  for (const EpisodeResult& r : results) {
    if (!r.solved) {
      report.excluded_unsolved += 1;
      continue;
    }
    st.push_back(solve_time_metric(r, horizon));
    tte.push_back(team_effort_metric(r, horizon, num_agents));
  }
  mean_std(st, report.st_mean, report.st_std);
  mean_std(tte, report.tte_mean, report.tte_std);
  return report;
}

namespace {

// Replacement targets keep the episode solvable: requirements are drawn from
// the non-empty subsets of the team's pooled skills, and cells avoid the
// other live target cells.
Target generate_injected_target(const Scenario& scenario, const EnvState& state, Rng& rng) {
  SkillSet pooled;
  for (const AgentSpec& a : scenario.agents) pooled = pooled.unite(a.skills);

  std::vector<int> team_skills;
  for (int s = 0; s < 32; ++s) {
    if (pooled.has(s)) team_skills.push_back(s);
  }
  const std::uint32_t subsets = (1u << team_skills.size()) - 1u;
  const std::uint32_t pick = 1u + static_cast<std::uint32_t>(rng.next_below(subsets));
  SkillSet required;
  for (std::size_t b = 0; b < team_skills.size(); ++b) {
    if ((pick >> b) & 1u) required = required.unite(SkillSet::single(team_skills[b]));
  }

  Target target;
  target.required = required;
  if (required.count() > 1) {
    target.kind = rng.next_below(2) == 0 ? TargetKind::And : TargetKind::Or;
  } else {
    target.kind = TargetKind::Or;
  }
  while (true) {
    target.pos = {static_cast<int>(rng.next_below(scenario.grid_height)),
                  static_cast<int>(rng.next_below(scenario.grid_width))};
    bool clash = false;
    for (int k = 0; k < scenario.num_targets(); ++k) {
      if (effective_target(state, scenario, k).pos == target.pos) clash = true;
    }
    if (!clash) break;
  }
  return target;
}

}  // namespace

EpisodeResult run_greedy_episode(const PolicyParams<float>& params, const Scenario& scenario,
                                 const EpisodeRunOptions& options) {
  const int n = scenario.num_agents();
  EpisodeResult result;
  result.scenario_seed = scenario.seed;
  result.moves.assign(n, 0);

  StepEvents reset_events;
  EnvState state = reset_env(scenario, &reset_events);
  int injections_done = 0;

  auto handle_solves = [&](const StepEvents& events) {
    for (std::size_t i = 0; i < events.newly_solved.size(); ++i) {
      if (injections_done >= options.max_injections) break;
      Target injected = generate_injected_target(scenario, state, *options.injection_rng);
      auto [next, slot] = inject_target(state, scenario, injected);
      state = std::move(next);
      injections_done += 1;
    }
  };

  handle_solves(reset_events);
  if (state.all_solved() && injections_done == options.max_injections) {
    result.solved = true;
    result.t_solved = 0;
    return result;
  }

  Matrix<float> hidden = Matrix<float>::Zero(params.actor.arch.hidden_dim, n);
  while (state.step < scenario.horizon) {
    std::vector<Action> joint(n);
    for (int a = 0; a < n; ++a) {
      const Observation obs =
          normalize_observation(build_observation(state, scenario, a), scenario);
      Vector<float> x(static_cast<Eigen::Index>(obs.size()));
      for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = static_cast<float>(obs[i]);
      auto [probs, h_next] = actor_forward<float>(params.actor, x, hidden.col(a));
      hidden.col(a) = h_next;
      joint[a] = greedy_action<float>(probs);
    }
    auto [next, events] = step_env(state, scenario, joint);
    state = std::move(next);
    for (int a = 0; a < n; ++a) {
      if (joint[a] != Action::Stay) result.moves[a] += 1;
    }
    handle_solves(events);
    if (state.all_solved() && injections_done == options.max_injections) {
      result.solved = true;
      result.t_solved = state.step;
      break;
    }
  }
  return result;
}

MetricsReport evaluate_policy(const PolicyParams<float>& params,
                              const std::vector<Scenario>& scenarios,
                              const std::string& policy_id, std::vector<EpisodeResult>* out) {
  if (scenarios.empty()) throw EmptyBatchError("evaluate_policy: no scenarios");
  std::vector<EpisodeResult> results;
  results.reserve(scenarios.size());
  for (const Scenario& s : scenarios) {
    results.push_back(run_greedy_episode(params, s));
  }
  MetricsReport report =
      aggregate_metrics(results, scenarios.front().horizon, scenarios.front().num_agents(),
                        policy_id);
  if (out != nullptr) out->insert(out->end(), results.begin(), results.end());
  return report;
}

MetricsReport replanning_experiment(const PolicyParams<float>& params,
                                    const std::vector<Scenario>& scenarios,
                                    const ReplanConfig& config, const std::string& policy_id,
                                    std::vector<EpisodeResult>* out) {
  if (scenarios.empty()) throw EmptyBatchError("replanning_experiment: no scenarios");
  std::vector<EpisodeResult> results;
  results.reserve(scenarios.size());
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    Rng rng(mix_seed(config.seed, i));
    EpisodeRunOptions options;
    options.max_injections = config.injections;
    options.injection_rng = &rng;
    results.push_back(run_greedy_episode(params, scenarios[i], options));
  }
  MetricsReport report =
      aggregate_metrics(results, scenarios.front().horizon, scenarios.front().num_agents(),
                        policy_id);
  if (out != nullptr) out->insert(out->end(), results.begin(), results.end());
  return report;
}

RatioReport compare_to_optimal(const ComparisonInput& input) {
  const std::size_t n = input.policy_results.size();
  if (input.policy_fingerprints.size() != n || input.es_solve_time.size() != n ||
      input.es_team_effort.size() != n || input.es_fingerprints.size() != n) {
    throw PairingError("compare_to_optimal: episode sets have mismatched sizes");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (input.policy_fingerprints[i] != input.es_fingerprints[i]) {
      throw PairingError("compare_to_optimal: scenario checksum mismatch at index " +
                         std::to_string(i));
    }
  }

  RatioReport report;
  report.paired = static_cast<int>(n);
  double policy_st = 0.0, policy_tte = 0.0, es_st = 0.0, es_tte = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const EpisodeResult& r = input.policy_results[i];
    if (!r.solved) continue;
    report.solved_by_policy += 1;
    policy_st += solve_time_metric(r, input.horizon);
    policy_tte += team_effort_metric(r, input.horizon, input.num_agents);
    es_st += input.es_solve_time[i];
    es_tte += input.es_team_effort[i];
  }
  if (report.solved_by_policy == 0) return report;  // ratios stay n/a

  const double k = report.solved_by_policy;
  report.policy_st_mean = policy_st / k;
  report.es_st_mean = es_st / k;
  report.policy_tte_mean = policy_tte / k;
  report.es_tte_mean = es_tte / k;
  if (report.es_st_mean != 0.0) report.st_ratio = report.policy_st_mean / report.es_st_mean;
  if (report.es_tte_mean != 0.0) {
    report.tte_ratio = report.policy_tte_mean / report.es_tte_mean;
  }
  return report;
}

TimingStats measure_inference(const PolicyParams<float>& params, const Scenario& scenario,
                              int repetitions) {
  if (repetitions <= 0) {
    throw EmptyBatchError("measure_inference: repetitions must be positive");
  }
  const int n = scenario.num_agents();
  std::vector<double> times;
  times.reserve(repetitions);
  for (int rep = 0; rep < repetitions; ++rep) {
    const auto start = std::chrono::steady_clock::now();
    EnvState state = reset_env(scenario);
    Matrix<float> hidden = Matrix<float>::Zero(params.actor.arch.hidden_dim, n);
    for (int t = 0; t < scenario.horizon; ++t) {
      std::vector<Action> joint(n);
      for (int a = 0; a < n; ++a) {
        const Observation obs =
            normalize_observation(build_observation(state, scenario, a), scenario);
        Vector<float> x(static_cast<Eigen::Index>(obs.size()));
        for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = static_cast<float>(obs[i]);
        auto [probs, h_next] = actor_forward<float>(params.actor, x, hidden.col(a));
        hidden.col(a) = h_next;
        joint[a] = greedy_action<float>(probs);
      }
      if (!is_terminal(state, scenario)) {
        auto [next, events] = step_env(state, scenario, joint);
        state = std::move(next);
      }
    }
    times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                        .count());
  }
  TimingStats stats;
  stats.repetitions = repetitions;
  double mean = 0.0, sd = 0.0;
  mean_std(times, mean, sd);
  stats.episode_mean_s = mean;
  stats.episode_std_s = sd;
  stats.step_mean_s = mean / scenario.horizon;
  return stats;
}

std::uint64_t scenario_fingerprint(const Scenario& scenario) {
  const std::string text = scenario_to_json(scenario);
  std::uint64_t hash = 1469598103934665603ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  return hash;
}

}  // namespace skillgrid

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "skillgrid/nets.hpp"
#include "skillgrid/obs.hpp"

namespace skillgrid {

struct EpisodeResult {
  bool solved = false;
  int t_solved = 0;                // defined only when solved
  std::vector<int> moves;          // per-agent non-stay actions up to t_solved
  std::uint64_t scenario_seed = 0;
};

// Aggregate over a batch of episodes. Unsolved episodes enter the success
// rate only; the solve-time and team-effort aggregates cover solved episodes,
// with the exclusion count reported.
struct MetricsReport {
  std::string policy_id;
  int episodes = 0;
  double success = 0.0;
  double st_mean = 0.0, st_std = 0.0;
  double tte_mean = 0.0, tte_std = 0.0;
  int excluded_unsolved = 0;
};

// K_solved / K_sims. Throws EmptyBatchError on an empty batch.
double success_rate(const std::vector<EpisodeResult>& results);

// Steps left before the deadline: horizon - t_solved. Undefined (throws) for
// unsolved episodes.
int solve_time_metric(const EpisodeResult& result, int horizon);

// Sum over agents of (horizon - moves up to t_solved), counting non-stay
// actions whether or not they changed the cell.
int team_effort_metric(const EpisodeResult& result, int horizon, int num_agents);

MetricsReport aggregate_metrics(const std::vector<EpisodeResult>& results, int horizon,
                                int num_agents, const std::string& policy_id);

struct EpisodeRunOptions {
  int max_injections = 0;
  Rng* injection_rng = nullptr;  // consumed only when an injection happens
};

// Greedy rollout of one scenario. With injections enabled, each solve event
// triggers one replacement target into the solved slot while any remain;
// success then requires all initial plus injected targets solved in time.
EpisodeResult run_greedy_episode(const PolicyParams<float>& params, const Scenario& scenario,
                                 const EpisodeRunOptions& options = {});

// Greedy evaluation over a scenario batch. Per-episode results are appended
// to `out` when given.
MetricsReport evaluate_policy(const PolicyParams<float>& params,
                              const std::vector<Scenario>& scenarios,
                              const std::string& policy_id,
                              std::vector<EpisodeResult>* out = nullptr);

struct ReplanConfig {
  int injections = 5;
  std::uint64_t seed = 10;
};

MetricsReport replanning_experiment(const PolicyParams<float>& params,
                                    const std::vector<Scenario>& scenarios,
                                    const ReplanConfig& config,
                                    const std::string& policy_id,
                                    std::vector<EpisodeResult>* out = nullptr);

// Inputs for the policy-versus-optimal ratios, aligned by index. The scenario
// fingerprints of both sides must match pairwise.
struct ComparisonInput {
  std::vector<EpisodeResult> policy_results;
  std::vector<std::uint64_t> policy_fingerprints;
  std::vector<double> es_solve_time;   // M_st of the solve-time optimum
  std::vector<double> es_team_effort;  // M_tte of the team-effort optimum
  std::vector<std::uint64_t> es_fingerprints;
  int horizon = 0;
  int num_agents = 0;
};

struct RatioReport {
  int paired = 0;
  int solved_by_policy = 0;
  std::optional<double> st_ratio;   // mean(M_st policy) / mean(M_st ES1)
  std::optional<double> tte_ratio;  // mean(M_tte policy) / mean(M_tte ES2)
  double policy_st_mean = 0.0, es_st_mean = 0.0;
  double policy_tte_mean = 0.0, es_tte_mean = 0.0;
};

// Ratio-of-means over the episodes the policy solved; empty solved set yields
// disengaged (n/a) ratios.
RatioReport compare_to_optimal(const ComparisonInput& input);

struct TimingStats {
  int repetitions = 0;
  double episode_mean_s = 0.0;
  double episode_std_s = 0.0;
  double step_mean_s = 0.0;  // episode mean divided by the horizon
};

// Wall-times `repetitions` greedy episodes of exactly `horizon` forward
// passes each (stepping stops at termination, forward passes do not), so the
// per-step cost is comparable across instances.
TimingStats measure_inference(const PolicyParams<float>& params, const Scenario& scenario,
                              int repetitions);

// FNV-1a over the canonical scenario serialization; used to pair policy and
// baseline episodes.
std::uint64_t scenario_fingerprint(const Scenario& scenario);

}  // namespace skillgrid

// Command line interface for the planning laboratory.
//
// Exit codes: 0 success, 1 internal failure, 2 usage error, 3 invalid
// configuration, 4 bad or mismatched checkpoint, 5 search budget exceeded.
// Failures also emit a one-line JSON error report on stderr.

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "skillgrid/config.hpp"
#include "skillgrid/error.hpp"
#include "skillgrid/es.hpp"
#include "skillgrid/eval.hpp"
#include "skillgrid/reports.hpp"
#include "skillgrid/trainer.hpp"

namespace fs = std::filesystem;
using namespace skillgrid;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitUsage = 2;
constexpr int kExitConfig = 3;
constexpr int kExitCheckpoint = 4;
constexpr int kExitBudget = 5;

struct CommonArgs {
  std::string config_path;
  std::string out_override;
};

RunConfig load_config_or_default(const std::string& path) {
  if (path.empty()) return default_run_config();
  return load_run_config(path);
}

// runs/<timestamp>-<seed>/ with scenarios/, checkpoints/, reports/ subtrees.
fs::path prepare_run_dir(const RunConfig& config, const std::string& out_override) {
  fs::path dir;
  if (!out_override.empty()) {
    dir = out_override;
  } else {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    char stamp[32];
    std::strftime(stamp, sizeof(stamp), "%Y%m%d-%H%M%S", std::gmtime(&tt));
    dir = fs::path(config.out_dir) / (std::string(stamp) + "-" + std::to_string(config.seed));
  }
  fs::create_directories(dir / "scenarios");
  fs::create_directories(dir / "checkpoints");
  fs::create_directories(dir / "reports");
  return dir;
}

std::vector<Scenario> load_scenario_dir(const std::string& dir) {
  std::vector<fs::path> files;
  if (!fs::is_directory(dir)) throw ConfigError("scenario directory not found: " + dir);
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ConfigError("no scenario json files in " + dir);
  std::vector<Scenario> scenarios;
  for (const fs::path& f : files) scenarios.push_back(scenario_from_json(read_text_file(f)));
  return scenarios;
}

std::vector<Scenario> generate_batch(const GenerationConfig& env, int count,
                                     std::uint64_t seed) {
  std::vector<Scenario> out;
  Rng rng(mix_seed(seed, 0x5ce0));
  for (int i = 0; i < count; ++i) out.push_back(generate_scenario(env, rng.next_u64()));
  return out;
}

Checkpoint load_policy(const std::string& path) {
  if (path.empty()) throw CheckpointError("no --policy checkpoint given");
  if (!fs::exists(path)) throw CheckpointError("checkpoint not found: " + path);
  return load_checkpoint(path);
}

// One policy artifact per (N, M) pair; scenarios must match it.
void check_compatible(const Checkpoint& ckpt, const std::vector<Scenario>& scenarios) {
  for (const Scenario& s : scenarios) {
    if (s.num_agents() != ckpt.env.num_agents || s.num_targets() != ckpt.env.num_targets) {
      throw CheckpointError(
          "checkpoint trained for " + std::to_string(ckpt.env.num_agents) + " agents / " +
          std::to_string(ckpt.env.num_targets) + " targets, scenario has " +
          std::to_string(s.num_agents()) + "/" + std::to_string(s.num_targets()));
    }
  }
}

std::string policy_id_from_path(const std::string& path) {
  return fs::path(path).stem().string();
}

int cmd_gen(const CommonArgs& common, int count, std::uint64_t seed) {
  RunConfig config = load_config_or_default(common.config_path);
  config.seed = seed;
  const fs::path dir = prepare_run_dir(config, common.out_override);
  const auto scenarios = generate_batch(config.train.env, count, seed);
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    char name[64];
    std::snprintf(name, sizeof(name), "scenario_%04zu.json", i);
    write_text_file(dir / "scenarios" / name, scenario_to_json(scenarios[i]));
  }
  write_text_file(dir / "resolved_config.json", run_config_to_json(config));
  std::cout << "wrote " << scenarios.size() << " scenarios to " << (dir / "scenarios")
            << std::endl;
  return kExitOk;
}

int cmd_train(const CommonArgs& common) {
  const RunConfig config = load_config_or_default(common.config_path);
  const fs::path dir = prepare_run_dir(config, common.out_override);
  const std::string config_json = run_config_to_json(config);
  write_text_file(dir / "resolved_config.json", config_json);

  std::string log = train_log_header() + "\n";
  TrainHooks hooks;
  hooks.on_log = [&](const TrainLogRow& row) {
    log += train_log_row_csv(row) + "\n";
    std::cout << train_log_row_csv(row) << std::endl;
  };
  hooks.on_checkpoint = [&](const Checkpoint& ckpt, bool final) {
    const std::string name =
        final ? "final.json" : "update_" + std::to_string(ckpt.update_index) + ".json";
    save_checkpoint(dir / "checkpoints" / name, ckpt);
  };
  std::cout << train_log_header() << std::endl;
  train(config.train, hooks, config_json);
  write_text_file(dir / "log.csv", log);
  std::cout << "training log: " << (dir / "log.csv") << std::endl;
  std::cout << "final checkpoint: " << (dir / "checkpoints" / "final.json") << std::endl;
  return kExitOk;
}

int cmd_eval(const CommonArgs& common, const std::string& policy_path,
             const std::string& scenario_dir, int episodes, std::uint64_t seed) {
  RunConfig config = load_config_or_default(common.config_path);
  const Checkpoint ckpt = load_policy(policy_path);
  if (episodes > 0) config.eval.episodes = episodes;
  if (seed != 0) config.eval.seed = seed;

  std::vector<Scenario> scenarios =
      scenario_dir.empty() ? generate_batch(ckpt.env, config.eval.episodes, config.eval.seed)
                           : load_scenario_dir(scenario_dir);
  check_compatible(ckpt, scenarios);

  const fs::path dir = prepare_run_dir(config, common.out_override);
  const std::string config_json = run_config_to_json(config);
  std::vector<EpisodeResult> results;
  const MetricsReport report =
      evaluate_policy(ckpt.params, scenarios, policy_id_from_path(policy_path), &results);
  write_text_file(dir / "reports" / "eval.csv", metrics_report_csv(report, config_json));
  write_text_file(dir / "reports" / "eval.json", metrics_report_json(report, config_json));
  write_text_file(dir / "reports" / "episodes.jsonl", episode_results_jsonl(results));
  std::cout << metrics_report_csv(report, "");
  return kExitOk;
}

int cmd_es(const CommonArgs& common, const std::string& scenario_dir,
           const std::string& objective_name_arg) {
  const RunConfig config = load_config_or_default(common.config_path);
  const auto scenarios = load_scenario_dir(scenario_dir);
  const fs::path dir = prepare_run_dir(config, common.out_override);

  std::vector<Objective> objectives;
  if (objective_name_arg == "st") {
    objectives = {Objective::SolveTime};
  } else if (objective_name_arg == "tte") {
    objectives = {Objective::TeamEffort};
  } else if (objective_name_arg == "both") {
    objectives = {Objective::SolveTime, Objective::TeamEffort};
  } else {
    throw ConfigError("--objective must be st, tte or both");
  }

  std::string csv = "scenario_seed,objective,t_solved,total_moves,metric,plans\n";
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    for (Objective obj : objectives) {
      const EsResult res = exhaustive_search(scenarios[i], obj, config.es.plan_budget);
      char name[96];
      std::snprintf(name, sizeof(name), "plan_%04zu_%s.json", i, objective_name(obj));
      write_text_file(dir / "reports" / name, plan_to_json(res.plan, obj, scenarios[i]));
      csv += std::to_string(scenarios[i].seed) + "," + objective_name(obj) + "," +
             std::to_string(res.plan.t_solved) + "," + std::to_string(res.plan.total_moves) +
             "," + std::to_string(res.metric) + "," + std::to_string(res.plans_evaluated) +
             "\n";
    }
  }
  write_text_file(dir / "reports" / "es.csv", csv);
  std::cout << csv;
  return kExitOk;
}

int cmd_compare(const CommonArgs& common, const std::string& policy_path,
                const std::string& scenario_dir, int episodes, std::uint64_t seed) {
  RunConfig config = load_config_or_default(common.config_path);
  const Checkpoint ckpt = load_policy(policy_path);
  if (episodes > 0) config.eval.episodes = episodes;
  if (seed != 0) config.eval.seed = seed;

  std::vector<Scenario> scenarios =
      scenario_dir.empty() ? generate_batch(ckpt.env, config.eval.episodes, config.eval.seed)
                           : load_scenario_dir(scenario_dir);
  check_compatible(ckpt, scenarios);

  const fs::path dir = prepare_run_dir(config, common.out_override);
  const std::string config_json = run_config_to_json(config);

  ComparisonInput input;
  input.horizon = scenarios.front().horizon;
  input.num_agents = scenarios.front().num_agents();
  const MetricsReport report = evaluate_policy(
      ckpt.params, scenarios, policy_id_from_path(policy_path), &input.policy_results);
  for (const Scenario& s : scenarios) {
    const std::uint64_t fp = scenario_fingerprint(s);
    input.policy_fingerprints.push_back(fp);
    input.es_fingerprints.push_back(fp);
    input.es_solve_time.push_back(
        exhaustive_search(s, Objective::SolveTime, config.es.plan_budget).metric);
    input.es_team_effort.push_back(
        exhaustive_search(s, Objective::TeamEffort, config.es.plan_budget).metric);
  }
  const RatioReport ratios = compare_to_optimal(input);
  write_text_file(dir / "reports" / "compare.csv", ratio_report_csv(report, ratios, config_json));
  write_text_file(dir / "reports" / "compare.json",
                  ratio_report_json(report, ratios, config_json));
  std::cout << ratio_report_csv(report, ratios, "");
  return kExitOk;
}

int cmd_replan(const CommonArgs& common, const std::string& policy_path, int injections,
               int episodes, std::uint64_t seed) {
  RunConfig config = load_config_or_default(common.config_path);
  const Checkpoint ckpt = load_policy(policy_path);
  if (episodes > 0) config.eval.episodes = episodes;

  const auto scenarios = generate_batch(ckpt.env, config.eval.episodes, seed);
  const fs::path dir = prepare_run_dir(config, common.out_override);
  const std::string config_json = run_config_to_json(config);

  ReplanConfig rc;
  rc.injections = injections;
  rc.seed = seed;
  std::vector<EpisodeResult> results;
  const MetricsReport report = replanning_experiment(
      ckpt.params, scenarios, rc, policy_id_from_path(policy_path), &results);
  write_text_file(dir / "reports" / "replan.csv", metrics_report_csv(report, config_json));
  write_text_file(dir / "reports" / "replan.json", metrics_report_json(report, config_json));
  write_text_file(dir / "reports" / "replan_episodes.jsonl", episode_results_jsonl(results));
  std::cout << metrics_report_csv(report, "");
  return kExitOk;
}

int cmd_time(const CommonArgs& common, const std::string& policy_path, int repetitions,
             const std::string& scenario_dir, const std::vector<int>& es_target_counts) {
  RunConfig config = load_config_or_default(common.config_path);
  const Checkpoint ckpt = load_policy(policy_path);
  std::vector<Scenario> scenarios = scenario_dir.empty()
                                        ? generate_batch(ckpt.env, 3, config.eval.seed)
                                        : load_scenario_dir(scenario_dir);
  check_compatible(ckpt, scenarios);
  const fs::path dir = prepare_run_dir(config, common.out_override);

  std::vector<TimingRow> rows;
  for (const Scenario& s : scenarios) {
    TimingRow row;
    row.scenario_seed = s.seed;
    row.num_targets = s.num_targets();
    row.policy = measure_inference(ckpt.params, s, repetitions);
    row.es_mean_s = -1.0;
    rows.push_back(row);
  }
  // Search-time scaling over the requested target counts.
  for (int m : es_target_counts) {
    GenerationConfig env = ckpt.env;
    env.num_targets = m;
    double total = 0.0;
    const int samples = 5;
    for (int i = 0; i < samples; ++i) {
      const Scenario s = generate_scenario(env, mix_seed(config.eval.seed, m * 100 + i));
      const auto start = std::chrono::steady_clock::now();
      exhaustive_search(s, Objective::SolveTime, config.es.plan_budget);
      total += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    TimingRow row;
    row.scenario_seed = 0;
    row.num_targets = m;
    row.policy = TimingStats{};
    row.es_mean_s = total / samples;
    rows.push_back(row);
  }
  const std::string csv = timing_report_csv(rows, run_config_to_json(config));
  write_text_file(dir / "reports" / "timing.csv", csv);
  std::cout << csv;
  return kExitOk;
}

int cmd_oracle_check(const CommonArgs& common, int instances, std::uint64_t seed) {
  const RunConfig config = load_config_or_default(common.config_path);
  const fs::path dir = prepare_run_dir(config, common.out_override);
  Rng rng(mix_seed(seed, 0x0C7E));
  std::string csv = "seed,num_targets,es_t_solved,oracle_cost,equal,passthrough_free\n";
  int violations = 0;
  for (int i = 0; i < instances; ++i) {
    GenerationConfig env{6, 6, 2, 1 + i % 3, 2, 64};
    const Scenario s = generate_scenario(env, rng.next_u64());
    const EsResult es = exhaustive_search(s, Objective::SolveTime, config.es.plan_budget);
    const OracleResult oracle =
        bfs_oracle(s, Objective::SolveTime, config.es.oracle_state_budget);
    const bool equal = es.plan.t_solved == oracle.cost;
    if (oracle.cost > es.plan.t_solved) violations += 1;
    csv += std::to_string(s.seed) + "," + std::to_string(s.num_targets()) + "," +
           std::to_string(es.plan.t_solved) + "," + std::to_string(oracle.cost) + "," +
           (equal ? "1" : "0") + "," + (passthrough_free(s) ? "1" : "0") + "\n";
  }
  write_text_file(dir / "reports" / "oracle_check.csv", csv);
  std::cout << csv;
  if (violations > 0) {
    std::cerr << violations << " dominance violations" << std::endl;
    return kExitInternal;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heterogeneous-team grid planning: training, baselines and evaluation"};
  app.require_subcommand(1);

  CommonArgs common;
  app.add_option("--config", common.config_path, "Run configuration JSON file")
      ->check(CLI::ExistingFile);
  app.add_option("--out", common.out_override, "Output directory (overrides the layout)");

  auto* gen = app.add_subcommand("gen", "Generate scenario files");
  int gen_count = 10;
  std::uint64_t gen_seed = 0;
  gen->add_option("--n", gen_count, "Number of scenarios");
  gen->add_option("--seed", gen_seed, "Generation seed");

  auto* train_cmd = app.add_subcommand("train", "Run the two-phase training loop");

  auto* eval_cmd = app.add_subcommand("eval", "Greedy policy evaluation");
  std::string policy_path, scenario_dir;
  int episodes = 0;
  std::uint64_t seed = 0;
  eval_cmd->add_option("--policy", policy_path, "Checkpoint file");
  eval_cmd->add_option("--scenarios", scenario_dir, "Scenario directory");
  eval_cmd->add_option("--episodes", episodes, "Generated episode count");
  eval_cmd->add_option("--seed", seed, "Generated scenario seed");

  auto* es_cmd = app.add_subcommand("es", "Exhaustive-search baselines");
  std::string es_scenarios, objective = "both";
  es_cmd->add_option("--scenarios", es_scenarios, "Scenario directory")->required();
  es_cmd->add_option("--objective", objective, "st, tte or both");

  auto* compare_cmd = app.add_subcommand("compare", "Policy-versus-optimal ratio report");
  std::string cmp_policy, cmp_scenarios;
  int cmp_episodes = 0;
  std::uint64_t cmp_seed = 0;
  compare_cmd->add_option("--policy", cmp_policy, "Checkpoint file");
  compare_cmd->add_option("--scenarios", cmp_scenarios, "Scenario directory");
  compare_cmd->add_option("--episodes", cmp_episodes, "Generated episode count");
  compare_cmd->add_option("--seed", cmp_seed, "Generated scenario seed");
  compare_cmd->add_option("--objective", objective, "Kept for symmetry; both always run");

  auto* replan_cmd = app.add_subcommand("replan", "Online replanning experiment");
  std::string rp_policy;
  int rp_inject = 5, rp_episodes = 1000;
  std::uint64_t rp_seed = 10;
  replan_cmd->add_option("--policy", rp_policy, "Checkpoint file");
  replan_cmd->add_option("--inject", rp_inject, "Injected target count");
  replan_cmd->add_option("--episodes", rp_episodes, "Episode count");
  replan_cmd->add_option("--seed", rp_seed, "Scenario and injection seed");

  auto* time_cmd = app.add_subcommand("time", "Inference and search timing");
  std::string tm_policy, tm_scenarios;
  int tm_reps = 10;
  std::vector<int> tm_es_targets;
  time_cmd->add_option("--policy", tm_policy, "Checkpoint file");
  time_cmd->add_option("--repetitions", tm_reps, "Greedy episodes per scenario");
  time_cmd->add_option("--scenarios", tm_scenarios, "Scenario directory");
  time_cmd->add_option("--es-targets", tm_es_targets, "Target counts for search timing");

  auto* oracle_cmd = app.add_subcommand("oracle-check", "Certify search against the oracle");
  int oc_instances = 50;
  std::uint64_t oc_seed = 1;
  oracle_cmd->add_option("--instances", oc_instances, "Tiny instance count");
  oracle_cmd->add_option("--seed", oc_seed, "Instance seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  auto fail = [](const char* kind, const std::exception& e, int code) {
    nlohmann::json j{{"error", kind}, {"message", e.what()}};
    std::cerr << j.dump() << std::endl;
    return code;
  };

  try {
    if (gen->parsed()) return cmd_gen(common, gen_count, gen_seed);
    if (train_cmd->parsed()) return cmd_train(common);
    if (eval_cmd->parsed()) return cmd_eval(common, policy_path, scenario_dir, episodes, seed);
    if (es_cmd->parsed()) return cmd_es(common, es_scenarios, objective);
    if (compare_cmd->parsed()) {
      return cmd_compare(common, cmp_policy, cmp_scenarios, cmp_episodes, cmp_seed);
    }
    if (replan_cmd->parsed()) {
      return cmd_replan(common, rp_policy, rp_inject, rp_episodes, rp_seed);
    }
    if (time_cmd->parsed()) {
      return cmd_time(common, tm_policy, tm_reps, tm_scenarios, tm_es_targets);
    }
    if (oracle_cmd->parsed()) return cmd_oracle_check(common, oc_instances, oc_seed);
  } catch (const ConfigError& e) {
    return fail("config", e, kExitConfig);
  } catch (const CheckpointError& e) {
    return fail("checkpoint", e, kExitCheckpoint);
  } catch (const BudgetError& e) {
    return fail("budget", e, kExitBudget);
  } catch (const std::exception& e) {
    return fail("internal", e, kExitInternal);
  }
  return kExitUsage;
}

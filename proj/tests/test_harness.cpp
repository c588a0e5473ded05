#include "doctest.h"
#include "skillgrid/config.hpp"
#include "skillgrid/error.hpp"
#include "skillgrid/reports.hpp"

using namespace skillgrid;

TEST_CASE("empty config yields the full-scale five-target defaults") {
  const RunConfig c = parse_run_config("");
  CHECK(c.train.env.grid_width == 32);
  CHECK(c.train.env.num_agents == 3);
  CHECK(c.train.env.num_targets == 5);
  CHECK(c.train.env.horizon == 128);
  CHECK(c.train.weights.w_attraction == 1.0);
  CHECK(c.train.weights.w_target == 1.0);
  CHECK(c.train.weights.w_wrong_target == 0.25);
  CHECK(c.train.weights.w_step == 0.3);
  CHECK(c.train.weights.w_solve_time == 0.5);
  CHECK(c.train.weights.w_terminal == 0.2);
  CHECK(c.train.weights.c_attraction == 0.0075);
  CHECK(c.train.bootstrap.num_envs == 16384);
  CHECK(c.train.refinement.num_envs == 30720);
  CHECK(c.train.bootstrap.num_updates == 572);
  CHECK(c.train.refinement.num_updates == 1271);
  CHECK(c.train.bootstrap.num_minibatches == 16);
  CHECK(c.train.refinement.num_minibatches == 32);
  CHECK(c.train.bootstrap.seed == 2);
  CHECK(c.train.refinement.seed == 4);
  CHECK(c.train.rollout_steps == 128);
}

TEST_CASE("overrides apply and unknown keys are rejected") {
  const RunConfig c = parse_run_config(R"({
    "seed": 9,
    "env": {"grid_width": 8, "grid_height": 8, "num_agents": 2, "num_targets": 2},
    "reward": {"c_attraction": 0.04},
    "train": {"bootstrap": {"num_envs": 64, "num_minibatches": 4}}
  })");
  CHECK(c.seed == 9);
  CHECK(c.train.seed == 9);
  CHECK(c.train.env.grid_width == 8);
  CHECK(c.train.env.num_targets == 2);
  CHECK(c.train.weights.c_attraction == 0.04);
  CHECK(c.train.bootstrap.num_envs == 64);
  CHECK(c.train.bootstrap.num_minibatches == 4);
  CHECK(c.train.refinement.num_envs == 30720);  // untouched default

  CHECK_THROWS_AS(parse_run_config(R"({"oops": 1})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"env": {"width": 8}})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"train": {"bootstrap": {"envs": 64}}})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("[1,2]"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("{bad json"), ConfigError);
}

TEST_CASE("validation failures carry field context") {
  // Minibatch count must divide the environment count.
  CHECK_THROWS_WITH_AS(
      parse_run_config(R"({"train": {"bootstrap": {"num_envs": 10, "num_minibatches": 3}}})"),
      "train config: num_envs must be divisible by num_minibatches", ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"eval": {"episodes": 0}})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"reward": {"w_step": -1}})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"train": {"gamma": 2.0}})"), ConfigError);
}

TEST_CASE("config round trip preserves every field") {
  RunConfig c = parse_run_config(R"({
    "seed": 5,
    "out_dir": "exp",
    "env": {"grid_width": 8, "grid_height": 9, "num_agents": 2, "num_targets": 3,
            "num_skills": 2, "horizon": 64},
    "net": {"dense_dim": 32, "hidden_dim": 16},
    "train": {"rollout_steps": 64, "ppo_epochs": 3, "learning_rate": 0.001,
              "bootstrap": {"num_envs": 8, "num_updates": 5, "num_minibatches": 2, "seed": 11},
              "refinement": {"num_envs": 8, "num_updates": 5, "num_minibatches": 2, "seed": 12}},
    "eval": {"episodes": 7, "seed": 77},
    "es": {"plan_budget": 1000, "oracle_state_budget": 2000}
  })");
  const std::string text = run_config_to_json(c);
  const RunConfig back = parse_run_config(text);
  CHECK(run_config_to_json(back) == text);
  CHECK(back.out_dir == "exp");
  CHECK(back.eval.episodes == 7);
  CHECK(back.es.plan_budget == 1000);
  CHECK(back.train.dense_dim == 32);
  CHECK(back.train.refinement.seed == 12);
}

TEST_CASE("reports embed the resolved configuration") {
  MetricsReport report;
  report.policy_id = "pi5t";
  report.episodes = 100;
  report.success = 0.84;
  report.st_mean = 85.7;
  report.st_std = 20.1;
  report.tte_mean = 232.5;
  report.tte_std = 72.8;

  const std::string config_json = run_config_to_json(default_run_config());
  const std::string csv = metrics_report_csv(report, config_json);
  CHECK(csv.rfind("# config ", 0) == 0);
  CHECK(csv.find("pi5t,100,0.84,85.7,20.1,232.5,72.8,0") != std::string::npos);

  const std::string json_text = metrics_report_json(report, config_json);
  CHECK(json_text.find("\"m_success\": 0.84") != std::string::npos);
  CHECK(json_text.find("\"config\"") != std::string::npos);

  RatioReport ratios;
  const std::string na_csv = ratio_report_csv(report, ratios, config_json);
  CHECK(na_csv.find("n/a,n/a") != std::string::npos);
  ratios.st_ratio = 0.86;
  ratios.tte_ratio = 0.92;
  ratios.solved_by_policy = 99;
  const std::string ok_csv = ratio_report_csv(report, ratios, config_json);
  CHECK(ok_csv.find("0.86,0.92,99") != std::string::npos);
}

TEST_CASE("episode results jsonl") {
  std::vector<EpisodeResult> results(2);
  results[0].solved = true;
  results[0].t_solved = 12;
  results[0].moves = {3, 4};
  results[0].scenario_seed = 7;
  results[1].moves = {0, 0};
  const std::string text = episode_results_jsonl(results);
  CHECK(text.find("\"t_solved\":12") != std::string::npos);
  CHECK(std::count(text.begin(), text.end(), '\n') == 2);
}

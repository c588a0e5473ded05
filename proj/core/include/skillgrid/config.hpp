#pragma once

#include <string>

#include "skillgrid/eval.hpp"
#include "skillgrid/trainer.hpp"

namespace skillgrid {

struct EvalSettings {
  int episodes = 100;
  std::uint64_t seed = 123;
};

struct EsSettings {
  std::int64_t plan_budget = 10'000'000;
  std::int64_t oracle_state_budget = 50'000'000;
};

// One resolved experiment configuration. Defaults follow the reference
// full-scale five-target profile; desk-scale profiles override via file.
struct RunConfig {
  std::uint64_t seed = 0;
  std::string out_dir = "runs";
  TrainConfig train;
  EvalSettings eval;
  EsSettings es;

  void validate() const;  // throws ConfigError with a field-level message
};

RunConfig default_run_config();

// Strict parser: unknown keys are rejected, partial files inherit defaults.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);
std::string run_config_to_json(const RunConfig& config);

}  // namespace skillgrid

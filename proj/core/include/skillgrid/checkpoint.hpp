#pragma once

#include <cstdint>
#include <string>

#include "skillgrid/nets.hpp"
#include "skillgrid/reward.hpp"

namespace skillgrid {

// Versioned policy artifact. Tensors serialize row-major in visit_tensors
// order; the float32 values survive the JSON round trip exactly. The resolved
// run configuration travels inside the artifact so any result can be
// regenerated from the file alone.
struct Checkpoint {
  PolicyParams<float> params;
  GenerationConfig env;
  Phase phase = Phase::Bootstrap;
  std::int64_t update_index = 0;
  std::string rng_state;
  std::string run_config_json;
};

std::string checkpoint_to_json(const Checkpoint& c);
Checkpoint checkpoint_from_json(const std::string& text);

void save_checkpoint(const std::string& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace skillgrid

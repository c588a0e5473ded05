#include "skillgrid/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "skillgrid/error.hpp"

namespace skillgrid {

namespace {

using nlohmann::json;

json arch_to_json(const ArchDescriptor& a) {
  return {{"input_dim", a.input_dim},
          {"dense_dim", a.dense_dim},
          {"hidden_dim", a.hidden_dim},
          {"output_dim", a.output_dim}};
}

ArchDescriptor arch_from_json(const json& j) {
  ArchDescriptor a;
  a.input_dim = j.at("input_dim").get<int>();
  a.dense_dim = j.at("dense_dim").get<int>();
  a.hidden_dim = j.at("hidden_dim").get<int>();
  a.output_dim = j.at("output_dim").get<int>();
  return a;
}

json network_to_json(const NetworkParams<float>& p) {
  json j;
  j["arch"] = arch_to_json(p.arch);
  json tensors = json::object();
  visit_tensors(p, [&](const char* name, const auto& t) {
    json data = json::array();
    for (Eigen::Index r = 0; r < t.rows(); ++r) {
      for (Eigen::Index c = 0; c < t.cols(); ++c) data.push_back(static_cast<double>(t(r, c)));
    }
    tensors[name] = {{"rows", t.rows()}, {"cols", t.cols()}, {"data", std::move(data)}};
  });
  j["tensors"] = std::move(tensors);
  return j;
}

NetworkParams<float> network_from_json(const json& j) {
  NetworkParams<float> p = zeros_like(NetworkParams<float>{
      arch_from_json(j.at("arch")), {}, {}, {}});
  const json& tensors = j.at("tensors");
  visit_tensors(p, [&](const char* name, auto& t) {
    const json& tj = tensors.at(name);
    const auto rows = tj.at("rows").get<Eigen::Index>();
    const auto cols = tj.at("cols").get<Eigen::Index>();
    if (rows != t.rows() || cols != t.cols()) {
      throw CheckpointError(std::string("checkpoint tensor shape mismatch for ") + name);
    }
    const json& data = tj.at("data");
    if (static_cast<Eigen::Index>(data.size()) != rows * cols) {
      throw CheckpointError(std::string("checkpoint tensor size mismatch for ") + name);
    }
    Eigen::Index i = 0;
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) {
        t(r, c) = static_cast<float>(data[i++].get<double>());
      }
    }
  });
  return p;
}

}  // namespace

std::string checkpoint_to_json(const Checkpoint& c) {
  json j;
  j["version"] = 1;
  j["kind"] = "skillgrid-checkpoint";
  j["env"] = {{"grid_width", c.env.grid_width},   {"grid_height", c.env.grid_height},
              {"num_agents", c.env.num_agents},   {"num_targets", c.env.num_targets},
              {"num_skills", c.env.num_skills},   {"horizon", c.env.horizon}};
  j["phase"] = phase_name(c.phase);
  j["update_index"] = c.update_index;
  j["rng_state"] = c.rng_state;
  j["actor"] = network_to_json(c.params.actor);
  j["critic"] = network_to_json(c.params.critic);
  if (!c.run_config_json.empty()) {
    j["run_config"] = json::parse(c.run_config_json);
  }
  return j.dump(2);
}

Checkpoint checkpoint_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw CheckpointError(std::string("checkpoint_from_json: ") + e.what());
  }
  try {
    if (j.at("kind").get<std::string>() != "skillgrid-checkpoint" ||
        j.at("version").get<int>() != 1) {
      throw CheckpointError("checkpoint_from_json: unsupported container");
    }
    Checkpoint c;
    const json& env = j.at("env");
    c.env.grid_width = env.at("grid_width").get<int>();
    c.env.grid_height = env.at("grid_height").get<int>();
    c.env.num_agents = env.at("num_agents").get<int>();
    c.env.num_targets = env.at("num_targets").get<int>();
    c.env.num_skills = env.at("num_skills").get<int>();
    c.env.horizon = env.at("horizon").get<int>();
    const std::string phase = j.at("phase").get<std::string>();
    if (phase != "bootstrap" && phase != "refinement") {
      throw CheckpointError("checkpoint_from_json: unknown phase");
    }
    c.phase = phase == "bootstrap" ? Phase::Bootstrap : Phase::Refinement;
    c.update_index = j.at("update_index").get<std::int64_t>();
    c.rng_state = j.at("rng_state").get<std::string>();
    c.params.actor = network_from_json(j.at("actor"));
    c.params.critic = network_from_json(j.at("critic"));
    if (j.contains("run_config")) c.run_config_json = j.at("run_config").dump();
    return c;
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("checkpoint_from_json: ") + e.what());
  }
}

void save_checkpoint(const std::string& path, const Checkpoint& c) {
  std::ofstream out(path);
  if (!out) throw CheckpointError("save_checkpoint: cannot open " + path);
  out << checkpoint_to_json(c);
  if (!out) throw CheckpointError("save_checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CheckpointError("load_checkpoint: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return checkpoint_from_json(buf.str());
}

}  // namespace skillgrid

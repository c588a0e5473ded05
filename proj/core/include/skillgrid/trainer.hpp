#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "skillgrid/checkpoint.hpp"
#include "skillgrid/nets.hpp"
#include "skillgrid/obs.hpp"
#include "skillgrid/reward.hpp"

namespace skillgrid {

// Per-phase knobs. The minibatch count must divide the environment count so
// that minibatches split along whole environments and recurrent sequences
// stay intact.
struct PhaseConfig {
  int num_envs = 64;
  int num_updates = 100;
  int num_minibatches = 4;
  std::uint64_t seed = 2;
  double learning_rate = 0.0;  // 0 inherits the run-wide rate
};

struct TrainConfig {
  GenerationConfig env;
  RewardWeights weights;
  int dense_dim = 64;
  int hidden_dim = 64;
  PhaseConfig bootstrap;
  PhaseConfig refinement;
  int rollout_steps = 128;
  int ppo_epochs = 4;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip_eps = 0.2;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  double learning_rate = 2.5e-4;
  double max_grad_norm = 0.5;
  bool normalize_advantages = true;
  int num_workers = 1;
  std::uint64_t seed = 0;
  int checkpoint_every = 0;  // updates between checkpoints; 0 = final only

  void validate() const;  // throws ConfigError
};

ArchDescriptor actor_arch(const TrainConfig& config);
ArchDescriptor critic_arch(const TrainConfig& config);

// Time-major rollout storage. Layouts (all flat, row-major over the listed
// index order):
//   obs       [steps][envs][agents][obs_len]   normalized network inputs
//   joint_obs [steps][envs][joint_len]
//   actions/log_probs/rewards/advantages/returns [steps][envs][agents]
//   values/dones [steps][envs]
struct RolloutBatch {
  int num_steps = 0;
  int num_envs = 0;
  int num_agents = 0;
  int obs_len = 0;
  int joint_len = 0;

  std::vector<float> obs;
  std::vector<float> joint_obs;
  std::vector<int> actions;
  std::vector<float> log_probs;
  std::vector<double> rewards;
  std::vector<float> values;
  std::vector<std::uint8_t> dones;
  Matrix<float> actor_h0;   // hidden x (envs*agents), column e*N+a
  Matrix<float> critic_h0;  // hidden x envs
  std::vector<float> bootstrap_values;
  std::vector<double> advantages;
  std::vector<double> returns;

  // Episode bookkeeping from the collection pass.
  int episodes_finished = 0;
  int episodes_solved = 0;
  double finished_return_sum = 0.0;  // per-agent mean episode returns, summed

  std::size_t flat(int t, int e, int a) const {
    return (static_cast<std::size_t>(t) * num_envs + e) * num_agents + a;
  }
  std::size_t flat_env(int t, int e) const {
    return static_cast<std::size_t>(t) * num_envs + e;
  }
};

// One environment slot of the vectorized pool. Slots own their RNG streams,
// so stepping slots in parallel cannot change results.
struct EnvSlot {
  Scenario scenario;
  EnvState state;
  Rng rng;
  Matrix<float> actor_h;   // hidden x agents
  Vector<float> critic_h;
  double return_sum = 0.0;  // running per-agent mean return of the episode
};

class EnvPool {
 public:
  EnvPool(const GenerationConfig& config, int num_envs, int hidden_dim,
          std::uint64_t stream_seed);

  int size() const { return static_cast<int>(slots_.size()); }
  EnvSlot& slot(int i) { return slots_[i]; }
  const GenerationConfig& config() const { return config_; }

  // Replaces the slot's episode with a freshly generated scenario (skipping
  // the rare draw that is already terminal at reset) and zeroes its state.
  void reset_slot(int i);

 private:
  GenerationConfig config_;
  std::vector<EnvSlot> slots_;
  int hidden_dim_;
};

// Steps every environment `num_steps` times with sampled actions under the
// given phase's reward gating. Terminated environments restart immediately
// with a fresh scenario and zeroed recurrent state.
RolloutBatch collect_rollout(const PolicyParams<float>& params, EnvPool& pool, int num_steps,
                             Phase phase, const RewardWeights& weights, int num_workers = 1);

// Generalized advantage estimation over one sequence:
//   delta_t = r_t + gamma * V_{t+1} * (1 - done_t) - V_t
//   A_t     = delta_t + gamma * lambda * (1 - done_t) * A_{t+1}
// with V_T = bootstrap_value; returns_t = A_t + V_t.
struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};
GaeResult compute_gae(const std::vector<double>& rewards, const std::vector<double>& values,
                      const std::vector<std::uint8_t>& dones, double bootstrap_value,
                      double gamma, double lambda);

// Applies compute_gae to every (environment, agent) sequence of the batch.
// The shared critic value is the baseline for every agent's own rewards.
void compute_gae_batch(RolloutBatch& batch, double gamma, double lambda);

// Shifts/scales advantages to mean 0, std 1 over the whole batch.
void normalize_advantages(RolloutBatch& batch);

// Epoch minibatch plan: a seeded permutation of environment indices split
// into `num_minibatches` equal groups (whole environments only).
std::vector<std::vector<int>> plan_minibatches(int num_envs, int num_minibatches, Rng& rng);

struct AdamState {
  PolicyParams<float> m;
  PolicyParams<float> v;
  std::int64_t t = 0;
};
AdamState make_adam_state(const PolicyParams<float>& params);

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
  double grad_norm = 0.0;
};

// Clipped-surrogate PPO update over the batch (advantages must already be
// normalized if desired). Minibatches split along the environment axis;
// gradients flow through time across each rollout chunk. `num_minibatches`
// comes from the active phase and must divide the batch's environment count.
UpdateStats ppo_update(PolicyParams<float>& params, AdamState& adam, const RolloutBatch& batch,
                       const TrainConfig& config, int num_minibatches, Rng& shuffle_rng);

struct TrainLogRow {
  int update = 0;
  Phase phase = Phase::Bootstrap;
  std::int64_t env_steps = 0;
  double mean_reward = 0.0;
  double success_rate = 0.0;
  UpdateStats stats;
  double wall_ms = 0.0;
};

std::string train_log_header();
std::string train_log_row_csv(const TrainLogRow& row);

struct TrainHooks {
  std::function<void(const TrainLogRow&)> on_log;
  std::function<void(const Checkpoint&, bool final)> on_checkpoint;
};

// Full two-phase run: bootstrap updates with gated rewards, then refinement.
// Deterministic for a fixed config in single-threaded mode.
Checkpoint train(const TrainConfig& config, const TrainHooks& hooks = {},
                 const std::string& run_config_json = "");

}  // namespace skillgrid

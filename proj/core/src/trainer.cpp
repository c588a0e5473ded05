#include "skillgrid/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>
#include <thread>

#include "skillgrid/error.hpp"

namespace skillgrid {

void TrainConfig::validate() const {
  if (env.num_agents <= 0 || env.num_targets <= 0 || env.num_skills <= 0) {
    throw ConfigError("train config: agent, target and skill counts must be positive");
  }
  if (dense_dim <= 0 || hidden_dim <= 0) {
    throw ConfigError("train config: network dimensions must be positive");
  }
  if (rollout_steps <= 0) throw ConfigError("train config: rollout_steps must be positive");
  if (ppo_epochs <= 0) throw ConfigError("train config: ppo_epochs must be positive");
  for (const PhaseConfig* pc : {&bootstrap, &refinement}) {
    if (pc->num_envs <= 0 || pc->num_minibatches <= 0 || pc->num_updates < 0) {
      throw ConfigError("train config: phase counts must be positive");
    }
    if (pc->num_envs % pc->num_minibatches != 0) {
      throw ConfigError("train config: num_envs must be divisible by num_minibatches");
    }
    if (pc->learning_rate < 0.0) {
      throw ConfigError("train config: phase learning_rate must be non-negative");
    }
  }
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("train config: gamma must be in (0, 1]");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) {
    throw ConfigError("train config: gae_lambda must be in [0, 1]");
  }
  if (!(clip_eps >= 0.0)) throw ConfigError("train config: clip_eps must be non-negative");
  if (learning_rate <= 0.0) throw ConfigError("train config: learning_rate must be positive");
  if (max_grad_norm <= 0.0) throw ConfigError("train config: max_grad_norm must be positive");
  if (num_workers <= 0) throw ConfigError("train config: num_workers must be positive");
}

ArchDescriptor actor_arch(const TrainConfig& config) {
  ArchDescriptor a;
  a.input_dim = observation_length(config.env.num_agents, config.env.num_targets);
  a.dense_dim = config.dense_dim;
  a.hidden_dim = config.hidden_dim;
  a.output_dim = kNumActions;
  return a;
}

ArchDescriptor critic_arch(const TrainConfig& config) {
  ArchDescriptor a;
  a.input_dim = config.env.num_agents *
                observation_length(config.env.num_agents, config.env.num_targets);
  a.dense_dim = config.dense_dim;
  a.hidden_dim = config.hidden_dim;
  a.output_dim = 1;
  return a;
}

EnvPool::EnvPool(const GenerationConfig& config, int num_envs, int hidden_dim,
                 std::uint64_t stream_seed)
    : config_(config), hidden_dim_(hidden_dim) {
  if (num_envs <= 0) throw ConfigError("EnvPool: num_envs must be positive");
  slots_.resize(num_envs);
  for (int i = 0; i < num_envs; ++i) {
    slots_[i].rng = Rng(mix_seed(stream_seed, static_cast<std::uint64_t>(i)));
    reset_slot(i);
  }
}

void EnvPool::reset_slot(int i) {
  EnvSlot& s = slots_[i];
  // Freshly generated scenarios; a draw already terminal at reset (agents
  // spawned on all targets) yields no transition to learn from, so redraw.
  for (int attempt = 0; attempt < 1000; ++attempt) {
    s.scenario = generate_scenario(config_, s.rng.next_u64());
    s.state = reset_env(s.scenario);
    if (!is_terminal(s.state, s.scenario)) break;
  }
  s.actor_h = Matrix<float>::Zero(hidden_dim_, config_.num_agents);
  s.critic_h = Vector<float>::Zero(hidden_dim_);
  s.return_sum = 0.0;
}

namespace {

Vector<float> to_float_vector(const Observation& obs) {
  Vector<float> v(static_cast<Eigen::Index>(obs.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = static_cast<float>(obs[i]);
  return v;
}

// Steps one environment slot once and records everything into the batch row.
void rollout_step_slot(const PolicyParams<float>& params, EnvPool& pool, int e, int t,
                       Phase phase, const RewardWeights& weights, RolloutBatch& batch) {
  EnvSlot& slot = pool.slot(e);
  const Scenario& scenario = slot.scenario;
  const int n = scenario.num_agents();

  const Observation joint_raw = build_joint_observation(slot.state, scenario);
  const Observation joint = normalize_joint_observation(joint_raw, scenario);
  std::copy(joint.begin(), joint.end(),
            batch.joint_obs.begin() + batch.flat_env(t, e) * batch.joint_len);

  std::vector<Action> joint_action(n);
  for (int a = 0; a < n; ++a) {
    Observation raw(joint_raw.begin() + static_cast<std::size_t>(a) * batch.obs_len,
                    joint_raw.begin() + static_cast<std::size_t>(a + 1) * batch.obs_len);
    const Observation norm = normalize_observation(raw, scenario);
    std::copy(norm.begin(), norm.end(),
              batch.obs.begin() + batch.flat(t, e, a) * batch.obs_len);

    Vector<float> obs_vec = to_float_vector(norm);
    auto [probs, h_next] = actor_forward<float>(params.actor, obs_vec, slot.actor_h.col(a));
    slot.actor_h.col(a) = h_next;
    const Action action = sample_action<float>(probs, slot.rng);
    joint_action[a] = action;
    batch.actions[batch.flat(t, e, a)] = static_cast<int>(action);
    batch.log_probs[batch.flat(t, e, a)] =
        std::log(std::max(probs[static_cast<int>(action)], 1e-30f));
  }

  Vector<float> joint_vec = to_float_vector(joint);
  auto [value, critic_h_next] = critic_forward<float>(params.critic, joint_vec, slot.critic_h);
  slot.critic_h = critic_h_next;
  batch.values[batch.flat_env(t, e)] = value;

  auto [next_state, events] = step_env(slot.state, scenario, joint_action);
  const std::vector<double> rewards =
      step_rewards(slot.state, next_state, scenario, events, weights, phase);
  double mean_reward = 0.0;
  for (int a = 0; a < n; ++a) {
    batch.rewards[batch.flat(t, e, a)] = rewards[a];
    mean_reward += rewards[a];
  }
  slot.return_sum += mean_reward / n;

  if (is_terminal(next_state, scenario)) {
    batch.dones[batch.flat_env(t, e)] = 1;
    batch.episodes_finished += 1;
    batch.episodes_solved += next_state.all_solved() ? 1 : 0;
    batch.finished_return_sum += slot.return_sum;
    pool.reset_slot(e);
  } else {
    slot.state = std::move(next_state);
  }
}

}  // namespace

RolloutBatch collect_rollout(const PolicyParams<float>& params, EnvPool& pool, int num_steps,
                             Phase phase, const RewardWeights& weights, int num_workers) {
  const GenerationConfig& cfg = pool.config();
  RolloutBatch batch;
  batch.num_steps = num_steps;
  batch.num_envs = pool.size();
  batch.num_agents = cfg.num_agents;
  batch.obs_len = observation_length(cfg.num_agents, cfg.num_targets);
  batch.joint_len = cfg.num_agents * batch.obs_len;

  const std::size_t rows = static_cast<std::size_t>(num_steps) * batch.num_envs;
  batch.obs.assign(rows * batch.num_agents * batch.obs_len, 0.0f);
  batch.joint_obs.assign(rows * batch.joint_len, 0.0f);
  batch.actions.assign(rows * batch.num_agents, 0);
  batch.log_probs.assign(rows * batch.num_agents, 0.0f);
  batch.rewards.assign(rows * batch.num_agents, 0.0);
  batch.values.assign(rows, 0.0f);
  batch.dones.assign(rows, 0);
  batch.bootstrap_values.assign(batch.num_envs, 0.0f);

  batch.actor_h0 = Matrix<float>(params.actor.arch.hidden_dim,
                                 static_cast<Eigen::Index>(batch.num_envs) * batch.num_agents);
  batch.critic_h0 = Matrix<float>(params.critic.arch.hidden_dim, batch.num_envs);
  for (int e = 0; e < batch.num_envs; ++e) {
    batch.actor_h0.middleCols(static_cast<Eigen::Index>(e) * batch.num_agents,
                              batch.num_agents) = pool.slot(e).actor_h;
    batch.critic_h0.col(e) = pool.slot(e).critic_h;
  }

  auto run_range = [&](int begin, int end, RolloutBatch& sink) {
    for (int t = 0; t < num_steps; ++t) {
      for (int e = begin; e < end; ++e) {
        rollout_step_slot(params, pool, e, t, phase, weights, sink);
      }
    }
    for (int e = begin; e < end; ++e) {
      EnvSlot& slot = pool.slot(e);
      const Observation joint =
          normalize_joint_observation(build_joint_observation(slot.state, slot.scenario),
                                      slot.scenario);
      Vector<float> joint_vec = to_float_vector(joint);
      auto [value, h_unused] = critic_forward<float>(params.critic, joint_vec, slot.critic_h);
      sink.bootstrap_values[e] = value;
    }
  };

  const int workers = std::min(num_workers, batch.num_envs);
  if (workers <= 1) {
    run_range(0, batch.num_envs, batch);
  } else {
    // Each worker owns a contiguous slice of slots and a private stats sink;
    // per-slot arithmetic is identical to the serial path, so results match.
    std::vector<RolloutBatch> sinks(workers);
    for (RolloutBatch& s : sinks) {
      s = batch;  // shares shape; arrays are written disjointly per slice
    }
    std::vector<std::thread> threads;
    const int chunk = (batch.num_envs + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
      const int begin = w * chunk;
      const int end = std::min(batch.num_envs, begin + chunk);
      if (begin >= end) break;
      threads.emplace_back([&, w, begin, end] { run_range(begin, end, sinks[w]); });
    }
    for (auto& th : threads) th.join();
    // Merge the disjoint columns and sum the episode statistics in slice order.
    for (int w = 0; w < static_cast<int>(sinks.size()); ++w) {
      const int begin = w * chunk;
      const int end = std::min(batch.num_envs, begin + chunk);
      if (begin >= end) continue;
      RolloutBatch& s = sinks[w];
      for (int t = 0; t < num_steps; ++t) {
        for (int e = begin; e < end; ++e) {
          const std::size_t row = batch.flat_env(t, e);
          std::copy_n(s.joint_obs.begin() + row * batch.joint_len, batch.joint_len,
                      batch.joint_obs.begin() + row * batch.joint_len);
          batch.values[row] = s.values[row];
          batch.dones[row] = s.dones[row];
          for (int a = 0; a < batch.num_agents; ++a) {
            const std::size_t cell = batch.flat(t, e, a);
            std::copy_n(s.obs.begin() + cell * batch.obs_len, batch.obs_len,
                        batch.obs.begin() + cell * batch.obs_len);
            batch.actions[cell] = s.actions[cell];
            batch.log_probs[cell] = s.log_probs[cell];
            batch.rewards[cell] = s.rewards[cell];
          }
        }
        }
      for (int e = begin; e < end; ++e) batch.bootstrap_values[e] = s.bootstrap_values[e];
      batch.episodes_finished += s.episodes_finished;
      batch.episodes_solved += s.episodes_solved;
      batch.finished_return_sum += s.finished_return_sum;
    }
  }
  return batch;
}

GaeResult compute_gae(const std::vector<double>& rewards, const std::vector<double>& values,
                      const std::vector<std::uint8_t>& dones, double bootstrap_value,
                      double gamma, double lambda) {
  const std::size_t n = rewards.size();
  if (values.size() != n || dones.size() != n) {
    throw DimensionError("compute_gae: rewards, values and dones must have equal length");
  }
  GaeResult out;
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  double running = 0.0;
  for (std::size_t idx = n; idx-- > 0;) {
    const double nonterminal = dones[idx] ? 0.0 : 1.0;
    const double next_value = (idx + 1 == n) ? bootstrap_value : values[idx + 1];
    const double delta = rewards[idx] + gamma * next_value * nonterminal - values[idx];
    running = delta + gamma * lambda * nonterminal * running;
    out.advantages[idx] = running;
    out.returns[idx] = running + values[idx];
  }
  return out;
}

void compute_gae_batch(RolloutBatch& batch, double gamma, double lambda) {
  const std::size_t cells =
      static_cast<std::size_t>(batch.num_steps) * batch.num_envs * batch.num_agents;
  batch.advantages.assign(cells, 0.0);
  batch.returns.assign(cells, 0.0);
  std::vector<double> rewards(batch.num_steps), values(batch.num_steps);
  std::vector<std::uint8_t> dones(batch.num_steps);
  for (int e = 0; e < batch.num_envs; ++e) {
    for (int t = 0; t < batch.num_steps; ++t) {
      values[t] = batch.values[batch.flat_env(t, e)];
      dones[t] = batch.dones[batch.flat_env(t, e)];
    }
    for (int a = 0; a < batch.num_agents; ++a) {
      for (int t = 0; t < batch.num_steps; ++t) {
        rewards[t] = batch.rewards[batch.flat(t, e, a)];
      }
      GaeResult res = compute_gae(rewards, values, dones, batch.bootstrap_values[e], gamma,
                                  lambda);
      for (int t = 0; t < batch.num_steps; ++t) {
        batch.advantages[batch.flat(t, e, a)] = res.advantages[t];
        batch.returns[batch.flat(t, e, a)] = res.returns[t];
      }
    }
  }
}

void normalize_advantages(RolloutBatch& batch) {
  const std::size_t n = batch.advantages.size();
  if (n == 0) return;
  double mean = 0.0;
  for (double a : batch.advantages) mean += a;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double a : batch.advantages) var += (a - mean) * (a - mean);
  var /= static_cast<double>(n);
  const double scale = 1.0 / (std::sqrt(var) + 1e-8);
  for (double& a : batch.advantages) a = (a - mean) * scale;
}

std::vector<std::vector<int>> plan_minibatches(int num_envs, int num_minibatches, Rng& rng) {
  if (num_minibatches <= 0 || num_envs % num_minibatches != 0) {
    throw ConfigError("plan_minibatches: minibatch count must divide environment count");
  }
  std::vector<int> perm(num_envs);
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = num_envs - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(i) + 1));
    std::swap(perm[i], perm[j]);
  }
  const int chunk = num_envs / num_minibatches;
  std::vector<std::vector<int>> plan(num_minibatches);
  for (int g = 0; g < num_minibatches; ++g) {
    plan[g].assign(perm.begin() + static_cast<std::size_t>(g) * chunk,
                   perm.begin() + static_cast<std::size_t>(g + 1) * chunk);
  }
  return plan;
}

namespace {

struct TensorSpan {
  float* data;
  std::int64_t size;
};

std::vector<TensorSpan> tensor_spans(PolicyParams<float>& p) {
  std::vector<TensorSpan> spans;
  auto add = [&](const char*, auto& t) { spans.push_back({t.data(), t.size()}); };
  visit_tensors(p.actor, add);
  visit_tensors(p.critic, add);
  return spans;
}

double global_grad_norm(PolicyParams<float>& grads) {
  double sq = 0.0;
  for (const TensorSpan& s : tensor_spans(grads)) {
    for (std::int64_t i = 0; i < s.size; ++i) sq += static_cast<double>(s.data[i]) * s.data[i];
  }
  return std::sqrt(sq);
}

void scale_grads(PolicyParams<float>& grads, float factor) {
  for (const TensorSpan& s : tensor_spans(grads)) {
    for (std::int64_t i = 0; i < s.size; ++i) s.data[i] *= factor;
  }
}

void adam_step(PolicyParams<float>& params, AdamState& adam, PolicyParams<float>& grads,
               double lr) {
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  adam.t += 1;
  const double bias1 = 1.0 - std::pow(beta1, static_cast<double>(adam.t));
  const double bias2 = 1.0 - std::pow(beta2, static_cast<double>(adam.t));
  auto p = tensor_spans(params);
  auto g = tensor_spans(grads);
  auto m = tensor_spans(adam.m);
  auto v = tensor_spans(adam.v);
  for (std::size_t k = 0; k < p.size(); ++k) {
    for (std::int64_t i = 0; i < p[k].size; ++i) {
      const double gi = g[k].data[i];
      const double mi = beta1 * m[k].data[i] + (1.0 - beta1) * gi;
      const double vi = beta2 * v[k].data[i] + (1.0 - beta2) * gi * gi;
      m[k].data[i] = static_cast<float>(mi);
      v[k].data[i] = static_cast<float>(vi);
      const double mhat = mi / bias1;
      const double vhat = vi / bias2;
      p[k].data[i] -= static_cast<float>(lr * mhat / (std::sqrt(vhat) + eps));
    }
  }
}

// Gathers the minibatch's network inputs for one time step.
Matrix<float> gather_actor_inputs(const RolloutBatch& batch, const std::vector<int>& envs,
                                  int t) {
  const int n = batch.num_agents;
  Matrix<float> x(batch.obs_len, static_cast<Eigen::Index>(envs.size()) * n);
  for (std::size_t j = 0; j < envs.size(); ++j) {
    for (int a = 0; a < n; ++a) {
      const float* src = batch.obs.data() + batch.flat(t, envs[j], a) * batch.obs_len;
      x.col(static_cast<Eigen::Index>(j) * n + a) =
          Eigen::Map<const Vector<float>>(src, batch.obs_len);
    }
  }
  return x;
}

Matrix<float> gather_critic_inputs(const RolloutBatch& batch, const std::vector<int>& envs,
                                   int t) {
  Matrix<float> x(batch.joint_len, static_cast<Eigen::Index>(envs.size()));
  for (std::size_t j = 0; j < envs.size(); ++j) {
    const float* src = batch.joint_obs.data() + batch.flat_env(t, envs[j]) * batch.joint_len;
    x.col(static_cast<Eigen::Index>(j)) = Eigen::Map<const Vector<float>>(src, batch.joint_len);
  }
  return x;
}

struct MinibatchStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  std::int64_t clipped = 0;
  std::int64_t samples = 0;
};

}  // namespace

AdamState make_adam_state(const PolicyParams<float>& params) {
  AdamState s;
  s.m = zeros_like(params);
  s.v = zeros_like(params);
  s.t = 0;
  return s;
}

namespace {

// One minibatch: recompute forward passes with tapes over the whole rollout
// chunk, form the surrogate/value/entropy gradients per step, then
// backpropagate through time and take an Adam step.
MinibatchStats run_minibatch(PolicyParams<float>& params, AdamState& adam,
                             const RolloutBatch& batch, const TrainConfig& config,
                             const std::vector<int>& envs, int num_minibatches,
                             UpdateStats& stats_out) {
  const int steps = batch.num_steps;
  const int n_agents = batch.num_agents;
  const int b_envs = static_cast<int>(envs.size());
  const int b_actor = b_envs * n_agents;
  const float clip_lo = static_cast<float>(1.0 - config.clip_eps);
  const float clip_hi = static_cast<float>(1.0 + config.clip_eps);
  const double count = static_cast<double>(steps) * b_actor;

  // Forward passes, recorded.
  std::vector<StepTape<float>> actor_tapes(steps), critic_tapes(steps);
  std::vector<Matrix<float>> actor_logits(steps);
  std::vector<Matrix<float>> critic_values(steps);
  {
    Matrix<float> ha(params.actor.arch.hidden_dim, b_actor);
    for (int j = 0; j < b_envs; ++j) {
      ha.middleCols(static_cast<Eigen::Index>(j) * n_agents, n_agents) =
          batch.actor_h0.middleCols(static_cast<Eigen::Index>(envs[j]) * n_agents, n_agents);
    }
    Matrix<float> hc(params.critic.arch.hidden_dim, b_envs);
    for (int j = 0; j < b_envs; ++j) hc.col(j) = batch.critic_h0.col(envs[j]);

    for (int t = 0; t < steps; ++t) {
      if (t > 0) {
        for (int j = 0; j < b_envs; ++j) {
          if (batch.dones[batch.flat_env(t - 1, envs[j])]) {
            ha.middleCols(static_cast<Eigen::Index>(j) * n_agents, n_agents).setZero();
            hc.col(j).setZero();
          }
        }
      }
      Matrix<float> xa = gather_actor_inputs(batch, envs, t);
      Matrix<float> ha_next;
      net_forward<float>(params.actor, xa, ha, &actor_logits[t], &ha_next, &actor_tapes[t]);
      ha = std::move(ha_next);

      Matrix<float> xc = gather_critic_inputs(batch, envs, t);
      Matrix<float> hc_next;
      net_forward<float>(params.critic, xc, hc, &critic_values[t], &hc_next, &critic_tapes[t]);
      hc = std::move(hc_next);
    }
  }

  // Per-step output gradients and scalar statistics.
  MinibatchStats stats;
  std::vector<Matrix<float>> d_logits(steps), d_values(steps);
  for (int t = 0; t < steps; ++t) {
    d_logits[t] = Matrix<float>::Zero(kNumActions, b_actor);
    d_values[t] = Matrix<float>::Zero(1, b_envs);
    for (int j = 0; j < b_envs; ++j) {
      const int e = envs[j];
      double value_grad = 0.0;
      const float value = critic_values[t](0, j);
      for (int a = 0; a < n_agents; ++a) {
        const Eigen::Index col = static_cast<Eigen::Index>(j) * n_agents + a;
        // Stable log-softmax for this column.
        Vector<float> logits = actor_logits[t].col(col);
        const float mx = logits.maxCoeff();
        Vector<float> shifted = (logits.array() - mx).matrix();
        const float lse = std::log(shifted.array().exp().sum());
        Vector<float> log_probs = (shifted.array() - lse).matrix();
        Vector<float> probs = log_probs.array().exp().matrix();

        const std::size_t cell = batch.flat(t, e, a);
        const int action = batch.actions[cell];
        const float adv = static_cast<float>(batch.advantages[cell]);
        const float log_ratio = log_probs[action] - batch.log_probs[cell];
        const float ratio = std::exp(log_ratio);
        const float unclipped = ratio * adv;
        const float clipped = std::clamp(ratio, clip_lo, clip_hi) * adv;

        stats.policy_loss += -std::min(unclipped, clipped);
        stats.approx_kl += static_cast<double>(ratio - 1.0f) - log_ratio;
        if (std::abs(ratio - 1.0f) > config.clip_eps) stats.clipped += 1;
        stats.samples += 1;

        double entropy = 0.0;
        for (int k = 0; k < kNumActions; ++k) {
          entropy -= static_cast<double>(probs[k]) * log_probs[k];
        }
        stats.entropy += entropy;

        // Surrogate gradient: active only when the unclipped branch is the
        // minimum; d(log pi_a)/d logits = onehot(a) - probs.
        Vector<float> grad = Vector<float>::Zero(kNumActions);
        if (unclipped <= clipped) {
          const float g = adv * ratio;
          grad = g * probs;
          grad[action] -= g;
        }
        // Entropy bonus: dH/d logits = -probs .* (log_probs + H).
        const float h = static_cast<float>(entropy);
        grad += (config.entropy_coef * probs.array() * (log_probs.array() + h)).matrix();
        d_logits[t].col(col) = grad / static_cast<float>(count);

        const double vdiff = static_cast<double>(value) - batch.returns[cell];
        stats.value_loss += vdiff * vdiff;
        value_grad += config.value_coef * 2.0 * vdiff / count;
      }
      d_values[t](0, j) = static_cast<float>(value_grad);
    }
  }

  if (!std::isfinite(stats.policy_loss) || !std::isfinite(stats.value_loss) ||
      !std::isfinite(stats.entropy)) {
    std::ostringstream dump;
    dump << "ppo_update: non-finite loss (policy=" << stats.policy_loss
         << ", value=" << stats.value_loss << ", entropy=" << stats.entropy
         << ", adam_step=" << adam.t << ", minibatch_envs=" << b_envs << ")";
    throw NumericsError(dump.str());
  }

  // Backpropagation through time.
  PolicyParams<float> grads = zeros_like(params);
  Matrix<float> dha = Matrix<float>::Zero(params.actor.arch.hidden_dim, b_actor);
  Matrix<float> dhc = Matrix<float>::Zero(params.critic.arch.hidden_dim, b_envs);
  for (int t = steps - 1; t >= 0; --t) {
    dha = net_backward<float>(params.actor, actor_tapes[t], d_logits[t], dha, grads.actor);
    dhc = net_backward<float>(params.critic, critic_tapes[t], d_values[t], dhc, grads.critic);
    if (t > 0) {
      // Hidden state was reset before this step for finished episodes; no
      // gradient flows across the boundary.
      for (int j = 0; j < b_envs; ++j) {
        if (batch.dones[batch.flat_env(t - 1, envs[j])]) {
          dha.middleCols(static_cast<Eigen::Index>(j) * n_agents, n_agents).setZero();
          dhc.col(j).setZero();
        }
      }
    }
  }

  const double norm = global_grad_norm(grads);
  if (norm > config.max_grad_norm) {
    scale_grads(grads, static_cast<float>(config.max_grad_norm / (norm + 1e-12)));
  }
  stats_out.grad_norm += norm / num_minibatches;
  adam_step(params, adam, grads, config.learning_rate);
  return stats;
}

}  // namespace

UpdateStats ppo_update(PolicyParams<float>& params, AdamState& adam, const RolloutBatch& batch,
                       const TrainConfig& config, int num_minibatches, Rng& shuffle_rng) {
  if (batch.advantages.size() != batch.rewards.size() ||
      batch.returns.size() != batch.rewards.size()) {
    throw DimensionError("ppo_update: advantages/returns missing; run compute_gae_batch first");
  }

  UpdateStats totals;
  MinibatchStats acc;
  const int total_minibatches = config.ppo_epochs * num_minibatches;
  for (int epoch = 0; epoch < config.ppo_epochs; ++epoch) {
    const auto plan = plan_minibatches(batch.num_envs, num_minibatches, shuffle_rng);
    for (const std::vector<int>& envs : plan) {
      MinibatchStats s =
          run_minibatch(params, adam, batch, config, envs, total_minibatches, totals);
      acc.policy_loss += s.policy_loss;
      acc.value_loss += s.value_loss;
      acc.entropy += s.entropy;
      acc.approx_kl += s.approx_kl;
      acc.clipped += s.clipped;
      acc.samples += s.samples;
    }
  }
  const double samples = std::max<std::int64_t>(acc.samples, 1);
  totals.policy_loss = acc.policy_loss / samples;
  totals.value_loss = acc.value_loss / samples;
  totals.entropy = acc.entropy / samples;
  totals.approx_kl = acc.approx_kl / samples;
  totals.clip_fraction = static_cast<double>(acc.clipped) / samples;
  return totals;
}

std::string train_log_header() {
  return "update,phase,env_steps,mean_reward,success_rate,policy_loss,value_loss,entropy,"
         "approx_kl,clip_frac,wall_ms";
}

std::string train_log_row_csv(const TrainLogRow& row) {
  std::ostringstream out;
  out.precision(10);
  out << row.update << ',' << phase_name(row.phase) << ',' << row.env_steps << ','
      << row.mean_reward << ',' << row.success_rate << ',' << row.stats.policy_loss << ','
      << row.stats.value_loss << ',' << row.stats.entropy << ',' << row.stats.approx_kl << ','
      << row.stats.clip_fraction << ',' << row.wall_ms;
  return out.str();
}

Checkpoint train(const TrainConfig& config, const TrainHooks& hooks,
                 const std::string& run_config_json) {
  config.validate();

  Rng init_rng(mix_seed(config.seed, 0x1717));
  PolicyParams<float> params =
      init_policy<float>(init_rng, actor_arch(config), critic_arch(config));
  AdamState adam = make_adam_state(params);

  auto make_checkpoint = [&](Phase phase, int update_index, Rng& rng) {
    Checkpoint c;
    c.params = params;
    c.env = config.env;
    c.phase = phase;
    c.update_index = update_index;
    c.rng_state = rng.serialize();
    c.run_config_json = run_config_json;
    return c;
  };

  std::int64_t env_steps = 0;
  int update_index = 0;
  Rng last_rng = init_rng;
  for (Phase phase : {Phase::Bootstrap, Phase::Refinement}) {
    const PhaseConfig& pc = phase == Phase::Bootstrap ? config.bootstrap : config.refinement;
    if (pc.num_updates == 0) continue;
    EnvPool pool(config.env, pc.num_envs, config.hidden_dim, mix_seed(pc.seed, 0xE274));
    Rng update_rng(mix_seed(pc.seed, 0x0BD7));
    TrainConfig phase_config = config;
    if (pc.learning_rate > 0.0) phase_config.learning_rate = pc.learning_rate;
    for (int u = 0; u < pc.num_updates; ++u) {
      const auto start = std::chrono::steady_clock::now();
      RolloutBatch batch = collect_rollout(params, pool, config.rollout_steps, phase,
                                           config.weights, config.num_workers);
      compute_gae_batch(batch, config.gamma, config.gae_lambda);
      if (config.normalize_advantages) normalize_advantages(batch);
      UpdateStats stats =
          ppo_update(params, adam, batch, phase_config, pc.num_minibatches, update_rng);
      env_steps += static_cast<std::int64_t>(config.rollout_steps) * pc.num_envs;
      update_index += 1;

      if (hooks.on_log) {
        TrainLogRow row;
        row.update = update_index;
        row.phase = phase;
        row.env_steps = env_steps;
        row.mean_reward = batch.episodes_finished > 0
                              ? batch.finished_return_sum / batch.episodes_finished
                              : 0.0;
        row.success_rate = batch.episodes_finished > 0
                               ? static_cast<double>(batch.episodes_solved) /
                                     batch.episodes_finished
                               : 0.0;
        row.stats = stats;
        row.wall_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - start)
                          .count();
        hooks.on_log(row);
      }
      if (hooks.on_checkpoint && config.checkpoint_every > 0 &&
          update_index % config.checkpoint_every == 0) {
        hooks.on_checkpoint(make_checkpoint(phase, update_index, update_rng), false);
      }
    }
    last_rng = update_rng;
  }

  Checkpoint final = make_checkpoint(Phase::Refinement, update_index, last_rng);
  if (hooks.on_checkpoint) hooks.on_checkpoint(final, true);
  return final;
}

}  // namespace skillgrid

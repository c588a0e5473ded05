#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>

#include "skillgrid/env.hpp"
#include "skillgrid/rng.hpp"

namespace skillgrid {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

// dense(tanh) -> GRU -> dense head. The actor head emits |A| = 5 logits, the
// critic head a single value.
struct ArchDescriptor {
  int input_dim = 0;
  int dense_dim = 64;
  int hidden_dim = 64;
  int output_dim = kNumActions;

  bool operator==(const ArchDescriptor&) const = default;
};

template <typename T>
struct DenseParams {
  Matrix<T> weight;
  Vector<T> bias;
};

template <typename T>
struct GruParams {
  Matrix<T> wz, uz;
  Vector<T> bz;
  Matrix<T> wr, ur;
  Vector<T> br;
  Matrix<T> wh, uh;
  Vector<T> bh;
};

template <typename T>
struct NetworkParams {
  ArchDescriptor arch;
  DenseParams<T> dense_in;
  GruParams<T> gru;
  DenseParams<T> head;

  std::int64_t parameter_count() const;
};

// Shared actor plus centralized critic. One actor serves every agent; agent
// identity enters only through the observer-first observation layout.
template <typename T>
struct PolicyParams {
  NetworkParams<T> actor;
  NetworkParams<T> critic;

  std::int64_t parameter_count() const {
    return actor.parameter_count() + critic.parameter_count();
  }
};

// Applies fn(name, tensor) to every parameter tensor, in a fixed documented
// order (the checkpoint serialization order).
template <typename T, typename F>
void visit_tensors(NetworkParams<T>& p, F&& fn) {
  fn("dense_in.weight", p.dense_in.weight);
  fn("dense_in.bias", p.dense_in.bias);
  fn("gru.wz", p.gru.wz);
  fn("gru.uz", p.gru.uz);
  fn("gru.bz", p.gru.bz);
  fn("gru.wr", p.gru.wr);
  fn("gru.ur", p.gru.ur);
  fn("gru.br", p.gru.br);
  fn("gru.wh", p.gru.wh);
  fn("gru.uh", p.gru.uh);
  fn("gru.bh", p.gru.bh);
  fn("head.weight", p.head.weight);
  fn("head.bias", p.head.bias);
}

template <typename T, typename F>
void visit_tensors(const NetworkParams<T>& p, F&& fn) {
  visit_tensors(const_cast<NetworkParams<T>&>(p),
                [&](const char* name, const auto& t) { fn(name, t); });
}

// Single GRU update; one column per batch element.
//   z = sigmoid(Wz x + Uz h + bz)
//   r = sigmoid(Wr x + Ur h + br)
//   c = tanh(Wh x + Uh (r.h) + bh)
//   h' = (1 - z).h + z.c
template <typename T>
Vector<T> gru_cell(const GruParams<T>& p, const Vector<T>& x, const Vector<T>& h);

// Recorded intermediates for one time step, enough to backpropagate.
template <typename T>
struct StepTape {
  Matrix<T> input;      // input_dim x B
  Matrix<T> h_prev;     // hidden x B
  Matrix<T> dense_out;  // dense_dim x B
  Matrix<T> z, r, cand; // hidden x B
  Matrix<T> h_new;      // hidden x B
};

// Batched one-step forward. head_out holds raw outputs (actor logits or
// critic values). Pass a tape to record intermediates for net_backward.
template <typename T>
void net_forward(const NetworkParams<T>& p, const Matrix<T>& input, const Matrix<T>& h_prev,
                 Matrix<T>* head_out, Matrix<T>* h_new, StepTape<T>* tape = nullptr);

// Backpropagates one step. d_head_out/d_h_new are gradients flowing into this
// step's outputs; parameter gradients accumulate into `grads` (same container
// shape as the parameters); the return value is the gradient w.r.t. h_prev.
template <typename T>
Matrix<T> net_backward(const NetworkParams<T>& p, const StepTape<T>& tape,
                       const Matrix<T>& d_head_out, const Matrix<T>& d_h_new,
                       NetworkParams<T>& grads);

// Column-wise, numerically stable softmax.
template <typename T>
Matrix<T> softmax_columns(const Matrix<T>& logits);

// Convenience single-observation wrappers.
template <typename T>
std::pair<Vector<T>, Vector<T>> actor_forward(const NetworkParams<T>& p, const Vector<T>& obs,
                                              const Vector<T>& hidden);
template <typename T>
std::pair<T, Vector<T>> critic_forward(const NetworkParams<T>& p, const Vector<T>& joint_obs,
                                       const Vector<T>& hidden);

// Categorical draw from an action distribution; validates that the input is a
// distribution (non-negative, sums to 1 within 1e-6).
template <typename T>
Action sample_action(const Vector<T>& probabilities, Rng& rng);

// Argmax with ties broken toward the lowest action index.
template <typename T>
Action greedy_action(const Vector<T>& probabilities);

// Orthogonal initialization (gain sqrt(2) for the input dense layer, 1.0 for
// GRU matrices, `head_gain` for the output layer), zero biases. Draws happen
// in double precision so float and double nets initialized from the same seed
// agree.
template <typename T>
NetworkParams<T> init_network(Rng& rng, const ArchDescriptor& arch, double head_gain);

// Actor head gain 0.01 (near-uniform initial policy), critic head gain 1.0.
template <typename T>
PolicyParams<T> init_policy(Rng& rng, const ArchDescriptor& actor_arch,
                            const ArchDescriptor& critic_arch);

template <typename T>
NetworkParams<T> zeros_like(const NetworkParams<T>& p);

template <typename T>
PolicyParams<T> zeros_like(const PolicyParams<T>& p);

// Elementwise convert (float <-> double).
template <typename To, typename From>
NetworkParams<To> cast_network(const NetworkParams<From>& p);
template <typename To, typename From>
PolicyParams<To> cast_policy(const PolicyParams<From>& p);

}  // namespace skillgrid

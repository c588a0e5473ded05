#pragma once

// Test-only reference implementation of the network forward passes, written
// with plain loops over std::vector so it shares no code path with the
// library's Eigen-based implementation.

#include <cmath>
#include <vector>

#include "skillgrid/nets.hpp"

namespace skillgrid::test {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;  // rows of columns

inline Vec matvec(const Mat& w, const Vec& x) {
  Vec y(w.size(), 0.0);
  for (std::size_t i = 0; i < w.size(); ++i) {
    for (std::size_t j = 0; j < x.size(); ++j) y[i] += w[i][j] * x[j];
  }
  return y;
}

inline Vec add(Vec a, const Vec& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  return a;
}

inline Vec hadamard(Vec a, const Vec& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] *= b[i];
  return a;
}

inline Vec map_sigmoid(Vec a) {
  for (double& v : a) v = 1.0 / (1.0 + std::exp(-v));
  return a;
}

inline Vec map_tanh(Vec a) {
  for (double& v : a) v = std::tanh(v);
  return a;
}

struct ScalarGru {
  Mat wz, uz, wr, ur, wh, uh;
  Vec bz, br, bh;

  Vec step(const Vec& x, const Vec& h) const {
    const Vec z = map_sigmoid(add(add(matvec(wz, x), matvec(uz, h)), bz));
    const Vec r = map_sigmoid(add(add(matvec(wr, x), matvec(ur, h)), br));
    const Vec c = map_tanh(add(add(matvec(wh, x), matvec(uh, hadamard(r, h))), bh));
    Vec out(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) out[i] = (1.0 - z[i]) * h[i] + z[i] * c[i];
    return out;
  }
};

struct ScalarNet {
  Mat dense_w;
  Vec dense_b;
  ScalarGru gru;
  Mat head_w;
  Vec head_b;

  // Returns raw head outputs and the next hidden state.
  std::pair<Vec, Vec> step(const Vec& input, const Vec& h) const {
    const Vec dense = map_tanh(add(matvec(dense_w, input), dense_b));
    const Vec hn = gru.step(dense, h);
    return {add(matvec(head_w, hn), head_b), hn};
  }
};

inline Vec softmax(Vec logits) {
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  double sum = 0.0;
  for (double& v : logits) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : logits) v /= sum;
  return logits;
}

template <typename T>
Mat to_mat(const Matrix<T>& m) {
  Mat out(m.rows(), Vec(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out[r][c] = static_cast<double>(m(r, c));
  }
  return out;
}

template <typename T>
Vec to_vec(const Vector<T>& v) {
  Vec out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = static_cast<double>(v[i]);
  return out;
}

template <typename T>
ScalarNet to_scalar(const NetworkParams<T>& p) {
  ScalarNet net;
  net.dense_w = to_mat(p.dense_in.weight);
  net.dense_b = to_vec(p.dense_in.bias);
  net.gru = {to_mat(p.gru.wz), to_mat(p.gru.uz), to_mat(p.gru.wr),
             to_mat(p.gru.ur), to_mat(p.gru.wh), to_mat(p.gru.uh),
             to_vec(p.gru.bz), to_vec(p.gru.br), to_vec(p.gru.bh)};
  net.head_w = to_mat(p.head.weight);
  net.head_b = to_vec(p.head.bias);
  return net;
}

}  // namespace skillgrid::test

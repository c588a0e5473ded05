#include "skillgrid/nets.hpp"

#include <cmath>

#include "skillgrid/error.hpp"

namespace skillgrid {

namespace {

template <typename T>
Matrix<T> sigmoid(const Matrix<T>& x) {
  return ((-x.array()).exp() + T(1)).inverse().matrix();
}

void check(bool ok, const char* what) {
  if (!ok) throw DimensionError(what);
}

// Orthogonalizes a Gaussian draw via QR; columns of Q are sign-corrected with
// the diagonal of R so the result is unique for a given draw.
Matrix<double> orthogonal_matrix(Rng& rng, int rows, int cols, double gain) {
  const int big = std::max(rows, cols);
  const int small = std::min(rows, cols);
  Matrix<double> g(big, small);
  for (int i = 0; i < big; ++i) {
    for (int j = 0; j < small; ++j) g(i, j) = rng.next_gaussian();
  }
  Eigen::HouseholderQR<Matrix<double>> qr(g);
  Matrix<double> q = qr.householderQ() * Matrix<double>::Identity(big, small);
  Matrix<double> r = qr.matrixQR().topRows(small).template triangularView<Eigen::Upper>();
  for (int j = 0; j < small; ++j) {
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  }
  Matrix<double> out = rows >= cols ? q : Matrix<double>(q.transpose());
  return gain * out;
}

}  // namespace

template <typename T>
std::int64_t NetworkParams<T>::parameter_count() const {
  std::int64_t n = 0;
  visit_tensors(*this, [&](const char*, const auto& t) { n += t.size(); });
  return n;
}

template <typename T>
Vector<T> gru_cell(const GruParams<T>& p, const Vector<T>& x, const Vector<T>& h) {
  check(p.wz.cols() == x.size(), "gru_cell: input size does not match Wz");
  check(p.uz.cols() == h.size(), "gru_cell: hidden size does not match Uz");
  check(p.bz.size() == h.size(), "gru_cell: bias size does not match hidden");
  Vector<T> z = sigmoid<T>(p.wz * x + p.uz * h + p.bz);
  Vector<T> r = sigmoid<T>(p.wr * x + p.ur * h + p.br);
  Vector<T> cand = (p.wh * x + p.uh * (r.array() * h.array()).matrix() + p.bh).array().tanh();
  return ((T(1) - z.array()) * h.array() + z.array() * cand.array()).matrix();
}

template <typename T>
void net_forward(const NetworkParams<T>& p, const Matrix<T>& input, const Matrix<T>& h_prev,
                 Matrix<T>* head_out, Matrix<T>* h_new, StepTape<T>* tape) {
  check(input.rows() == p.arch.input_dim, "net_forward: input dimension mismatch");
  check(h_prev.rows() == p.arch.hidden_dim, "net_forward: hidden dimension mismatch");
  check(input.cols() == h_prev.cols(), "net_forward: batch size mismatch");

  Matrix<T> dense_out =
      ((p.dense_in.weight * input).colwise() + p.dense_in.bias).array().tanh().matrix();

  Matrix<T> z = sigmoid<T>(((p.gru.wz * dense_out + p.gru.uz * h_prev).colwise() + p.gru.bz));
  Matrix<T> r = sigmoid<T>(((p.gru.wr * dense_out + p.gru.ur * h_prev).colwise() + p.gru.br));
  Matrix<T> rh = (r.array() * h_prev.array()).matrix();
  Matrix<T> cand =
      ((p.gru.wh * dense_out + p.gru.uh * rh).colwise() + p.gru.bh).array().tanh().matrix();
  Matrix<T> hn =
      ((T(1) - z.array()) * h_prev.array() + z.array() * cand.array()).matrix();

  if (head_out != nullptr) *head_out = (p.head.weight * hn).colwise() + p.head.bias;
  if (tape != nullptr) {
    tape->input = input;
    tape->h_prev = h_prev;
    tape->dense_out = dense_out;
    tape->z = z;
    tape->r = r;
    tape->cand = cand;
    tape->h_new = hn;
  }
  if (h_new != nullptr) *h_new = std::move(hn);
}

template <typename T>
Matrix<T> net_backward(const NetworkParams<T>& p, const StepTape<T>& tape,
                       const Matrix<T>& d_head_out, const Matrix<T>& d_h_new,
                       NetworkParams<T>& grads) {
  check(d_head_out.rows() == p.arch.output_dim, "net_backward: head gradient dimension mismatch");

  // Head.
  grads.head.weight.noalias() += d_head_out * tape.h_new.transpose();
  grads.head.bias.noalias() += d_head_out.rowwise().sum();
  Matrix<T> dh_new = p.head.weight.transpose() * d_head_out;
  if (d_h_new.size() != 0) dh_new += d_h_new;

  // GRU. Activation derivatives come from the stored outputs:
  // sigmoid' = y(1-y), tanh' = 1-y^2.
  Matrix<T> dz = (dh_new.array() * (tape.cand.array() - tape.h_prev.array())).matrix();
  Matrix<T> dcand = (dh_new.array() * tape.z.array()).matrix();
  Matrix<T> dh_prev = (dh_new.array() * (T(1) - tape.z.array())).matrix();

  Matrix<T> da_h = (dcand.array() * (T(1) - tape.cand.array().square())).matrix();
  Matrix<T> rh = (tape.r.array() * tape.h_prev.array()).matrix();
  grads.gru.wh.noalias() += da_h * tape.dense_out.transpose();
  grads.gru.uh.noalias() += da_h * rh.transpose();
  grads.gru.bh.noalias() += da_h.rowwise().sum();
  Matrix<T> drh = p.gru.uh.transpose() * da_h;
  Matrix<T> dr = (drh.array() * tape.h_prev.array()).matrix();
  dh_prev += (drh.array() * tape.r.array()).matrix();

  Matrix<T> da_r = (dr.array() * tape.r.array() * (T(1) - tape.r.array())).matrix();
  grads.gru.wr.noalias() += da_r * tape.dense_out.transpose();
  grads.gru.ur.noalias() += da_r * tape.h_prev.transpose();
  grads.gru.br.noalias() += da_r.rowwise().sum();
  dh_prev += p.gru.ur.transpose() * da_r;

  Matrix<T> da_z = (dz.array() * tape.z.array() * (T(1) - tape.z.array())).matrix();
  grads.gru.wz.noalias() += da_z * tape.dense_out.transpose();
  grads.gru.uz.noalias() += da_z * tape.h_prev.transpose();
  grads.gru.bz.noalias() += da_z.rowwise().sum();
  dh_prev += p.gru.uz.transpose() * da_z;

  Matrix<T> dx = p.gru.wz.transpose() * da_z + p.gru.wr.transpose() * da_r +
                 p.gru.wh.transpose() * da_h;

  // Input dense layer.
  Matrix<T> d_pre = (dx.array() * (T(1) - tape.dense_out.array().square())).matrix();
  grads.dense_in.weight.noalias() += d_pre * tape.input.transpose();
  grads.dense_in.bias.noalias() += d_pre.rowwise().sum();

  return dh_prev;
}

template <typename T>
Matrix<T> softmax_columns(const Matrix<T>& logits) {
  Matrix<T> out(logits.rows(), logits.cols());
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    Vector<T> col = logits.col(c);
    col.array() -= col.maxCoeff();
    Vector<T> e = col.array().exp().matrix();
    out.col(c) = e / e.sum();
  }
  return out;
}

template <typename T>
std::pair<Vector<T>, Vector<T>> actor_forward(const NetworkParams<T>& p, const Vector<T>& obs,
                                              const Vector<T>& hidden) {
  Matrix<T> logits, hn;
  net_forward<T>(p, obs, hidden, &logits, &hn);
  Matrix<T> probs = softmax_columns<T>(logits);
  return {Vector<T>(probs.col(0)), Vector<T>(hn.col(0))};
}

template <typename T>
std::pair<T, Vector<T>> critic_forward(const NetworkParams<T>& p, const Vector<T>& joint_obs,
                                       const Vector<T>& hidden) {
  check(p.arch.output_dim == 1, "critic_forward: critic head must be scalar");
  Matrix<T> value, hn;
  net_forward<T>(p, joint_obs, hidden, &value, &hn);
  return {value(0, 0), Vector<T>(hn.col(0))};
}

namespace {

template <typename T>
void check_distribution(const Vector<T>& probabilities) {
  if (probabilities.size() != kNumActions) {
    throw DistributionError("action distribution must have 5 entries");
  }
  T sum = 0;
  for (Eigen::Index i = 0; i < probabilities.size(); ++i) {
    if (probabilities[i] < T(0)) throw DistributionError("negative action probability");
    sum += probabilities[i];
  }
  if (std::abs(static_cast<double>(sum) - 1.0) > 1e-6) {
    throw DistributionError("action probabilities do not sum to 1");
  }
}

}  // namespace

template <typename T>
Action sample_action(const Vector<T>& probabilities, Rng& rng) {
  check_distribution(probabilities);
  const double u = rng.next_double();
  double acc = 0.0;
  for (int i = 0; i < kNumActions; ++i) {
    acc += static_cast<double>(probabilities[i]);
    if (u < acc) return static_cast<Action>(i);
  }
  return static_cast<Action>(kNumActions - 1);
}

template <typename T>
Action greedy_action(const Vector<T>& probabilities) {
  check_distribution(probabilities);
  int best = 0;
  for (int i = 1; i < kNumActions; ++i) {
    if (probabilities[i] > probabilities[best]) best = i;
  }
  return static_cast<Action>(best);
}

template <typename T>
NetworkParams<T> init_network(Rng& rng, const ArchDescriptor& arch, double head_gain) {
  check(arch.input_dim > 0 && arch.dense_dim > 0 && arch.hidden_dim > 0 && arch.output_dim > 0,
        "init_network: all dimensions must be positive");
  NetworkParams<T> p;
  p.arch = arch;
  const double root2 = std::sqrt(2.0);
  p.dense_in.weight = orthogonal_matrix(rng, arch.dense_dim, arch.input_dim, root2).cast<T>();
  p.dense_in.bias = Vector<T>::Zero(arch.dense_dim);
  auto gru_mat = [&](int rows, int cols) {
    return Matrix<T>(orthogonal_matrix(rng, rows, cols, 1.0).cast<T>());
  };
  p.gru.wz = gru_mat(arch.hidden_dim, arch.dense_dim);
  p.gru.uz = gru_mat(arch.hidden_dim, arch.hidden_dim);
  p.gru.bz = Vector<T>::Zero(arch.hidden_dim);
  p.gru.wr = gru_mat(arch.hidden_dim, arch.dense_dim);
  p.gru.ur = gru_mat(arch.hidden_dim, arch.hidden_dim);
  p.gru.br = Vector<T>::Zero(arch.hidden_dim);
  p.gru.wh = gru_mat(arch.hidden_dim, arch.dense_dim);
  p.gru.uh = gru_mat(arch.hidden_dim, arch.hidden_dim);
  p.gru.bh = Vector<T>::Zero(arch.hidden_dim);
  p.head.weight = orthogonal_matrix(rng, arch.output_dim, arch.hidden_dim, head_gain).cast<T>();
  p.head.bias = Vector<T>::Zero(arch.output_dim);
  return p;
}

template <typename T>
PolicyParams<T> init_policy(Rng& rng, const ArchDescriptor& actor_arch,
                            const ArchDescriptor& critic_arch) {
  check(actor_arch.output_dim == kNumActions, "init_policy: actor head must emit 5 logits");
  check(critic_arch.output_dim == 1, "init_policy: critic head must be scalar");
  PolicyParams<T> p;
  p.actor = init_network<T>(rng, actor_arch, 0.01);
  p.critic = init_network<T>(rng, critic_arch, 1.0);
  return p;
}

template <typename T>
NetworkParams<T> zeros_like(const NetworkParams<T>& p) {
  NetworkParams<T> z;
  z.arch = p.arch;
  const int in = p.arch.input_dim, d = p.arch.dense_dim, h = p.arch.hidden_dim,
            out = p.arch.output_dim;
  z.dense_in.weight = Matrix<T>::Zero(d, in);
  z.dense_in.bias = Vector<T>::Zero(d);
  z.gru.wz = Matrix<T>::Zero(h, d);
  z.gru.uz = Matrix<T>::Zero(h, h);
  z.gru.bz = Vector<T>::Zero(h);
  z.gru.wr = Matrix<T>::Zero(h, d);
  z.gru.ur = Matrix<T>::Zero(h, h);
  z.gru.br = Vector<T>::Zero(h);
  z.gru.wh = Matrix<T>::Zero(h, d);
  z.gru.uh = Matrix<T>::Zero(h, h);
  z.gru.bh = Vector<T>::Zero(h);
  z.head.weight = Matrix<T>::Zero(out, h);
  z.head.bias = Vector<T>::Zero(out);
  return z;
}

template <typename T>
PolicyParams<T> zeros_like(const PolicyParams<T>& p) {
  return {zeros_like(p.actor), zeros_like(p.critic)};
}

template <typename To, typename From>
NetworkParams<To> cast_network(const NetworkParams<From>& p) {
  NetworkParams<To> out;
  out.arch = p.arch;
  out.dense_in.weight = p.dense_in.weight.template cast<To>();
  out.dense_in.bias = p.dense_in.bias.template cast<To>();
  out.gru.wz = p.gru.wz.template cast<To>();
  out.gru.uz = p.gru.uz.template cast<To>();
  out.gru.bz = p.gru.bz.template cast<To>();
  out.gru.wr = p.gru.wr.template cast<To>();
  out.gru.ur = p.gru.ur.template cast<To>();
  out.gru.br = p.gru.br.template cast<To>();
  out.gru.wh = p.gru.wh.template cast<To>();
  out.gru.uh = p.gru.uh.template cast<To>();
  out.gru.bh = p.gru.bh.template cast<To>();
  out.head.weight = p.head.weight.template cast<To>();
  out.head.bias = p.head.bias.template cast<To>();
  return out;
}

template <typename To, typename From>
PolicyParams<To> cast_policy(const PolicyParams<From>& p) {
  return {cast_network<To>(p.actor), cast_network<To>(p.critic)};
}

#define SKILLGRID_INSTANTIATE(T)                                                                 \
  template struct NetworkParams<T>;                                                             \
  template Vector<T> gru_cell<T>(const GruParams<T>&, const Vector<T>&, const Vector<T>&);      \
  template void net_forward<T>(const NetworkParams<T>&, const Matrix<T>&, const Matrix<T>&,     \
                               Matrix<T>*, Matrix<T>*, StepTape<T>*);                           \
  template Matrix<T> net_backward<T>(const NetworkParams<T>&, const StepTape<T>&,               \
                                     const Matrix<T>&, const Matrix<T>&, NetworkParams<T>&);    \
  template Matrix<T> softmax_columns<T>(const Matrix<T>&);                                      \
  template std::pair<Vector<T>, Vector<T>> actor_forward<T>(const NetworkParams<T>&,            \
                                                            const Vector<T>&, const Vector<T>&);\
  template std::pair<T, Vector<T>> critic_forward<T>(const NetworkParams<T>&, const Vector<T>&, \
                                                     const Vector<T>&);                         \
  template Action sample_action<T>(const Vector<T>&, Rng&);                                     \
  template Action greedy_action<T>(const Vector<T>&);                                           \
  template NetworkParams<T> init_network<T>(Rng&, const ArchDescriptor&, double);               \
  template PolicyParams<T> init_policy<T>(Rng&, const ArchDescriptor&, const ArchDescriptor&);  \
  template NetworkParams<T> zeros_like<T>(const NetworkParams<T>&);                             \
  template PolicyParams<T> zeros_like<T>(const PolicyParams<T>&);

SKILLGRID_INSTANTIATE(float)
SKILLGRID_INSTANTIATE(double)
#undef SKILLGRID_INSTANTIATE

template NetworkParams<float> cast_network<float, double>(const NetworkParams<double>&);
template NetworkParams<double> cast_network<double, float>(const NetworkParams<float>&);
template NetworkParams<float> cast_network<float, float>(const NetworkParams<float>&);
template NetworkParams<double> cast_network<double, double>(const NetworkParams<double>&);
template PolicyParams<float> cast_policy<float, double>(const PolicyParams<double>&);
template PolicyParams<double> cast_policy<double, float>(const PolicyParams<float>&);
template PolicyParams<float> cast_policy<float, float>(const PolicyParams<float>&);
template PolicyParams<double> cast_policy<double, double>(const PolicyParams<double>&);

}  // namespace skillgrid

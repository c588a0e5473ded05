#include <cmath>

#include "doctest.h"
#include "scalar_net_oracle.hpp"
#include "skillgrid/error.hpp"
#include "skillgrid/nets.hpp"

using namespace skillgrid;

namespace {

template <typename T>
Matrix<T> mat(int rows, int cols, std::initializer_list<double> values) {
  Matrix<T> m(rows, cols);
  auto it = values.begin();
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = static_cast<T>(*it++);
  }
  return m;
}

template <typename T>
Vector<T> vec(std::initializer_list<double> values) {
  Vector<T> v(static_cast<Eigen::Index>(values.size()));
  auto it = values.begin();
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = static_cast<T>(*it++);
  return v;
}

GruParams<double> zero_gru(int in, int hidden) {
  GruParams<double> g;
  g.wz = g.wr = g.wh = Matrix<double>::Zero(hidden, in);
  g.uz = g.ur = g.uh = Matrix<double>::Zero(hidden, hidden);
  g.bz = g.br = g.bh = Vector<double>::Zero(hidden);
  return g;
}

// Committed test vector, reference output computed by an independent NumPy
// recomputation of the gate equations (seed 314159, 4-decimal parameters).
GruParams<double> fixture_gru() {
  GruParams<double> g;
  g.wz = mat<double>(2, 2, {0.6358, 0.1021, -0.1604, -0.8026});
  g.uz = mat<double>(2, 2, {0.622, 0.9347, -0.8036, 0.6037});
  g.bz = vec<double>({-0.1443, 0.3834});
  g.wr = mat<double>(2, 2, {0.2098, 0.1695, -0.0138, -0.0465});
  g.ur = mat<double>(2, 2, {-0.4721, -0.3808, 0.8159, -0.63});
  g.br = vec<double>({-0.941, -0.7341});
  g.wh = mat<double>(2, 2, {-0.6235, -0.8232, 0.7484, 0.2848});
  g.uh = mat<double>(2, 2, {0.7057, 0.0661, 0.7588, -0.4132});
  g.bh = vec<double>({-0.2952, 0.3642});
  return g;
}

NetworkParams<double> fixture_net(bool actor) {
  NetworkParams<double> p;
  p.arch = {3, 3, 2, actor ? 5 : 1};
  p.dense_in.weight = mat<double>(
      3, 3, {-0.7386, -0.5881, -0.5397, -0.3344, 0.382, -0.4391, 0.6518, -0.6616, -0.7207});
  p.dense_in.bias = vec<double>({0.5518, -0.5222, 0.2608});
  p.gru.wz = mat<double>(2, 3, {0.8921, -0.4731, -0.5069, 0.663, 0.4429, -0.2685});
  p.gru.uz = mat<double>(2, 2, {0.8196, 0.9395, 0.687, 0.0985});
  p.gru.bz = vec<double>({-0.6503, 0.958});
  p.gru.wr = mat<double>(2, 3, {0.2515, 0.0098, 0.7456, 0.1385, -0.6742, -0.7895});
  p.gru.ur = mat<double>(2, 2, {0.6783, 0.773, 0.9289, 0.0145});
  p.gru.br = vec<double>({-0.2695, 0.8519});
  p.gru.wh = mat<double>(2, 3, {-0.3304, 0.4593, 0.933, -0.235, 0.1903, -0.7148});
  p.gru.uh = mat<double>(2, 2, {0.7111, 0.0724, -0.6324, -0.6989});
  p.gru.bh = vec<double>({0.3876, 0.6418});
  if (actor) {
    p.head.weight = mat<double>(5, 2, {-0.6738, 0.835, 0.6363, 0.0286, 0.6874, -0.2102,
                                       -0.8538, -0.8488, 0.8124, -0.9409});
    p.head.bias = vec<double>({-0.1096, -0.0129, -0.9568, 0.856, -0.1797});
  } else {
    p.head.weight = mat<double>(1, 2, {0.9999, 0.2389});
    p.head.bias = vec<double>({-0.6647});
  }
  return p;
}

const Vector<double> kFixtureObs = vec<double>({0.974, 0.9552, 0.6935});
const Vector<double> kFixtureHidden = vec<double>({0.4248, 0.7412});

}  // namespace

TEST_CASE("gru cell trivial cases") {
  SUBCASE("all-zero parameters keep a zero hidden state") {
    GruParams<double> g = zero_gru(3, 2);
    const Vector<double> h = gru_cell(g, vec<double>({0.5, -2.0, 7.0}), vec<double>({0, 0}));
    CHECK(h.norm() == 0.0);
  }
  SUBCASE("saturated update gate copies the candidate") {
    // 1-dim cell with a huge update-gate bias: z -> 1, so h' = candidate.
    GruParams<double> g = zero_gru(1, 1);
    g.bz[0] = 50.0;
    g.wh(0, 0) = 1.3;
    const double x = 0.4;
    const Vector<double> h =
        gru_cell(g, vec<double>({x}), vec<double>({0.9}));
    CHECK(h[0] == doctest::Approx(std::tanh(1.3 * 0.4)).epsilon(1e-12));
  }
  SUBCASE("committed fixture matches the independent recomputation") {
    const GruParams<double> g = fixture_gru();
    const Vector<double> h =
        gru_cell(g, vec<double>({0.9278, -0.0918}), vec<double>({0.0243, -0.0686}));
    CHECK(std::abs(h[0] - -0.3837186975257897) < 1e-6);
    CHECK(std::abs(h[1] - 0.40845382001328356) < 1e-6);
  }
  SUBCASE("shape mismatches are rejected") {
    GruParams<double> g = zero_gru(3, 2);
    CHECK_THROWS_AS(gru_cell(g, vec<double>({1.0}), vec<double>({0, 0})), DimensionError);
    CHECK_THROWS_AS(gru_cell(g, vec<double>({1, 2, 3}), vec<double>({0})), DimensionError);
  }
}

TEST_CASE("actor forward") {
  SUBCASE("zero head gives the uniform distribution") {
    Rng rng(5);
    NetworkParams<double> p = init_network<double>(rng, {7, 4, 3, kNumActions}, 1.0);
    p.head.weight.setZero();
    p.head.bias.setZero();
    auto [probs, h] = actor_forward<double>(p, Vector<double>::Random(7),
                                            Vector<double>::Zero(3));
    for (int i = 0; i < kNumActions; ++i) CHECK(probs[i] == doctest::Approx(0.2).epsilon(1e-12));
  }
  SUBCASE("probabilities sum to one for random parameters") {
    Rng rng(6);
    for (int trial = 0; trial < 20; ++trial) {
      NetworkParams<double> p = init_network<double>(rng, {7, 4, 3, kNumActions}, 1.0);
      auto [probs, h] = actor_forward<double>(p, Vector<double>::Random(7),
                                              Vector<double>::Random(3));
      CHECK(std::abs(probs.sum() - 1.0) < 1e-9);
      CHECK(probs.minCoeff() >= 0.0);
    }
  }
  SUBCASE("committed fixture matches the independent recomputation") {
    const NetworkParams<double> p = fixture_net(true);
    auto [probs, h] = actor_forward<double>(p, kFixtureObs, kFixtureHidden);
    const double expected_probs[5] = {0.21635821654294862, 0.27326212433112645,
                                      0.09752146649307826, 0.25195577227923704,
                                      0.16090242035360963};
    for (int i = 0; i < 5; ++i) CHECK(std::abs(probs[i] - expected_probs[i]) < 1e-6);
    CHECK(std::abs(h[0] - 0.376916469536) < 1e-6);
    CHECK(std::abs(h[1] - 0.44271107861125814) < 1e-6);
  }
}

TEST_CASE("critic forward") {
  SUBCASE("all-zero parameters give value zero") {
    NetworkParams<double> p;
    p.arch = {6, 4, 3, 1};
    p = zeros_like(p);
    auto [value, h] = critic_forward<double>(p, Vector<double>::Random(6),
                                             Vector<double>::Zero(3));
    CHECK(value == 0.0);
  }
  SUBCASE("inputs on zero-weight columns cannot change the value") {
    Rng rng(7);
    NetworkParams<double> p = init_network<double>(rng, {6, 4, 3, 1}, 1.0);
    p.dense_in.weight.col(5).setZero();
    Vector<double> a = Vector<double>::Random(6);
    Vector<double> b = a;
    b[5] += 100.0;
    auto [va, ha] = critic_forward<double>(p, a, Vector<double>::Zero(3));
    auto [vb, hb] = critic_forward<double>(p, b, Vector<double>::Zero(3));
    CHECK(va == doctest::Approx(vb).epsilon(1e-14));
  }
  SUBCASE("committed fixture matches the independent recomputation") {
    const NetworkParams<double> p = fixture_net(false);
    auto [value, h] = critic_forward<double>(p, kFixtureObs, kFixtureHidden);
    CHECK(std::abs(value - -0.182057545430724) < 1e-6);
  }
}

TEST_CASE("forward agrees with the scalar oracle on random networks") {
  Rng rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    NetworkParams<double> p = init_network<double>(rng, {5, 4, 3, kNumActions}, 0.7);
    test::ScalarNet oracle = test::to_scalar(p);
    Vector<double> x = Vector<double>::Random(5);
    Vector<double> h = Vector<double>::Random(3);
    auto [probs, hn] = actor_forward<double>(p, x, h);
    auto [ref_logits, ref_h] = oracle.step(test::to_vec(x), test::to_vec(h));
    const test::Vec ref_probs = test::softmax(ref_logits);
    for (int i = 0; i < kNumActions; ++i) CHECK(std::abs(probs[i] - ref_probs[i]) < 1e-6);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(hn[i] - ref_h[i]) < 1e-6);
  }
}

TEST_CASE("hidden state stays inside (-1, 1) after an update from zero") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    NetworkParams<double> p = init_network<double>(rng, {4, 4, 6, kNumActions}, 1.0);
    Vector<double> h = Vector<double>::Zero(6);
    for (int t = 0; t < 5; ++t) {
      auto [probs, hn] = actor_forward<double>(p, 3.0 * Vector<double>::Random(4), h);
      h = hn;
      CHECK(h.maxCoeff() < 1.0);
      CHECK(h.minCoeff() > -1.0);
    }
  }
}

TEST_CASE("forward determinism") {
  Rng rng(12);
  NetworkParams<float> p = init_network<float>(rng, {5, 8, 8, kNumActions}, 0.01);
  Vector<float> x = Vector<float>::Random(5);
  Vector<float> h = Vector<float>::Random(8);
  auto [p1, h1] = actor_forward<float>(p, x, h);
  auto [p2, h2] = actor_forward<float>(p, x, h);
  CHECK((p1 - p2).norm() == 0.0f);
  CHECK((h1 - h2).norm() == 0.0f);
}

TEST_CASE("sampling and greedy selection") {
  SUBCASE("degenerate distribution") {
    Rng rng(1);
    const Vector<double> d = vec<double>({1, 0, 0, 0, 0});
    CHECK(sample_action<double>(d, rng) == Action::Up);
    CHECK(greedy_action<double>(d) == Action::Up);
  }
  SUBCASE("greedy breaks ties toward the lowest index") {
    const Vector<double> uniform = vec<double>({0.2, 0.2, 0.2, 0.2, 0.2});
    CHECK(greedy_action<double>(uniform) == Action::Up);
    const Vector<double> pair = vec<double>({0.1, 0.3, 0.3, 0.2, 0.1});
    CHECK(greedy_action<double>(pair) == Action::Down);
  }
  SUBCASE("invalid distributions are rejected") {
    Rng rng(1);
    CHECK_THROWS_AS(sample_action<double>(vec<double>({0.5, 0.5, 0.5, 0, 0}), rng),
                    DistributionError);
    CHECK_THROWS_AS(sample_action<double>(vec<double>({1.2, -0.2, 0, 0, 0}), rng),
                    DistributionError);
    CHECK_THROWS_AS(greedy_action<double>(vec<double>({0.5, 0.5})), DistributionError);
  }
  SUBCASE("empirical frequencies track the distribution") {
    Rng rng(20240);
    const Vector<double> d = vec<double>({0.5, 0.2, 0.1, 0.1, 0.1});
    int counts[5] = {0, 0, 0, 0, 0};
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) counts[static_cast<int>(sample_action<double>(d, rng))]++;
    for (int i = 0; i < 5; ++i) {
      CHECK(std::abs(static_cast<double>(counts[i]) / draws - d[i]) < 0.01);
    }
  }
}

TEST_CASE("initialization") {
  SUBCASE("deterministic per seed") {
    Rng a(42), b(42);
    const ArchDescriptor arch{29, 16, 16, kNumActions};
    PolicyParams<float> pa = init_policy<float>(a, arch, {87, 16, 16, 1});
    PolicyParams<float> pb = init_policy<float>(b, arch, {87, 16, 16, 1});
    bool equal = true;
    visit_tensors(pa.actor, [&](const char* name, const auto& t) {
      visit_tensors(pb.actor, [&](const char* other, const auto& u) {
        if (std::string(name) == other && (t - u).norm() != 0) equal = false;
      });
    });
    CHECK(equal);
  }
  SUBCASE("small-gain actor head starts near uniform") {
    Rng rng(43);
    NetworkParams<double> p = init_network<double>(rng, {29, 64, 64, kNumActions}, 0.01);
    Rng obs_rng(44);
    for (int trial = 0; trial < 100; ++trial) {
      Vector<double> obs(29);
      for (int i = 0; i < 29; ++i) obs[i] = obs_rng.next_double() * 2.0 - 1.0;
      auto [probs, h] = actor_forward<double>(p, obs, Vector<double>::Zero(64));
      CHECK(probs.maxCoeff() - probs.minCoeff() < 0.05);
    }
  }
  SUBCASE("parameter count matches the closed form") {
    Rng rng(45);
    const int in = 29, d = 16, h = 8, out = kNumActions;
    NetworkParams<float> p = init_network<float>(rng, {in, d, h, out}, 0.01);
    const std::int64_t expected = (d * in + d) + 3 * (h * d + h * h + h) + (out * h + out);
    CHECK(p.parameter_count() == expected);
  }
  SUBCASE("orthogonal columns") {
    Rng rng(46);
    NetworkParams<double> p = init_network<double>(rng, {12, 8, 8, kNumActions}, 1.0);
    Matrix<double> gram = p.gru.uz.transpose() * p.gru.uz;
    CHECK((gram - Matrix<double>::Identity(8, 8)).norm() < 1e-9);
  }
}

namespace {

// Scalar loss over a short recorded sequence: sum of fixed random
// coefficients times every head output, so dL/d(output) is exact.
struct SequenceLoss {
  std::vector<Matrix<double>> inputs;
  std::vector<Matrix<double>> coeffs;

  double eval(const NetworkParams<double>& p) const {
    Matrix<double> h = Matrix<double>::Zero(p.arch.hidden_dim, inputs[0].cols());
    double loss = 0.0;
    for (std::size_t t = 0; t < inputs.size(); ++t) {
      Matrix<double> out, hn;
      net_forward<double>(p, inputs[t], h, &out, &hn, nullptr);
      loss += (coeffs[t].array() * out.array()).sum();
      h = hn;
    }
    return loss;
  }

  NetworkParams<double> analytic_grads(const NetworkParams<double>& p) const {
    std::vector<StepTape<double>> tapes(inputs.size());
    Matrix<double> h = Matrix<double>::Zero(p.arch.hidden_dim, inputs[0].cols());
    for (std::size_t t = 0; t < inputs.size(); ++t) {
      Matrix<double> out, hn;
      net_forward<double>(p, inputs[t], h, &out, &hn, &tapes[t]);
      h = hn;
    }
    NetworkParams<double> grads = zeros_like(p);
    Matrix<double> dh = Matrix<double>::Zero(p.arch.hidden_dim, inputs[0].cols());
    for (int t = static_cast<int>(inputs.size()) - 1; t >= 0; --t) {
      dh = net_backward<double>(p, tapes[t], coeffs[t], dh, grads);
    }
    return grads;
  }
};

}  // namespace

TEST_CASE("zero output gradient gives zero parameter gradients") {
  Rng rng(50);
  NetworkParams<double> p = init_network<double>(rng, {4, 3, 3, kNumActions}, 1.0);
  StepTape<double> tape;
  Matrix<double> out, hn;
  net_forward<double>(p, Matrix<double>::Random(4, 2), Matrix<double>::Random(3, 2), &out, &hn,
                      &tape);
  NetworkParams<double> grads = zeros_like(p);
  net_backward<double>(p, tape, Matrix<double>::Zero(kNumActions, 2),
                       Matrix<double>::Zero(3, 2), grads);
  double total = 0.0;
  visit_tensors(grads, [&](const char*, const auto& t) { total += t.cwiseAbs().sum(); });
  CHECK(total == 0.0);
}

TEST_CASE("log-probability gradient w.r.t. the head bias is onehot minus probs") {
  Rng rng(51);
  NetworkParams<double> p = init_network<double>(rng, {4, 3, 3, kNumActions}, 0.7);
  const Vector<double> obs = Vector<double>::Random(4);
  const Vector<double> hidden = Vector<double>::Random(3);
  const int action = 2;

  auto log_prob = [&](const NetworkParams<double>& net) {
    auto [probs, h] = actor_forward<double>(net, obs, hidden);
    return std::log(probs[action]);
  };

  auto [probs, h] = actor_forward<double>(p, obs, hidden);
  const double eps = 1e-6;
  for (int k = 0; k < kNumActions; ++k) {
    NetworkParams<double> plus = p, minus = p;
    plus.head.bias[k] += eps;
    minus.head.bias[k] -= eps;
    const double fd = (log_prob(plus) - log_prob(minus)) / (2 * eps);
    const double expected = (k == action ? 1.0 : 0.0) - probs[k];
    CHECK(std::abs(fd - expected) < 1e-7);
  }
}

TEST_CASE("analytic gradients match central finite differences") {
  // Ten seeded small networks, double precision, step 1e-5, relative error
  // under 1e-4 elementwise, with gradients flowing through time.
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed * 7919 + 13);
    NetworkParams<double> p = init_network<double>(rng, {3, 4, 5, 3}, 0.9);

    SequenceLoss loss;
    const int steps = 4, batch = 2;
    for (int t = 0; t < steps; ++t) {
      Matrix<double> x(3, batch), c(3, batch);
      for (int i = 0; i < 3; ++i) {
        for (int b = 0; b < batch; ++b) {
          x(i, b) = rng.next_double() * 2.0 - 1.0;
          c(i, b) = rng.next_double() * 2.0 - 1.0;
        }
      }
      loss.inputs.push_back(x);
      loss.coeffs.push_back(c);
    }

    NetworkParams<double> analytic = loss.analytic_grads(p);
    const double step = 1e-5;
    double worst = 0.0;
    visit_tensors(p, [&](const char* name, auto& tensor) {
      visit_tensors(analytic, [&](const char* other, const auto& grad) {
        if (std::string(name) != other) return;
        for (Eigen::Index r = 0; r < tensor.rows(); ++r) {
          for (Eigen::Index c = 0; c < tensor.cols(); ++c) {
            const double original = tensor(r, c);
            tensor(r, c) = original + step;
            const double hi = loss.eval(p);
            tensor(r, c) = original - step;
            const double lo = loss.eval(p);
            tensor(r, c) = original;
            const double fd = (hi - lo) / (2 * step);
            const double a = grad(r, c);
            const double rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-6});
            worst = std::max(worst, rel);
          }
        }
      });
    });
    CHECK(worst < 1e-4);
  }
}

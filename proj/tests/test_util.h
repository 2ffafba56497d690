#ifndef POSTAVG_TESTS_TEST_UTIL_H_
#define POSTAVG_TESTS_TEST_UTIL_H_

#include <initializer_list>
#include <random>
#include <vector>

#include "postavg/dataset.h"
#include "postavg/nn.h"

namespace testutil {

using postavg::Activation;
using postavg::DenseLayer;
using postavg::Matrix;
using postavg::Network;
using postavg::Vector;

inline Vector Vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

inline DenseLayer Layer(const Matrix& w, Activation act, const Vector& b = Vector()) {
  DenseLayer l;
  l.weights = w;
  l.biases = b.size() ? b : Vector::Zero(w.rows());
  l.activation = act;
  return l;
}

// Seeded random network; dims = {in, hidden..., out}. With `biased`, biases
// are drawn from N(0, 0.3).
inline Network RandomNet(std::vector<int> dims, std::uint64_t seed, bool biased = false) {
  Network base = Network::Random(dims, seed);
  if (!biased) return base;
  std::vector<DenseLayer> layers = base.layers();
  std::mt19937_64 rng(seed ^ 0x5eedULL);
  std::normal_distribution<double> g(0.0, 0.3);
  for (DenseLayer& l : layers) {
    for (Eigen::Index i = 0; i < l.biases.size(); ++i) l.biases[i] = g(rng);
  }
  return Network(layers);
}

inline Vector UniformPoint(int dim, std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vector x(dim);
  for (int i = 0; i < dim; ++i) x[i] = u(rng);
  return x;
}

struct MoonsFixture {
  postavg::LabeledDataset train;
  postavg::LabeledDataset test;
  Network net;
};

// The seeded 2-32-2 moons model shared by the attack, defense and harness
// tests: 500 samples, noise 0.1, 60/40 split, 200 epochs.
inline const MoonsFixture& Moons() {
  static const MoonsFixture fixture = [] {
    postavg::DatasetSpec spec;
    spec.kind = postavg::DatasetKind::kMoons;
    spec.size = 500;
    spec.noise = 0.1;
    spec.seed = 1;
    auto [train, test] = postavg::SplitDataset(postavg::GenerateDataset(spec), 0.6, 1);
    postavg::SgdConfig sgd;
    sgd.seed = 2;
    const int dims[] = {2, 32, 2};
    Network net = postavg::Train(Network::Random(dims, 2), train, sgd);
    return MoonsFixture{std::move(train), std::move(test), std::move(net)};
  }();
  return fixture;
}

}  // namespace testutil

#endif  // POSTAVG_TESTS_TEST_UTIL_H_

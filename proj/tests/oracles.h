// Independent reference implementations used only by the tests. Nothing here
// calls into the library code it checks, apart from reading Network weights.
#ifndef POSTAVG_TESTS_ORACLES_H_
#define POSTAVG_TESTS_ORACLES_H_

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <vector>

#include "postavg/nn.h"

namespace oracle {

using Complex = std::complex<double>;
using postavg::Network;
using postavg::Vector;

// Forward pass with explicit loops.
inline std::vector<double> NaiveLogits(const Network& net, const std::vector<double>& x) {
  std::vector<double> cur = x;
  for (const postavg::DenseLayer& layer : net.layers()) {
    std::vector<double> next(static_cast<std::size_t>(layer.out_dim()), 0.0);
    for (int o = 0; o < layer.out_dim(); ++o) {
      double s = layer.biases[o];
      for (int i = 0; i < layer.in_dim(); ++i) s += layer.weights(o, i) * cur[static_cast<std::size_t>(i)];
      next[static_cast<std::size_t>(o)] =
          layer.activation == postavg::Activation::kRelu ? (s > 0.0 ? s : 0.0) : s;
    }
    cur = std::move(next);
  }
  return cur;
}

inline Vector CentralDifference(const std::function<double(const Vector&)>& f, const Vector& x, double h) {
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vector a = x, b = x;
    a[i] += h;
    b[i] -= h;
    g[i] = (f(a) - f(b)) / (2.0 * h);
  }
  return g;
}

// The transform of the unit-simplex indicator as the textbook sum over
// distinct nodes {0, w_1, ..., w_n}:
//   (-i/sqrt(2 pi))^n sum_r exp(-i w_r) / prod_{r' != r} (w_r' - w_r).
inline Complex PrintedSimplexSum(const std::vector<double>& omega) {
  std::vector<double> nodes = {0.0};
  nodes.insert(nodes.end(), omega.begin(), omega.end());
  const int n = static_cast<int>(omega.size());
  Complex sum = 0.0;
  for (std::size_t r = 0; r < nodes.size(); ++r) {
    Complex denom = 1.0;
    for (std::size_t q = 0; q < nodes.size(); ++q) {
      if (q != r) denom *= nodes[q] - nodes[r];
    }
    sum += std::exp(Complex(0.0, -nodes[r])) / denom;
  }
  return std::pow(Complex(0.0, -1.0 / std::sqrt(2.0 * std::numbers::pi)), n) * sum;
}

// Mean of exp(-i u.w) over the n-ball of radius r by rejection sampling.
inline double BallAverageMonteCarlo(int n, double r, const std::vector<double>& omega, long samples,
                                    std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-r, r);
  double sum = 0.0;
  long kept = 0;
  std::vector<double> p(static_cast<std::size_t>(n));
  while (kept < samples) {
    double norm2 = 0.0;
    for (double& c : p) {
      c = u(rng);
      norm2 += c * c;
    }
    if (norm2 > r * r) continue;
    double phase = 0.0;
    for (int k = 0; k < n; ++k) phase += p[static_cast<std::size_t>(k)] * omega[static_cast<std::size_t>(k)];
    sum += std::cos(phase);  // the sine part cancels by symmetry
    ++kept;
  }
  return sum / static_cast<double>(samples);
}

// Number of faces of an arrangement of lines a x + b y = c, found by collecting
// the sign vectors realized near every vertex and far out along every
// direction. Every region is either unbounded or has a vertex on its
// boundary, so this enumerates all of them.
struct Line {
  double a, b, c;
};

inline std::size_t EnumerateRegions(const std::vector<Line>& lines) {
  std::set<std::vector<bool>> seen;
  const auto signs = [&](double x, double y) {
    std::vector<bool> s;
    for (const Line& l : lines) s.push_back(l.a * x + l.b * y - l.c > 0.0);
    return s;
  };
  std::vector<std::pair<double, double>> vertices;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    for (std::size_t j = i + 1; j < lines.size(); ++j) {
      const double det = lines[i].a * lines[j].b - lines[i].b * lines[j].a;
      if (std::abs(det) < 1e-12) continue;
      vertices.emplace_back((lines[i].c * lines[j].b - lines[i].b * lines[j].c) / det,
                            (lines[i].a * lines[j].c - lines[i].c * lines[j].a) / det);
    }
  }
  double far = 10.0;
  double near = 1.0;
  for (const auto& [x, y] : vertices) far = std::max(far, 100.0 * (std::abs(x) + std::abs(y) + 1.0));
  for (const auto& [x, y] : vertices) {
    for (const Line& l : lines) {
      const double d = std::abs(l.a * x + l.b * y - l.c) / std::hypot(l.a, l.b);
      if (d > 1e-9) near = std::min(near, d);
    }
  }
  for (const auto& v1 : vertices) {
    for (const auto& v2 : vertices) {
      const double d = std::hypot(v1.first - v2.first, v1.second - v2.second);
      if (d > 1e-9) near = std::min(near, d);
    }
  }
  near *= 1e-3;
  constexpr int kAngles = 20000;
  for (int k = 0; k < kAngles; ++k) {
    const double t = 2.0 * std::numbers::pi * (k + 0.5) / kAngles;
    seen.insert(signs(far * std::cos(t), far * std::sin(t)));
    for (const auto& [x, y] : vertices) seen.insert(signs(x + near * std::cos(t), y + near * std::sin(t)));
  }
  return seen.size();
}

}  // namespace oracle

#endif  // POSTAVG_TESTS_ORACLES_H_

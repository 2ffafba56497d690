#ifndef POSTAVG_QUADRATURE_H_
#define POSTAVG_QUADRATURE_H_

#include <complex>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "postavg/nn.h"

namespace postavg {

using Complex = std::complex<double>;
using ScalarField = std::function<double(std::span<const double>)>;

enum class QuadRule { kGaussLegendre, kSimpson };

struct QuadConfig {
  QuadRule rule = QuadRule::kGaussLegendre;
  // Nodes per axis per smooth piece (Gauss-Legendre, in 8-point panels) or
  // intervals per axis per piece (Simpson).
  int resolution = 64;
  // The result is flagged unconverged when |I(2 res) - I(res)| exceeds this.
  double tolerance = 1e-10;
};

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

// Iterated integration region inside [0,1]^dim. Axis k's limits and interior
// kinks may depend on the already-fixed coordinates x_0..x_{k-1}.
struct QuadRegion {
  int dim = 1;
  std::function<Interval(int axis, std::span<const double> prefix)> limits;
  std::function<std::vector<double>(int axis, std::span<const double> prefix)> breakpoints;
};

struct QuadResult {
  Complex value;
  double error_estimate = 0.0;
  bool converged = true;
};

// Gauss-Legendre nodes and weights on [-1, 1].
void GaussLegendre(int order, std::vector<double>& nodes, std::vector<double>& weights);

// Iterated integral of g over the region at resolution res and 2*res;
// value is the finer result.
QuadResult IntegrateComplex(const std::function<Complex(std::span<const double>)>& g,
                            const QuadRegion& region, const QuadConfig& cfg);

// (2 pi)^{-n/2} int_{[0,1]^n} f(x) exp(-i w.x) dx, restricted to `region`
// when given. Requires n <= 3 and resolution >= 64 (std::invalid_argument).
QuadResult QuadratureFt(const ScalarField& f, const Vector& omega, const QuadConfig& cfg = {},
                        const QuadRegion* region = nullptr);

// Plain Monte Carlo estimate of the same transform with uniform samples in
// [0,1]^n; error_estimate is one standard error.
QuadResult MonteCarloFt(const ScalarField& f, const Vector& omega, std::int64_t samples,
                        std::uint64_t seed);

// Region {x >= 0, sum x <= 1}.
QuadRegion UnitSimplexRegion(int dim);

}  // namespace postavg

#endif  // POSTAVG_QUADRATURE_H_

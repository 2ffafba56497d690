#ifndef POSTAVG_SPECTRAL_H_
#define POSTAVG_SPECTRAL_H_

#include <complex>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "postavg/geometry.h"
#include "postavg/nn.h"
#include "postavg/quadrature.h"

namespace postavg {

using ComplexVector = Eigen::VectorXcd;

// Frequency components w_1..w_n. The extra node w_0 = 0 used by the simplex
// transform is implicit and never stored.
using FrequencyVector = Vector;

// A run of sorted nodes spanning less than this is evaluated by a Taylor
// expansion about its mean instead of the difference recursion. This covers
// confluent and nearly confluent nodes.
inline constexpr double kTaylorSpan = 1.0;

// Divided difference of g(t) = exp(-i t) over the given nodes (any order,
// repeats allowed).
Complex DividedDifferenceExp(std::span<const double> nodes);

// Unitary Fourier transform of the indicator of the unit simplex
// {x > 0, sum x < 1}:
//   S(w) = (2 pi)^{-n/2} i^n exp(-i t)[0, w_1, ..., w_n].
// Equal to (-i/sqrt(2 pi))^n sum_r exp(-i w_r) / prod_{r' != r}(w_r' - w_r)
// wherever the nodes are distinct, and continuous where they are not.
Complex SimplexSpectrum(const FrequencyVector& omega);

// dS/dw_k = (2 pi)^{-n/2} i^n exp(-i t)[0, w_1, ..., w_n, w_k].
ComplexVector SimplexSpectrumGradient(const FrequencyVector& omega);

// Transform of one normalized term:
//   G_q(w) = i |det V_q| wbar_q . grad S(V_q^T w),
// with V_q the ray matrix. Throws std::invalid_argument for a term whose
// rays are not normalized to 1 in the truncation coordinate.
Complex TermSpectrum(const SimplexTerm& term, const FrequencyVector& omega);

// Sum of TermSpectrum over the decomposition: the transform of the network
// output restricted to the unit square.
Complex NetworkSpectrum(std::span<const SimplexTerm> terms, const FrequencyVector& omega);

// Independent route: iterated Gauss-Legendre over the unit square with the
// decomposition's rays passed as kinks.
QuadResult QuadratureNetworkSpectrum(const Decomposition& decomposition,
                                     const FrequencyVector& omega, const QuadConfig& cfg = {});

// Mean of exp(-i u.w) over the n-ball of radius r:
//   Gamma(n/2 + 1) (2 / (r|w|))^{n/2} J_{n/2}(r|w|), exactly 1 at |w| = 0.
double AveragingMultiplier(int dim, double radius, double omega_norm);

// The closed form as printed alongside the ball average,
//   Gamma(n/2 + 1) / pi^{n/2} * J_{n/2}(r|w|) / (r|w|)^{n/2}.
double PrintedAveragingMultiplier(int dim, double radius, double omega_norm);

struct DecayRow {
  double omega_norm = 0.0;
  double spectrum_abs = 0.0;  // |F(w)|
  double smoothed_abs = 0.0;  // |F_C(w)| = |F(w)| * |multiplier|
  double multiplier = 1.0;
  // printed / true multiplier at this frequency (NaN where the multiplier vanishes).
  double printed_ratio = 0.0;
};

// One row per frequency, ascending by |w|.
std::vector<DecayRow> SpectrumDecayReport(std::span<const SimplexTerm> terms,
                                          std::span<const FrequencyVector> omegas, double radius);

}  // namespace postavg

#endif  // POSTAVG_SPECTRAL_H_

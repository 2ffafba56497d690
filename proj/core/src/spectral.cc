#include "postavg/spectral.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "postavg/bessel.h"

namespace postavg {
namespace {

constexpr Complex kI(0.0, 1.0);

// exp(-i t)[t_0..t_m] for nodes spanning less than kTaylorSpan:
//   exp(-i c) sum_{k >= m} (-i)^k / k! h_{k-m}(t - c),
// with h_p the complete homogeneous symmetric polynomial of degree p.
Complex ClusterDividedDifference(std::span<const double> t) {
  const std::size_t count = t.size();
  const int m = static_cast<int>(count) - 1;
  double c = 0.0;
  for (double v : t) c += v;
  c /= static_cast<double>(count);
  std::vector<double> d(count);
  for (std::size_t l = 0; l < count; ++l) d[l] = t[l] - c;

  constexpr int kTerms = 24;
  // h[p] over the variables seen so far.
  std::vector<double> h(kTerms, 0.0);
  h[0] = 1.0;
  for (std::size_t l = 0; l < count; ++l) {
    for (int p = 1; p < kTerms; ++p) h[p] += d[l] * h[p - 1];
  }
  // (-i)^k / k! for k = m.
  Complex coeff = 1.0;
  for (int k = 1; k <= m; ++k) coeff *= -kI / static_cast<double>(k);
  Complex sum = 0.0;
  for (int p = 0; p < kTerms; ++p) {
    sum += coeff * h[p];
    coeff *= -kI / static_cast<double>(m + p + 1);
  }
  return std::polar(1.0, -c) * sum;
}

double SimplexScale(int n) { return std::pow(2.0 * std::numbers::pi, -0.5 * n); }

Complex IPower(int n) {
  switch (((n % 4) + 4) % 4) {
    case 0:
      return 1.0;
    case 1:
      return kI;
    case 2:
      return -1.0;
    default:
      return -kI;
  }
}

}  // namespace

Complex DividedDifferenceExp(std::span<const double> nodes) {
  if (nodes.empty()) throw std::invalid_argument("divided difference needs at least one node");
  std::vector<double> t(nodes.begin(), nodes.end());
  std::sort(t.begin(), t.end());
  const std::size_t count = t.size();
  // table[i] holds the divided difference over t[i..i+len].
  std::vector<Complex> table(count);
  for (std::size_t i = 0; i < count; ++i) table[i] = std::polar(1.0, -t[i]);
  for (std::size_t len = 1; len < count; ++len) {
    for (std::size_t i = 0; i + len < count; ++i) {
      const std::size_t j = i + len;
      const double gap = t[j] - t[i];
      if (gap < kTaylorSpan) {
        table[i] = ClusterDividedDifference(std::span<const double>(t.data() + i, len + 1));
      } else {
        table[i] = (table[i + 1] - table[i]) / gap;
      }
    }
  }
  return table[0];
}

Complex SimplexSpectrum(const FrequencyVector& omega) {
  const int n = static_cast<int>(omega.size());
  if (n < 1) throw std::invalid_argument("frequency vector must be non-empty");
  std::vector<double> nodes(static_cast<std::size_t>(n) + 1, 0.0);
  for (int k = 0; k < n; ++k) nodes[static_cast<std::size_t>(k) + 1] = omega[k];
  return SimplexScale(n) * IPower(n) * DividedDifferenceExp(nodes);
}

ComplexVector SimplexSpectrumGradient(const FrequencyVector& omega) {
  const int n = static_cast<int>(omega.size());
  if (n < 1) throw std::invalid_argument("frequency vector must be non-empty");
  std::vector<double> nodes(static_cast<std::size_t>(n) + 2, 0.0);
  for (int k = 0; k < n; ++k) nodes[static_cast<std::size_t>(k) + 1] = omega[k];
  const Complex scale = SimplexScale(n) * IPower(n);
  ComplexVector grad(n);
  for (int k = 0; k < n; ++k) {
    nodes.back() = omega[k];
    grad[k] = scale * DividedDifferenceExp(nodes);
  }
  return grad;
}

Complex TermSpectrum(const SimplexTerm& term, const FrequencyVector& omega) {
  if (omega.size() != 2) throw std::invalid_argument("term spectra are two-dimensional");
  if (!term.normalized(1e-9)) {
    throw std::invalid_argument("term rays must be normalized in the truncation coordinate");
  }
  const Vector omega_bar = term.rays.transpose() * omega;
  const ComplexVector grad = SimplexSpectrumGradient(omega_bar);
  const Complex dot = term.weight_bar[0] * grad[0] + term.weight_bar[1] * grad[1];
  return kI * std::abs(term.rays.determinant()) * dot;
}

Complex NetworkSpectrum(std::span<const SimplexTerm> terms, const FrequencyVector& omega) {
  Complex sum = 0.0;
  for (const SimplexTerm& t : terms) sum += TermSpectrum(t, omega);
  return sum;
}

QuadResult QuadratureNetworkSpectrum(const Decomposition& decomposition,
                                     const FrequencyVector& omega, const QuadConfig& cfg) {
  std::vector<double> slopes;  // tan of every interior ray
  for (double a : decomposition.ray_angles) {
    if (a > 0.0 && a < std::numbers::pi / 2.0) slopes.push_back(std::tan(a));
  }
  QuadRegion region;
  region.dim = 2;
  region.breakpoints = [slopes](int axis, std::span<const double> prefix) {
    std::vector<double> cuts;
    for (double s : slopes) {
      // Outer axis: where a ray leaves through the top edge; inner: where it crosses.
      cuts.push_back(axis == 0 ? 1.0 / s : prefix[0] * s);
    }
    return cuts;
  };
  const std::vector<SimplexTerm>& terms = decomposition.terms;
  const ScalarField f = [&terms](std::span<const double> x) {
    return EvaluateTerms(terms, Vector2(x[0], x[1]));
  };
  return QuadratureFt(f, omega, cfg, &region);
}

double AveragingMultiplier(int dim, double radius, double omega_norm) {
  if (dim < 1) throw std::invalid_argument("dimension must be positive");
  if (!(radius > 0.0)) throw std::invalid_argument("radius must be positive");
  if (omega_norm < 0.0) throw std::invalid_argument("|omega| must be non-negative");
  return NormalizedBesselJ(0.5 * dim, radius * omega_norm);
}

double PrintedAveragingMultiplier(int dim, double radius, double omega_norm) {
  const double nu = 0.5 * dim;
  const double x = radius * omega_norm;
  const double gamma = std::tgamma(nu + 1.0);
  const double pi_pow = std::pow(std::numbers::pi, nu);
  if (x == 0.0) {
    // J_nu(x) / x^nu -> 1 / (2^nu Gamma(nu + 1)).
    return gamma / pi_pow / (std::pow(2.0, nu) * gamma);
  }
  return gamma / pi_pow * BesselJ(nu, x) / std::pow(x, nu);
}

std::vector<DecayRow> SpectrumDecayReport(std::span<const SimplexTerm> terms,
                                          std::span<const FrequencyVector> omegas, double radius) {
  std::vector<DecayRow> rows;
  rows.reserve(omegas.size());
  for (const FrequencyVector& w : omegas) {
    DecayRow row;
    row.omega_norm = w.norm();
    row.spectrum_abs = std::abs(NetworkSpectrum(terms, w));
    const int n = static_cast<int>(w.size());
    row.multiplier = AveragingMultiplier(n, radius, row.omega_norm);
    row.smoothed_abs = row.spectrum_abs * std::abs(row.multiplier);
    const double printed = PrintedAveragingMultiplier(n, radius, row.omega_norm);
    row.printed_ratio = std::abs(row.multiplier) > 1e-12 ? printed / row.multiplier
                                                         : std::numeric_limits<double>::quiet_NaN();
    rows.push_back(row);
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const DecayRow& a, const DecayRow& b) { return a.omega_norm < b.omega_norm; });
  return rows;
}

}  // namespace postavg

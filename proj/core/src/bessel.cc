#include "postavg/bessel.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace postavg {
namespace {

constexpr double kSeriesLimit = 12.0;
constexpr double kMillerLimit = 50.0;

bool IsInteger(double nu) { return nu == std::floor(nu); }
bool IsHalfInteger(double nu) { return IsInteger(nu - 0.5); }

// sum_k (-1)^k (x^2/4)^k / (k! (nu+1)_k)  ==  Gamma(nu+1) (2/x)^nu J_nu(x)
double NormalizedSeries(double nu, double x) {
  const double q = 0.25 * x * x;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 500; ++k) {
    term *= -q / (k * (k + nu));
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum) && k > x) break;
  }
  return sum;
}

double HalfIntegerUpward(double nu, double x) {
  const double scale = std::sqrt(2.0 / (std::numbers::pi * x));
  double prev = scale * std::cos(x);  // J_{-1/2}
  double cur = scale * std::sin(x);   // J_{1/2}
  for (double order = 0.5; order < nu; order += 1.0) {
    const double next = (2.0 * order / x) * cur - prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

double IntegerMiller(int nu, double x) {
  int start = static_cast<int>(std::max<double>(nu, x) + 30.0 + 10.0 * std::sqrt(x));
  start += start % 2;
  double next = 0.0;
  double cur = 1e-30;
  double norm = 0.0;
  double result = 0.0;
  for (int k = start; k > 0; --k) {
    const double prev = (2.0 * k / x) * cur - next;  // J_{k-1}
    next = cur;
    cur = prev;
    if (std::abs(cur) > 1e250) {
      cur *= 1e-250;
      next *= 1e-250;
      norm *= 1e-250;
      result *= 1e-250;
    }
    const int order = k - 1;
    if (order == nu) result = cur;
    if (order > 0 && order % 2 == 0) norm += 2.0 * cur;
  }
  norm += cur;  // J_0
  return result / norm;
}

double HankelAsymptotic(double nu, double x) {
  const double mu = 4.0 * nu * nu;
  double p = 0.0;
  double q = 0.0;
  double a = 1.0;  // a_k(nu) / x^k
  double last = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 200; ++k) {
    if (k > 0) a *= (mu - (2.0 * k - 1.0) * (2.0 * k - 1.0)) / (8.0 * k * x);
    if (std::abs(a) > last) break;
    last = std::abs(a);
    const double sign = (k / 2) % 2 == 0 ? 1.0 : -1.0;
    if (k % 2 == 0) {
      p += sign * a;
    } else {
      q += sign * a;
    }
    if (a == 0.0 || std::abs(a) < 1e-17) break;
  }
  const double chi = x - (0.5 * nu + 0.25) * std::numbers::pi;
  return std::sqrt(2.0 / (std::numbers::pi * x)) * (p * std::cos(chi) - q * std::sin(chi));
}

}  // namespace

double BesselJ(double nu, double x) {
  if (nu < 0.0 || !IsInteger(2.0 * nu)) throw std::invalid_argument("BesselJ: nu must be n/2, n >= 0");
  if (x < 0.0 || !std::isfinite(x)) throw std::invalid_argument("BesselJ: x must be finite and >= 0");
  if (x == 0.0) return nu == 0.0 ? 1.0 : 0.0;
  if (x <= std::max(kSeriesLimit, nu)) {
    return std::exp(nu * std::log(0.5 * x) - std::lgamma(nu + 1.0)) * NormalizedSeries(nu, x);
  }
  if (IsHalfInteger(nu)) return HalfIntegerUpward(nu, x);
  if (x <= std::max(kMillerLimit, nu * nu)) return IntegerMiller(static_cast<int>(nu), x);
  return HankelAsymptotic(nu, x);
}

double NormalizedBesselJ(double nu, double x) {
  if (x < 0.0) throw std::invalid_argument("NormalizedBesselJ: x must be >= 0");
  if (x <= std::max(kSeriesLimit, nu)) return NormalizedSeries(nu, x);
  return std::exp(std::lgamma(nu + 1.0) + nu * std::log(2.0 / x)) * BesselJ(nu, x);
}

}  // namespace postavg

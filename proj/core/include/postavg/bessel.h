#ifndef POSTAVG_BESSEL_H_
#define POSTAVG_BESSEL_H_

namespace postavg {

// Bessel function of the first kind J_nu(x) for nu = n/2 (n = 0, 1, 2, ...)
// and x >= 0.
//   x <= max(12, nu)        ascending series
//   half-integer nu         J_{1/2}, J_{-1/2} closed forms + upward recurrence
//   integer nu, moderate x  Miller backward recurrence
//   integer nu, large x     Hankel asymptotic expansion
double BesselJ(double nu, double x);

// Gamma(nu + 1) * (2 / x)^nu * J_nu(x), continued to 1 at x = 0. This is the
// mean of exp(-i u . w) over the n-ball when nu = n/2 and x = r|w|.
double NormalizedBesselJ(double nu, double x);

}  // namespace postavg

#endif  // POSTAVG_BESSEL_H_

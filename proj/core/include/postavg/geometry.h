#ifndef POSTAVG_GEOMETRY_H_
#define POSTAVG_GEOMETRY_H_

#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_int.hpp>

#include "postavg/nn.h"

namespace postavg {

using Matrix2 = Eigen::Matrix2d;
using Vector2 = Eigen::Vector2d;
using BigInt = boost::multiprecision::cpp_int;

// One bit per hidden unit (pre-activation > 0), layer-major.
struct ActivationPattern {
  std::vector<bool> bits;

  std::size_t size() const { return bits.size(); }
  friend bool operator==(const ActivationPattern&, const ActivationPattern&) = default;
};

ActivationPattern GetActivationPattern(const Network& net, const Vector& x);
ActivationPattern GetActivationPattern(const Network& net, const ForwardTrace& trace);

struct HyperplaneDistance {
  int layer = 0;
  int unit = 0;
  // |a| / |grad_x a| for the unit's linear extension around x; +inf when the
  // unit is constant on the region (zero gradient).
  double distance = std::numeric_limits<double>::infinity();
  // Unit normal pointing away from the hyperplane: x - distance * normal lies on it.
  Vector normal;

  bool infinite() const { return distance == std::numeric_limits<double>::infinity(); }
};

// One entry per hidden unit, ascending by distance (ties by layer, unit).
std::vector<HyperplaneDistance> ExactDistances(const Network& net, const Vector& x);

struct LayerDistance {
  int unit = 0;
  double relative_distance = 0.0;
};

// |a_k| / |row k of the layer's weights| for every unit of hidden layer
// `layer`, ascending. Uses only the cached trace; no back-propagation.
std::vector<LayerDistance> ApproxLayerDistances(const Network& net, const ForwardTrace& trace,
                                                int layer);

// Hamming distance between the activation patterns of x and x2. This is a
// lower bound on the number of hyperplanes crossed along the segment.
int CrossingCount(const Network& net, const Vector& x, const Vector& x2);

// sum_{k=0..n} C(N, k): the maximal number of regions cut out of R^n by N
// affine hyperplanes in general position.
BigInt MaxRegionCount(unsigned hyperplanes, unsigned dim);

// crossing_count(x, x2) * prod_l mean|W_l|. A diagnostic of how much the
// output can move between the two points, not a bound.
double FluctuationScale(const Network& net, const Vector& x, const Vector& x2);

// A piece g_q of the normalized decomposition on the 2-D unit square:
//   g_q(x) = w . x  if x is inside cone(rays) and x[trunc_index] < 1, else 0.
// rays are the columns of `rays`; after normalization every ray has
// coordinate trunc_index equal to 1, so the truncated cone is the simplex
// {0, ray_0, ray_1} and alpha = to_cone * x are its barycentric weights.
struct SimplexTerm {
  Matrix2 rays;          // columns v_0 (lower angle), v_1 (upper angle)
  Matrix2 to_cone;       // rays^{-1}
  Vector2 weight;        // w_q, the region's linear map
  Vector2 weight_bar;    // rays^T w_q: weight in cone coordinates
  int trunc_index = 0;   // coordinate with the largest magnitude inside the cone
  bool closed_upper = false;  // the upper ray belongs to this term (last sector)

  // Builds the term and its inverse; throws std::invalid_argument when the
  // rays are (numerically) dependent.
  static SimplexTerm FromRays(const Vector2& lower, const Vector2& upper, const Vector2& weight,
                              int trunc_index);

  // true when both rays have coordinate trunc_index == 1, i.e. the term's
  // truncated support is exactly the simplex spanned by the rays.
  bool normalized(double tol = 1e-12) const;
};

// Membership tolerance on barycentric coordinates.
inline constexpr double kConeTolerance = 1e-12;

// Points on a shared ray go to the term for which it is the lower edge.
double EvaluateTerm(const SimplexTerm& term, const Vector2& x);
double EvaluateTerms(const std::vector<SimplexTerm>& terms, const Vector2& x);

struct Decomposition {
  std::vector<SimplexTerm> terms;
  std::vector<double> ray_angles;  // sorted, in [0, pi/2], including 0, pi/4, pi/2
  int distinct_hyperplanes = 0;    // hidden-unit boundary rays found in the open quadrant
  int dropped_sectors = 0;         // sectors narrower than kMinSectorWidth
};

inline constexpr double kMinSectorWidth = 1e-9;

// Splits output `output_index` of an unbiased 2-input network on the closed
// positive quadrant into SimplexTerms by sweeping boundary rays by angle.
// Requires input_dim == 2 and zero biases (std::invalid_argument otherwise).
Decomposition Decompose2d(const Network& net, int output_index = 0);

}  // namespace postavg

#endif  // POSTAVG_GEOMETRY_H_

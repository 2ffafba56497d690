#include "postavg/geometry.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "postavg/errors.h"

namespace postavg {
namespace {

constexpr double kHalfPi = std::numbers::pi / 2.0;
constexpr double kQuarterPi = std::numbers::pi / 4.0;
// Boundary rays closer than this (in angle, i.e. unit-normal distance) share a hyperplane.
constexpr double kSameRayAngle = 1e-9;

double Cross(const Vector2& u, const Vector2& w) { return u[0] * w[1] - u[1] * w[0]; }

// Sine of the angle from u to w, snapped to 0 inside the membership tolerance.
double Side(const Vector2& u, const Vector2& w) {
  const double scale = u.norm() * w.norm();
  if (scale == 0.0) return 0.0;
  const double s = Cross(u, w) / scale;
  return std::abs(s) <= kConeTolerance ? 0.0 : s;
}

Vector2 RayAt(double angle, int trunc_index) {
  Vector2 v(std::cos(angle), std::sin(angle));
  if (angle == 0.0) v = Vector2(1.0, 0.0);
  if (angle == kHalfPi) v = Vector2(0.0, 1.0);
  if (angle == kQuarterPi) v = Vector2(1.0, 1.0);
  return v / v[trunc_index];
}

// Angle in [0, 2pi) of the direction v.
double AngleOf(const Vector2& v) {
  double a = std::atan2(v[1], v[0]);
  if (a < 0.0) a += 2.0 * std::numbers::pi;
  return a;
}

void InsertAngle(std::vector<double>& angles, double a) {
  for (double existing : angles) {
    if (std::abs(existing - a) < kSameRayAngle) return;
  }
  angles.push_back(a);
}

}  // namespace

ActivationPattern GetActivationPattern(const Network& net, const ForwardTrace& trace) {
  ActivationPattern p;
  p.bits.reserve(static_cast<std::size_t>(net.hidden_unit_count()));
  for (int l = 0; l < net.hidden_layer_count(); ++l) {
    for (Eigen::Index k = 0; k < trace.pre[l].size(); ++k) p.bits.push_back(trace.pre[l][k] > 0.0);
  }
  return p;
}

ActivationPattern GetActivationPattern(const Network& net, const Vector& x) {
  return GetActivationPattern(net, Forward(net, x));
}

std::vector<HyperplaneDistance> ExactDistances(const Network& net, const Vector& x) {
  const ForwardTrace trace = Forward(net, x);
  std::vector<HyperplaneDistance> out;
  out.reserve(static_cast<std::size_t>(net.hidden_unit_count()));
  for (int l = 0; l < net.hidden_layer_count(); ++l) {
    for (int k = 0; k < net.layer(l).out_dim(); ++k) {
      HyperplaneDistance h;
      h.layer = l;
      h.unit = k;
      const Vector g = UnitInputGradient(net, trace, l, k);
      const double norm = g.norm();
      if (norm == 0.0) {
        h.normal = Vector::Zero(x.size());
      } else {
        const double a = trace.pre[l][k];
        h.distance = std::abs(a) / norm;
        h.normal = (a < 0.0 ? -1.0 : 1.0) * g / norm;
      }
      out.push_back(std::move(h));
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const HyperplaneDistance& a, const HyperplaneDistance& b) {
    return a.distance < b.distance;
  });
  return out;
}

std::vector<LayerDistance> ApproxLayerDistances(const Network& net, const ForwardTrace& trace,
                                                int layer) {
  if (layer < 0 || layer >= net.hidden_layer_count()) {
    throw std::out_of_range("hidden layer index " + std::to_string(layer) + " out of range");
  }
  const Matrix& w = net.layer(layer).weights;
  std::vector<LayerDistance> out;
  out.reserve(static_cast<std::size_t>(w.rows()));
  for (int k = 0; k < w.rows(); ++k) {
    const double norm = w.row(k).norm();
    const double a = std::abs(trace.pre[layer][k]);
    out.push_back({k, norm == 0.0 ? std::numeric_limits<double>::infinity() : a / norm});
  }
  std::stable_sort(out.begin(), out.end(), [](const LayerDistance& a, const LayerDistance& b) {
    return a.relative_distance < b.relative_distance;
  });
  return out;
}

int CrossingCount(const Network& net, const Vector& x, const Vector& x2) {
  const ActivationPattern a = GetActivationPattern(net, x);
  const ActivationPattern b = GetActivationPattern(net, x2);
  int count = 0;
  for (std::size_t i = 0; i < a.size(); ++i) count += a.bits[i] != b.bits[i];
  return count;
}

BigInt MaxRegionCount(unsigned hyperplanes, unsigned dim) {
  BigInt total = 0;
  BigInt binom = 1;  // C(N, k)
  const unsigned top = std::min(hyperplanes, dim);
  for (unsigned k = 0; k <= top; ++k) {
    total += binom;
    binom = binom * (hyperplanes - k) / (k + 1);
  }
  return total;
}

double FluctuationScale(const Network& net, const Vector& x, const Vector& x2) {
  double product = 1.0;
  for (const DenseLayer& layer : net.layers()) product *= layer.weights.cwiseAbs().mean();
  return CrossingCount(net, x, x2) * product;
}

SimplexTerm SimplexTerm::FromRays(const Vector2& lower, const Vector2& upper, const Vector2& weight,
                                  int trunc_index) {
  if (trunc_index < 0 || trunc_index > 1) throw std::invalid_argument("trunc_index must be 0 or 1");
  SimplexTerm t;
  t.rays.col(0) = lower;
  t.rays.col(1) = upper;
  const double det = t.rays.determinant();
  const double scale = lower.norm() * upper.norm();
  if (!(std::abs(det) > 1e-12 * scale)) throw std::invalid_argument("simplex rays are dependent");
  t.to_cone = t.rays.inverse();
  t.weight = weight;
  t.weight_bar = t.rays.transpose() * weight;
  t.trunc_index = trunc_index;
  return t;
}

bool SimplexTerm::normalized(double tol) const {
  return std::abs(rays(trunc_index, 0) - 1.0) <= tol && std::abs(rays(trunc_index, 1) - 1.0) <= tol;
}

double EvaluateTerm(const SimplexTerm& term, const Vector2& x) {
  if (!(x[term.trunc_index] < 1.0)) return 0.0;
  const Vector2 lower = term.rays.col(0);
  const Vector2 upper = term.rays.col(1);
  // Signs of the barycentric weights: alpha_1 ~ side(lower, x), alpha_0 ~ side(x, upper).
  const double a1 = Side(lower, x);
  const double a0 = Side(x, upper);
  const bool inside = a1 >= 0.0 && (a0 > 0.0 || (term.closed_upper && a0 >= 0.0)) &&
                      !(a0 == 0.0 && a1 == 0.0);
  return inside ? term.weight.dot(x) : 0.0;
}

double EvaluateTerms(const std::vector<SimplexTerm>& terms, const Vector2& x) {
  double sum = 0.0;
  for (const SimplexTerm& t : terms) sum += EvaluateTerm(t, x);
  return sum;
}

Decomposition Decompose2d(const Network& net, int output_index) {
  if (net.input_dim() != 2) throw std::invalid_argument("Decompose2d needs a 2-input network");
  if (!net.is_unbiased()) throw std::invalid_argument("Decompose2d needs an unbiased network");
  if (output_index < 0 || output_index >= net.class_count()) {
    throw InvalidLabelError("output index out of range");
  }
  Decomposition d;
  std::vector<double> angles = {0.0, kQuarterPi, kHalfPi};
  const auto probe = [](double a, double b) {
    const double m = 0.5 * (a + b);
    Vector p(2);
    p << std::cos(m), std::sin(m);
    return p;
  };

  // Layer by layer: inside each current sector every unit of the next layer
  // is linear, so its zero set there is (at most) one ray.
  for (int l = 0; l < net.hidden_layer_count(); ++l) {
    std::sort(angles.begin(), angles.end());
    const std::vector<double> sectors = angles;
    for (std::size_t s = 0; s + 1 < sectors.size(); ++s) {
      const double a = sectors[s];
      const double b = sectors[s + 1];
      if (b - a < kMinSectorWidth) continue;
      const ForwardTrace trace = Forward(net, probe(a, b));
      for (int k = 0; k < net.layer(l).out_dim(); ++k) {
        const Vector g = UnitInputGradient(net, trace, l, k);
        if (g.norm() == 0.0) continue;
        const Vector2 kernel(-g[1], g[0]);
        for (double c : {AngleOf(kernel), AngleOf(-kernel)}) {
          if (c > a + kSameRayAngle && c < b - kSameRayAngle) {
            const std::size_t before = angles.size();
            InsertAngle(angles, c);
            d.distinct_hyperplanes += angles.size() > before;
          }
        }
      }
    }
  }

  std::sort(angles.begin(), angles.end());
  d.ray_angles = angles;
  for (std::size_t s = 0; s + 1 < angles.size(); ++s) {
    const double a = angles[s];
    const double b = angles[s + 1];
    if (b - a < kMinSectorWidth) {
      ++d.dropped_sectors;
      continue;
    }
    const Vector p = probe(a, b);
    const Vector w = InputGradient(net, p, LossSpec::Logit(output_index));
    const int trunc = 0.5 * (a + b) < kQuarterPi ? 0 : 1;
    SimplexTerm t = SimplexTerm::FromRays(RayAt(a, trunc), RayAt(b, trunc), Vector2(w[0], w[1]), trunc);
    t.closed_upper = s + 2 == angles.size();
    d.terms.push_back(std::move(t));
  }
  return d;
}

}  // namespace postavg

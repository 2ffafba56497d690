#include "postavg/defense.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>
#include <stdexcept>

#include "postavg/errors.h"
#include "postavg/geometry.h"

namespace postavg {
namespace {

std::uint64_t SplitMix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Columns of `points` through the network; returns logits column-wise.
Matrix BatchLogits(const Network& net, Matrix points) {
  for (const DenseLayer& layer : net.layers()) {
    Matrix z = layer.weights * points;
    z.colwise() += layer.biases;
    if (layer.activation == Activation::kRelu) z = z.cwiseMax(0.0);
    points = std::move(z);
  }
  return points;
}

void SoftmaxColumns(Matrix& m) {
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    const double top = m.col(c).maxCoeff();
    m.col(c) = (m.col(c).array() - top).exp();
    m.col(c) /= m.col(c).sum();
  }
}

}  // namespace

Sampler ParseSampler(const std::string& name) {
  if (name == "random") return Sampler::kRandom;
  if (name == "approx") return Sampler::kApprox;
  throw std::invalid_argument("unknown sampler '" + name + "'");
}

const char* SamplerName(Sampler s) { return s == Sampler::kRandom ? "random" : "approx"; }

Aggregation ParseAggregation(const std::string& name) {
  if (name == "logits") return Aggregation::kLogits;
  if (name == "probabilities" || name == "probs") return Aggregation::kProbabilities;
  throw std::invalid_argument("unknown aggregation '" + name + "'");
}

const char* AggregationName(Aggregation a) {
  return a == Aggregation::kLogits ? "logits" : "probabilities";
}

void DefenseConfig::Validate() const {
  if (!(radius > 0.0) || !std::isfinite(radius)) throw std::invalid_argument("radius must be > 0");
  if (directions < 1) throw std::invalid_argument("directions must be >= 1");
  if (top_k < 1) throw std::invalid_argument("top_k must be >= 1");
  if (clip && !(clip_lo < clip_hi)) throw std::invalid_argument("clip bounds need lo < hi");
  if (sampler == Sampler::kApprox && !approx_per_layer.empty()) {
    int sum = 0;
    for (const auto& [layer, count] : approx_per_layer) {
      if (count < 1) throw std::invalid_argument("approx_per_layer counts must be >= 1");
      sum += count;
    }
    if (sum != directions) {
      throw std::invalid_argument("approx_per_layer counts sum to " + std::to_string(sum) +
                                  ", expected directions = " + std::to_string(directions));
    }
  }
}

DirectionSet RandomDirections(int dim, int count, std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("direction count must be >= 1");
  if (dim < 1) throw std::invalid_argument("dimension must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  DirectionSet out;
  out.vectors.reserve(static_cast<std::size_t>(count));
  while (static_cast<int>(out.vectors.size()) < count) {
    Vector v(dim);
    for (int i = 0; i < dim; ++i) v[i] = gauss(rng);
    const double norm = v.norm();
    if (norm == 0.0) continue;
    out.vectors.push_back(v / norm);
  }
  return out;
}

std::uint64_t InputSeed(std::uint64_t seed, const Vector& x) {
  std::uint64_t h = SplitMix(seed);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    std::uint64_t bits = 0;
    const double v = x[i] == 0.0 ? 0.0 : x[i];  // fold -0.0
    std::memcpy(&bits, &v, sizeof bits);
    h = SplitMix(h ^ bits);
  }
  return h;
}

std::map<int, int> DefaultApproxAllocation(const Network& net, int total) {
  const int hidden = net.hidden_layer_count();
  if (hidden == 0) throw std::invalid_argument("approx sampler needs at least one hidden layer");
  if (total < 1) throw std::invalid_argument("direction count must be >= 1");
  const int used = std::min(hidden, 3);
  const int first = hidden - used;
  std::map<int, int> out;
  for (int i = 0; i < used; ++i) {
    const int count = total / used + (i < total % used ? 1 : 0);
    if (count > 0) out[first + i] = count;
  }
  return out;
}

DirectionSet ApproxDirections(const Network& net, const Vector& x,
                              const std::map<int, int>& per_layer) {
  const ForwardTrace trace = Forward(net, x);
  DirectionSet out;
  for (const auto& [layer, count] : per_layer) {
    if (count < 1) throw std::invalid_argument("approx_per_layer counts must be >= 1");
    const std::vector<LayerDistance> ranked = ApproxLayerDistances(net, trace, layer);
    int taken = 0;
    for (const LayerDistance& d : ranked) {
      if (taken == count) break;
      const Vector g = UnitInputGradient(net, trace, layer, d.unit);
      ++out.gradient_calls;
      const double norm = g.norm();
      if (norm == 0.0) continue;
      // Oriented like the geometry normals: x - d*v lands on the hyperplane.
      const double sign = trace.pre[layer][d.unit] < 0.0 ? -1.0 : 1.0;
      out.vectors.push_back(sign * g / norm);
      ++taken;
    }
    if (taken < count) {
      out.warnings.push_back("layer " + std::to_string(layer) + ": only " + std::to_string(taken) +
                             " of " + std::to_string(count) + " directions available");
    }
  }
  return out;
}

std::vector<Vector> SamplePoints(const Vector& x, const DirectionSet& dirs, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("radius must be > 0");
  static constexpr int kSteps[] = {-3, -2, -1, 1, 2, 3};
  std::vector<Vector> points;
  points.reserve(6 * dirs.size() + 1);
  points.push_back(x);
  for (const Vector& v : dirs.vectors) {
    for (int k : kSteps) points.push_back(x + (radius * k / 3.0) * v);
  }
  return points;
}

DirectionSet SelectDirections(const Network& net, const Vector& x, const DefenseConfig& cfg) {
  if (cfg.sampler == Sampler::kRandom) {
    return RandomDirections(net.input_dim(), cfg.directions, InputSeed(cfg.seed, x));
  }
  const std::map<int, int> alloc = cfg.approx_per_layer.empty()
                                       ? DefaultApproxAllocation(net, cfg.directions)
                                       : cfg.approx_per_layer;
  return ApproxDirections(net, x, alloc);
}

DefendedPrediction PostAveragePredict(const Network& net, const Vector& x, const DefenseConfig& cfg) {
  cfg.Validate();
  if (x.size() != net.input_dim()) throw ShapeError("input dimension mismatch");
  if (!x.allFinite()) throw std::invalid_argument("input must be finite");
  const DirectionSet dirs = SelectDirections(net, x, cfg);
  const std::vector<Vector> points = SamplePoints(x, dirs, cfg.radius);

  Matrix batch(net.input_dim(), static_cast<Eigen::Index>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i) {
    batch.col(static_cast<Eigen::Index>(i)) = cfg.clip ? points[i].cwiseMax(cfg.clip_lo).cwiseMin(cfg.clip_hi)
                                                       : points[i];
  }
  Matrix out = BatchLogits(net, std::move(batch));
  if (cfg.aggregation == Aggregation::kProbabilities) SoftmaxColumns(out);

  DefendedPrediction pred;
  pred.output = Vector::Zero(out.rows());
  for (Eigen::Index c = 0; c < out.cols(); ++c) pred.output += out.col(c);
  pred.output /= static_cast<double>(out.cols());
  pred.point_count = static_cast<int>(out.cols());
  pred.top_k = TopK(pred.output, std::min(cfg.top_k, net.class_count()));
  pred.warnings = dirs.warnings;
  return pred;
}

}  // namespace postavg

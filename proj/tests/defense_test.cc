#include "postavg/defense.h"

#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "postavg/geometry.h"
#include "test_util.h"

namespace postavg {
namespace {

using testutil::Layer;
using testutil::RandomNet;
using testutil::Vec;

TEST(RandomDirectionsTest, UnitLengthAndSeeded) {
  const DirectionSet a = RandomDirections(5, 12, 3);
  const DirectionSet b = RandomDirections(5, 12, 3);
  ASSERT_EQ(a.size(), 12u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_NEAR(a.vectors[i].norm(), 1.0, 1e-14);
    EXPECT_EQ(a.vectors[i], b.vectors[i]);
  }
  EXPECT_NE(RandomDirections(5, 12, 4).vectors[0], a.vectors[0]);
}

TEST(RandomDirectionsTest, NearlyOrthogonalInHighDimension) {
  const DirectionSet d = RandomDirections(1000, 60, 1);
  std::vector<double> cosines;
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (std::size_t j = i + 1; j < d.size(); ++j) cosines.push_back(std::abs(d.vectors[i].dot(d.vectors[j])));
  }
  std::nth_element(cosines.begin(), cosines.begin() + cosines.size() / 2, cosines.end());
  EXPECT_LT(cosines[cosines.size() / 2], 0.1);
}

TEST(InputSeedTest, DependsOnSeedAndInput) {
  EXPECT_EQ(InputSeed(1, Vec({0.5, 0.25})), InputSeed(1, Vec({0.5, 0.25})));
  EXPECT_NE(InputSeed(1, Vec({0.5, 0.25})), InputSeed(2, Vec({0.5, 0.25})));
  EXPECT_NE(InputSeed(1, Vec({0.5, 0.25})), InputSeed(1, Vec({0.25, 0.5})));
  EXPECT_EQ(InputSeed(1, Vec({-0.0})), InputSeed(1, Vec({0.0})));
}

TEST(ApproxDirectionsTest, SingleLayerGivesNormalizedWeightRows) {
  Matrix w(3, 2);
  w << 1.0, 2.0, -3.0, 1.0, 0.5, 0.5;
  const Network net({Layer(w, Activation::kRelu), Layer(Matrix::Ones(1, 3), Activation::kIdentity)});
  const Vector x = Vec({0.3, -0.2});
  const DirectionSet d = ApproxDirections(net, x, {{0, 3}});
  ASSERT_EQ(d.size(), 3u);
  EXPECT_EQ(d.gradient_calls, 3);
  const std::vector<LayerDistance> ranked = ApproxLayerDistances(net, Forward(net, x), 0);
  for (std::size_t i = 0; i < 3; ++i) {
    const Vector row = w.row(ranked[i].unit).transpose();
    const double cos = d.vectors[i].dot(row) / row.norm();
    EXPECT_NEAR(std::abs(cos), 1.0, 1e-14);
    EXPECT_NEAR(d.vectors[i].norm(), 1.0, 1e-14);
  }
}

TEST(ApproxDirectionsTest, StepAlongDirectionReachesTheHyperplane) {
  const Network net = RandomNet({4, 10, 10, 3}, 8);
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const Vector x = testutil::UniformPoint(4, rng, -1.0, 1.0);
    const ForwardTrace t = Forward(net, x);
    const DirectionSet d = ApproxDirections(net, x, {{0, 2}});
    const std::vector<LayerDistance> ranked = ApproxLayerDistances(net, t, 0);
    for (std::size_t i = 0; i < d.size(); ++i) {
      const int unit = ranked[i].unit;
      const double dist = ranked[i].relative_distance;
      const Vector on_plane = x - dist * d.vectors[i];
      EXPECT_NEAR(Forward(net, on_plane).pre[0][unit], 0.0, 1e-6);
    }
  }
}

TEST(ApproxDirectionsTest, CountsGradientCallsAndWarnsWhenExhausted) {
  const Network net = RandomNet({3, 4, 5, 2}, 2);
  const Vector x = Vec({0.2, -0.4, 0.9});
  const DirectionSet d = ApproxDirections(net, x, {{0, 3}, {1, 2}});
  EXPECT_LE(d.size(), 5u);
  EXPECT_GE(d.gradient_calls, static_cast<int>(d.size()));
  EXPECT_EQ(d.size() == 5u, d.warnings.empty());
  const DirectionSet over = ApproxDirections(net, x, {{0, 6}});
  EXPECT_EQ(over.gradient_calls, 4);
  EXPECT_FALSE(over.warnings.empty());
}

TEST(DefaultApproxAllocationTest, SplitsOverLastThreeLayers) {
  const Network deep = RandomNet({2, 4, 4, 4, 4, 2}, 1);
  EXPECT_EQ(DefaultApproxAllocation(deep, 6), (std::map<int, int>{{1, 2}, {2, 2}, {3, 2}}));
  EXPECT_EQ(DefaultApproxAllocation(deep, 7), (std::map<int, int>{{1, 3}, {2, 2}, {3, 2}}));
  const Network shallow = RandomNet({2, 4, 2}, 1);
  EXPECT_EQ(DefaultApproxAllocation(shallow, 6), (std::map<int, int>{{0, 6}}));
}

TEST(SamplePointsTest, CountsAndRadius) {
  const Vector x = Vec({0.1, 0.2});
  for (int k : {6, 60}) {
    const DirectionSet d = RandomDirections(2, k, 5);
    const std::vector<Vector> p = SamplePoints(x, d, 0.4);
    EXPECT_EQ(p.size(), static_cast<std::size_t>(6 * k + 1));
    EXPECT_EQ(p.front(), x);
    for (const Vector& v : p) EXPECT_LE((v - x).norm(), 0.4 + 1e-15);
  }
}

DefenseConfig Config(double r, int k, Sampler s = Sampler::kRandom) {
  DefenseConfig cfg;
  cfg.radius = r;
  cfg.directions = k;
  cfg.sampler = s;
  cfg.seed = 4;
  return cfg;
}

TEST(PostAveragePredictTest, ConstantNetworkIsUnchanged) {
  Vector b(2);
  b << 0.7, -1.5;
  const Network net({Layer(Matrix::Zero(2, 3), Activation::kIdentity, b)});
  const DefendedPrediction p = PostAveragePredict(net, Vec({0.1, 0.2, 0.3}), Config(2.0, 6));
  EXPECT_EQ(p.point_count, 37);
  EXPECT_NEAR(p.output[0], 0.7, 1e-15);
  EXPECT_NEAR(p.output[1], -1.5, 1e-15);
}

TEST(PostAveragePredictTest, LinearNetworkIsUnchanged) {
  Matrix w(3, 2);
  w << 1.0, -2.0, 0.5, 4.0, -3.0, 0.25;
  const Network net({Layer(w, Activation::kIdentity)});
  const Vector x = Vec({0.3, -0.8});
  for (int k : {1, 6, 60}) {
    const DefendedPrediction p = PostAveragePredict(net, x, Config(1.5, k));
    EXPECT_LE((p.output - w * x).norm(), 1e-10);
  }
}

TEST(PostAveragePredictTest, MatchesNaiveMean) {
  const Network net = RandomNet({3, 12, 12, 4}, 6, /*biased=*/true);
  const Vector x = Vec({0.2, 0.5, -0.1});
  for (Aggregation agg : {Aggregation::kLogits, Aggregation::kProbabilities}) {
    for (Sampler s : {Sampler::kRandom, Sampler::kApprox}) {
      DefenseConfig cfg = Config(0.3, 6, s);
      cfg.aggregation = agg;
      const DefendedPrediction p = PostAveragePredict(net, x, cfg);
      const std::vector<Vector> points = SamplePoints(x, SelectDirections(net, x, cfg), cfg.radius);
      Vector mean = Vector::Zero(4);
      for (const Vector& v : points) {
        Vector z = Logits(net, v);
        if (agg == Aggregation::kProbabilities) {
          z = (z.array() - z.maxCoeff()).exp();
          z /= z.sum();
        }
        mean += z;
      }
      mean /= static_cast<double>(points.size());
      EXPECT_LE((p.output - mean).norm(), 1e-12);
      EXPECT_EQ(p.point_count, static_cast<int>(points.size()));
    }
  }
}

// Post-averaged logits with one shared direction set.
Vector AveragedLogits(const Network& net, const Vector& x, const DirectionSet& dirs, double r) {
  Vector mean = Vector::Zero(net.class_count());
  const std::vector<Vector> points = SamplePoints(x, dirs, r);
  for (const Vector& p : points) mean += Logits(net, p);
  return mean / static_cast<double>(points.size());
}

TEST(PostAveragePredictTest, AveragingIsNonExpansiveInTheMean) {
  const auto& m = testutil::Moons();
  const double r = 0.5;
  const double delta = r / 10.0;
  const DirectionSet dirs = RandomDirections(2, 100, 21);
  const DirectionSet probes = RandomDirections(2, 100, 22);
  double raw = 0.0, averaged = 0.0;
  for (std::size_t i = 0; i < 50; ++i) {
    const Vector& x = m.test.inputs[i];
    const Vector fx = Logits(m.net, x);
    const Vector fcx = AveragedLogits(m.net, x, dirs, r);
    double raw_max = 0.0, avg_max = 0.0;
    for (const Vector& u : probes.vectors) {
      raw_max = std::max(raw_max, (Logits(m.net, x + delta * u) - fx).norm());
      avg_max = std::max(avg_max, (AveragedLogits(m.net, x + delta * u, dirs, r) - fcx).norm());
    }
    raw += raw_max;
    averaged += avg_max;
  }
  EXPECT_LE(averaged, raw);
}

TEST(PostAveragePredictTest, DeterministicAndValidated) {
  const auto& m = testutil::Moons();
  const DefenseConfig cfg = Config(0.5, 6);
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_EQ(PostAveragePredict(m.net, m.test.inputs[i], cfg).output,
              PostAveragePredict(m.net, m.test.inputs[i], cfg).output);
  }
  EXPECT_THROW(PostAveragePredict(m.net, Vec({0.0, 0.0}), Config(0.0, 6)), std::invalid_argument);
  EXPECT_THROW(PostAveragePredict(m.net, Vec({0.0, 0.0, 0.0}), cfg), std::invalid_argument);
  DefenseConfig bad = Config(0.5, 6, Sampler::kApprox);
  bad.approx_per_layer = {{0, 4}};
  EXPECT_THROW(bad.Validate(), std::invalid_argument);
}

TEST(PostAveragePredictTest, ClipKeepsPointsInTheBox) {
  // With clipping every sample of an input on the box corner evaluates
  // inside the box, so the identity output stays within it.
  const Network net({Layer(Matrix::Identity(2, 2), Activation::kIdentity)});
  DefenseConfig cfg = Config(1.0, 6);
  cfg.clip = true;
  const DefendedPrediction p = PostAveragePredict(net, Vec({0.0, 1.0}), cfg);
  EXPECT_GE(p.output.minCoeff(), 0.0);
  EXPECT_LE(p.output.maxCoeff(), 1.0);
}

TEST(SamplerNamesTest, RoundTrip) {
  for (Sampler s : {Sampler::kRandom, Sampler::kApprox}) EXPECT_EQ(ParseSampler(SamplerName(s)), s);
  for (Aggregation a : {Aggregation::kLogits, Aggregation::kProbabilities}) {
    EXPECT_EQ(ParseAggregation(AggregationName(a)), a);
  }
  EXPECT_THROW(ParseSampler("grid"), std::invalid_argument);
}

}  // namespace
}  // namespace postavg

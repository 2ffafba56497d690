#include "postavg/nn.h"

#include <sstream>

#include <gtest/gtest.h>

#include "oracles.h"
#include "postavg/dataset.h"
#include "postavg/errors.h"
#include "test_util.h"

namespace postavg {
namespace {

using testutil::Layer;
using testutil::RandomNet;
using testutil::Vec;

TEST(NetworkTest, RejectsBrokenLayerChains) {
  std::vector<DenseLayer> layers = {Layer(Matrix::Ones(3, 2), Activation::kRelu),
                                    Layer(Matrix::Ones(2, 4), Activation::kIdentity)};
  EXPECT_THROW(Network{layers}, ShapeError);
}

TEST(NetworkTest, RejectsReluOutputAndNonFiniteWeights) {
  EXPECT_THROW(Network({Layer(Matrix::Ones(2, 2), Activation::kRelu)}), ShapeError);
  Matrix w = Matrix::Ones(2, 2);
  w(0, 1) = std::nan("");
  EXPECT_THROW(Network({Layer(w, Activation::kIdentity)}), ShapeError);
}

TEST(ForwardTest, UnbiasedNetworkMapsOriginToZero) {
  const Network net = RandomNet({3, 8, 8, 4}, 7);
  EXPECT_TRUE(Logits(net, Vector::Zero(3)).isZero(0.0));
}

TEST(ForwardTest, IdentityHiddenLayerAppliesRelu) {
  const Network net({Layer(Matrix::Identity(2, 2), Activation::kRelu),
                     Layer(Matrix::Identity(2, 2), Activation::kIdentity)});
  const ForwardTrace t = Forward(net, Vec({-1.0, 2.0}));
  EXPECT_EQ(t.post[0], Vec({0.0, 2.0}));
  EXPECT_EQ(t.pre[0], Vec({-1.0, 2.0}));
}

TEST(ForwardTest, MatchesNaiveLoops) {
  const Network net = RandomNet({2, 8, 3}, 11, /*biased=*/true);
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector x = testutil::UniformPoint(2, rng, -2.0, 2.0);
    const std::vector<double> want = oracle::NaiveLogits(net, {x[0], x[1]});
    const Vector got = Logits(net, x);
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(got[j], want[static_cast<std::size_t>(j)], 1e-12);
  }
}

TEST(ForwardTest, RejectsWrongInputDimension) {
  const Network net = RandomNet({2, 4, 2}, 1);
  EXPECT_THROW(Forward(net, Vector::Zero(3)), ShapeError);
}

TEST(ForwardTest, PositivelyHomogeneousWhenUnbiased) {
  const Network net = RandomNet({4, 16, 16, 3}, 5);
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector x = testutil::UniformPoint(4, rng, -1.0, 1.0);
    for (double alpha : {0.25, 3.0, 17.5}) {
      const Vector a = Logits(net, alpha * x);
      const Vector b = alpha * Logits(net, x);
      EXPECT_LE((a - b).norm(), 1e-12 * (1.0 + b.norm()));
    }
  }
}

TEST(InputGradientTest, LinearNetworkReturnsWeightRow) {
  Matrix w(3, 2);
  w << 1.0, 2.0, -3.0, 0.5, 0.25, -1.0;
  const Network net({Layer(w, Activation::kIdentity)});
  for (int j = 0; j < 3; ++j) {
    EXPECT_EQ(InputGradient(net, Vec({0.3, -0.7}), LossSpec::Logit(j)), Vector(w.row(j).transpose()));
  }
}

TEST(InputGradientTest, MatchesCentralDifferences) {
  const Network net = RandomNet({3, 12, 12, 4}, 21, /*biased=*/true);
  std::mt19937_64 rng(4);
  const LossSpec losses[] = {LossSpec::CrossEntropy(2), LossSpec::Logit(1), LossSpec::Margin(0, 3)};
  int checked = 0;
  while (checked < 100) {
    const Vector x = testutil::UniformPoint(3, rng, -1.0, 1.0);
    const LossSpec& loss = losses[checked % 3];
    const auto f = [&](const Vector& v) { return LossValue(Logits(net, v), loss); };
    // Skip points within reach of a kink of the finite-difference stencil.
    const ForwardTrace t = Forward(net, x);
    bool near_kink = false;
    for (int l = 0; l < net.hidden_layer_count(); ++l) near_kink |= t.pre[l].cwiseAbs().minCoeff() < 1e-3;
    if (near_kink) continue;
    const Vector g = InputGradient(net, x, loss);
    const Vector fd = oracle::CentralDifference(f, x, 1e-5);
    for (Eigen::Index i = 0; i < 3; ++i) {
      EXPECT_NEAR(g[i], fd[i], 1e-4 * std::max(1.0, std::abs(fd[i]))) << "point " << checked;
    }
    ++checked;
  }
}

TEST(InputGradientTest, BoundaryUnitCountsAsInactive) {
  // Hidden unit 0 sits exactly on its boundary at x = (1, 1).
  Matrix w1(2, 2);
  w1 << 1.0, -1.0, 1.0, 1.0;
  const Network net({Layer(w1, Activation::kRelu), Layer(Matrix::Ones(1, 2), Activation::kIdentity)});
  const Vector g = InputGradient(net, Vec({1.0, 1.0}), LossSpec::Logit(0));
  EXPECT_EQ(g, Vec({1.0, 1.0}));
}

TEST(InputGradientTest, RejectsOutOfRangeLabels) {
  const Network net = RandomNet({2, 4, 3}, 1);
  EXPECT_THROW(InputGradient(net, Vec({0.1, 0.2}), LossSpec::CrossEntropy(3)), InvalidLabelError);
  EXPECT_THROW(InputGradient(net, Vec({0.1, 0.2}), LossSpec::Margin(-1, 0)), InvalidLabelError);
}

TEST(CrossEntropyTest, StableForLargeLogits) {
  EXPECT_NEAR(CrossEntropy(Vec({1000.0, 0.0}), 0), 0.0, 1e-12);
  EXPECT_NEAR(CrossEntropy(Vec({1000.0, 0.0}), 1), 1000.0, 1e-9);
  EXPECT_NEAR(CrossEntropy(Vec({0.0, 0.0}), 1), std::log(2.0), 1e-15);
}

LabeledDataset SeparableBlobs() {
  DatasetSpec spec;
  spec.kind = DatasetKind::kBlobs;
  spec.size = 200;
  spec.noise = 0.0;
  spec.seed = 3;
  return GenerateDataset(spec);
}

TEST(TrainTest, FitsSeparableBlobs) {
  const LabeledDataset data = SeparableBlobs();
  SgdConfig cfg;
  cfg.seed = 1;
  const int dims[] = {2, 16, 2};
  const Network net = Train(Network::Random(dims, 1), data, cfg);
  int correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) correct += Predict(net, data.inputs[i]) == data.labels[i];
  EXPECT_GE(correct, 0.99 * data.size());
  // A training point is classified as its own label.
  EXPECT_EQ(PredictTopK(net, data.inputs[0], 1), std::vector<int>{data.labels[0]});
}

TEST(TrainTest, ZeroEpochsLeavesParametersUnchanged) {
  const int dims[] = {2, 8, 2};
  const Network start = Network::Random(dims, 4);
  SgdConfig cfg;
  cfg.epochs = 0;
  EXPECT_TRUE(Train(start, SeparableBlobs(), cfg) == start);
}

TEST(TrainTest, SameSeedIsBitIdentical) {
  const int dims[] = {2, 8, 2};
  SgdConfig cfg;
  cfg.epochs = 20;
  cfg.seed = 77;
  const Network a = Train(Network::Random(dims, 4), SeparableBlobs(), cfg);
  const Network b = Train(Network::Random(dims, 4), SeparableBlobs(), cfg);
  EXPECT_TRUE(a == b);
}

TEST(TrainTest, HugeLearningRateDiverges) {
  // Linear model on overlapping classes: gradients never vanish and one step
  // pushes the logits past double range.
  const int dims[] = {2, 2};
  SgdConfig cfg;
  cfg.learning_rate = 1e308;
  cfg.epochs = 50;
  try {
    DatasetSpec spec;
    spec.kind = DatasetKind::kMoons;
    spec.size = 200;
    spec.noise = 0.3;
    Train(Network::Random(dims, 4), GenerateDataset(spec), cfg);
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    EXPECT_GE(e.epoch(), 0);
    EXPECT_GE(e.step(), 0);
  }
}

TEST(TopKTest, OrdersByScoreAndBreaksTiesByIndex) {
  EXPECT_EQ(TopK(Vec({0.1, 0.9, 0.5}), 1), std::vector<int>{1});
  EXPECT_EQ(TopK(Vec({0.5, 0.5}), 2), (std::vector<int>{0, 1}));
  EXPECT_EQ(TopK(Vec({0.2, 0.7, 0.7, 0.1}), 3), (std::vector<int>{1, 2, 0}));
  EXPECT_THROW(TopK(Vec({0.2, 0.7}), 3), std::invalid_argument);
  EXPECT_THROW(TopK(Vec({0.2, 0.7}), 0), std::invalid_argument);
}

TEST(ModelFileTest, RoundTripIsBitExact) {
  const Network net = RandomNet({3, 7, 5, 4}, 99, /*biased=*/true);
  std::stringstream ss;
  WriteModel(net, ss);
  EXPECT_TRUE(ReadModel(ss) == net);
}

TEST(ModelFileTest, TruncatedFileIsAParseError) {
  const Network net = RandomNet({3, 7, 4}, 99, /*biased=*/true);
  std::stringstream ss;
  WriteModel(net, ss);
  const std::string text = ss.str();
  std::istringstream cut(text.substr(0, text.size() / 2));
  try {
    ReadModel(cut);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_GT(e.line(), 1);
  }
}

TEST(ModelFileTest, RejectsWrongHeader) {
  std::istringstream in("relu-net v2 1 1 1\n");
  EXPECT_THROW(ReadModel(in), ParseError);
}

TEST(ModelFileTest, HandWrittenTinyModel) {
  // f(x) = 3 * relu(2x - 0.5) + 0.25
  std::istringstream in(
      "relu-net v1 1 1 2\n"
      "layer 1 1 relu\n"
      "2\n"
      "-0.5\n"
      "layer 1 1 identity\n"
      "3\n"
      "0.25\n");
  const Network net = ReadModel(in);
  EXPECT_DOUBLE_EQ(Logits(net, Vec({1.0}))[0], 3.0 * 1.5 + 0.25);
  EXPECT_DOUBLE_EQ(Logits(net, Vec({0.1}))[0], 0.25);
}

}  // namespace
}  // namespace postavg

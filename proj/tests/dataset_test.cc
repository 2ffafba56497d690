#include "postavg/dataset.h"

#include <sstream>

#include <gtest/gtest.h>

#include "postavg/errors.h"
#include "test_util.h"

namespace postavg {
namespace {

DatasetSpec Spec(DatasetKind kind, int size, double noise, std::uint64_t seed) {
  DatasetSpec s;
  s.kind = kind;
  s.size = size;
  s.noise = noise;
  s.seed = seed;
  return s;
}

TEST(GenerateDatasetTest, SameSeedSameData) {
  for (DatasetKind kind : {DatasetKind::kBlobs, DatasetKind::kMoons, DatasetKind::kGridDigits}) {
    const LabeledDataset a = GenerateDataset(Spec(kind, 50, 0.2, 9));
    const LabeledDataset b = GenerateDataset(Spec(kind, 50, 0.2, 9));
    ASSERT_EQ(a.size(), 50u);
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_EQ(a.inputs[i], b.inputs[i]);
      EXPECT_EQ(a.labels[i], b.labels[i]);
    }
    EXPECT_NO_THROW(a.Validate());
  }
}

TEST(GenerateDatasetTest, ShapesPerKind) {
  const LabeledDataset moons = GenerateDataset(Spec(DatasetKind::kMoons, 20, 0.1, 1));
  EXPECT_EQ(moons.input_dim, 2);
  EXPECT_EQ(moons.class_count, 2);
  const LabeledDataset digits = GenerateDataset(Spec(DatasetKind::kGridDigits, 20, 0.1, 1));
  EXPECT_EQ(digits.input_dim, 64);
  EXPECT_EQ(digits.class_count, 10);
  for (const Vector& x : digits.inputs) {
    EXPECT_GE(x.minCoeff(), 0.0);
    EXPECT_LE(x.maxCoeff(), 1.0);
  }
  DatasetSpec blobs = Spec(DatasetKind::kBlobs, 30, 0.0, 1);
  blobs.input_dim = 5;
  blobs.class_count = 3;
  const LabeledDataset b = GenerateDataset(blobs);
  EXPECT_EQ(b.input_dim, 5);
  EXPECT_EQ(b.class_count, 3);
  for (const Vector& x : b.inputs) {
    EXPECT_GE(x.minCoeff(), 0.0);
    EXPECT_LE(x.maxCoeff(), 1.0);
  }
}

TEST(GenerateDatasetTest, NoiselessBlobsAreLinearlySeparable) {
  // With zero noise every sample sits on its class centre, so the
  // perpendicular bisector of the two centres separates them.
  const LabeledDataset d = GenerateDataset(Spec(DatasetKind::kBlobs, 40, 0.0, 4));
  const Vector c0 = d.inputs[0];
  const Vector c1 = d.inputs[1];
  ASSERT_NE(d.labels[0], d.labels[1]);
  const Vector w = c1 - c0;
  const double b = -0.5 * (c1.squaredNorm() - c0.squaredNorm());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const int pred = w.dot(d.inputs[i]) + b > 0.0 ? d.labels[1] : d.labels[0];
    EXPECT_EQ(pred, d.labels[i]);
  }
}

TEST(GenerateDatasetTest, RejectsTooFewSamples) {
  EXPECT_THROW(GenerateDataset(Spec(DatasetKind::kGridDigits, 5, 0.1, 1)), std::invalid_argument);
  EXPECT_THROW(ParseDatasetKind("spirals"), std::invalid_argument);
}

TEST(SplitDatasetTest, PartitionsDeterministically) {
  const LabeledDataset d = GenerateDataset(Spec(DatasetKind::kMoons, 100, 0.1, 2));
  const auto [a, b] = SplitDataset(d, 0.6, 5);
  EXPECT_EQ(a.size(), 60u);
  EXPECT_EQ(b.size(), 40u);
  const auto [a2, b2] = SplitDataset(d, 0.6, 5);
  EXPECT_EQ(a.inputs.front(), a2.inputs.front());
  EXPECT_EQ(b.inputs.back(), b2.inputs.back());
}

TEST(DatasetFileTest, RoundTripIsExact) {
  const LabeledDataset d = GenerateDataset(Spec(DatasetKind::kMoons, 30, 0.3, 8));
  std::stringstream ss;
  WriteDataset(d, ss);
  const LabeledDataset r = ReadDataset(ss);
  ASSERT_EQ(r.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_EQ(r.inputs[i], d.inputs[i]);
    EXPECT_EQ(r.labels[i], d.labels[i]);
  }
}

TEST(DatasetFileTest, ReportsLineOfBadSample) {
  std::istringstream in("dataset v1 toy 2 2 2\n0 0.5 0.5\n1 0.5\n");
  try {
    ReadDataset(in);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3);
  }
  std::istringstream bad_label("dataset v1 toy 1 2 1\n4 0.5\n");
  EXPECT_THROW(ReadDataset(bad_label), ParseError);
}

TEST(LabeledDatasetTest, ValidateCatchesBadLabels) {
  LabeledDataset d{"x", 1, 2, {testutil::Vec({0.0})}, {2}};
  EXPECT_THROW(d.Validate(), InvalidLabelError);
  d.labels = {0, 1};
  EXPECT_THROW(d.Validate(), ShapeError);
}

}  // namespace
}  // namespace postavg

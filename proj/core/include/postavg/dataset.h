#ifndef POSTAVG_DATASET_H_
#define POSTAVG_DATASET_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "postavg/nn.h"

namespace postavg {

struct LabeledDataset {
  std::string name;
  int input_dim = 0;
  int class_count = 0;
  std::vector<Vector> inputs;
  std::vector<int> labels;

  std::size_t size() const { return inputs.size(); }
  bool empty() const { return inputs.empty(); }

  // Throws ShapeError / InvalidLabelError when the invariants do not hold.
  void Validate() const;
};

enum class DatasetKind { kBlobs, kMoons, kGridDigits };

DatasetKind ParseDatasetKind(const std::string& name);
const char* DatasetKindName(DatasetKind kind);

struct DatasetSpec {
  DatasetKind kind = DatasetKind::kMoons;
  int size = 500;
  double noise = 0.1;
  std::uint64_t seed = 0;
  // Only used by blobs; moons is always 2-D / 2-class and grid-digits 64-D / 10-class.
  int input_dim = 2;
  int class_count = 2;
};

// blobs: Gaussian clusters around seeded centres in [0,1]^n.
// moons: two interleaved half circles with isotropic Gaussian noise.
// grid-digits: 8x8 digit glyphs with per-pixel Gaussian noise, clamped to [0,1].
LabeledDataset GenerateDataset(const DatasetSpec& spec);

// Deterministic split; the first `train_count` samples of a seeded
// permutation go to the training half.
std::pair<LabeledDataset, LabeledDataset> SplitDataset(const LabeledDataset& data,
                                                       double train_fraction, std::uint64_t seed);

// Plain-text dataset file:
//   dataset v1 <name> <n> <class_count> <count>
//   <label> <x_1> ... <x_n>
void WriteDataset(const LabeledDataset& data, std::ostream& out);
LabeledDataset ReadDataset(std::istream& in);
void SaveDataset(const LabeledDataset& data, const std::string& path);
LabeledDataset LoadDataset(const std::string& path);

// Formats a double with 17 significant digits.
std::string FormatExact(double v);

}  // namespace postavg

#endif  // POSTAVG_DATASET_H_

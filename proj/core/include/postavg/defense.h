#ifndef POSTAVG_DEFENSE_H_
#define POSTAVG_DEFENSE_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "postavg/nn.h"

namespace postavg {

enum class Sampler { kRandom, kApprox };
enum class Aggregation { kLogits, kProbabilities };

Sampler ParseSampler(const std::string& name);
const char* SamplerName(Sampler s);
Aggregation ParseAggregation(const std::string& name);
const char* AggregationName(Aggregation a);

struct DefenseConfig {
  double radius = 1.0;
  int directions = 6;
  Sampler sampler = Sampler::kRandom;
  // Hidden layer index -> direction count. Empty means the default allocation.
  std::map<int, int> approx_per_layer;
  Aggregation aggregation = Aggregation::kLogits;
  std::uint64_t seed = 0;
  // Clip sample points to [clip_lo, clip_hi] before evaluation.
  bool clip = false;
  double clip_lo = 0.0;
  double clip_hi = 1.0;
  int top_k = 1;

  void Validate() const;
};

struct DirectionSet {
  std::vector<Vector> vectors;
  // Number of per-unit backward passes spent selecting the directions.
  int gradient_calls = 0;
  std::vector<std::string> warnings;

  std::size_t size() const { return vectors.size(); }
};

DirectionSet RandomDirections(int dim, int count, std::uint64_t seed);

// Per-input seed for the random sampler: the same (seed, x) always draws the
// same directions.
std::uint64_t InputSeed(std::uint64_t seed, const Vector& x);

// Splits `total` across the last three hidden layers, or across every hidden
// layer when there are fewer; earlier layers take the remainder.
std::map<int, int> DefaultApproxAllocation(const Network& net, int total);

// Normals of the closest hyperplanes of each configured layer. Only the
// selected units are back-propagated; zero-gradient units are skipped.
DirectionSet ApproxDirections(const Network& net, const Vector& x,
                              const std::map<int, int>& per_layer);

// x, then for each direction x + lambda*v with lambda in
// {-r, -2r/3, -r/3, r/3, 2r/3, r}.
std::vector<Vector> SamplePoints(const Vector& x, const DirectionSet& dirs, double radius);

DirectionSet SelectDirections(const Network& net, const Vector& x, const DefenseConfig& cfg);

struct DefendedPrediction {
  Vector output;  // averaged logits or probabilities
  std::vector<int> top_k;
  int point_count = 0;
  std::vector<std::string> warnings;
};

DefendedPrediction PostAveragePredict(const Network& net, const Vector& x, const DefenseConfig& cfg);

}  // namespace postavg

#endif  // POSTAVG_DEFENSE_H_

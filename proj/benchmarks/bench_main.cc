#include <random>

#include <benchmark/benchmark.h>

#include "postavg/defense.h"
#include "postavg/geometry.h"
#include "postavg/nn.h"
#include "postavg/spectral.h"

namespace {

using namespace postavg;

Network Net(std::initializer_list<int> dims, std::uint64_t seed) {
  const std::vector<int> d(dims);
  return Network::Random(d, seed);
}

Vector Point(int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vector x(dim);
  for (int i = 0; i < dim; ++i) x[i] = u(rng);
  return x;
}

void BM_Logits(benchmark::State& state) {
  const int width = static_cast<int>(state.range(0));
  const Network net = Net({64, width, width, 10}, 1);
  const Vector x = Point(64, 2);
  for (auto _ : state) benchmark::DoNotOptimize(Logits(net, x));
}
BENCHMARK(BM_Logits)->Arg(32)->Arg(256);

void BM_InputGradient(benchmark::State& state) {
  const Network net = Net({64, 256, 256, 10}, 1);
  const Vector x = Point(64, 2);
  for (auto _ : state) benchmark::DoNotOptimize(InputGradient(net, x, LossSpec::CrossEntropy(3)));
}
BENCHMARK(BM_InputGradient);

void BM_PostAveragePredict(benchmark::State& state) {
  const Network net = Net({64, 256, 256, 10}, 1);
  const Vector x = Point(64, 2);
  DefenseConfig cfg;
  cfg.directions = static_cast<int>(state.range(0));
  cfg.sampler = state.range(1) ? Sampler::kApprox : Sampler::kRandom;
  for (auto _ : state) benchmark::DoNotOptimize(PostAveragePredict(net, x, cfg));
}
BENCHMARK(BM_PostAveragePredict)->Args({6, 0})->Args({60, 0})->Args({6, 1})->Args({60, 1});

void BM_SimplexSpectrum(benchmark::State& state) {
  const Vector w = Point(static_cast<int>(state.range(0)), 3) * 20.0;
  for (auto _ : state) benchmark::DoNotOptimize(SimplexSpectrum(w));
}
BENCHMARK(BM_SimplexSpectrum)->Arg(2)->Arg(8)->Arg(32);

void BM_Decompose2d(benchmark::State& state) {
  const int width = static_cast<int>(state.range(0));
  const Network net = Net({2, width, width, 1}, 4);
  for (auto _ : state) benchmark::DoNotOptimize(Decompose2d(net));
}
BENCHMARK(BM_Decompose2d)->Arg(8)->Arg(64);

void BM_NetworkSpectrum(benchmark::State& state) {
  const Decomposition d = Decompose2d(Net({2, 32, 32, 1}, 4));
  const Vector w = Point(2, 5) * 20.0;
  for (auto _ : state) benchmark::DoNotOptimize(NetworkSpectrum(d.terms, w));
}
BENCHMARK(BM_NetworkSpectrum);

}  // namespace

BENCHMARK_MAIN();

#include "postavg/quadrature.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace postavg {
namespace {

constexpr int kPanelOrder = 8;

struct Rule {
  std::vector<double> nodes;    // on [0, 1]
  std::vector<double> weights;  // sum to 1
};

// Composite rule on [0,1] for one smooth piece.
Rule MakeRule(QuadRule kind, int resolution) {
  Rule r;
  if (kind == QuadRule::kSimpson) {
    const int m = resolution + resolution % 2;
    const double h = 1.0 / m;
    for (int i = 0; i <= m; ++i) {
      const double w = (i == 0 || i == m) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      r.nodes.push_back(i * h);
      r.weights.push_back(w * h / 3.0);
    }
    return r;
  }
  std::vector<double> x, w;
  GaussLegendre(kPanelOrder, x, w);
  const int panels = std::max(1, resolution / kPanelOrder);
  const double h = 1.0 / panels;
  for (int p = 0; p < panels; ++p) {
    for (int i = 0; i < kPanelOrder; ++i) {
      r.nodes.push_back(h * (p + 0.5 * (x[i] + 1.0)));
      r.weights.push_back(0.5 * h * w[i]);
    }
  }
  return r;
}

class Integrator {
 public:
  Integrator(const std::function<Complex(std::span<const double>)>& g, const QuadRegion& region,
             Rule rule)
      : g_(g), region_(region), rule_(std::move(rule)), point_(static_cast<std::size_t>(region.dim)) {}

  Complex Run() { return Axis(0); }

 private:
  Complex Axis(int axis) {
    const std::span<const double> prefix(point_.data(), static_cast<std::size_t>(axis));
    Interval lim = region_.limits ? region_.limits(axis, prefix) : Interval{};
    if (!(lim.hi > lim.lo)) return 0.0;
    std::vector<double> cuts = {lim.lo};
    if (region_.breakpoints) {
      for (double b : region_.breakpoints(axis, prefix)) {
        if (b > lim.lo && b < lim.hi) cuts.push_back(b);
      }
    }
    cuts.push_back(lim.hi);
    std::sort(cuts.begin(), cuts.end());
    Complex sum = 0.0;
    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
      const double a = cuts[c];
      const double len = cuts[c + 1] - a;
      if (len <= 0.0) continue;
      Complex piece = 0.0;
      for (std::size_t i = 0; i < rule_.nodes.size(); ++i) {
        point_[static_cast<std::size_t>(axis)] = a + len * rule_.nodes[i];
        const Complex v = axis + 1 == region_.dim ? g_(point_) : Axis(axis + 1);
        piece += rule_.weights[i] * v;
      }
      sum += len * piece;
    }
    return sum;
  }

  const std::function<Complex(std::span<const double>)>& g_;
  const QuadRegion& region_;
  Rule rule_;
  std::vector<double> point_;
};

}  // namespace

void GaussLegendre(int order, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(static_cast<std::size_t>(order), 0.0);
  weights.assign(static_cast<std::size_t>(order), 0.0);
  for (int i = 0; i < (order + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 1; k <= order; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
      }
      dp = order * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    nodes[static_cast<std::size_t>(i)] = -z;
    nodes[static_cast<std::size_t>(order - 1 - i)] = z;
    const double w = 2.0 / ((1.0 - z * z) * dp * dp);
    weights[static_cast<std::size_t>(i)] = w;
    weights[static_cast<std::size_t>(order - 1 - i)] = w;
  }
}

QuadResult IntegrateComplex(const std::function<Complex(std::span<const double>)>& g,
                            const QuadRegion& region, const QuadConfig& cfg) {
  if (region.dim < 1) throw std::invalid_argument("region dimension must be positive");
  if (cfg.resolution < 2) throw std::invalid_argument("resolution must be >= 2");
  const Complex coarse = Integrator(g, region, MakeRule(cfg.rule, cfg.resolution)).Run();
  const Complex fine = Integrator(g, region, MakeRule(cfg.rule, 2 * cfg.resolution)).Run();
  QuadResult r;
  r.value = fine;
  r.error_estimate = std::abs(fine - coarse);
  r.converged = r.error_estimate <= cfg.tolerance;
  return r;
}

QuadResult QuadratureFt(const ScalarField& f, const Vector& omega, const QuadConfig& cfg,
                        const QuadRegion* region) {
  const int n = static_cast<int>(omega.size());
  if (n < 1 || n > 3) throw std::invalid_argument("QuadratureFt supports 1 <= n <= 3");
  if (cfg.resolution < 64) throw std::invalid_argument("QuadratureFt needs resolution >= 64");
  QuadRegion box;
  box.dim = n;
  const QuadRegion& reg = region ? *region : box;
  if (reg.dim != n) throw std::invalid_argument("region dimension differs from omega");
  const auto g = [&](std::span<const double> x) {
    double phase = 0.0;
    for (int k = 0; k < n; ++k) phase += omega[k] * x[static_cast<std::size_t>(k)];
    return f(x) * std::polar(1.0, -phase);
  };
  QuadResult r = IntegrateComplex(g, reg, cfg);
  const double c = std::pow(2.0 * std::numbers::pi, -0.5 * n);
  r.value *= c;
  r.error_estimate *= c;
  r.converged = r.error_estimate <= cfg.tolerance;
  return r;
}

QuadResult MonteCarloFt(const ScalarField& f, const Vector& omega, std::int64_t samples,
                        std::uint64_t seed) {
  const int n = static_cast<int>(omega.size());
  if (samples < 2) throw std::invalid_argument("need at least two samples");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> x(static_cast<std::size_t>(n));
  Complex sum = 0.0;
  double sq = 0.0;
  for (std::int64_t s = 0; s < samples; ++s) {
    double phase = 0.0;
    for (int k = 0; k < n; ++k) {
      x[static_cast<std::size_t>(k)] = u(rng);
      phase += omega[k] * x[static_cast<std::size_t>(k)];
    }
    const Complex v = f(x) * std::polar(1.0, -phase);
    sum += v;
    sq += std::norm(v);
  }
  const double count = static_cast<double>(samples);
  const Complex mean = sum / count;
  const double var = std::max(0.0, sq / count - std::norm(mean));
  const double c = std::pow(2.0 * std::numbers::pi, -0.5 * n);
  QuadResult r;
  r.value = c * mean;
  r.error_estimate = c * std::sqrt(var / count);
  r.converged = true;
  return r;
}

QuadRegion UnitSimplexRegion(int dim) {
  QuadRegion r;
  r.dim = dim;
  r.limits = [](int, std::span<const double> prefix) {
    double used = 0.0;
    for (double v : prefix) used += v;
    return Interval{0.0, std::max(0.0, 1.0 - used)};
  };
  return r;
}

}  // namespace postavg

#include "postavg/attacks.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "postavg/errors.h"

namespace postavg {
namespace {

Vector Sign(const Vector& g) {
  return g.unaryExpr([](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

void Finish(AttackResult& r, const Network& net, const Vector& x, const Vector& candidate,
            int label, const ThreatModel& tm) {
  const Vector delta = candidate - x;
  r.linf_norm = delta.lpNorm<Eigen::Infinity>();
  r.l2_norm = delta.norm();
  r.success = IsAdversarial(net, candidate, label, tm.miss_k);
  ++r.forward_calls;
  if (r.success) r.adversarial_x = candidate;
}

// Rejects (rather than clips) minimal-perturbation results outside the budget.
void EnforceBudget(AttackResult& r, const ThreatModel& tm) {
  if (r.success && r.linf_norm > tm.epsilon) {
    r.success = false;
    r.adversarial_x.reset();
  }
}

// The miss_k-th largest logit among classes other than `label`, and its index.
std::pair<double, int> KthOther(const Vector& logits, int label, int miss_k) {
  Vector others = logits;
  others[label] = -std::numeric_limits<double>::infinity();
  const std::vector<int> order = TopK(others, std::min<int>(miss_k, static_cast<int>(logits.size()) - 1));
  const int j = order.back();
  return {logits[j], j};
}

std::uint64_t MixSeed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

ThreatModel ThreatModel::Uniform(int dim, double epsilon, double lo, double hi, int miss_k) {
  ThreatModel tm;
  tm.epsilon = epsilon;
  tm.lower = Vector::Constant(dim, lo);
  tm.upper = Vector::Constant(dim, hi);
  tm.miss_k = miss_k;
  return tm;
}

void ThreatModel::Validate(int dim) const {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw std::invalid_argument("epsilon must be >= 0");
  if (miss_k < 1) throw std::invalid_argument("miss_k must be >= 1");
  if (lower.size() != dim || upper.size() != dim) {
    throw ShapeError("domain bounds do not match the input dimension");
  }
  if (!(lower.array() < upper.array()).all()) throw std::invalid_argument("need lo < hi componentwise");
}

Vector ThreatModel::Clip(const Vector& x) const { return x.cwiseMax(lower).cwiseMin(upper); }

bool IsAdversarial(const Network& net, const Vector& x, int true_label, int miss_k) {
  if (true_label < 0 || true_label >= net.class_count()) {
    throw InvalidLabelError("true label " + std::to_string(true_label) + " out of range");
  }
  const std::vector<int> top = PredictTopK(net, x, std::min(miss_k, net.class_count()));
  return std::find(top.begin(), top.end(), true_label) == top.end();
}

void CheckAttackResult(const Network& net, const Vector& x, int true_label,
                       const ThreatModel& tm, const AttackResult& result) {
  if (!result.success) return;
  if (!result.adversarial_x) throw InvariantViolation("successful attack without a sample");
  const Vector& adv = *result.adversarial_x;
  if ((adv - x).lpNorm<Eigen::Infinity>() > tm.epsilon + 1e-9) {
    throw InvariantViolation("adversarial sample exceeds the l_inf budget");
  }
  if ((adv.array() < tm.lower.array()).any() || (adv.array() > tm.upper.array()).any()) {
    throw InvariantViolation("adversarial sample leaves the domain box");
  }
  if (!IsAdversarial(net, adv, true_label, tm.miss_k)) {
    throw InvariantViolation("reported adversarial sample is classified correctly");
  }
}

AttackResult Fgsm(const Network& net, const Vector& x, int label, const ThreatModel& tm) {
  tm.Validate(net.input_dim());
  AttackResult r;
  const Vector g = InputGradient(net, x, LossSpec::CrossEntropy(label));
  ++r.gradient_calls;
  const Vector candidate = tm.Clip(x + tm.epsilon * Sign(g));
  Finish(r, net, x, candidate, label, tm);
  return r;
}

AttackResult Pgd(const Network& net, const Vector& x, int label, const ThreatModel& tm,
                 const PgdConfig& cfg) {
  tm.Validate(net.input_dim());
  const double step = cfg.step_size.value_or(tm.epsilon / 10.0);
  if (!(step > 0.0) && tm.epsilon > 0.0) throw std::invalid_argument("PGD step size must be > 0");
  const Vector lo = x.array() - tm.epsilon;
  const Vector hi = x.array() + tm.epsilon;
  const auto project = [&](const Vector& v) { return tm.Clip(v.cwiseMax(lo).cwiseMin(hi)); };

  AttackResult r;
  Vector cur = x;
  if (cfg.random_start && tm.epsilon > 0.0) {
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> u(-tm.epsilon, tm.epsilon);
    Vector noise(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) noise[i] = u(rng);
    cur = project(x + noise);
  }
  for (int it = 0; it < cfg.steps; ++it) {
    const Vector g = InputGradient(net, cur, LossSpec::CrossEntropy(label));
    ++r.gradient_calls;
    cur = project(cur + step * Sign(g));
    ++r.forward_calls;
    if (IsAdversarial(net, cur, label, tm.miss_k)) break;
  }
  Finish(r, net, x, cur, label, tm);
  return r;
}

AttackResult DeepFool(const Network& net, const Vector& x, int label, const ThreatModel& tm,
                      const DeepFoolConfig& cfg) {
  tm.Validate(net.input_dim());
  if (net.class_count() < 2) throw std::invalid_argument("DeepFool needs at least two classes");
  AttackResult r;
  if (IsAdversarial(net, x, label, tm.miss_k)) {
    Finish(r, net, x, x, label, tm);
    return r;
  }
  Vector total = Vector::Zero(x.size());
  Vector cur = x;
  for (int it = 0; it < cfg.max_iter; ++it) {
    const ForwardTrace trace = Forward(net, cur);
    ++r.forward_calls;
    double best = std::numeric_limits<double>::infinity();
    Vector step;
    for (int j = 0; j < net.class_count(); ++j) {
      if (j == label) continue;
      const double f = trace.logits[j] - trace.logits[label];
      if (f > 0.0) continue;  // already ranked above the true label
      const Vector w = InputGradient(net, trace, LossSpec::Margin(j, label));
      ++r.gradient_calls;
      const double norm = w.norm();
      if (norm == 0.0) continue;
      const double dist = std::abs(f) / norm;
      if (dist < best) {
        best = dist;
        step = (std::abs(f) / (norm * norm)) * w;
      }
    }
    if (!std::isfinite(best)) break;  // no linearized boundary reachable
    total += step;
    cur = tm.Clip(x + (1.0 + cfg.overshoot) * total);
    if (IsAdversarial(net, cur, label, tm.miss_k)) {
      Finish(r, net, x, cur, label, tm);
      EnforceBudget(r, tm);
      return r;
    }
  }
  const Vector delta = cur - x;
  r.linf_norm = delta.lpNorm<Eigen::Infinity>();
  r.l2_norm = delta.norm();
  return r;
}

AttackResult CarliniWagnerL2(const Network& net, const Vector& x, int label,
                             const ThreatModel& tm, const CwConfig& cfg) {
  tm.Validate(net.input_dim());
  if (!tm.lower.allFinite() || !tm.upper.allFinite()) {
    throw std::invalid_argument("C&W needs finite domain bounds");
  }
  const Vector half_span = 0.5 * (tm.upper - tm.lower);
  const Vector mid = 0.5 * (tm.upper + tm.lower);
  const auto from_tanh = [&](const Vector& w) -> Vector {
    return mid.array() + half_span.array() * w.array().tanh();
  };
  const Vector w0 = (((x - mid).array() / half_span.array()) * 0.999999).atanh();

  AttackResult r;
  double lower_c = 0.0;
  double upper_c = 1e10;
  double c = cfg.initial_const;
  double best_l2 = std::numeric_limits<double>::infinity();
  Vector best_x;

  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kAdamEps = 1e-8;

  for (int bs = 0; bs < cfg.binary_search_steps; ++bs) {
    Vector w = w0;
    Vector m = Vector::Zero(x.size());
    Vector v = Vector::Zero(x.size());
    bool found = false;
    double prev_loss = std::numeric_limits<double>::infinity();
    const int check_every = std::max(1, cfg.max_iter / 10);
    for (int it = 0; it < cfg.max_iter; ++it) {
      const Vector xp = from_tanh(w);
      const ForwardTrace trace = Forward(net, xp);
      ++r.forward_calls;
      const auto [other, j] = KthOther(trace.logits, label, tm.miss_k);
      const double hinge = trace.logits[label] - other + cfg.confidence;
      const Vector delta = xp - x;
      const double dist2 = delta.squaredNorm();
      const double loss = dist2 + c * std::max(hinge, 0.0);

      if (hinge <= 0.0 && IsAdversarial(net, xp, label, tm.miss_k)) {
        found = true;
        if (dist2 < best_l2 * best_l2) {
          best_l2 = std::sqrt(dist2);
          best_x = xp;
        }
      }
      Vector grad = 2.0 * delta;
      if (hinge > 0.0) {
        grad += c * InputGradient(net, trace, LossSpec::Margin(label, j));
        ++r.gradient_calls;
      }
      const Vector dw = grad.array() * half_span.array() * (1.0 - w.array().tanh().square());
      m = kBeta1 * m + (1.0 - kBeta1) * dw;
      v = kBeta2 * v + (1.0 - kBeta2) * dw.cwiseAbs2();
      const double t = it + 1.0;
      const Vector m_hat = m / (1.0 - std::pow(kBeta1, t));
      const Vector v_hat = v / (1.0 - std::pow(kBeta2, t));
      w -= (cfg.learning_rate * m_hat.array() / (v_hat.array().sqrt() + kAdamEps)).matrix();

      if ((it + 1) % check_every == 0) {
        if (loss > prev_loss * 0.9999) break;
        prev_loss = loss;
      }
    }
    if (found) {
      upper_c = std::min(upper_c, c);
      if (upper_c < 1e9) c = 0.5 * (lower_c + upper_c);
    } else {
      lower_c = std::max(lower_c, c);
      c = upper_c < 1e9 ? 0.5 * (lower_c + upper_c) : c * 10.0;
    }
  }

  if (best_x.size() == 0) {
    r.success = false;
    return r;
  }
  Finish(r, net, x, tm.Clip(best_x), label, tm);
  EnforceBudget(r, tm);
  return r;
}

AttackKind ParseAttackKind(const std::string& name) {
  if (name == "fgsm") return AttackKind::kFgsm;
  if (name == "pgd") return AttackKind::kPgd;
  if (name == "deepfool" || name == "df") return AttackKind::kDeepFool;
  if (name == "cw" || name == "cw-l2") return AttackKind::kCw;
  throw std::invalid_argument("unknown attack '" + name + "'");
}

const char* AttackKindName(AttackKind kind) {
  switch (kind) {
    case AttackKind::kFgsm:
      return "fgsm";
    case AttackKind::kPgd:
      return "pgd";
    case AttackKind::kDeepFool:
      return "deepfool";
    case AttackKind::kCw:
      return "cw";
  }
  return "?";
}

AttackResult RunAttack(const Network& net, const Vector& x, int label, const ThreatModel& tm,
                       const AttackSpec& spec, std::uint64_t sample_index) {
  switch (spec.kind) {
    case AttackKind::kFgsm:
      return Fgsm(net, x, label, tm);
    case AttackKind::kPgd: {
      PgdConfig cfg = spec.pgd;
      cfg.seed = MixSeed(cfg.seed, sample_index);
      return Pgd(net, x, label, tm, cfg);
    }
    case AttackKind::kDeepFool:
      return DeepFool(net, x, label, tm, spec.deepfool);
    case AttackKind::kCw:
      return CarliniWagnerL2(net, x, label, tm, spec.cw);
  }
  throw std::invalid_argument("unknown attack kind");
}

}  // namespace postavg

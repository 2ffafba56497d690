#ifndef POSTAVG_ATTACKS_H_
#define POSTAVG_ATTACKS_H_

#include <cstdint>
#include <optional>
#include <string>

#include "postavg/nn.h"

namespace postavg {

// l_inf-bounded white-box threat model. An input is adversarial when its
// true label is not among the model's top miss_k predictions.
struct ThreatModel {
  double epsilon = 8.0 / 255.0;
  Vector lower;  // per-component domain bounds
  Vector upper;
  int miss_k = 1;

  // Same [lo, hi] box on every component.
  static ThreatModel Uniform(int dim, double epsilon, double lo, double hi, int miss_k = 1);
  // Throws std::invalid_argument unless epsilon >= 0, lo < hi and miss_k >= 1.
  void Validate(int dim) const;
  Vector Clip(const Vector& x) const;
};

struct AttackResult {
  bool success = false;
  std::optional<Vector> adversarial_x;
  int gradient_calls = 0;
  int forward_calls = 0;
  double linf_norm = 0.0;
  double l2_norm = 0.0;
};

bool IsAdversarial(const Network& net, const Vector& x, int true_label, int miss_k);

// Throws InvariantViolation if a successful result breaks the budget, the
// domain box, or is not adversarial.
void CheckAttackResult(const Network& net, const Vector& x, int true_label,
                       const ThreatModel& tm, const AttackResult& result);

AttackResult Fgsm(const Network& net, const Vector& x, int label, const ThreatModel& tm);

struct PgdConfig {
  int steps = 40;
  std::optional<double> step_size;  // defaults to epsilon / 10
  bool random_start = true;
  std::uint64_t seed = 0;
};

AttackResult Pgd(const Network& net, const Vector& x, int label, const ThreatModel& tm,
                 const PgdConfig& cfg = {});

struct DeepFoolConfig {
  int max_iter = 50;
  double overshoot = 0.02;
};

// Successful results whose l_inf norm exceeds epsilon are rejected, not clipped.
AttackResult DeepFool(const Network& net, const Vector& x, int label, const ThreatModel& tm,
                      const DeepFoolConfig& cfg = {});

struct CwConfig {
  double confidence = 0.0;
  int binary_search_steps = 9;
  int max_iter = 1000;
  double learning_rate = 0.01;
  double initial_const = 1e-3;
};

// Minimizes |delta|_2^2 + c * max(z_y - z_other + confidence, 0) in tanh space
// (Adam), binary-searching c. z_other is the miss_k-th largest non-true logit.
AttackResult CarliniWagnerL2(const Network& net, const Vector& x, int label,
                             const ThreatModel& tm, const CwConfig& cfg = {});

enum class AttackKind { kFgsm, kPgd, kDeepFool, kCw };

AttackKind ParseAttackKind(const std::string& name);
const char* AttackKindName(AttackKind kind);

struct AttackSpec {
  AttackKind kind = AttackKind::kPgd;
  PgdConfig pgd;
  DeepFoolConfig deepfool;
  CwConfig cw;
};

// Dispatch; for PGD the seed is mixed with `sample_index` so that each input
// gets its own random start.
AttackResult RunAttack(const Network& net, const Vector& x, int label, const ThreatModel& tm,
                       const AttackSpec& spec, std::uint64_t sample_index = 0);

}  // namespace postavg

#endif  // POSTAVG_ATTACKS_H_

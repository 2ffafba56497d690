#ifndef POSTAVG_HARNESS_H_
#define POSTAVG_HARNESS_H_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "postavg/attacks.h"
#include "postavg/dataset.h"
#include "postavg/defense.h"
#include "postavg/nn.h"

namespace postavg {

// A clean set with every successfully attacked sample replaced by its
// adversarial version. Misclassified originals stay unchanged and unmasked.
struct AttackedSet {
  LabeledDataset data;
  std::vector<bool> adv_mask;
  int adv_count = 0;
  std::string attack;
  double epsilon = 0.0;
  int miss_k = 1;

  std::size_t size() const { return data.size(); }
  // Throws InvariantViolation when the mask and count disagree.
  void Validate() const;
};

AttackedSet BuildAttackedSet(const Network& net, const LabeledDataset& clean, const AttackSpec& spec,
                             const ThreatModel& tm);

void WriteAttackedSet(const AttackedSet& set, std::ostream& out);
AttackedSet ReadAttackedSet(std::istream& in);
void SaveAttackedSet(const AttackedSet& set, const std::string& path);
AttackedSet LoadAttackedSet(const std::string& path);

// Top-k labels for an input.
using Classifier = std::function<std::vector<int>(const Vector& x, int k)>;

Classifier Undefended(const Network& net);
Classifier Defended(const Network& net, const DefenseConfig& cfg);

double Accuracy(const Classifier& model, const LabeledDataset& data, int k);
// Empty when the set holds no adversarial samples.
std::optional<double> DefenceRate(const Classifier& model, const AttackedSet& set, int k);

struct ExperimentConfig {
  DatasetSpec dataset;
  double train_fraction = 0.6;
  int eval_size = 0;  // 0 keeps the whole test split

  std::string model_path;  // load instead of training when set
  std::vector<int> hidden = {32};
  SgdConfig sgd;

  double epsilon = 0.1;
  double lower = 0.0;
  double upper = 1.0;
  int miss_k = 1;

  std::vector<AttackKind> attacks = {AttackKind::kFgsm};
  PgdConfig pgd;
  DeepFoolConfig deepfool;
  CwConfig cw;

  std::vector<Sampler> samplers = {Sampler::kRandom};
  Aggregation aggregation = Aggregation::kLogits;
  bool clip = false;
  std::vector<double> radii = {0.5};
  std::vector<int> directions = {6};
  std::vector<int> eval_k;  // empty means {miss_k}

  std::uint64_t data_seed = 1;
  std::uint64_t model_seed = 2;
  std::uint64_t attack_seed = 3;
  std::uint64_t defense_seed = 4;
};

// Plain-text config: a "postavg-config v1" header line followed by INI
// sections. Schema errors throw ConfigError naming "section.key".
ExperimentConfig ParseExperimentConfig(std::istream& in);
ExperimentConfig LoadExperimentConfig(const std::string& path);

struct ReportRow {
  std::string dataset;
  std::string attack;
  std::string sampler;
  std::string aggregation;
  double epsilon = 0.0;
  double radius = 0.0;
  int directions = 0;
  int miss_k = 1;
  int k = 1;
  int samples = 0;
  int adv_count = 0;
  double clean_acc_undefended = 0.0;
  double attacked_acc_undefended = 0.0;
  double clean_acc_defended = 0.0;
  double attacked_acc_defended = 0.0;
  std::optional<double> defence_rate;
  std::uint64_t data_seed = 0;
  std::uint64_t model_seed = 0;
  std::uint64_t attack_seed = 0;
  std::uint64_t defense_seed = 0;
};

struct EvaluationReport {
  std::vector<ReportRow> rows;
  std::vector<std::string> warnings;
};

struct ExperimentArtifacts {
  std::optional<Network> model;
  LabeledDataset eval_set;
  std::vector<AttackedSet> attacked;
};

// Trains or loads the model, attacks the evaluation split with every
// configured attack and evaluates each (attack, sampler, radius, K, k) point.
EvaluationReport RunExperiment(const ExperimentConfig& cfg, ExperimentArtifacts* artifacts = nullptr);

}  // namespace postavg

#endif  // POSTAVG_HARNESS_H_

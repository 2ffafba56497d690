#include "postavg/harness.h"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "postavg/errors.h"

namespace postavg {
namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>>& ConfigSchema() {
  static const std::map<std::string, std::set<std::string>> schema = {
      {"dataset", {"kind", "size", "noise", "input_dim", "class_count", "train_fraction", "eval_size"}},
      {"model", {"path", "hidden", "epochs", "learning_rate", "momentum", "batch_size"}},
      {"threat", {"epsilon", "lower", "upper", "miss_k"}},
      {"attacks",
       {"list", "pgd_steps", "pgd_step_size", "pgd_random_start", "deepfool_max_iter",
        "deepfool_overshoot", "cw_confidence", "cw_binary_search_steps", "cw_max_iter",
        "cw_learning_rate", "cw_initial_const"}},
      {"defenses", {"samplers", "aggregation", "radius", "directions", "clip"}},
      {"sweep", {"radius", "directions", "eval_k"}},
      {"seeds", {"data", "model", "attack", "defense"}},
  };
  return schema;
}

class ConfigReader {
 public:
  explicit ConfigReader(const pt::ptree& tree) : tree_(tree) {}

  const std::string* Raw(const std::string& section, const std::string& key) const {
    const auto sec = tree_.find(section);
    if (sec == tree_.not_found()) return nullptr;
    const auto it = sec->second.find(key);
    if (it == sec->second.not_found()) return nullptr;
    return &it->second.data();
  }

  template <typename T>
  void Get(const std::string& section, const std::string& key, T& out) const {
    const std::string* raw = Raw(section, key);
    if (raw == nullptr) return;
    out = Convert<T>(section + "." + key, boost::trim_copy(*raw));
  }

  template <typename T>
  void GetList(const std::string& section, const std::string& key, std::vector<T>& out) const {
    const std::string* raw = Raw(section, key);
    if (raw == nullptr) return;
    const std::string field = section + "." + key;
    std::vector<std::string> parts;
    boost::split(parts, *raw, boost::is_any_of(","));
    out.clear();
    for (std::string& p : parts) {
      boost::trim(p);
      if (p.empty()) throw ConfigError(field, "empty list element");
      out.push_back(Convert<T>(field, p));
    }
    if (out.empty()) throw ConfigError(field, "list must not be empty");
  }

 private:
  template <typename T>
  static T Convert(const std::string& field, const std::string& text) {
    if constexpr (std::is_same_v<T, std::string>) {
      return text;
    } else if constexpr (std::is_same_v<T, bool>) {
      if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
      if (text == "false" || text == "0" || text == "no" || text == "off") return false;
      throw ConfigError(field, "expected a boolean, got '" + text + "'");
    } else {
      std::istringstream ss(text);
      T value{};
      char extra = 0;
      if (!(ss >> value) || (ss >> extra)) {
        throw ConfigError(field, "expected a number, got '" + text + "'");
      }
      return value;
    }
  }

  const pt::ptree& tree_;
};

template <typename Fn>
auto Wrap(const std::string& field, Fn&& fn) {
  try {
    return fn();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(field, e.what());
  }
}

void Require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigError(field, what);
}

Network ObtainModel(const ExperimentConfig& cfg, const LabeledDataset& train) {
  if (!cfg.model_path.empty()) {
    Network net = LoadModel(cfg.model_path);
    if (net.input_dim() != train.input_dim || net.class_count() != train.class_count) {
      throw ConfigError("model.path", "model shape does not match the dataset");
    }
    return net;
  }
  std::vector<int> dims = {train.input_dim};
  dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
  dims.push_back(train.class_count);
  SgdConfig sgd = cfg.sgd;
  sgd.seed = cfg.model_seed;
  return Train(Network::Random(dims, cfg.model_seed), train, sgd);
}

}  // namespace

void AttackedSet::Validate() const {
  data.Validate();
  if (adv_mask.size() != data.size()) throw InvariantViolation("adversarial mask length mismatch");
  const auto count = std::count(adv_mask.begin(), adv_mask.end(), true);
  if (count != adv_count) throw InvariantViolation("adv_count does not match the mask");
}

AttackedSet BuildAttackedSet(const Network& net, const LabeledDataset& clean, const AttackSpec& spec,
                             const ThreatModel& tm) {
  clean.Validate();
  if (clean.input_dim != net.input_dim() || clean.class_count != net.class_count()) {
    throw ShapeError("dataset shape does not match the model");
  }
  AttackedSet out;
  out.data = clean;
  out.adv_mask.assign(clean.size(), false);
  out.attack = AttackKindName(spec.kind);
  out.epsilon = tm.epsilon;
  out.miss_k = tm.miss_k;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    const Vector& x = clean.inputs[i];
    const int y = clean.labels[i];
    if (IsAdversarial(net, x, y, tm.miss_k)) continue;  // already misclassified: kept as is
    const AttackResult r = RunAttack(net, x, y, tm, spec, i);
    CheckAttackResult(net, x, y, tm, r);
    if (r.success) {
      out.data.inputs[i] = *r.adversarial_x;
      out.adv_mask[i] = true;
      ++out.adv_count;
    }
  }
  return out;
}

void WriteAttackedSet(const AttackedSet& set, std::ostream& out) {
  out << "attacked v1 " << (set.data.name.empty() ? "unnamed" : set.data.name) << ' '
      << set.data.input_dim << ' ' << set.data.class_count << ' ' << set.size() << ' '
      << set.adv_count << ' ' << (set.attack.empty() ? "none" : set.attack) << ' '
      << FormatExact(set.epsilon) << ' ' << set.miss_k << '\n';
  for (std::size_t i = 0; i < set.size(); ++i) {
    out << set.data.labels[i] << ' ' << (set.adv_mask[i] ? 1 : 0);
    for (int j = 0; j < set.data.input_dim; ++j) out << ' ' << FormatExact(set.data.inputs[i][j]);
    out << '\n';
  }
}

AttackedSet ReadAttackedSet(std::istream& in) {
  std::string line;
  int line_no = 0;
  auto next = [&]() {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
    }
    return false;
  };
  if (!next()) throw ParseError(1, "empty attacked-set file");
  std::istringstream hs(line);
  std::string magic, version;
  long long count = -1;
  AttackedSet s;
  if (!(hs >> magic >> version >> s.data.name >> s.data.input_dim >> s.data.class_count >> count >>
        s.adv_count >> s.attack >> s.epsilon >> s.miss_k) ||
      magic != "attacked" || version != "v1") {
    throw ParseError(line_no,
                     "expected header 'attacked v1 <name> <n> <class_count> <count> <adv_count> "
                     "<attack> <epsilon> <miss_k>'");
  }
  if (s.data.input_dim <= 0 || s.data.class_count <= 0 || count < 0) {
    throw ParseError(line_no, "header dims must be positive");
  }
  for (long long i = 0; i < count; ++i) {
    if (!next()) throw ParseError(line_no + 1, "unexpected end of file at sample " + std::to_string(i));
    std::istringstream ss(line);
    int label = -1;
    int mask = -1;
    if (!(ss >> label >> mask) || (mask != 0 && mask != 1)) {
      throw ParseError(line_no, "sample " + std::to_string(i) + ": expected '<label> <0|1> values'");
    }
    if (label < 0 || label >= s.data.class_count) {
      throw ParseError(line_no, "sample " + std::to_string(i) + ": label out of range");
    }
    Vector x(s.data.input_dim);
    for (int j = 0; j < s.data.input_dim; ++j) {
      if (!(ss >> x[j])) {
        throw ParseError(line_no, "sample " + std::to_string(i) + ": expected " +
                                      std::to_string(s.data.input_dim) + " values");
      }
    }
    s.data.inputs.push_back(std::move(x));
    s.data.labels.push_back(label);
    s.adv_mask.push_back(mask == 1);
  }
  if (std::count(s.adv_mask.begin(), s.adv_mask.end(), true) != s.adv_count) {
    throw ParseError(1, "adv_count in header does not match the mask column");
  }
  return s;
}

void SaveAttackedSet(const AttackedSet& set, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  WriteAttackedSet(set, out);
}

AttackedSet LoadAttackedSet(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open attacked-set file " + path);
  return ReadAttackedSet(in);
}

Classifier Undefended(const Network& net) {
  return [&net](const Vector& x, int k) { return PredictTopK(net, x, std::min(k, net.class_count())); };
}

Classifier Defended(const Network& net, const DefenseConfig& cfg) {
  cfg.Validate();
  return [&net, cfg](const Vector& x, int k) {
    DefenseConfig c = cfg;
    c.top_k = k;
    return PostAveragePredict(net, x, c).top_k;
  };
}

double Accuracy(const Classifier& model, const LabeledDataset& data, int k) {
  if (data.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::vector<int> top = model(data.inputs[i], k);
    correct += std::find(top.begin(), top.end(), data.labels[i]) != top.end();
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

std::optional<double> DefenceRate(const Classifier& model, const AttackedSet& set, int k) {
  if (set.adv_count == 0) return std::nullopt;
  int defended = 0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (!set.adv_mask[i]) continue;
    const std::vector<int> top = model(set.data.inputs[i], k);
    defended += std::find(top.begin(), top.end(), set.data.labels[i]) != top.end();
  }
  return static_cast<double>(defended) / set.adv_count;
}

ExperimentConfig ParseExperimentConfig(std::istream& in) {
  std::string header;
  while (std::getline(in, header) && boost::trim_copy(header).empty()) {
  }
  if (boost::trim_copy(header) != "postavg-config v1") {
    throw ConfigError("header", "expected first line 'postavg-config v1'");
  }
  std::stringstream body;
  body << in.rdbuf();
  pt::ptree tree;
  try {
    pt::read_ini(body, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("ini", "line " + std::to_string(e.line() + 1) + ": " + e.message());
  }
  for (const auto& [section, keys] : tree) {
    const auto it = ConfigSchema().find(section);
    if (it == ConfigSchema().end()) throw ConfigError(section, "unknown section");
    if (keys.empty() && !keys.data().empty()) throw ConfigError(section, "key outside a section");
    for (const auto& kv : keys) {
      if (!it->second.count(kv.first)) throw ConfigError(section + "." + kv.first, "unknown key");
    }
  }

  const ConfigReader r(tree);
  ExperimentConfig c;
  std::string kind = DatasetKindName(c.dataset.kind);
  r.Get("dataset", "kind", kind);
  c.dataset.kind = Wrap("dataset.kind", [&] { return ParseDatasetKind(kind); });
  r.Get("dataset", "size", c.dataset.size);
  r.Get("dataset", "noise", c.dataset.noise);
  r.Get("dataset", "input_dim", c.dataset.input_dim);
  r.Get("dataset", "class_count", c.dataset.class_count);
  r.Get("dataset", "train_fraction", c.train_fraction);
  r.Get("dataset", "eval_size", c.eval_size);
  Require(c.dataset.size > 0, "dataset.size", "must be > 0");
  Require(c.dataset.noise >= 0.0, "dataset.noise", "must be >= 0");
  Require(c.train_fraction > 0.0 && c.train_fraction < 1.0, "dataset.train_fraction",
          "must be in (0, 1)");
  Require(c.eval_size >= 0, "dataset.eval_size", "must be >= 0");

  r.Get("model", "path", c.model_path);
  r.GetList("model", "hidden", c.hidden);
  r.Get("model", "epochs", c.sgd.epochs);
  r.Get("model", "learning_rate", c.sgd.learning_rate);
  r.Get("model", "momentum", c.sgd.momentum);
  r.Get("model", "batch_size", c.sgd.batch_size);
  for (int h : c.hidden) Require(h > 0, "model.hidden", "layer widths must be > 0");
  Require(c.sgd.epochs >= 0, "model.epochs", "must be >= 0");
  Require(c.sgd.learning_rate > 0.0, "model.learning_rate", "must be > 0");
  Require(c.sgd.batch_size > 0, "model.batch_size", "must be > 0");

  r.Get("threat", "epsilon", c.epsilon);
  r.Get("threat", "lower", c.lower);
  r.Get("threat", "upper", c.upper);
  r.Get("threat", "miss_k", c.miss_k);
  Require(c.epsilon >= 0.0, "threat.epsilon", "must be >= 0");
  Require(c.lower < c.upper, "threat.upper", "must exceed threat.lower");
  Require(c.miss_k >= 1, "threat.miss_k", "must be >= 1");

  std::vector<std::string> attack_names;
  r.GetList("attacks", "list", attack_names);
  if (!attack_names.empty()) {
    c.attacks.clear();
    for (const std::string& a : attack_names) {
      c.attacks.push_back(Wrap("attacks.list", [&] { return ParseAttackKind(a); }));
    }
  }
  r.Get("attacks", "pgd_steps", c.pgd.steps);
  if (r.Raw("attacks", "pgd_step_size") != nullptr) {
    double step = 0.0;
    r.Get("attacks", "pgd_step_size", step);
    Require(step > 0.0, "attacks.pgd_step_size", "must be > 0");
    c.pgd.step_size = step;
  }
  r.Get("attacks", "pgd_random_start", c.pgd.random_start);
  r.Get("attacks", "deepfool_max_iter", c.deepfool.max_iter);
  r.Get("attacks", "deepfool_overshoot", c.deepfool.overshoot);
  r.Get("attacks", "cw_confidence", c.cw.confidence);
  r.Get("attacks", "cw_binary_search_steps", c.cw.binary_search_steps);
  r.Get("attacks", "cw_max_iter", c.cw.max_iter);
  r.Get("attacks", "cw_learning_rate", c.cw.learning_rate);
  r.Get("attacks", "cw_initial_const", c.cw.initial_const);
  Require(c.pgd.steps >= 1, "attacks.pgd_steps", "must be >= 1");
  Require(c.deepfool.max_iter >= 1, "attacks.deepfool_max_iter", "must be >= 1");
  Require(c.deepfool.overshoot >= 0.0, "attacks.deepfool_overshoot", "must be >= 0");
  Require(c.cw.confidence >= 0.0, "attacks.cw_confidence", "must be >= 0");
  Require(c.cw.binary_search_steps >= 1, "attacks.cw_binary_search_steps", "must be >= 1");
  Require(c.cw.max_iter >= 1, "attacks.cw_max_iter", "must be >= 1");
  Require(c.cw.learning_rate > 0.0, "attacks.cw_learning_rate", "must be > 0");
  Require(c.cw.initial_const > 0.0, "attacks.cw_initial_const", "must be > 0");

  std::vector<std::string> sampler_names;
  r.GetList("defenses", "samplers", sampler_names);
  if (!sampler_names.empty()) {
    c.samplers.clear();
    for (const std::string& s : sampler_names) {
      c.samplers.push_back(Wrap("defenses.samplers", [&] { return ParseSampler(s); }));
    }
  }
  std::string aggregation = AggregationName(c.aggregation);
  r.Get("defenses", "aggregation", aggregation);
  c.aggregation = Wrap("defenses.aggregation", [&] { return ParseAggregation(aggregation); });
  r.Get("defenses", "clip", c.clip);
  r.GetList("defenses", "radius", c.radii);
  r.GetList("defenses", "directions", c.directions);
  if (r.Raw("defenses", "radius") && r.Raw("sweep", "radius")) {
    throw ConfigError("sweep.radius", "set either defenses.radius or sweep.radius");
  }
  if (r.Raw("defenses", "directions") && r.Raw("sweep", "directions")) {
    throw ConfigError("sweep.directions", "set either defenses.directions or sweep.directions");
  }
  r.GetList("sweep", "radius", c.radii);
  r.GetList("sweep", "directions", c.directions);
  r.GetList("sweep", "eval_k", c.eval_k);
  for (double v : c.radii) Require(v > 0.0, "sweep.radius", "radii must be > 0");
  for (int v : c.directions) Require(v >= 1, "sweep.directions", "counts must be >= 1");
  for (int v : c.eval_k) Require(v >= 1, "sweep.eval_k", "k must be >= 1");

  r.Get("seeds", "data", c.data_seed);
  r.Get("seeds", "model", c.model_seed);
  r.Get("seeds", "attack", c.attack_seed);
  r.Get("seeds", "defense", c.defense_seed);
  c.dataset.seed = c.data_seed;
  return c;
}

ExperimentConfig LoadExperimentConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("path", "cannot open config file " + path);
  return ParseExperimentConfig(in);
}

EvaluationReport RunExperiment(const ExperimentConfig& cfg, ExperimentArtifacts* artifacts) {
  DatasetSpec dspec = cfg.dataset;
  dspec.seed = cfg.data_seed;
  const LabeledDataset full = Wrap("dataset", [&] { return GenerateDataset(dspec); });
  auto [train, test] = SplitDataset(full, cfg.train_fraction, cfg.data_seed);
  if (cfg.eval_size > 0 && static_cast<std::size_t>(cfg.eval_size) < test.size()) {
    test.inputs.resize(static_cast<std::size_t>(cfg.eval_size));
    test.labels.resize(static_cast<std::size_t>(cfg.eval_size));
  }
  if (test.empty()) throw ConfigError("dataset.train_fraction", "evaluation split is empty");
  const Network net = ObtainModel(cfg, train);

  ThreatModel tm = ThreatModel::Uniform(net.input_dim(), cfg.epsilon, cfg.lower, cfg.upper, cfg.miss_k);
  const std::vector<int> ks = cfg.eval_k.empty() ? std::vector<int>{cfg.miss_k} : cfg.eval_k;

  EvaluationReport report;
  std::vector<AttackedSet> attacked;
  for (AttackKind kind : cfg.attacks) {
    AttackSpec spec;
    spec.kind = kind;
    spec.pgd = cfg.pgd;
    spec.pgd.seed = cfg.attack_seed;
    spec.deepfool = cfg.deepfool;
    spec.cw = cfg.cw;
    attacked.push_back(BuildAttackedSet(net, test, spec, tm));
  }

  const Classifier plain = Undefended(net);
  std::map<int, double> clean_plain;
  for (int k : ks) clean_plain[k] = Accuracy(plain, test, k);

  for (Sampler sampler : cfg.samplers) {
    for (double radius : cfg.radii) {
      for (int directions : cfg.directions) {
        DefenseConfig dc;
        dc.radius = radius;
        dc.directions = directions;
        dc.sampler = sampler;
        dc.aggregation = cfg.aggregation;
        dc.seed = cfg.defense_seed;
        dc.clip = cfg.clip;
        dc.clip_lo = cfg.lower;
        dc.clip_hi = cfg.upper;
        if (sampler == Sampler::kApprox && net.hidden_layer_count() > 0) {
          const std::map<int, int> alloc = DefaultApproxAllocation(net, directions);
          for (const auto& [layer, count] : alloc) {
            if (count > net.layer(layer).out_dim()) {
              report.warnings.push_back("approx K=" + std::to_string(directions) + ": layer " +
                                        std::to_string(layer) + " has fewer units than requested");
            }
          }
        }
        const Classifier defended = Defended(net, dc);
        for (int k : ks) {
          const double clean_def = Accuracy(defended, test, k);
          for (const AttackedSet& set : attacked) {
            ReportRow row;
            row.dataset = DatasetKindName(cfg.dataset.kind);
            row.attack = set.attack;
            row.sampler = SamplerName(sampler);
            row.aggregation = AggregationName(cfg.aggregation);
            row.epsilon = cfg.epsilon;
            row.radius = radius;
            row.directions = directions;
            row.miss_k = cfg.miss_k;
            row.k = k;
            row.samples = static_cast<int>(set.size());
            row.adv_count = set.adv_count;
            row.clean_acc_undefended = clean_plain[k];
            row.attacked_acc_undefended = Accuracy(plain, set.data, k);
            row.clean_acc_defended = clean_def;
            row.attacked_acc_defended = Accuracy(defended, set.data, k);
            row.defence_rate = DefenceRate(defended, set, k);
            row.data_seed = cfg.data_seed;
            row.model_seed = cfg.model_seed;
            row.attack_seed = cfg.attack_seed;
            row.defense_seed = cfg.defense_seed;
            report.rows.push_back(std::move(row));
          }
        }
      }
    }
  }
  if (artifacts != nullptr) {
    artifacts->model = net;
    artifacts->eval_set = test;
    artifacts->attacked = std::move(attacked);
  }
  return report;
}

}  // namespace postavg

// postavg: command line front end for training, attacking, defending and
// analysing small ReLU classifiers.
//
// Exit codes: 0 success, 1 usage or input error, 2 invariant violation.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "postavg/attacks.h"
#include "postavg/dataset.h"
#include "postavg/defense.h"
#include "postavg/errors.h"
#include "postavg/geometry.h"
#include "postavg/harness.h"
#include "postavg/nn.h"
#include "postavg/report.h"
#include "postavg/spectral.h"

namespace {

using namespace postavg;

constexpr int kExitUsage = 1;
constexpr int kExitInvariant = 2;

std::vector<double> ParseReals(const std::string& text) {
  std::vector<double> out;
  std::string item;
  std::istringstream ss(text);
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    if (item.find_first_not_of(" \t", used) != std::string::npos) {
      throw std::invalid_argument("bad number '" + item + "'");
    }
    out.push_back(v);
  }
  return out;
}

Vector ParsePoint(const std::string& text, int dim, const std::string& what) {
  const std::vector<double> v = ParseReals(text);
  if (static_cast<int>(v.size()) != dim) {
    throw std::invalid_argument(what + " needs " + std::to_string(dim) + " comma-separated values");
  }
  return Eigen::Map<const Vector>(v.data(), dim);
}

std::string Join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

// Datasets and attacked sets are both accepted wherever samples are read.
AttackedSet LoadSamples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string magic;
  in >> magic;
  in.seekg(0);
  if (magic == "attacked") return ReadAttackedSet(in);
  AttackedSet s;
  s.data = ReadDataset(in);
  s.adv_mask.assign(s.data.size(), false);
  return s;
}

std::ostream& OpenOut(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path);
  if (!file) throw std::runtime_error("cannot open " + path + " for writing");
  return file;
}

// The attacked set must come from `clean` under its own threat model and
// fool `net` on every masked sample.
void CheckAttackedAgainst(const Network& net, const LabeledDataset& clean, const AttackedSet& attacked) {
  if (attacked.size() != clean.size()) throw std::invalid_argument("attacked set size differs from clean set");
  attacked.Validate();
  for (std::size_t i = 0; i < clean.size(); ++i) {
    if (attacked.data.labels[i] != clean.labels[i]) {
      throw InvariantViolation("sample " + std::to_string(i) + ": label differs from the clean set");
    }
    const double linf = (attacked.data.inputs[i] - clean.inputs[i]).lpNorm<Eigen::Infinity>();
    if (!attacked.adv_mask[i]) {
      if (linf != 0.0) throw InvariantViolation("sample " + std::to_string(i) + ": unmasked sample was modified");
      continue;
    }
    if (linf > attacked.epsilon + 1e-9) {
      throw InvariantViolation("sample " + std::to_string(i) + ": perturbation " + FormatExact(linf) +
                               " exceeds epsilon " + FormatExact(attacked.epsilon));
    }
    if (!IsAdversarial(net, attacked.data.inputs[i], attacked.data.labels[i], attacked.miss_k)) {
      throw InvariantViolation("sample " + std::to_string(i) + ": masked sample is not adversarial for this model");
    }
  }
}

struct DefenseFlags {
  double radius = 0.5;
  int directions = 6;
  std::string sampler = "random";
  std::string aggregation = "logits";
  std::uint64_t seed = 4;
  bool clip = false;
  double lower = 0.0;
  double upper = 1.0;

  void Register(CLI::App* cmd) {
    cmd->add_option("--radius", radius, "Neighborhood radius r")->capture_default_str();
    cmd->add_option("--directions,-K", directions, "Number of directions K")->capture_default_str();
    cmd->add_option("--sampler", sampler, "random | approx")->capture_default_str();
    cmd->add_option("--aggregation", aggregation, "logits | probabilities")->capture_default_str();
    cmd->add_option("--defense-seed", seed, "Direction sampler seed")->capture_default_str();
    cmd->add_flag("--clip", clip, "Clip sample points to [--lower, --upper]");
  }

  DefenseConfig Build(int top_k) const {
    DefenseConfig c;
    c.radius = radius;
    c.directions = directions;
    c.sampler = ParseSampler(sampler);
    c.aggregation = ParseAggregation(aggregation);
    c.seed = seed;
    c.clip = clip;
    c.clip_lo = lower;
    c.clip_hi = upper;
    c.top_k = top_k;
    c.Validate();
    return c;
  }
};

int CmdDataset(const std::string& kind, DatasetSpec spec, const std::string& out_path,
               const std::string& test_path, double train_fraction) {
  spec.kind = ParseDatasetKind(kind);
  const LabeledDataset data = GenerateDataset(spec);
  if (test_path.empty()) {
    SaveDataset(data, out_path);
    std::printf("wrote %zu samples to %s\n", data.size(), out_path.c_str());
    return 0;
  }
  const auto [train, test] = SplitDataset(data, train_fraction, spec.seed);
  SaveDataset(train, out_path);
  SaveDataset(test, test_path);
  std::printf("wrote %zu train samples to %s and %zu test samples to %s\n", train.size(),
              out_path.c_str(), test.size(), test_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Post-averaging defense and Fourier analysis of ReLU networks"};
  app.require_subcommand(1);

  // dataset
  auto* ds = app.add_subcommand("dataset", "Generate a synthetic dataset");
  std::string ds_kind = "moons", ds_out, ds_test;
  DatasetSpec ds_spec;
  double ds_fraction = 0.6;
  ds->add_option("--kind", ds_kind, "blobs | moons | grid-digits")->capture_default_str();
  ds->add_option("--size", ds_spec.size)->capture_default_str();
  ds->add_option("--noise", ds_spec.noise)->capture_default_str();
  ds->add_option("--seed", ds_spec.seed)->capture_default_str();
  ds->add_option("--input-dim", ds_spec.input_dim, "blobs only")->capture_default_str();
  ds->add_option("--classes", ds_spec.class_count, "blobs only")->capture_default_str();
  ds->add_option("--out,-o", ds_out, "Output file (train split when --test-out is given)")->required();
  ds->add_option("--test-out", ds_test, "Also split off a test set into this file");
  ds->add_option("--train-fraction", ds_fraction)->capture_default_str();

  // train
  auto* tr = app.add_subcommand("train", "Train a ReLU classifier with SGD");
  std::string tr_data, tr_out, tr_hidden = "32";
  SgdConfig tr_cfg;
  bool tr_unbiased = false;
  tr->add_option("--data,-d", tr_data, "Training dataset")->required();
  tr->add_option("--hidden", tr_hidden, "Comma-separated hidden widths")->capture_default_str();
  tr->add_option("--epochs", tr_cfg.epochs)->capture_default_str();
  tr->add_option("--lr", tr_cfg.learning_rate)->capture_default_str();
  tr->add_option("--momentum", tr_cfg.momentum)->capture_default_str();
  tr->add_option("--batch-size", tr_cfg.batch_size)->capture_default_str();
  tr->add_option("--seed", tr_cfg.seed)->capture_default_str();
  tr->add_flag("--unbiased", tr_unbiased, "Keep all biases at zero");
  tr->add_option("--out,-o", tr_out, "Model output file")->required();

  // attack
  auto* at = app.add_subcommand("attack", "Build an attacked set from a clean dataset");
  std::string at_model, at_data, at_name = "pgd", at_out, at_rows;
  double at_eps = 0.1, at_lo = 0.0, at_hi = 1.0;
  int at_k = 1;
  AttackSpec at_spec;
  std::uint64_t at_seed = 3;
  double at_step = 0.0;
  bool at_no_rs = false;
  at->add_option("--model,-m", at_model)->required();
  at->add_option("--data,-d", at_data)->required();
  at->add_option("--attack,-a", at_name, "fgsm | pgd | deepfool | cw")->capture_default_str();
  at->add_option("--epsilon", at_eps)->capture_default_str();
  at->add_option("--lower", at_lo, "Domain lower bound")->capture_default_str();
  at->add_option("--upper", at_hi, "Domain upper bound")->capture_default_str();
  at->add_option("--miss-k", at_k)->capture_default_str();
  at->add_option("--seed", at_seed)->capture_default_str();
  at->add_option("--steps", at_spec.pgd.steps, "PGD steps")->capture_default_str();
  at->add_option("--step-size", at_step, "PGD step size (default epsilon/10)");
  at->add_flag("--no-random-start", at_no_rs);
  at->add_option("--max-iter", at_spec.deepfool.max_iter, "DeepFool iterations")->capture_default_str();
  at->add_option("--overshoot", at_spec.deepfool.overshoot)->capture_default_str();
  at->add_option("--confidence", at_spec.cw.confidence, "C&W confidence")->capture_default_str();
  at->add_option("--cw-iter", at_spec.cw.max_iter)->capture_default_str();
  at->add_option("--cw-search-steps", at_spec.cw.binary_search_steps)->capture_default_str();
  at->add_option("--out,-o", at_out, "Attacked-set output file")->required();
  at->add_option("--rows", at_rows, "Per-sample result rows (default stdout)");

  // defend
  auto* df = app.add_subcommand("defend", "Post-averaged predictions for every sample");
  std::string df_model, df_data, df_out;
  int df_k = 1;
  DefenseFlags df_flags;
  df->add_option("--model,-m", df_model)->required();
  df->add_option("--data,-d", df_data, "Dataset or attacked set")->required();
  df->add_option("--top-k", df_k)->capture_default_str();
  df->add_option("--lower", df_flags.lower, "Clip lower bound")->capture_default_str();
  df->add_option("--upper", df_flags.upper, "Clip upper bound")->capture_default_str();
  df_flags.Register(df);
  df->add_option("--out,-o", df_out, "Per-sample rows (default stdout)");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Accuracy and defence rate on a clean and attacked set");
  std::string ev_model, ev_clean, ev_attacked, ev_out;
  int ev_k = 1;
  DefenseFlags ev_flags;
  bool ev_table = false;
  ev->add_option("--model,-m", ev_model)->required();
  ev->add_option("--clean", ev_clean, "Clean dataset")->required();
  ev->add_option("--attacked", ev_attacked, "Attacked set built from --clean")->required();
  ev->add_option("--k", ev_k, "Top-k used for correctness")->capture_default_str();
  ev->add_option("--lower", ev_flags.lower, "Clip lower bound")->capture_default_str();
  ev->add_option("--upper", ev_flags.upper, "Clip upper bound")->capture_default_str();
  ev_flags.Register(ev);
  ev->add_flag("--table", ev_table, "Aligned table instead of tab-separated records");
  ev->add_option("--out,-o", ev_out, "Report output (default stdout)");

  // spectrum
  auto* sp = app.add_subcommand("spectrum", "Closed-form spectrum of an unbiased 2-input network");
  std::string sp_model, sp_out;
  std::vector<std::string> sp_omegas;
  int sp_index = 0, sp_count = 16;
  double sp_radius = 0.5, sp_max = 50.0, sp_angle = 0.3;
  sp->add_option("--model,-m", sp_model)->required();
  sp->add_option("--output-index", sp_index)->capture_default_str();
  sp->add_option("--omega", sp_omegas, "Explicit frequency 'w1,w2' (repeatable)");
  sp->add_option("--max", sp_max, "Largest |w| of the radial grid")->capture_default_str();
  sp->add_option("--count", sp_count, "Radial grid points (log-spaced from 1 to --max, plus 0)")
      ->capture_default_str();
  sp->add_option("--angle", sp_angle, "Direction of the radial grid, radians")->capture_default_str();
  sp->add_option("--radius", sp_radius, "Averaging radius r")->capture_default_str();
  sp->add_option("--out,-o", sp_out, "Rows output (default stdout)");

  // region-stats
  auto* rs = app.add_subcommand("region-stats", "Linear-region statistics at an input");
  std::string rs_model, rs_x, rs_x2;
  bool rs_rows = false;
  rs->add_option("--model,-m", rs_model)->required();
  rs->add_option("--x", rs_x, "Input point 'x1,x2,...'")->required();
  rs->add_option("--x2", rs_x2, "Second point for the crossing count");
  rs->add_flag("--rows", rs_rows, "Machine-readable key<TAB>value rows");

  // run
  auto* rn = app.add_subcommand("run", "Full experiment from a config file");
  std::string rn_config, rn_out, rn_table;
  rn->add_option("--config,-c", rn_config)->required()->check(CLI::ExistingFile);
  rn->add_option("--out,-o", rn_out, "Tab-separated report (default stdout)");
  rn->add_option("--table", rn_table, "Also write the aligned table to this file ('-' = stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*ds) return CmdDataset(ds_kind, ds_spec, ds_out, ds_test, ds_fraction);

    if (*tr) {
      const LabeledDataset data = LoadDataset(tr_data);
      data.Validate();
      std::vector<int> dims = {data.input_dim};
      for (double h : ParseReals(tr_hidden)) dims.push_back(static_cast<int>(h));
      dims.push_back(data.class_count);
      tr_cfg.train_biases = !tr_unbiased;
      const Network net = Train(Network::Random(dims, tr_cfg.seed), data, tr_cfg);
      SaveModel(net, tr_out);
      std::printf("train accuracy %s (%zu samples, dims %s)\n",
                  FormatRate(Accuracy(Undefended(net), data, 1)).c_str(), data.size(), Join(dims).c_str());
      return 0;
    }

    if (*at) {
      const Network net = LoadModel(at_model);
      const LabeledDataset data = LoadDataset(at_data);
      const ThreatModel tm = ThreatModel::Uniform(net.input_dim(), at_eps, at_lo, at_hi, at_k);
      tm.Validate(net.input_dim());
      at_spec.kind = ParseAttackKind(at_name);
      at_spec.pgd.seed = at_seed;
      at_spec.pgd.random_start = !at_no_rs;
      if (at_step > 0.0) at_spec.pgd.step_size = at_step;
      const AttackedSet set = BuildAttackedSet(net, data, at_spec, tm);
      SaveAttackedSet(set, at_out);
      std::ofstream file;
      std::ostream& rows = OpenOut(at_rows, file);
      rows << "index\tlabel\tadversarial\tlinf\tl2\tprediction\n";
      for (std::size_t i = 0; i < set.size(); ++i) {
        const Vector delta = set.data.inputs[i] - data.inputs[i];
        rows << i << '\t' << set.data.labels[i] << '\t' << (set.adv_mask[i] ? 1 : 0) << '\t'
             << FormatExact(delta.lpNorm<Eigen::Infinity>()) << '\t' << FormatExact(delta.norm()) << '\t'
             << Predict(net, set.data.inputs[i]) << '\n';
      }
      std::fprintf(stderr, "%s: %d adversarial of %zu samples\n", set.attack.c_str(), set.adv_count,
                   set.size());
      return 0;
    }

    if (*df) {
      const Network net = LoadModel(df_model);
      const AttackedSet set = LoadSamples(df_data);
      const DefenseConfig cfg = df_flags.Build(df_k);
      std::ofstream file;
      std::ostream& out = OpenOut(df_out, file);
      out << "index\tlabel\tadversarial\tundefended\tdefended\tcorrect\n";
      int correct = 0;
      for (std::size_t i = 0; i < set.size(); ++i) {
        const DefendedPrediction p = PostAveragePredict(net, set.data.inputs[i], cfg);
        const std::vector<int> plain = PredictTopK(net, set.data.inputs[i], std::min(df_k, net.class_count()));
        const bool ok = std::find(p.top_k.begin(), p.top_k.end(), set.data.labels[i]) != p.top_k.end();
        correct += ok;
        out << i << '\t' << set.data.labels[i] << '\t' << (set.adv_mask[i] ? 1 : 0) << '\t'
            << Join(plain) << '\t' << Join(p.top_k) << '\t' << (ok ? 1 : 0) << '\n';
      }
      const std::optional<double> rate = DefenceRate(Defended(net, cfg), set, df_k);
      std::fprintf(stderr, "defended accuracy %s, defence rate %s (%d adversarial)\n",
                   FormatRate(set.size() ? static_cast<double>(correct) / set.size() : 0.0).c_str(),
                   rate ? FormatRate(*rate).c_str() : "n/a", set.adv_count);
      return 0;
    }

    if (*ev) {
      const Network net = LoadModel(ev_model);
      const LabeledDataset clean = LoadDataset(ev_clean);
      const AttackedSet attacked = LoadSamples(ev_attacked);
      CheckAttackedAgainst(net, clean, attacked);
      const DefenseConfig cfg = ev_flags.Build(ev_k);
      const Classifier plain = Undefended(net);
      const Classifier defended = Defended(net, cfg);
      EvaluationReport report;
      ReportRow row;
      row.dataset = clean.name;
      row.attack = attacked.attack.empty() ? "none" : attacked.attack;
      row.sampler = SamplerName(cfg.sampler);
      row.aggregation = AggregationName(cfg.aggregation);
      row.epsilon = attacked.epsilon;
      row.radius = cfg.radius;
      row.directions = cfg.directions;
      row.miss_k = attacked.miss_k;
      row.k = ev_k;
      row.samples = static_cast<int>(clean.size());
      row.adv_count = attacked.adv_count;
      row.clean_acc_undefended = Accuracy(plain, clean, ev_k);
      row.attacked_acc_undefended = Accuracy(plain, attacked.data, ev_k);
      row.clean_acc_defended = Accuracy(defended, clean, ev_k);
      row.attacked_acc_defended = Accuracy(defended, attacked.data, ev_k);
      row.defence_rate = DefenceRate(defended, attacked, ev_k);
      row.defense_seed = cfg.seed;
      report.rows.push_back(row);
      std::ofstream file;
      std::ostream& out = OpenOut(ev_out, file);
      if (ev_table) {
        WriteReportTable(report, out);
      } else {
        WriteReportTsv(report, out);
      }
      return 0;
    }

    if (*sp) {
      const Network net = LoadModel(sp_model);
      const Decomposition d = Decompose2d(net, sp_index);
      std::vector<FrequencyVector> omegas;
      for (const std::string& s : sp_omegas) omegas.push_back(ParsePoint(s, 2, "--omega"));
      if (omegas.empty()) {
        if (sp_count < 1 || !(sp_max > 1.0)) throw std::invalid_argument("need --count >= 1 and --max > 1");
        const Vector dir = (Vector(2) << std::cos(sp_angle), std::sin(sp_angle)).finished();
        omegas.push_back(Vector::Zero(2));
        for (int i = 0; i < sp_count; ++i) {
          const double t = sp_count == 1 ? sp_max : std::pow(sp_max, static_cast<double>(i) / (sp_count - 1));
          omegas.push_back(t * dir);
        }
      }
      const std::vector<DecayRow> rows = SpectrumDecayReport(d.terms, omegas, sp_radius);
      std::ofstream file;
      std::ostream& out = OpenOut(sp_out, file);
      out << "# terms " << d.terms.size() << " radius " << FormatExact(sp_radius) << '\n';
      out << "omega_norm\tspectrum_abs\tsmoothed_abs\tmultiplier\tprinted_ratio\n";
      for (const DecayRow& r : rows) {
        out << FormatExact(r.omega_norm) << '\t' << FormatExact(r.spectrum_abs) << '\t'
            << FormatExact(r.smoothed_abs) << '\t' << FormatExact(r.multiplier) << '\t'
            << FormatExact(r.printed_ratio) << '\n';
      }
      return 0;
    }

    if (*rs) {
      const Network net = LoadModel(rs_model);
      const Vector x = ParsePoint(rs_x, net.input_dim(), "--x");
      const std::vector<HyperplaneDistance> dist = ExactDistances(net, x);
      std::vector<double> finite;
      for (const HyperplaneDistance& h : dist) {
        if (std::isfinite(h.distance)) finite.push_back(h.distance);
      }
      std::vector<std::pair<std::string, std::string>> kv;
      kv.emplace_back("hidden_units", std::to_string(net.hidden_unit_count()));
      kv.emplace_back("max_region_count",
                      MaxRegionCount(static_cast<unsigned>(net.hidden_unit_count()),
                                     static_cast<unsigned>(net.input_dim()))
                          .str());
      if (net.input_dim() == 2 && net.is_unbiased()) {
        kv.emplace_back("sectors", std::to_string(Decompose2d(net).terms.size()));
      } else {
        kv.emplace_back("sectors", "n/a");
      }
      kv.emplace_back("min_distance", finite.empty() ? "inf" : FormatExact(finite.front()));
      kv.emplace_back("median_distance", finite.empty() ? "inf" : FormatExact(finite[finite.size() / 2]));
      if (!rs_x2.empty()) {
        const Vector x2 = ParsePoint(rs_x2, net.input_dim(), "--x2");
        kv.emplace_back("crossings", std::to_string(CrossingCount(net, x, x2)));
        kv.emplace_back("fluctuation_scale", FormatExact(FluctuationScale(net, x, x2)));
      }
      std::size_t width = 0;
      for (const auto& p : kv) width = std::max(width, p.first.size());
      for (const auto& [k, v] : kv) {
        if (rs_rows) {
          std::cout << k << '\t' << v << '\n';
        } else {
          std::cout << k << std::string(width - k.size() + 2, ' ') << v << '\n';
        }
      }
      return 0;
    }

    if (*rn) {
      const ExperimentConfig cfg = LoadExperimentConfig(rn_config);
      const EvaluationReport report = RunExperiment(cfg);
      std::ofstream file;
      WriteReportTsv(report, OpenOut(rn_out, file));
      if (!rn_table.empty()) {
        std::ofstream tfile;
        WriteReportTable(report, OpenOut(rn_table, tfile));
      }
      for (const std::string& w : report.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
      return 0;
    }
  } catch (const InvariantViolation& e) {
    std::fprintf(stderr, "invariant violation: %s\n", e.what());
    return kExitInvariant;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitUsage;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "parse error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
  return kExitUsage;
}

#include "postavg/dataset.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "postavg/errors.h"

namespace postavg {
namespace {

// 8x8 glyphs for the digits 0-9, '#' = ink.
constexpr std::array<std::array<const char*, 8>, 10> kDigitGlyphs = {{
    {"..####..", ".##..##.", ".##..##.", ".##..##.", ".##..##.", ".##..##.", ".##..##.", "..####.."},
    {"...##...", "..###...", ".####...", "...##...", "...##...", "...##...", "...##...", ".######."},
    {"..####..", ".##..##.", ".....##.", "....##..", "...##...", "..##....", ".##.....", ".######."},
    {"..####..", ".##..##.", ".....##.", "...###..", ".....##.", ".....##.", ".##..##.", "..####.."},
    {"....##..", "...###..", "..####..", ".##.##..", ".######.", "....##..", "....##..", "....##.."},
    {".######.", ".##.....", ".##.....", ".#####..", ".....##.", ".....##.", ".##..##.", "..####.."},
    {"..####..", ".##.....", ".##.....", ".#####..", ".##..##.", ".##..##.", ".##..##.", "..####.."},
    {".######.", ".....##.", "....##..", "....##..", "...##...", "...##...", "..##....", "..##...."},
    {"..####..", ".##..##.", ".##..##.", "..####..", ".##..##.", ".##..##.", ".##..##.", "..####.."},
    {"..####..", ".##..##.", ".##..##.", "..#####.", ".....##.", ".....##.", ".....##.", "..####.."},
}};

LabeledDataset MakeBlobs(const DatasetSpec& spec, std::mt19937_64& rng) {
  LabeledDataset d;
  d.name = "blobs";
  d.input_dim = spec.input_dim;
  d.class_count = spec.class_count;
  std::uniform_real_distribution<double> centre(0.2, 0.8);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Vector> centres(static_cast<std::size_t>(spec.class_count));
  for (auto& c : centres) {
    c.resize(spec.input_dim);
    for (int j = 0; j < spec.input_dim; ++j) c[j] = centre(rng);
  }
  for (int i = 0; i < spec.size; ++i) {
    const int label = i % spec.class_count;
    Vector x = centres[static_cast<std::size_t>(label)];
    for (int j = 0; j < spec.input_dim; ++j) x[j] += spec.noise * gauss(rng);
    d.inputs.push_back(std::move(x));
    d.labels.push_back(label);
  }
  return d;
}

LabeledDataset MakeMoons(const DatasetSpec& spec, std::mt19937_64& rng) {
  LabeledDataset d;
  d.name = "moons";
  d.input_dim = 2;
  d.class_count = 2;
  std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int i = 0; i < spec.size; ++i) {
    const int label = i % 2;
    const double t = angle(rng);
    Vector x(2);
    if (label == 0) {
      x << std::cos(t), std::sin(t);
    } else {
      x << 1.0 - std::cos(t), 0.5 - std::sin(t);
    }
    x[0] += spec.noise * gauss(rng);
    x[1] += spec.noise * gauss(rng);
    d.inputs.push_back(std::move(x));
    d.labels.push_back(label);
  }
  return d;
}

LabeledDataset MakeGridDigits(const DatasetSpec& spec, std::mt19937_64& rng) {
  LabeledDataset d;
  d.name = "grid-digits";
  d.input_dim = 64;
  d.class_count = 10;
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int i = 0; i < spec.size; ++i) {
    const int label = i % 10;
    const auto& glyph = kDigitGlyphs[static_cast<std::size_t>(label)];
    Vector x(64);
    for (int r = 0; r < 8; ++r) {
      for (int c = 0; c < 8; ++c) {
        const double ink = glyph[static_cast<std::size_t>(r)][c] == '#' ? 1.0 : 0.0;
        x[8 * r + c] = std::clamp(ink + spec.noise * gauss(rng), 0.0, 1.0);
      }
    }
    d.inputs.push_back(std::move(x));
    d.labels.push_back(label);
  }
  return d;
}

}  // namespace

void LabeledDataset::Validate() const {
  if (inputs.size() != labels.size()) throw ShapeError("inputs and labels differ in length");
  if (input_dim <= 0 || class_count <= 0) throw ShapeError("dataset dims must be positive");
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].size() != input_dim) {
      throw ShapeError("sample " + std::to_string(i) + " has dimension " +
                       std::to_string(inputs[i].size()) + ", expected " + std::to_string(input_dim));
    }
    if (labels[i] < 0 || labels[i] >= class_count) {
      throw InvalidLabelError("sample " + std::to_string(i) + " has label " +
                              std::to_string(labels[i]) + " outside [0, " +
                              std::to_string(class_count) + ")");
    }
  }
}

DatasetKind ParseDatasetKind(const std::string& name) {
  if (name == "blobs") return DatasetKind::kBlobs;
  if (name == "moons") return DatasetKind::kMoons;
  if (name == "grid-digits") return DatasetKind::kGridDigits;
  throw std::invalid_argument("unknown dataset kind '" + name + "'");
}

const char* DatasetKindName(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::kBlobs:
      return "blobs";
    case DatasetKind::kMoons:
      return "moons";
    case DatasetKind::kGridDigits:
      return "grid-digits";
  }
  return "?";
}

LabeledDataset GenerateDataset(const DatasetSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  LabeledDataset d;
  switch (spec.kind) {
    case DatasetKind::kBlobs:
      if (spec.input_dim <= 0 || spec.class_count <= 0) {
        throw std::invalid_argument("blobs needs positive input_dim and class_count");
      }
      if (spec.size < spec.class_count) throw std::invalid_argument("size < class_count");
      d = MakeBlobs(spec, rng);
      break;
    case DatasetKind::kMoons:
      if (spec.size < 2) throw std::invalid_argument("size < class_count");
      d = MakeMoons(spec, rng);
      break;
    case DatasetKind::kGridDigits:
      if (spec.size < 10) throw std::invalid_argument("size < class_count");
      d = MakeGridDigits(spec, rng);
      break;
  }
  return d;
}

std::pair<LabeledDataset, LabeledDataset> SplitDataset(const LabeledDataset& data,
                                                       double train_fraction, std::uint64_t seed) {
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto cut = static_cast<std::size_t>(std::llround(train_fraction * data.size()));
  LabeledDataset train{data.name + "-train", data.input_dim, data.class_count, {}, {}};
  LabeledDataset test{data.name + "-test", data.input_dim, data.class_count, {}, {}};
  for (std::size_t i = 0; i < order.size(); ++i) {
    LabeledDataset& dst = i < cut ? train : test;
    dst.inputs.push_back(data.inputs[order[i]]);
    dst.labels.push_back(data.labels[order[i]]);
  }
  return {std::move(train), std::move(test)};
}

std::string FormatExact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void WriteDataset(const LabeledDataset& data, std::ostream& out) {
  out << "dataset v1 " << (data.name.empty() ? "unnamed" : data.name) << ' ' << data.input_dim
      << ' ' << data.class_count << ' ' << data.size() << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << data.labels[i];
    for (int j = 0; j < data.input_dim; ++j) out << ' ' << FormatExact(data.inputs[i][j]);
    out << '\n';
  }
}

LabeledDataset ReadDataset(std::istream& in) {
  std::string line;
  int line_no = 0;
  auto next = [&](const std::string& expecting) {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") != std::string::npos) return;
    }
    throw ParseError(line_no + 1, "unexpected end of file, expected " + expecting);
  };
  next("header");
  std::istringstream hs(line);
  std::string magic, version;
  LabeledDataset d;
  long long count = -1;
  if (!(hs >> magic >> version >> d.name >> d.input_dim >> d.class_count >> count) ||
      magic != "dataset" || version != "v1") {
    throw ParseError(line_no, "expected header 'dataset v1 <name> <n> <class_count> <count>'");
  }
  if (d.input_dim <= 0 || d.class_count <= 0 || count < 0) {
    throw ParseError(line_no, "header dims must be positive");
  }
  for (long long i = 0; i < count; ++i) {
    next("sample " + std::to_string(i));
    std::istringstream ss(line);
    int label = -1;
    if (!(ss >> label)) throw ParseError(line_no, "sample " + std::to_string(i) + ": missing label");
    if (label < 0 || label >= d.class_count) {
      throw ParseError(line_no, "sample " + std::to_string(i) + ": label out of range");
    }
    Vector x(d.input_dim);
    for (int j = 0; j < d.input_dim; ++j) {
      std::string tok;
      if (!(ss >> tok)) {
        throw ParseError(line_no, "sample " + std::to_string(i) + ": expected " +
                                      std::to_string(d.input_dim) + " values");
      }
      try {
        x[j] = std::stod(tok);
      } catch (const std::exception&) {
        throw ParseError(line_no, "sample " + std::to_string(i) + ": bad number '" + tok + "'");
      }
    }
    d.inputs.push_back(std::move(x));
    d.labels.push_back(label);
  }
  return d;
}

void SaveDataset(const LabeledDataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  WriteDataset(data, out);
}

LabeledDataset LoadDataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file " + path);
  return ReadDataset(in);
}

}  // namespace postavg

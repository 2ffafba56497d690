#include "postavg/nn.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "postavg/dataset.h"
#include "postavg/errors.h"

namespace postavg {
namespace {

void CheckInput(const Network& net, const Vector& x) {
  if (x.size() != net.input_dim()) {
    throw ShapeError("input has " + std::to_string(x.size()) + " components, network expects " +
                     std::to_string(net.input_dim()));
  }
  if (!x.allFinite()) throw ShapeError("input has non-finite components");
}

void CheckIndex(const Network& net, int index, const char* what) {
  if (index < 0 || index >= net.class_count()) {
    throw InvalidLabelError(std::string(what) + " " + std::to_string(index) + " out of range [0, " +
                            std::to_string(net.class_count()) + ")");
  }
}

// d loss / d logits.
Vector LogitGradient(const Network& net, const Vector& logits, const LossSpec& loss) {
  Vector g = Vector::Zero(logits.size());
  switch (loss.kind) {
    case LossSpec::Kind::kCrossEntropy: {
      CheckIndex(net, loss.first, "label");
      const double m = logits.maxCoeff();
      Vector e = (logits.array() - m).exp();
      g = e / e.sum();
      g[loss.first] -= 1.0;
      break;
    }
    case LossSpec::Kind::kLogit:
      CheckIndex(net, loss.first, "logit index");
      g[loss.first] = 1.0;
      break;
    case LossSpec::Kind::kMargin:
      CheckIndex(net, loss.first, "margin index");
      CheckIndex(net, loss.second, "margin index");
      g[loss.first] += 1.0;
      g[loss.second] -= 1.0;
      break;
  }
  return g;
}

}  // namespace

const char* ActivationName(Activation a) { return a == Activation::kRelu ? "relu" : "identity"; }

Network::Network(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw ShapeError("network needs at least one layer");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const DenseLayer& layer = layers_[l];
    const std::string where = "layer " + std::to_string(l);
    if (layer.weights.rows() == 0 || layer.weights.cols() == 0) throw ShapeError(where + " is empty");
    if (layer.biases.size() != layer.weights.rows()) throw ShapeError(where + " bias length mismatch");
    if (!layer.weights.allFinite() || !layer.biases.allFinite()) {
      throw ShapeError(where + " has non-finite parameters");
    }
    if (l > 0 && layer.in_dim() != layers_[l - 1].out_dim()) {
      throw ShapeError(where + " input dim " + std::to_string(layer.in_dim()) +
                       " does not match previous output dim " +
                       std::to_string(layers_[l - 1].out_dim()));
    }
    const bool last = l + 1 == layers_.size();
    if (last && layer.activation != Activation::kIdentity) {
      throw ShapeError("final layer must use identity activation");
    }
    if (!last && layer.activation != Activation::kRelu) {
      throw ShapeError(where + ": hidden layers must use relu");
    }
  }
}

Network Network::Random(std::span<const int> dims, std::uint64_t seed) {
  if (dims.size() < 2) throw ShapeError("need at least input and output dims");
  std::mt19937_64 rng(seed);
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int in = dims[l];
    const int out = dims[l + 1];
    if (in <= 0 || out <= 0) throw ShapeError("layer dims must be positive");
    const double limit = std::sqrt(6.0 / (in + out));
    std::uniform_real_distribution<double> u(-limit, limit);
    DenseLayer layer;
    layer.weights.resize(out, in);
    for (int i = 0; i < out; ++i) {
      for (int j = 0; j < in; ++j) layer.weights(i, j) = u(rng);
    }
    layer.biases = Vector::Zero(out);
    layer.activation = l + 2 == dims.size() ? Activation::kIdentity : Activation::kRelu;
    layers.push_back(std::move(layer));
  }
  return Network(std::move(layers));
}

int Network::hidden_unit_count() const {
  int total = 0;
  for (int l = 0; l < hidden_layer_count(); ++l) total += layers_[l].out_dim();
  return total;
}

bool Network::is_unbiased() const {
  return std::all_of(layers_.begin(), layers_.end(),
                     [](const DenseLayer& l) { return (l.biases.array() == 0.0).all(); });
}

bool operator==(const Network& a, const Network& b) {
  if (a.layers_.size() != b.layers_.size()) return false;
  for (std::size_t l = 0; l < a.layers_.size(); ++l) {
    const DenseLayer& x = a.layers_[l];
    const DenseLayer& y = b.layers_[l];
    if (x.activation != y.activation || x.weights.rows() != y.weights.rows() ||
        x.weights.cols() != y.weights.cols() || x.weights != y.weights || x.biases != y.biases) {
      return false;
    }
  }
  return true;
}

ForwardTrace Forward(const Network& net, const Vector& x) {
  CheckInput(net, x);
  ForwardTrace trace;
  trace.pre.reserve(net.layers().size());
  trace.post.reserve(net.layers().size());
  const Vector* in = &x;
  for (const DenseLayer& layer : net.layers()) {
    Vector pre = layer.weights * *in + layer.biases;
    Vector post = layer.activation == Activation::kRelu ? Vector(pre.cwiseMax(0.0)) : pre;
    trace.pre.push_back(std::move(pre));
    trace.post.push_back(std::move(post));
    in = &trace.post.back();
  }
  trace.logits = trace.post.back();
  return trace;
}

Vector Logits(const Network& net, const Vector& x) { return Forward(net, x).logits; }

double CrossEntropy(const Vector& logits, int label) {
  const double m = logits.maxCoeff();
  return m + std::log((logits.array() - m).exp().sum()) - logits[label];
}

double LossValue(const Vector& logits, const LossSpec& loss) {
  switch (loss.kind) {
    case LossSpec::Kind::kCrossEntropy:
      return CrossEntropy(logits, loss.first);
    case LossSpec::Kind::kLogit:
      return logits[loss.first];
    case LossSpec::Kind::kMargin:
      return logits[loss.first] - logits[loss.second];
  }
  return 0.0;
}

Vector BackpropToInput(const Network& net, const ForwardTrace& trace, int layer, Vector upstream) {
  for (int l = layer; l >= 0; --l) {
    if (net.layer(l).activation == Activation::kRelu) {
      upstream = (trace.pre[l].array() > 0.0).select(upstream, 0.0);
    }
    upstream = net.layer(l).weights.transpose() * upstream;
  }
  return upstream;
}

Vector InputGradient(const Network& net, const ForwardTrace& trace, const LossSpec& loss) {
  return BackpropToInput(net, trace, net.layer_count() - 1,
                         LogitGradient(net, trace.logits, loss));
}

Vector InputGradient(const Network& net, const Vector& x, const LossSpec& loss) {
  return InputGradient(net, Forward(net, x), loss);
}

Vector UnitInputGradient(const Network& net, const ForwardTrace& trace, int layer, int unit) {
  // Seed at the unit's pre-activation, so its own ReLU is not applied.
  Vector g = net.layer(layer).weights.row(unit).transpose();
  if (layer == 0) return g;
  return BackpropToInput(net, trace, layer - 1, std::move(g));
}

Network Train(const Network& net, const LabeledDataset& data, const SgdConfig& cfg) {
  data.Validate();
  if (data.empty()) throw ShapeError("training set is empty");
  if (data.input_dim != net.input_dim()) throw ShapeError("dataset dim does not match network");
  if (data.class_count > net.class_count()) {
    throw InvalidLabelError("dataset has more classes than the network outputs");
  }
  std::vector<DenseLayer> layers = net.layers();
  if (cfg.epochs <= 0) return Network(std::move(layers));

  const int L = static_cast<int>(layers.size());
  std::vector<Matrix> vel_w(L);
  std::vector<Vector> vel_b(L);
  for (int l = 0; l < L; ++l) {
    vel_w[l] = Matrix::Zero(layers[l].weights.rows(), layers[l].weights.cols());
    vel_b[l] = Vector::Zero(layers[l].biases.size());
  }
  std::vector<Matrix> grad_w(L);
  std::vector<Vector> grad_b(L);

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t batch = static_cast<std::size_t>(std::max(1, cfg.batch_size));

  int step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += batch, ++step) {
      const std::size_t end = std::min(order.size(), start + batch);
      for (int l = 0; l < L; ++l) {
        grad_w[l].setZero(layers[l].weights.rows(), layers[l].weights.cols());
        grad_b[l].setZero(layers[l].biases.size());
      }
      const Network current(layers);
      double loss = 0.0;
      for (std::size_t s = start; s < end; ++s) {
        const std::size_t i = order[s];
        const ForwardTrace trace = Forward(current, data.inputs[i]);
        loss += CrossEntropy(trace.logits, data.labels[i]);
        Vector delta = LogitGradient(current, trace.logits, LossSpec::CrossEntropy(data.labels[i]));
        for (int l = L - 1; l >= 0; --l) {
          if (layers[l].activation == Activation::kRelu) {
            delta = (trace.pre[l].array() > 0.0).select(delta, 0.0);
          }
          const Vector& in = l == 0 ? data.inputs[i] : trace.post[l - 1];
          grad_w[l].noalias() += delta * in.transpose();
          grad_b[l] += delta;
          if (l > 0) delta = layers[l].weights.transpose() * delta;
        }
      }
      const double scale = 1.0 / static_cast<double>(end - start);
      if (!std::isfinite(loss)) {
        throw DivergenceError(epoch, step,
                              "non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                                  std::to_string(step));
      }
      for (int l = 0; l < L; ++l) {
        vel_w[l] = cfg.momentum * vel_w[l] - cfg.learning_rate * scale * grad_w[l];
        layers[l].weights += vel_w[l];
        if (cfg.train_biases) {
          vel_b[l] = cfg.momentum * vel_b[l] - cfg.learning_rate * scale * grad_b[l];
          layers[l].biases += vel_b[l];
        }
        if (!layers[l].weights.allFinite() || !layers[l].biases.allFinite()) {
          throw DivergenceError(epoch, step,
                                "parameters became non-finite at epoch " + std::to_string(epoch) +
                                    ", step " + std::to_string(step));
        }
      }
    }
  }
  return Network(std::move(layers));
}

std::vector<int> TopK(const Vector& scores, int k) {
  if (k < 1 || k > scores.size()) {
    throw ShapeError("k = " + std::to_string(k) + " outside [1, " + std::to_string(scores.size()) +
                     "]");
  }
  std::vector<int> idx(static_cast<std::size_t>(scores.size()));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return scores[a] > scores[b]; });
  idx.resize(static_cast<std::size_t>(k));
  return idx;
}

std::vector<int> PredictTopK(const Network& net, const Vector& x, int k) {
  return TopK(Logits(net, x), k);
}

int Predict(const Network& net, const Vector& x) { return PredictTopK(net, x, 1).front(); }

void WriteModel(const Network& net, std::ostream& out) {
  out << "relu-net v1 " << net.input_dim() << ' ' << net.class_count() << ' ' << net.layer_count()
      << '\n';
  for (const DenseLayer& layer : net.layers()) {
    out << "layer " << layer.in_dim() << ' ' << layer.out_dim() << ' '
        << ActivationName(layer.activation) << '\n';
    for (int i = 0; i < layer.out_dim(); ++i) {
      for (int j = 0; j < layer.in_dim(); ++j) {
        out << (j ? " " : "") << FormatExact(layer.weights(i, j));
      }
      out << '\n';
    }
    for (int i = 0; i < layer.out_dim(); ++i) out << (i ? " " : "") << FormatExact(layer.biases[i]);
    out << '\n';
  }
}

namespace {

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  // Next non-empty line split on whitespace.
  std::vector<std::string> Next(const std::string& expecting) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      std::istringstream ss(line);
      std::vector<std::string> tokens;
      for (std::string t; ss >> t;) tokens.push_back(t);
      if (!tokens.empty()) return tokens;
    }
    throw ParseError(line_no_ + 1, "unexpected end of file, expected " + expecting);
  }

  int line() const { return line_no_; }

 private:
  std::istream& in_;
  int line_no_ = 0;
};

double ParseDouble(const std::string& token, int line, const std::string& field) {
  try {
    std::size_t used = 0;
    const double v = std::stod(token, &used);
    if (used != token.size()) throw std::invalid_argument(token);
    return v;
  } catch (const std::exception&) {
    throw ParseError(line, field + ": cannot parse '" + token + "' as a number");
  }
}

int ParseInt(const std::string& token, int line, const std::string& field) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(token, &used);
    if (used != token.size()) throw std::invalid_argument(token);
    return v;
  } catch (const std::exception&) {
    throw ParseError(line, field + ": cannot parse '" + token + "' as an integer");
  }
}

}  // namespace

Network ReadModel(std::istream& in) {
  LineReader reader(in);
  auto header = reader.Next("header");
  if (header.size() != 5 || header[0] != "relu-net" || header[1] != "v1") {
    throw ParseError(reader.line(), "expected header 'relu-net v1 <n> <class_count> <L>'");
  }
  const int n = ParseInt(header[2], reader.line(), "header.n");
  const int classes = ParseInt(header[3], reader.line(), "header.class_count");
  const int count = ParseInt(header[4], reader.line(), "header.L");
  if (n <= 0 || classes <= 0 || count <= 0) {
    throw ParseError(reader.line(), "header dimensions must be positive");
  }
  std::vector<DenseLayer> layers;
  for (int l = 0; l < count; ++l) {
    const std::string where = "layer " + std::to_string(l);
    auto tag = reader.Next(where + " header");
    if (tag.size() != 4 || tag[0] != "layer") {
      throw ParseError(reader.line(), "expected '" + where + "' header 'layer <in> <out> <act>'");
    }
    const int in_dim = ParseInt(tag[1], reader.line(), where + ".in");
    const int out_dim = ParseInt(tag[2], reader.line(), where + ".out");
    if (in_dim <= 0 || out_dim <= 0) throw ParseError(reader.line(), where + ": dims must be positive");
    DenseLayer layer;
    if (tag[3] == "relu") {
      layer.activation = Activation::kRelu;
    } else if (tag[3] == "identity") {
      layer.activation = Activation::kIdentity;
    } else {
      throw ParseError(reader.line(), where + ": unknown activation '" + tag[3] + "'");
    }
    layer.weights.resize(out_dim, in_dim);
    for (int i = 0; i < out_dim; ++i) {
      const std::string field = where + ".weights[" + std::to_string(i) + "]";
      auto row = reader.Next(field);
      if (static_cast<int>(row.size()) != in_dim) {
        throw ParseError(reader.line(), field + ": expected " + std::to_string(in_dim) +
                                            " values, found " + std::to_string(row.size()));
      }
      for (int j = 0; j < in_dim; ++j) layer.weights(i, j) = ParseDouble(row[j], reader.line(), field);
    }
    auto bias = reader.Next(where + ".biases");
    if (static_cast<int>(bias.size()) != out_dim) {
      throw ParseError(reader.line(), where + ".biases: expected " + std::to_string(out_dim) +
                                          " values, found " + std::to_string(bias.size()));
    }
    layer.biases.resize(out_dim);
    for (int i = 0; i < out_dim; ++i) {
      layer.biases[i] = ParseDouble(bias[i], reader.line(), where + ".biases");
    }
    layers.push_back(std::move(layer));
  }
  try {
    Network net(std::move(layers));
    if (net.input_dim() != n || net.class_count() != classes) {
      throw ParseError(1, "header dims disagree with layer dims");
    }
    return net;
  } catch (const ShapeError& e) {
    throw ParseError(reader.line(), e.what());
  }
}

void SaveModel(const Network& net, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  WriteModel(net, out);
  if (!out) throw std::runtime_error("failed writing " + path);
}

Network LoadModel(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file " + path);
  return ReadModel(in);
}

}  // namespace postavg

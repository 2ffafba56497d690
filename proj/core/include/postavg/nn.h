#ifndef POSTAVG_NN_H_
#define POSTAVG_NN_H_

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace postavg {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct LabeledDataset;

enum class Activation { kRelu, kIdentity };

const char* ActivationName(Activation a);

struct DenseLayer {
  Matrix weights;  // out_dim x in_dim
  Vector biases;   // out_dim
  Activation activation = Activation::kRelu;

  int in_dim() const { return static_cast<int>(weights.cols()); }
  int out_dim() const { return static_cast<int>(weights.rows()); }
};

// A dense ReLU classifier. Hidden layers use ReLU, the last layer emits raw
// logits. Immutable once constructed; all evaluation functions are free
// functions taking it by const reference.
class Network {
 public:
  // Throws ShapeError if layer dimensions do not chain, the final layer is
  // not identity, a hidden layer is not ReLU, or any weight is non-finite.
  explicit Network(std::vector<DenseLayer> layers);

  // Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
  // dims = {input_dim, hidden..., class_count}.
  static Network Random(std::span<const int> dims, std::uint64_t seed);

  int input_dim() const { return layers_.front().in_dim(); }
  int class_count() const { return layers_.back().out_dim(); }
  int layer_count() const { return static_cast<int>(layers_.size()); }
  int hidden_layer_count() const { return layer_count() - 1; }
  int hidden_unit_count() const;

  const std::vector<DenseLayer>& layers() const { return layers_; }
  const DenseLayer& layer(int i) const { return layers_.at(static_cast<std::size_t>(i)); }

  bool is_unbiased() const;

  friend bool operator==(const Network& a, const Network& b);

 private:
  std::vector<DenseLayer> layers_;
};

// pre[l] / post[l] for every layer l, including the output layer where
// post == pre == logits.
struct ForwardTrace {
  std::vector<Vector> pre;
  std::vector<Vector> post;
  Vector logits;
};

ForwardTrace Forward(const Network& net, const Vector& x);
Vector Logits(const Network& net, const Vector& x);

// Scalar objective whose input gradient is requested.
struct LossSpec {
  enum class Kind { kCrossEntropy, kLogit, kMargin };
  Kind kind = Kind::kCrossEntropy;
  int first = 0;   // label y, logit index j, or i of the pair
  int second = 0;  // j of the margin pair (logit_i - logit_j)

  static LossSpec CrossEntropy(int label) { return {Kind::kCrossEntropy, label, 0}; }
  static LossSpec Logit(int index) { return {Kind::kLogit, index, 0}; }
  static LossSpec Margin(int i, int j) { return {Kind::kMargin, i, j}; }
};

// log-sum-exp(logits) - logits[y], max-subtracted.
double CrossEntropy(const Vector& logits, int label);
double LossValue(const Vector& logits, const LossSpec& loss);

// d loss / d x by reverse accumulation. A pre-activation of exactly zero is
// treated as inactive. Throws InvalidLabelError for out-of-range indices.
Vector InputGradient(const Network& net, const Vector& x, const LossSpec& loss);
Vector InputGradient(const Network& net, const ForwardTrace& trace, const LossSpec& loss);

// Pulls an upstream gradient on layer `layer`'s pre-activations back to the input.
Vector BackpropToInput(const Network& net, const ForwardTrace& trace, int layer, Vector upstream);

// grad_x of pre-activation `unit` in layer `layer`.
Vector UnitInputGradient(const Network& net, const ForwardTrace& trace, int layer, int unit);

struct SgdConfig {
  int epochs = 200;
  double learning_rate = 0.05;
  double momentum = 0.9;
  int batch_size = 16;
  std::uint64_t seed = 0;
  bool train_biases = true;
};

// Minibatch SGD on mean cross-entropy. Deterministic given cfg.seed.
// Throws DivergenceError if the loss becomes non-finite.
Network Train(const Network& net, const LabeledDataset& data, const SgdConfig& cfg);

// Indices of the k largest entries, descending; ties go to the lower index.
std::vector<int> TopK(const Vector& scores, int k);
std::vector<int> PredictTopK(const Network& net, const Vector& x, int k);
int Predict(const Network& net, const Vector& x);

// Plain-text model file:
//   relu-net v1 <n> <class_count> <L>
//   layer <in> <out> <relu|identity>
//   <out lines of in weights, row-major>
//   <one line of out biases>
// Values are printed with 17 significant digits so a round trip is exact.
void WriteModel(const Network& net, std::ostream& out);
Network ReadModel(std::istream& in);
void SaveModel(const Network& net, const std::string& path);
Network LoadModel(const std::string& path);

}  // namespace postavg

#endif  // POSTAVG_NN_H_

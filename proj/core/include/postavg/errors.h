#ifndef POSTAVG_ERRORS_H_
#define POSTAVG_ERRORS_H_

#include <stdexcept>
#include <string>

namespace postavg {

// Input vector or matrix has the wrong dimension for the model it is fed to.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class InvalidLabelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Training produced a non-finite loss.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(int epoch, int step, const std::string& what)
      : std::runtime_error(what), epoch_(epoch), step_(step) {}
  int epoch() const { return epoch_; }
  int step() const { return step_; }

 private:
  int epoch_;
  int step_;
};

// Malformed model, dataset or report file. line() is 1-based, 0 if unknown.
class ParseError : public std::runtime_error {
 public:
  ParseError(int line, const std::string& what)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// Experiment configuration rejected; field() is the dotted path, e.g. "threat.epsilon".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// A checked post-condition did not hold (e.g. an attack exceeded its budget).
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace postavg

#endif  // POSTAVG_ERRORS_H_

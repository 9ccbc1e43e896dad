#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "deid/random.hpp"

namespace deid {

/// Row-major real matrix; a vector is rows x 1.
struct Tensor {
  std::size_t rows = 0;
  std::size_t cols = 1;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
  static Tensor vector(std::vector<double> v) {
    Tensor t;
    t.rows = v.size();
    t.data = std::move(v);
    return t;
  }
  std::size_t size() const { return data.size(); }
  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

/// Learnable tensor with its gradient accumulator.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string n, std::size_t rows, std::size_t cols)
      : name(std::move(n)), value(rows, cols), grad(rows, cols) {}
  void zero_grad() { std::fill(grad.data.begin(), grad.data.end(), 0.0); }
};

double dot(const double* a, const double* b, std::size_t n);

/// Reverse-mode tape. Nodes are appended in evaluation order, so the
/// recording order is already topological. Parameter leaves alias the
/// parameter's storage; their adjoints accumulate into Parameter::grad.
class Tape {
 public:
  using Var = std::size_t;
  using BackwardFn = std::function<void(Tape& tape, Var self)>;

  /// Drops all nodes but keeps their storage for reuse.
  void clear() { size_ = 0; }
  std::size_t size() const { return size_; }

  Var constant(std::span<const double> values);
  Var constant(const Tensor& t);
  Var param(Parameter& p);
  /// Row r of a 2-D parameter as a vector (embedding lookup).
  Var row(Parameter& p, std::size_t r);

  Var matvec(Var W, Var x);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double k);
  Var one_minus(Var a);
  Var concat(std::span<const Var> parts);
  Var tanh(Var a);
  Var sigmoid(Var a);
  Var softmax(Var a);
  /// Inverted dropout with a Bernoulli(1-p) mask drawn from rng. Identity if
  /// p == 0 or rng is null (inference).
  Var dropout(Var a, double p, Rng* rng);
  /// Dropout with an explicit keep mask (0/1) and scale 1/(1-p).
  Var dropout_mask(Var a, std::span<const double> keep, double p);
  Var pick(Var a, std::size_t index);
  Var sum(Var a);
  Var log_sum_exp(Var a);

  /// Node with a caller-defined value and adjoint rule. The rule reads
  /// grad(self) and accumulates into the adjoints of its inputs.
  Var custom(std::size_t rows, std::size_t cols, std::span<const double> value, BackwardFn backward);

  std::size_t rows(Var v) const { return nodes_[v].rows; }
  std::size_t cols(Var v) const { return nodes_[v].cols; }
  std::size_t numel(Var v) const { return nodes_[v].rows * nodes_[v].cols; }
  const double* value(Var v) const;
  double scalar(Var v) const { return value(v)[0]; }
  std::vector<double> values(Var v) const;
  /// Adjoint buffer of v (valid during backward()).
  double* grad(Var v);

  /// Seeds d(out)/d(out) = 1 and runs adjoint rules in reverse order.
  /// Throws std::invalid_argument if out is not a scalar.
  void backward(Var out);

 private:
  enum class Op : unsigned char {
    Leaf,
    Matvec,
    Add,
    Sub,
    Mul,
    Scale,
    OneMinus,
    Concat,
    Tanh,
    Sigmoid,
    Softmax,
    Dropout,
    Pick,
    Sum,
    LogSumExp,
    Custom
  };

  struct Node {
    Op op = Op::Leaf;
    std::size_t rows = 0;
    std::size_t cols = 1;
    std::vector<double> value;
    std::vector<double> grad;
    const double* ext_value = nullptr;
    double* ext_grad = nullptr;
    Var a = 0;
    Var b = 0;
    std::vector<Var> inputs;
    std::size_t index = 0;
    double k = 0.0;
    std::vector<double> aux;
    BackwardFn fn;
  };

  Node& push(Op op, std::size_t rows, std::size_t cols);
  double* mutable_value(Var v) { return nodes_[v].value.data(); }
  void check_same(Var a, Var b, const char* op) const;

  std::vector<Node> nodes_;
  std::size_t size_ = 0;
};

/// Central finite difference of f with respect to x.
double finite_difference(const std::function<double()>& f, double& x, double eps = 1e-5);
/// |a - b| / max(|a|, |b|, floor).
double relative_error(double a, double b, double floor = 1e-6);

}  // namespace deid

#include "deid/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace deid {

double dot(const double* a, const double* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

Tape::Node& Tape::push(Op op, std::size_t rows, std::size_t cols) {
  if (size_ == nodes_.size()) nodes_.emplace_back();
  Node& n = nodes_[size_++];
  n.op = op;
  n.rows = rows;
  n.cols = cols;
  n.value.assign(rows * cols, 0.0);
  n.ext_value = nullptr;
  n.ext_grad = nullptr;
  n.inputs.clear();
  n.fn = nullptr;
  return n;
}

const double* Tape::value(Var v) const {
  const Node& n = nodes_[v];
  return n.ext_value != nullptr ? n.ext_value : n.value.data();
}

std::vector<double> Tape::values(Var v) const {
  const double* p = value(v);
  return {p, p + numel(v)};
}

double* Tape::grad(Var v) {
  Node& n = nodes_[v];
  return n.ext_grad != nullptr ? n.ext_grad : n.grad.data();
}

void Tape::check_same(Var a, Var b, const char* op) const {
  if (rows(a) != rows(b) || cols(a) != cols(b)) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + std::to_string(rows(a)) + "x" +
                                std::to_string(cols(a)) + " vs " + std::to_string(rows(b)) + "x" +
                                std::to_string(cols(b)));
  }
}

Tape::Var Tape::constant(std::span<const double> values) {
  Node& n = push(Op::Leaf, values.size(), 1);
  std::copy(values.begin(), values.end(), n.value.begin());
  return size_ - 1;
}

Tape::Var Tape::constant(const Tensor& t) {
  Node& n = push(Op::Leaf, t.rows, t.cols);
  std::copy(t.data.begin(), t.data.end(), n.value.begin());
  return size_ - 1;
}

Tape::Var Tape::param(Parameter& p) {
  Node& n = push(Op::Leaf, 0, 0);
  n.rows = p.value.rows;
  n.cols = p.value.cols;
  n.ext_value = p.value.data.data();
  n.ext_grad = p.grad.data.data();
  return size_ - 1;
}

Tape::Var Tape::row(Parameter& p, std::size_t r) {
  if (r >= p.value.rows) throw std::out_of_range("row lookup " + std::to_string(r) + " in " + p.name);
  Node& n = push(Op::Leaf, 0, 0);
  n.rows = p.value.cols;
  n.cols = 1;
  n.ext_value = p.value.data.data() + r * p.value.cols;
  n.ext_grad = p.grad.data.data() + r * p.value.cols;
  return size_ - 1;
}

Tape::Var Tape::matvec(Var W, Var x) {
  const std::size_t R = rows(W);
  const std::size_t C = cols(W);
  if (numel(x) != C) {
    throw std::invalid_argument("matvec: " + std::to_string(R) + "x" + std::to_string(C) + " by vector of " +
                                std::to_string(numel(x)));
  }
  Node& n = push(Op::Matvec, R, 1);
  n.a = W;
  n.b = x;
  const double* w = value(W);
  const double* xv = value(x);
  double* out = n.value.data();
  for (std::size_t r = 0; r < R; ++r) out[r] = dot(w + r * C, xv, C);
  return size_ - 1;
}

Tape::Var Tape::add(Var a, Var b) {
  check_same(a, b, "add");
  Node& n = push(Op::Add, rows(a), cols(a));
  n.a = a;
  n.b = b;
  const double* x = value(a);
  const double* y = value(b);
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] = x[i] + y[i];
  return size_ - 1;
}

Tape::Var Tape::sub(Var a, Var b) {
  check_same(a, b, "sub");
  Node& n = push(Op::Sub, rows(a), cols(a));
  n.a = a;
  n.b = b;
  const double* x = value(a);
  const double* y = value(b);
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] = x[i] - y[i];
  return size_ - 1;
}

Tape::Var Tape::mul(Var a, Var b) {
  check_same(a, b, "mul");
  Node& n = push(Op::Mul, rows(a), cols(a));
  n.a = a;
  n.b = b;
  const double* x = value(a);
  const double* y = value(b);
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] = x[i] * y[i];
  return size_ - 1;
}

Tape::Var Tape::scale(Var a, double k) {
  Node& n = push(Op::Scale, rows(a), cols(a));
  n.a = a;
  n.k = k;
  const double* x = value(a);
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] = k * x[i];
  return size_ - 1;
}

Tape::Var Tape::one_minus(Var a) {
  Node& n = push(Op::OneMinus, rows(a), cols(a));
  n.a = a;
  const double* x = value(a);
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] = 1.0 - x[i];
  return size_ - 1;
}

Tape::Var Tape::concat(std::span<const Var> parts) {
  std::size_t total = 0;
  for (Var p : parts) total += numel(p);
  Node& n = push(Op::Concat, total, 1);
  n.inputs.assign(parts.begin(), parts.end());
  std::size_t off = 0;
  for (Var p : parts) {
    const double* x = value(p);
    std::copy(x, x + numel(p), n.value.begin() + static_cast<std::ptrdiff_t>(off));
    off += numel(p);
  }
  return size_ - 1;
}

Tape::Var Tape::tanh(Var a) {
  Node& n = push(Op::Tanh, rows(a), cols(a));
  n.a = a;
  const double* x = value(a);
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] = std::tanh(x[i]);
  return size_ - 1;
}

Tape::Var Tape::sigmoid(Var a) {
  Node& n = push(Op::Sigmoid, rows(a), cols(a));
  n.a = a;
  const double* x = value(a);
  for (std::size_t i = 0; i < n.value.size(); ++i) {
    const double v = x[i];
    if (v >= 0) {
      n.value[i] = 1.0 / (1.0 + std::exp(-v));
    } else {
      const double e = std::exp(v);
      n.value[i] = e / (1.0 + e);
    }
    // Keep gates strictly inside (0, 1) even where the exact value rounds.
    n.value[i] = std::clamp(n.value[i], 0x1p-53, 1.0 - 0x1p-53);
  }
  return size_ - 1;
}

Tape::Var Tape::softmax(Var a) {
  Node& n = push(Op::Softmax, rows(a), cols(a));
  n.a = a;
  const double* x = value(a);
  const std::size_t m = n.value.size();
  const double mx = *std::max_element(x, x + m);
  double s = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    n.value[i] = std::exp(x[i] - mx);
    s += n.value[i];
  }
  for (auto& v : n.value) v /= s;
  return size_ - 1;
}

Tape::Var Tape::dropout(Var a, double p, Rng* rng) {
  if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("dropout p must be in [0,1)");
  if (p == 0.0 || rng == nullptr) return a;
  std::vector<double> keep(numel(a));
  for (auto& k : keep) k = rng->bernoulli(1.0 - p) ? 1.0 : 0.0;
  return dropout_mask(a, keep, p);
}

Tape::Var Tape::dropout_mask(Var a, std::span<const double> keep, double p) {
  if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("dropout p must be in [0,1)");
  if (keep.size() != numel(a)) throw std::invalid_argument("dropout: mask size mismatch");
  Node& n = push(Op::Dropout, rows(a), cols(a));
  n.a = a;
  const double s = 1.0 / (1.0 - p);
  n.aux.resize(keep.size());
  for (std::size_t i = 0; i < keep.size(); ++i) n.aux[i] = keep[i] * s;
  const double* x = value(a);
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] = x[i] * n.aux[i];
  return size_ - 1;
}

Tape::Var Tape::pick(Var a, std::size_t index) {
  if (index >= numel(a)) throw std::out_of_range("pick index");
  Node& n = push(Op::Pick, 1, 1);
  n.a = a;
  n.index = index;
  n.value[0] = value(a)[index];
  return size_ - 1;
}

Tape::Var Tape::sum(Var a) {
  Node& n = push(Op::Sum, 1, 1);
  n.a = a;
  const double* x = value(a);
  double s = 0.0;
  for (std::size_t i = 0; i < numel(a); ++i) s += x[i];
  n.value[0] = s;
  return size_ - 1;
}

Tape::Var Tape::log_sum_exp(Var a) {
  Node& n = push(Op::LogSumExp, 1, 1);
  n.a = a;
  const double* x = value(a);
  const std::size_t m = numel(a);
  const double mx = *std::max_element(x, x + m);
  double s = 0.0;
  for (std::size_t i = 0; i < m; ++i) s += std::exp(x[i] - mx);
  n.value[0] = mx + std::log(s);
  return size_ - 1;
}

Tape::Var Tape::custom(std::size_t rows, std::size_t cols, std::span<const double> value, BackwardFn backward) {
  if (value.size() != rows * cols) throw std::invalid_argument("custom: value size mismatch");
  Node& n = push(Op::Custom, rows, cols);
  std::copy(value.begin(), value.end(), n.value.begin());
  n.fn = std::move(backward);
  return size_ - 1;
}

void Tape::backward(Var out) {
  if (out >= size_) throw std::out_of_range("backward: unknown node");
  if (numel(out) != 1) throw std::invalid_argument("backward: output is not a scalar");
  for (std::size_t i = 0; i <= out; ++i) {
    Node& n = nodes_[i];
    if (n.ext_grad == nullptr) n.grad.assign(n.rows * n.cols, 0.0);
  }
  grad(out)[0] += 1.0;

  for (std::size_t i = out + 1; i-- > 0;) {
    Node& n = nodes_[i];
    const double* g = grad(i);
    const std::size_t m = n.rows * n.cols;
    switch (n.op) {
      case Op::Leaf:
        break;
      case Op::Matvec: {
        const std::size_t R = rows(n.a);
        const std::size_t C = cols(n.a);
        const double* w = value(n.a);
        const double* x = value(n.b);
        double* gw = grad(n.a);
        double* gx = grad(n.b);
        for (std::size_t r = 0; r < R; ++r) {
          const double gr = g[r];
          if (gr == 0.0) continue;
          double* gwr = gw + r * C;
          const double* wr = w + r * C;
          for (std::size_t c = 0; c < C; ++c) {
            gwr[c] += gr * x[c];
            gx[c] += gr * wr[c];
          }
        }
        break;
      }
      case Op::Add: {
        double* ga = grad(n.a);
        double* gb = grad(n.b);
        for (std::size_t j = 0; j < m; ++j) {
          ga[j] += g[j];
          gb[j] += g[j];
        }
        break;
      }
      case Op::Sub: {
        double* ga = grad(n.a);
        double* gb = grad(n.b);
        for (std::size_t j = 0; j < m; ++j) {
          ga[j] += g[j];
          gb[j] -= g[j];
        }
        break;
      }
      case Op::Mul: {
        const double* x = value(n.a);
        const double* y = value(n.b);
        double* ga = grad(n.a);
        double* gb = grad(n.b);
        for (std::size_t j = 0; j < m; ++j) {
          ga[j] += g[j] * y[j];
          gb[j] += g[j] * x[j];
        }
        break;
      }
      case Op::Scale: {
        double* ga = grad(n.a);
        for (std::size_t j = 0; j < m; ++j) ga[j] += n.k * g[j];
        break;
      }
      case Op::OneMinus: {
        double* ga = grad(n.a);
        for (std::size_t j = 0; j < m; ++j) ga[j] -= g[j];
        break;
      }
      case Op::Concat: {
        std::size_t off = 0;
        for (Var p : n.inputs) {
          double* gp = grad(p);
          const std::size_t k = numel(p);
          for (std::size_t j = 0; j < k; ++j) gp[j] += g[off + j];
          off += k;
        }
        break;
      }
      case Op::Tanh: {
        double* ga = grad(n.a);
        for (std::size_t j = 0; j < m; ++j) ga[j] += g[j] * (1.0 - n.value[j] * n.value[j]);
        break;
      }
      case Op::Sigmoid: {
        double* ga = grad(n.a);
        for (std::size_t j = 0; j < m; ++j) ga[j] += g[j] * n.value[j] * (1.0 - n.value[j]);
        break;
      }
      case Op::Softmax: {
        double* ga = grad(n.a);
        const double s = dot(g, n.value.data(), m);
        for (std::size_t j = 0; j < m; ++j) ga[j] += n.value[j] * (g[j] - s);
        break;
      }
      case Op::Dropout: {
        double* ga = grad(n.a);
        for (std::size_t j = 0; j < m; ++j) ga[j] += g[j] * n.aux[j];
        break;
      }
      case Op::Pick:
        grad(n.a)[n.index] += g[0];
        break;
      case Op::Sum: {
        double* ga = grad(n.a);
        for (std::size_t j = 0; j < numel(n.a); ++j) ga[j] += g[0];
        break;
      }
      case Op::LogSumExp: {
        const double* x = value(n.a);
        double* ga = grad(n.a);
        for (std::size_t j = 0; j < numel(n.a); ++j) ga[j] += g[0] * std::exp(x[j] - n.value[0]);
        break;
      }
      case Op::Custom:
        n.fn(*this, i);
        break;
    }
  }
}

double finite_difference(const std::function<double()>& f, double& x, double eps) {
  const double saved = x;
  x = saved + eps;
  const double up = f();
  x = saved - eps;
  const double down = f();
  x = saved;
  return (up - down) / (2.0 * eps);
}

double relative_error(double a, double b, double floor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace deid

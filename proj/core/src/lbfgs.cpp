#include "deid/lbfgs.hpp"

#include <cmath>
#include <deque>

#include "deid/common.hpp"

namespace deid {
namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  const std::size_t n = a.size();
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

struct Pair {
  std::vector<double> s;
  std::vector<double> y;
  double rho;
};

}  // namespace

LbfgsResult lbfgs_minimize(const ObjectiveFn& f, std::vector<double> x0, const LbfgsOptions& options,
                           const ProgressFn& progress) {
  LbfgsResult r;
  r.x = std::move(x0);
  const std::size_t n = r.x.size();
  std::vector<double> g(n);
  r.value = f(r.x, g);
  if (!std::isfinite(r.value)) throw NumericalError("objective is not finite at the starting point");
  r.trace.push_back(r.value);
  r.gradient_norm = std::sqrt(dot(g, g));
  if (progress) progress(0, r.value, r.gradient_norm);

  std::deque<Pair> history;
  std::vector<double> d(n), x_new(n), g_new(n), alpha(options.memory);

  while (true) {
    if (r.gradient_norm < options.gradient_tolerance) {
      r.converged = true;
      r.stop_reason = "gradient_tolerance";
      break;
    }
    if (r.iterations >= options.max_iterations) {
      r.stop_reason = "max_iterations";
      break;
    }

    // Two-loop recursion: d = -H g.
    for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
    for (std::size_t k = history.size(); k-- > 0;) {
      alpha[k] = history[k].rho * dot(history[k].s, d);
      for (std::size_t i = 0; i < n; ++i) d[i] -= alpha[k] * history[k].y[i];
    }
    if (!history.empty()) {
      const auto& last = history.back();
      const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
      for (auto& v : d) v *= gamma;
    }
    for (std::size_t k = 0; k < history.size(); ++k) {
      const double beta = history[k].rho * dot(history[k].y, d);
      for (std::size_t i = 0; i < n; ++i) d[i] += (alpha[k] - beta) * history[k].s[i];
    }

    double slope = dot(g, d);
    if (!(slope < 0.0)) {
      // Not a descent direction; restart from steepest descent.
      history.clear();
      for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
      slope = -r.gradient_norm * r.gradient_norm;
    }

    double step = history.empty() ? std::min(1.0, 1.0 / r.gradient_norm) : 1.0;
    bool accepted = false;
    double value_new = 0.0;
    for (std::size_t bt = 0; bt < options.max_backtracks; ++bt) {
      for (std::size_t i = 0; i < n; ++i) x_new[i] = r.x[i] + step * d[i];
      value_new = f(x_new, g_new);
      if (std::isfinite(value_new) && value_new <= r.value + options.armijo * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      r.stop_reason = "line_search_failed";
      break;
    }

    Pair p;
    p.s.resize(n);
    p.y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      p.s[i] = x_new[i] - r.x[i];
      p.y[i] = g_new[i] - g[i];
    }
    const double sy = dot(p.s, p.y);
    if (sy > 1e-10 * std::sqrt(dot(p.s, p.s) * dot(p.y, p.y))) {
      p.rho = 1.0 / sy;
      history.push_back(std::move(p));
      if (history.size() > options.memory) history.pop_front();
    }

    r.x.swap(x_new);
    g.swap(g_new);
    r.value = value_new;
    r.gradient_norm = std::sqrt(dot(g, g));
    ++r.iterations;
    r.trace.push_back(r.value);
    if (progress) progress(r.iterations, r.value, r.gradient_norm);
  }
  return r;
}

}  // namespace deid

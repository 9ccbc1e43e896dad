#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace deid {

struct LbfgsOptions {
  std::size_t memory = 5;
  std::size_t max_iterations = 200;
  double gradient_tolerance = 1e-4;
  std::size_t max_backtracks = 40;
  double armijo = 1e-4;
};

struct LbfgsResult {
  std::vector<double> x;
  double value = 0.0;
  double gradient_norm = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  std::string stop_reason;
  /// Objective after each accepted step, starting with the initial point.
  std::vector<double> trace;
};

/// Fills grad and returns the objective at x.
using ObjectiveFn = std::function<double(const std::vector<double>& x, std::vector<double>& grad)>;
using ProgressFn = std::function<void(std::size_t iteration, double value, double gradient_norm)>;

/// Limited-memory BFGS with Armijo backtracking. Throws NumericalError if the
/// objective is not finite at the starting point.
LbfgsResult lbfgs_minimize(const ObjectiveFn& f, std::vector<double> x0, const LbfgsOptions& options = {},
                           const ProgressFn& progress = {});

}  // namespace deid

#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace calib {

struct SimplexOptions {
  double cost_tol = 1e-8;    // spread of simplex costs
  double param_tol = 1e-6;   // spread of simplex vertices
  int max_evals = 20000;
};

struct SimplexResult {
  Eigen::VectorXd x;
  double cost = 0.0;
  int evals = 0;
  int iterations = 0;
};

// Nelder-Mead downhill simplex. The objective may be non-smooth (the L1
// costs here are piecewise linear); only function values are used. The
// best-vertex cost is non-increasing, so the result never exceeds f(x0).
SimplexResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                          const Eigen::VectorXd& x0, const Eigen::VectorXd& step,
                          const SimplexOptions& opts = {});

}  // namespace calib

#include "calib/optim.hpp"

#include <algorithm>
#include <numeric>

namespace calib {

SimplexResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                          const Eigen::VectorXd& x0, const Eigen::VectorXd& step,
                          const SimplexOptions& opts) {
  const int n = static_cast<int>(x0.size());
  SimplexResult res;
  res.x = x0;

  std::vector<Eigen::VectorXd> xs(n + 1, x0);
  std::vector<double> fs(n + 1);
  for (int i = 1; i <= n; ++i) xs[i](i - 1) += step(i - 1);
  for (int i = 0; i <= n; ++i) fs[i] = f(xs[i]);
  res.evals = n + 1;

  std::vector<int> order(n + 1);
  const double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;

  while (res.evals < opts.max_evals) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return fs[a] < fs[b]; });
    const int best = order[0], worst = order[n], second = order[n - 1];

    double spread = 0.0;
    for (int i = 1; i <= n; ++i)
      spread = std::max(spread, (xs[order[i]] - xs[best]).lpNorm<Eigen::Infinity>());
    if (fs[worst] - fs[best] < opts.cost_tol && spread < opts.param_tol) break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (int i = 0; i <= n; ++i)
      if (i != worst) centroid += xs[i];
    centroid /= n;

    ++res.iterations;
    const Eigen::VectorXd xr = centroid + alpha * (centroid - xs[worst]);
    const double fr = f(xr);
    ++res.evals;

    if (fr < fs[best]) {
      const Eigen::VectorXd xe = centroid + gamma * (xr - centroid);
      const double fe = f(xe);
      ++res.evals;
      if (fe < fr) {
        xs[worst] = xe;
        fs[worst] = fe;
      } else {
        xs[worst] = xr;
        fs[worst] = fr;
      }
      continue;
    }
    if (fr < fs[second]) {
      xs[worst] = xr;
      fs[worst] = fr;
      continue;
    }
    // Contraction (outside if the reflected point improved on the worst).
    const bool outside = fr < fs[worst];
    const Eigen::VectorXd xc = outside
                                   ? Eigen::VectorXd(centroid + rho * (xr - centroid))
                                   : Eigen::VectorXd(centroid - rho * (centroid - xs[worst]));
    const double fc = f(xc);
    ++res.evals;
    if (fc < (outside ? fr : fs[worst])) {
      xs[worst] = xc;
      fs[worst] = fc;
      continue;
    }
    // Shrink toward the best vertex.
    for (int i = 0; i <= n; ++i) {
      if (i == best) continue;
      xs[i] = xs[best] + sigma * (xs[i] - xs[best]);
      fs[i] = f(xs[i]);
      ++res.evals;
    }
  }

  int best = 0;
  for (int i = 1; i <= n; ++i)
    if (fs[i] < fs[best]) best = i;
  res.x = xs[best];
  res.cost = fs[best];
  return res;
}

}  // namespace calib

#pragma once

#include <functional>
#include <vector>

namespace trawlsbi {

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
  int evaluations = 0;
  bool projected = false;  // set if any evaluation point was clipped to bounds
};

// Derivative-free minimization with box constraints handled by projection.
// The simplex starts at x0 with per-coordinate step sizes.
NelderMeadResult nelder_mead(
    const std::function<double(const std::vector<double>&)>& f,
    const std::vector<double>& x0, const std::vector<double>& step,
    const std::vector<double>& lo, const std::vector<double>& hi,
    int max_iter = 500, double tol = 1e-10);

}  // namespace trawlsbi

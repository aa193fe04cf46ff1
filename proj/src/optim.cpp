#include "trawlsbi/optim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace trawlsbi {

NelderMeadResult nelder_mead(
    const std::function<double(const std::vector<double>&)>& f,
    const std::vector<double>& x0, const std::vector<double>& step,
    const std::vector<double>& lo, const std::vector<double>& hi,
    int max_iter, double tol) {
  const std::size_t n = x0.size();
  if (n == 0 || step.size() != n || lo.size() != n || hi.size() != n)
    throw std::invalid_argument("nelder_mead: dimension mismatch");

  NelderMeadResult result;
  auto project = [&](std::vector<double> x) {
    for (std::size_t i = 0; i < n; ++i) {
      const double c = std::clamp(x[i], lo[i], hi[i]);
      if (c != x[i]) result.projected = true;
      x[i] = c;
    }
    return x;
  };
  auto eval = [&](const std::vector<double>& x) {
    ++result.evaluations;
    return f(x);
  };

  std::vector<std::vector<double>> simplex;
  std::vector<double> values;
  simplex.push_back(project(x0));
  values.push_back(eval(simplex[0]));
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> v = x0;
    v[i] += step[i];
    simplex.push_back(project(v));
    values.push_back(eval(simplex.back()));
  }

  auto order = [&] {
    std::vector<std::size_t> idx(simplex.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) {
                       return values[a] < values[b];
                     });
    std::vector<std::vector<double>> s2;
    std::vector<double> v2;
    for (std::size_t i : idx) {
      s2.push_back(simplex[i]);
      v2.push_back(values[i]);
    }
    simplex = std::move(s2);
    values = std::move(v2);
  };

  for (int it = 0; it < max_iter; ++it) {
    order();
    if (std::fabs(values.back() - values.front()) <=
        tol * (std::fabs(values.front()) + tol))
      break;
    // Centroid of all but the worst vertex.
    std::vector<double> c(n, 0.0);
    for (std::size_t k = 0; k < n + 0; ++k)
      for (std::size_t i = 0; i < n; ++i) c[i] += simplex[k][i];
    for (double& v : c) v /= static_cast<double>(n);

    auto blend = [&](double coef) {
      std::vector<double> x(n);
      for (std::size_t i = 0; i < n; ++i)
        x[i] = c[i] + coef * (simplex.back()[i] - c[i]);
      return project(std::move(x));
    };

    const std::vector<double> xr = blend(-1.0);
    const double fr = eval(xr);
    if (fr < values.front()) {
      const std::vector<double> xe = blend(-2.0);
      const double fe = eval(xe);
      if (fe < fr) {
        simplex.back() = xe;
        values.back() = fe;
      } else {
        simplex.back() = xr;
        values.back() = fr;
      }
    } else if (fr < values[n - 1]) {
      simplex.back() = xr;
      values.back() = fr;
    } else {
      const bool outside = fr < values.back();
      const std::vector<double> xc = blend(outside ? -0.5 : 0.5);
      const double fc = eval(xc);
      if (fc < std::min(fr, values.back())) {
        simplex.back() = xc;
        values.back() = fc;
      } else {
        // Shrink toward the best vertex.
        for (std::size_t k = 1; k <= n; ++k) {
          for (std::size_t i = 0; i < n; ++i)
            simplex[k][i] =
                simplex[0][i] + 0.5 * (simplex[k][i] - simplex[0][i]);
          simplex[k] = project(simplex[k]);
          values[k] = eval(simplex[k]);
        }
      }
    }
  }
  order();
  result.x = simplex.front();
  result.value = values.front();
  return result;
}

}  // namespace trawlsbi

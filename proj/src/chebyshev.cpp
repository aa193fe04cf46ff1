#include "trawlsbi/chebyshev.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace trawlsbi {

namespace {

constexpr double kPi = 3.14159265358979323846;

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

double to_unit(const ChebSeries& s, double x) {
  const double slack = 1e-12 * (s.hi - s.lo);
  if (x < s.lo - slack || x > s.hi + slack)
    throw std::domain_error("eval: x outside the fitted interval");
  const double t = (2.0 * x - s.lo - s.hi) / (s.hi - s.lo);
  return std::clamp(t, -1.0, 1.0);
}

double clenshaw(const std::vector<double>& a, double t) {
  double b1 = 0.0, b2 = 0.0;
  for (std::size_t k = a.size(); k-- > 1;) {
    const double b0 = a[k] + 2.0 * t * b1 - b2;
    b2 = b1;
    b1 = b0;
  }
  return a[0] + t * b1 - b2;
}

// Coefficients of the degree-N interpolant through values f(cos(k pi / N)),
// k = 0..N: a slow O(N^2) cosine transform, adequate for the degrees used.
std::vector<double> lobatto_coeffs(const std::vector<double>& values) {
  const int n = static_cast<int>(values.size()) - 1;
  std::vector<double> a(n + 1);
  for (int j = 0; j <= n; ++j) {
    double sum = 0.5 * (values[0] + (j % 2 == 0 ? values[n] : -values[n]));
    for (int k = 1; k < n; ++k)
      sum += values[k] * std::cos(kPi * j * k / n);
    a[j] = 2.0 * sum / n;
  }
  a[0] *= 0.5;
  a[n] *= 0.5;
  return a;
}

// Integral of T_j over [-1, 1]: zero for odd j, 2/(1 - j^2) for even j.
double cheb_integral(int j) {
  if (j % 2 == 1) return 0.0;
  return 2.0 / (1.0 - static_cast<double>(j) * j);
}

}  // namespace

std::vector<double> cheb_knots(double lo, double hi, int n) {
  require(n >= 1, "cheb_knots: degree must be at least 1");
  require(hi > lo, "cheb_knots: need hi > lo");
  std::vector<double> x(n + 1);
  for (int k = 0; k <= n; ++k) {
    const double t = std::cos(kPi * k / n);
    x[k] = 0.5 * (lo + hi) + 0.5 * (hi - lo) * t;
  }
  x[0] = hi;
  x[n] = lo;
  return x;
}

ChebSeries fit_from_knot_values(const std::vector<double>& values, double lo,
                                double hi) {
  require(values.size() >= 2, "fit: need at least two knot values");
  require(hi > lo, "fit: need hi > lo");
  for (double v : values)
    if (!std::isfinite(v))
      throw std::invalid_argument("fit: non-finite value at a knot");
  ChebSeries s;
  s.lo = lo;
  s.hi = hi;
  s.coeffs = lobatto_coeffs(values);
  return s;
}

ChebSeries fit(const std::function<double(double)>& f, double lo, double hi,
               int n) {
  const std::vector<double> x = cheb_knots(lo, hi, n);
  std::vector<double> values(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) values[k] = f(x[k]);
  return fit_from_knot_values(values, lo, hi);
}

double eval(const ChebSeries& s, double x) {
  require(!s.coeffs.empty(), "eval: empty series");
  return clenshaw(s.coeffs, to_unit(s, x));
}

ChebSeries antiderivative(const ChebSeries& s) {
  require(!s.coeffs.empty(), "antiderivative: empty series");
  const int n = s.degree();
  const double scale = 0.5 * (s.hi - s.lo);
  const auto& a = s.coeffs;
  // Stored a_0 is the full constant term, half the c_0 of the halved-first-
  // coefficient convention the integration identity is usually written in.
  auto at = [&](int k) {
    if (k > n) return 0.0;
    return k == 0 ? 2.0 * a[0] : a[k];
  };
  ChebSeries out;
  out.lo = s.lo;
  out.hi = s.hi;
  out.coeffs.assign(n + 2, 0.0);
  for (int k = 1; k <= n + 1; ++k)
    out.coeffs[k] = scale * (at(k - 1) - at(k + 1)) / (2.0 * k);
  // Fix the constant so the antiderivative vanishes at lo (t = -1).
  double at_lo = 0.0;
  for (int k = 1; k <= n + 1; ++k)
    at_lo += (k % 2 == 0 ? out.coeffs[k] : -out.coeffs[k]);
  out.coeffs[0] = -at_lo;
  return out;
}

ChebCdf cdf(const ChebSeries& density) {
  require(!density.coeffs.empty(), "cdf: empty series");
  // Reject genuinely negative fits; tolerate interpolation-level wiggle.
  double max_abs = 0.0, min_val = 0.0;
  for (int i = 0; i < 1024; ++i) {
    const double x =
        density.lo + (density.hi - density.lo) * i / 1023.0;
    const double v = eval(density, x);
    max_abs = std::max(max_abs, std::fabs(v));
    min_val = std::min(min_val, v);
  }
  if (min_val < -1e-8 * std::max(1.0, max_abs))
    throw std::invalid_argument("cdf: density is negative on the interval");
  ChebCdf c;
  c.antiderivative = antiderivative(density);
  c.total_mass = eval(c.antiderivative, density.hi);
  if (!(c.total_mass > 0.0))
    throw std::invalid_argument("cdf: density has nonpositive total mass");
  return c;
}

double ChebCdf::operator()(double x) const {
  const double u = eval(antiderivative, x) / total_mass;
  return std::clamp(u, 0.0, 1.0);
}

double invert(const ChebCdf& c, double u) {
  require(u >= 0.0 && u <= 1.0, "invert: u must lie in [0, 1]");
  double lo = c.antiderivative.lo, hi = c.antiderivative.hi;
  for (int it = 0; it < 52; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (c(mid) < u)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

ChebSurface fit2d(const std::function<double(double, double)>& f, double lo_x,
                  double hi_x, double lo_y, double hi_y, int nx, int ny) {
  const std::vector<double> xs = cheb_knots(lo_x, hi_x, nx);
  const std::vector<double> ys = cheb_knots(lo_y, hi_y, ny);
  // Transform along y at each x knot, then along x for each y coefficient.
  std::vector<std::vector<double>> row_coeffs(nx + 1);
  std::vector<double> vals(ny + 1);
  for (int i = 0; i <= nx; ++i) {
    for (int j = 0; j <= ny; ++j) {
      vals[j] = f(xs[i], ys[j]);
      if (!std::isfinite(vals[j]))
        throw std::invalid_argument("fit2d: non-finite value at a knot");
    }
    row_coeffs[i] = lobatto_coeffs(vals);
  }
  ChebSurface s;
  s.nx = nx;
  s.ny = ny;
  s.lo_x = lo_x;
  s.hi_x = hi_x;
  s.lo_y = lo_y;
  s.hi_y = hi_y;
  s.coeffs.assign((nx + 1) * (ny + 1), 0.0);
  std::vector<double> col(nx + 1);
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) col[i] = row_coeffs[i][j];
    const std::vector<double> cij = lobatto_coeffs(col);
    for (int i = 0; i <= nx; ++i) s.coeffs[i * (ny + 1) + j] = cij[i];
  }
  return s;
}

double eval2d(const ChebSurface& s, double x, double y) {
  ChebSeries slice = conditional_y(s, x);
  return eval(slice, y);
}

ChebSeries marginal_x(const ChebSurface& s) {
  ChebSeries m;
  m.lo = s.lo_x;
  m.hi = s.hi_x;
  m.coeffs.assign(s.nx + 1, 0.0);
  const double scale = 0.5 * (s.hi_y - s.lo_y);
  for (int i = 0; i <= s.nx; ++i) {
    double sum = 0.0;
    for (int j = 0; j <= s.ny; j += 2) sum += s.coeff(i, j) * cheb_integral(j);
    m.coeffs[i] = scale * sum;
  }
  return m;
}

ChebSeries conditional_y(const ChebSurface& s, double x) {
  ChebSeries probe;
  probe.lo = s.lo_x;
  probe.hi = s.hi_x;
  probe.coeffs.assign(1, 0.0);
  const double t = to_unit(probe, x);
  ChebSeries slice;
  slice.lo = s.lo_y;
  slice.hi = s.hi_y;
  slice.coeffs.assign(s.ny + 1, 0.0);
  std::vector<double> col(s.nx + 1);
  for (int j = 0; j <= s.ny; ++j) {
    for (int i = 0; i <= s.nx; ++i) col[i] = s.coeff(i, j);
    slice.coeffs[j] = clenshaw(col, t);
  }
  return slice;
}

std::pair<double, double> sample2d(const ChebSurface& s, Rng& rng) {
  const ChebCdf fx = cdf(marginal_x(s));
  const double x = invert(fx, rng.uniform());
  const ChebCdf fy = cdf(conditional_y(s, x));
  const double y = invert(fy, rng.uniform());
  return {x, y};
}

}  // namespace trawlsbi

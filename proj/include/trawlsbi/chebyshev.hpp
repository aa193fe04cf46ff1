#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "trawlsbi/rng.hpp"

namespace trawlsbi {

// Chebyshev interpolant sum a_n T_n(t) with t the affine map of x from
// [lo, hi] onto [-1, 1].
struct ChebSeries {
  std::vector<double> coeffs;  // a_0 .. a_N
  double lo = -1.0;
  double hi = 1.0;

  int degree() const { return static_cast<int>(coeffs.size()) - 1; }
};

// Normalized CDF built from a fitted (unnormalized) density: nondecreasing,
// 0 at lo and 1 at hi.
struct ChebCdf {
  ChebSeries antiderivative;  // raw, vanishes at lo
  double total_mass = 0.0;

  double operator()(double x) const;
};

// Tensor-product interpolant sum c_ij T_i(x) T_j(y) on a rectangle.
struct ChebSurface {
  std::vector<double> coeffs;  // row-major (Nx+1) x (Ny+1)
  int nx = 0, ny = 0;          // degrees
  double lo_x = -1.0, hi_x = 1.0;
  double lo_y = -1.0, hi_y = 1.0;

  double coeff(int i, int j) const { return coeffs[i * (ny + 1) + j]; }
};

// Interpolate f at the N+1 Chebyshev knots cos(k pi / N) mapped to
// [lo, hi]. Throws on non-finite knot values.
ChebSeries fit(const std::function<double(double)>& f, double lo, double hi,
               int n);

// Fit directly from knot values f(x_k), k = 0..N with x_k the image of
// cos(k pi / N) (so values[0] corresponds to hi).
ChebSeries fit_from_knot_values(const std::vector<double>& values, double lo,
                                double hi);

// Chebyshev knots on [lo, hi], index 0 at hi.
std::vector<double> cheb_knots(double lo, double hi, int n);

// Clenshaw evaluation; throws if x is outside the interval.
double eval(const ChebSeries& s, double x);

// Indefinite integral with value 0 at lo; degree N+1.
ChebSeries antiderivative(const ChebSeries& s);

// Normalized CDF of a (possibly unnormalized) fitted density. Values below
// -1e-8 on a 1024-point grid are an error; smaller negativity is clipped.
ChebCdf cdf(const ChebSeries& density);

// Inverse CDF by 52 bisection iterations; monotone in u.
double invert(const ChebCdf& c, double u);

ChebSurface fit2d(const std::function<double(double, double)>& f, double lo_x,
                  double hi_x, double lo_y, double hi_y, int nx, int ny);

double eval2d(const ChebSurface& s, double x, double y);

// Marginal density of x: each row of the surface integrated over y.
ChebSeries marginal_x(const ChebSurface& s);

// 1D conditional slice in y at fixed x (unnormalized).
ChebSeries conditional_y(const ChebSurface& s, double x);

// Draw (x, y): invert the x marginal, then the conditional slice at x.
std::pair<double, double> sample2d(const ChebSurface& s, Rng& rng);

}  // namespace trawlsbi

#include "trawlsbi/special.hpp"

#include <cmath>
#include <stdexcept>

namespace trawlsbi {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr int kMaxIter = 20000;
constexpr double kEps = 1e-16;

// Coefficients of the Taylor expansion 1/Gamma(1+x) = sum a_k x^k.
constexpr double kRecipGamma1 = 0.57721566490153286061;   // a1
constexpr double kRecipGamma3 = -0.042002635034095235529;  // a3

// gam1 = (1/Gamma(1-x) - 1/Gamma(1+x)) / (2x), gam2 = their mean.
void temme_gammas(double x, double& gam1, double& gam2, double& gampl,
                  double& gammi) {
  if (std::fabs(x) < 1e-3) {
    gam1 = -(kRecipGamma1 + kRecipGamma3 * x * x);
  } else {
    gam1 = (1.0 / std::tgamma(1.0 - x) - 1.0 / std::tgamma(1.0 + x)) /
           (2.0 * x);
  }
  gam2 = (1.0 / std::tgamma(1.0 - x) + 1.0 / std::tgamma(1.0 + x)) / 2.0;
  gampl = gam2 - x * gam1;
  gammi = gam2 + x * gam1;
}

// Returns K_xmu(x) and K_{xmu+1}(x) for |xmu| <= 0.5.
// When scaled, returns exp(x) times those values.
void bessel_k_fractional(double xmu, double x, bool scaled, double& rkmu,
                         double& rk1) {
  const double xmu2 = xmu * xmu;
  const double xi = 1.0 / x;
  const double xi2 = 2.0 * xi;
  if (x <= 2.0) {
    // Temme's series.
    const double x2 = 0.5 * x;
    const double pimu = kPi * xmu;
    const double fact = (std::fabs(pimu) < kEps) ? 1.0 : pimu / std::sin(pimu);
    double d = -std::log(x2);
    double e = xmu * d;
    const double fact2 = (std::fabs(e) < kEps) ? 1.0 : std::sinh(e) / e;
    double gam1, gam2, gampl, gammi;
    temme_gammas(xmu, gam1, gam2, gampl, gammi);
    double ff = fact * (gam1 * std::cosh(e) + gam2 * fact2 * d);
    double sum = ff;
    e = std::exp(e);
    double p = 0.5 * e / gampl;
    double q = 0.5 / (e * gammi);
    double c = 1.0;
    d = x2 * x2;
    double sum1 = p;
    int i = 1;
    for (; i <= kMaxIter; ++i) {
      ff = (i * ff + p + q) / (i * i - xmu2);
      c *= d / i;
      p /= (i - xmu);
      q /= (i + xmu);
      const double del = c * ff;
      sum += del;
      sum1 += c * (p - i * ff);
      if (std::fabs(del) < std::fabs(sum) * kEps) break;
    }
    if (i > kMaxIter) throw std::runtime_error("bessel_k: series failed");
    rkmu = sum;
    rk1 = sum1 * xi2;
    if (scaled) {
      const double ex = std::exp(x);
      rkmu *= ex;
      rk1 *= ex;
    }
  } else {
    // Thompson-Barnett CF2.
    double b = 2.0 * (1.0 + x);
    double d = 1.0 / b;
    double h = d, delh = d;
    double q1 = 0.0, q2 = 1.0;
    const double a1 = 0.25 - xmu2;
    double q = a1, c = a1, a = -a1;
    double s = 1.0 + q * delh;
    int i = 1;
    for (; i <= kMaxIter; ++i) {
      a -= 2 * i;
      c = -a * c / (i + 1.0);
      const double qnew = (q1 - b * q2) / a;
      q1 = q2;
      q2 = qnew;
      q += c * qnew;
      b += 2.0;
      d = 1.0 / (b + a * d);
      delh = (b * d - 1.0) * delh;
      h += delh;
      const double dels = q * delh;
      s += dels;
      if (std::fabs(dels / s) < kEps) break;
    }
    if (i > kMaxIter)
      throw std::runtime_error("bessel_k: continued fraction failed");
    h = a1 * h;
    rkmu = std::sqrt(kPi / (2.0 * x)) / s;
    if (!scaled) rkmu *= std::exp(-x);
    rk1 = rkmu * (xmu + x + 0.5 - h) * xi;
  }
}

double bessel_k_impl(double nu, double x, bool scaled) {
  if (!(x > 0.0)) throw std::invalid_argument("bessel_k: requires x > 0");
  nu = std::fabs(nu);
  const int nl = static_cast<int>(nu + 0.5);
  const double xmu = nu - nl;  // |xmu| <= 0.5
  double rkmu, rk1;
  bessel_k_fractional(xmu, x, scaled, rkmu, rk1);
  const double xi2 = 2.0 / x;
  for (int i = 1; i <= nl; ++i) {
    const double rktemp = (xmu + i) * xi2 * rk1 + rkmu;
    rkmu = rk1;
    rk1 = rktemp;
  }
  return rkmu;
}

}  // namespace

double bessel_k(double nu, double x) { return bessel_k_impl(nu, x, false); }

double bessel_k_scaled(double nu, double x) {
  return bessel_k_impl(nu, x, true);
}

double log_bessel_k(double nu, double x) {
  return std::log(bessel_k_impl(nu, x, true)) - x;
}

}  // namespace trawlsbi

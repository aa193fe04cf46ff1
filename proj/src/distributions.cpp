#include "trawlsbi/distributions.hpp"

#include <cmath>
#include <stdexcept>

#include "trawlsbi/special.hpp"

namespace trawlsbi {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kLog2Pi = 1.8378770664093454836;

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

void check_param_count(const SeedSpec& s, std::size_t n) {
  if (s.params.size() != n)
    throw std::invalid_argument("SeedSpec: wrong parameter count for " +
                                to_string(s.family));
}

bool is_nonneg_integer(double x) {
  return x >= 0.0 && std::floor(x) == x;
}

}  // namespace

std::string to_string(SeedFamily f) {
  switch (f) {
    case SeedFamily::Poisson: return "poisson";
    case SeedFamily::Gamma: return "gamma";
    case SeedFamily::Gaussian: return "gaussian";
    case SeedFamily::InverseGaussian: return "inverse_gaussian";
    case SeedFamily::NIG4: return "nig4";
    case SeedFamily::VG: return "vg";
    case SeedFamily::GH: return "gh";
  }
  return "unknown";
}

SeedFamily seed_family_from_string(const std::string& s) {
  if (s == "poisson") return SeedFamily::Poisson;
  if (s == "gamma") return SeedFamily::Gamma;
  if (s == "gaussian") return SeedFamily::Gaussian;
  if (s == "inverse_gaussian") return SeedFamily::InverseGaussian;
  if (s == "nig4") return SeedFamily::NIG4;
  if (s == "vg") return SeedFamily::VG;
  if (s == "gh") return SeedFamily::GH;
  throw std::invalid_argument("unknown seed family: " + s);
}

void SeedSpec::validate() const {
  switch (family) {
    case SeedFamily::Poisson:
      check_param_count(*this, 1);
      require(params[0] > 0.0, "Poisson: lambda must be positive");
      break;
    case SeedFamily::Gamma:
      check_param_count(*this, 2);
      require(params[0] > 0.0 && params[1] > 0.0,
              "Gamma: alpha, beta must be positive");
      break;
    case SeedFamily::Gaussian:
      check_param_count(*this, 2);
      require(params[1] > 0.0, "Gaussian: sigma2 must be positive");
      break;
    case SeedFamily::InverseGaussian:
      check_param_count(*this, 2);
      require(params[0] > 0.0 && params[1] > 0.0,
              "InverseGaussian: gamma, delta must be positive");
      break;
    case SeedFamily::NIG4:
      check_param_count(*this, 4);
      require(params[0] > std::fabs(params[1]), "NIG4: requires alpha > |beta|");
      require(params[2] > 0.0, "NIG4: delta must be positive");
      break;
    case SeedFamily::VG:
      check_param_count(*this, 4);
      require(params[0] > std::fabs(params[1]), "VG: requires alpha > |beta|");
      require(params[2] > 0.0, "VG: lambda must be positive");
      break;
    case SeedFamily::GH:
      check_param_count(*this, 5);
      require(params[1] > std::fabs(params[2]), "GH: requires alpha > |beta|");
      require(params[3] > 0.0, "GH: delta must be positive");
      break;
  }
}

double log_density(const SeedSpec& spec, double x) {
  spec.validate();
  switch (spec.family) {
    case SeedFamily::Poisson: {
      require(is_nonneg_integer(x), "Poisson: x must be a nonnegative integer");
      const double lam = spec.params[0];
      return x * std::log(lam) - lam - std::lgamma(x + 1.0);
    }
    case SeedFamily::Gamma: {
      require(x > 0.0, "Gamma: x must be positive");
      const double a = spec.params[0], b = spec.params[1];
      return a * std::log(b) - std::lgamma(a) + (a - 1.0) * std::log(x) - b * x;
    }
    case SeedFamily::Gaussian: {
      const double mu = spec.params[0], s2 = spec.params[1];
      return -0.5 * (kLog2Pi + std::log(s2)) - 0.5 * (x - mu) * (x - mu) / s2;
    }
    case SeedFamily::InverseGaussian: {
      require(x > 0.0, "InverseGaussian: x must be positive");
      const double g = spec.params[0], d = spec.params[1];
      return std::log(d) + d * g - 0.5 * kLog2Pi - 1.5 * std::log(x) -
             0.5 * (d * d / x + g * g * x);
    }
    case SeedFamily::NIG4: {
      const double a = spec.params[0], b = spec.params[1];
      const double d = spec.params[2], mu = spec.params[3];
      const double g = std::sqrt(a * a - b * b);
      const double q = std::sqrt(d * d + (x - mu) * (x - mu));
      return std::log(a * d / kPi) + log_bessel_k(1.0, a * q) - std::log(q) +
             d * g + b * (x - mu);
    }
    case SeedFamily::VG: {
      const double a = spec.params[0], b = spec.params[1];
      const double lam = spec.params[2], mu = spec.params[3];
      const double g2 = a * a - b * b;
      const double y = std::fabs(x - mu);
      require(y > 0.0, "VG: density singular at x = mu for small lambda");
      return lam * std::log(g2) + (lam - 0.5) * std::log(y) +
             log_bessel_k(lam - 0.5, a * y) - 0.5 * std::log(kPi) -
             std::lgamma(lam) - (lam - 0.5) * std::log(2.0 * a) +
             b * (x - mu);
    }
    case SeedFamily::GH: {
      const double lam = spec.params[0], a = spec.params[1], b = spec.params[2];
      const double d = spec.params[3], mu = spec.params[4];
      const double g = std::sqrt(a * a - b * b);
      const double q = std::sqrt(d * d + (x - mu) * (x - mu));
      return lam * std::log(g / d) - 0.5 * kLog2Pi -
             log_bessel_k(lam, d * g) + log_bessel_k(lam - 0.5, a * q) -
             (0.5 - lam) * std::log(q / a) + b * (x - mu);
    }
  }
  throw std::logic_error("unreachable");
}

double density(const SeedSpec& spec, double x) {
  return std::exp(log_density(spec, x));
}

SeedSpec scale_by_area(const SeedSpec& spec, double leb) {
  spec.validate();
  require(leb > 0.0, "scale_by_area: leb must be positive");
  SeedSpec out = spec;
  switch (spec.family) {
    case SeedFamily::Poisson:
      out.params[0] *= leb;
      break;
    case SeedFamily::Gamma:
      out.params[0] *= leb;
      break;
    case SeedFamily::Gaussian:
      out.params[0] *= leb;
      out.params[1] *= leb;
      break;
    case SeedFamily::InverseGaussian:
      out.params[1] *= leb;
      break;
    case SeedFamily::NIG4:
      out.params[2] *= leb;
      out.params[3] *= leb;
      break;
    case SeedFamily::VG:
      out.params[2] *= leb;
      out.params[3] *= leb;
      break;
    case SeedFamily::GH:
      throw std::invalid_argument(
          "scale_by_area: GH family is not convolution-closed");
  }
  return out;
}

double sample(const SeedSpec& spec, double leb, Rng& rng) {
  const SeedSpec s = scale_by_area(spec, leb);
  switch (s.family) {
    case SeedFamily::Poisson:
      return static_cast<double>(rng.poisson(s.params[0]));
    case SeedFamily::Gamma:
      return rng.gamma(s.params[0], s.params[1]);
    case SeedFamily::Gaussian:
      return s.params[0] + std::sqrt(s.params[1]) * rng.normal();
    case SeedFamily::InverseGaussian:
      return rng.inverse_gaussian(s.params[0], s.params[1]);
    case SeedFamily::NIG4: {
      const double a = s.params[0], b = s.params[1];
      const double d = s.params[2], mu = s.params[3];
      const double g = std::sqrt(a * a - b * b);
      const double v = rng.inverse_gaussian(g, d);
      return mu + b * v + std::sqrt(v) * rng.normal();
    }
    case SeedFamily::VG: {
      const double a = s.params[0], b = s.params[1];
      const double lam = s.params[2], mu = s.params[3];
      const double g2 = a * a - b * b;
      const double v = rng.gamma(lam, 0.5 * g2);
      return mu + b * v + std::sqrt(v) * rng.normal();
    }
    case SeedFamily::GH:
      throw std::invalid_argument("sample: GH family is unsupported");
  }
  throw std::logic_error("unreachable");
}

SeedSpec nig3_to_nig4(const Nig3Params& p) {
  require(p.sigma > 0.0, "Nig3Params: sigma must be positive");
  require(std::fabs(p.beta) <= 5.0, "Nig3Params: beta must lie in [-5, 5]");
  const double g = 1.0 + std::fabs(p.beta) / 5.0;
  const double a2 = g * g + p.beta * p.beta;
  const double a = std::sqrt(a2);
  // Standardized base NIG(a, beta, delta0, mu0) has mean 0, variance 1;
  // mu + sigma * Z rescales alpha, beta by 1/sigma.
  const double delta0 = g * g * g / a2;
  const double mu0 = -p.beta * g * g / a2;
  SeedSpec out;
  out.family = SeedFamily::NIG4;
  out.params = {a / p.sigma, p.beta / p.sigma, p.sigma * delta0,
                p.mu + p.sigma * mu0};
  out.validate();
  return out;
}

Moments nig_moments(const SeedSpec& spec) {
  if (spec.family != SeedFamily::NIG4)
    throw std::invalid_argument("nig_moments: requires a NIG4 spec");
  spec.validate();
  const double a = spec.params[0], b = spec.params[1];
  const double d = spec.params[2], mu = spec.params[3];
  const double g = std::sqrt(a * a - b * b);
  return {mu + d * b / g, d * a * a / (g * g * g)};
}

Moments seed_moments(const SeedSpec& spec) {
  spec.validate();
  switch (spec.family) {
    case SeedFamily::Poisson:
      return {spec.params[0], spec.params[0]};
    case SeedFamily::Gamma: {
      const double a = spec.params[0], b = spec.params[1];
      return {a / b, a / (b * b)};
    }
    case SeedFamily::Gaussian:
      return {spec.params[0], spec.params[1]};
    case SeedFamily::InverseGaussian: {
      const double g = spec.params[0], d = spec.params[1];
      return {d / g, d / (g * g * g)};
    }
    case SeedFamily::NIG4:
      return nig_moments(spec);
    case SeedFamily::VG: {
      const double a = spec.params[0], b = spec.params[1];
      const double lam = spec.params[2], mu = spec.params[3];
      const double g2 = a * a - b * b;
      // Gamma subordinator V ~ Gamma(lam, g2/2): X = mu + b V + sqrt(V) Z.
      const double ev = 2.0 * lam / g2;
      const double vv = 4.0 * lam / (g2 * g2);
      return {mu + b * ev, ev + b * b * vv};
    }
    case SeedFamily::GH:
      throw std::invalid_argument("seed_moments: GH moments not provided");
  }
  throw std::logic_error("unreachable");
}

double nig3_skewness(double beta) {
  const double g = 1.0 + std::fabs(beta) / 5.0;
  // Cumulants of the standardized base distribution (variance 1).
  return 3.0 * beta / (g * g);
}

double nig3_excess_kurtosis(double beta) {
  const double g = 1.0 + std::fabs(beta) / 5.0;
  const double a2 = g * g + beta * beta;
  return 3.0 * (a2 + 4.0 * beta * beta) / (g * g * g * g);
}

}  // namespace trawlsbi

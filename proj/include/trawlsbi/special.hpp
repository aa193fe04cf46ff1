#pragma once

namespace trawlsbi {

// Modified Bessel function of the second kind K_nu(x) for real order.
// Temme's series for x <= 2, Steed/Thompson-Barnett continued fractions for
// x > 2. Accepts any real nu (K_{-nu} = K_nu); requires x > 0.
double bessel_k(double nu, double x);

// exp(x) * K_nu(x); stable for large x where K underflows.
double bessel_k_scaled(double nu, double x);

// log K_nu(x).
double log_bessel_k(double nu, double x);

}  // namespace trawlsbi

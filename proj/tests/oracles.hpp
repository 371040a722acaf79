#pragma once

// Reference values built from closed forms (erf, gamma functions) and
// Boost's own quadrature, sharing no code with the library's tilt or
// entropy routines.

namespace oracle {

struct Moments {
  double log_z = 0.0;
  double mean = 0.0;
  double var = 0.0;
};

// N(mu, sigma^2) restricted to [lo, hi]: log of the retained mass, mean and
// variance of the truncated law.  lo/hi may be infinite.
Moments truncated_normal(double mu, double sigma, double lo, double hi);

// Tilts exp(theta x - t x^2 / 2) rho(x) of standardized 1D laws; log_z is
// the log of the integral against the normalised density rho.
Moments tilt_uniform(double t, double theta);      // U[-sqrt3, sqrt3]
Moments tilt_exponential(double t, double theta);  // e^{-(x+1)} on [-1, inf)
Moments tilt_laplace(double t, double theta);      // e^{-sqrt2 |x|} / sqrt2

struct Moments2 {
  double log_z = 0.0;
  double a[2] = {0.0, 0.0};
  double A[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
};

// Uniform disc of radius 2 (cov = Id), tilted, by nested Gauss-Kronrod in
// polar coordinates.
Moments2 tilt_disc(double t, double theta0, double theta1);

// Relative Fisher information J(nu_r || N(0, r)) for X_r = r X + sqrt(r (1 - r)) Z,
// X ~ U[-sqrt3, sqrt3].
double fisher_uniform(double r);

// Ent((X1 + X2)/sqrt2) - Ent(X) for two i.i.d. standardized copies.
double epi_uniform();      // triangular law
double epi_exponential();  // Gamma(2) law

}  // namespace oracle

// qlbe/quadrature.hpp — adaptive Gauss–Kronrod (G7,K15) integration on finite intervals
#pragma once

#include <functional>

namespace qlbe {

struct QuadratureConfig {
  double abs_tol = 1e-12;
  double rel_tol = 1e-10;
  int max_intervals = 4000;  // bisections before giving up
};

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
  int intervals_used = 0;
  bool converged = false;
};

// ∫_a^b f(x) dx.  The worst interval (by the embedded G7/K15 error estimate)
// is bisected until the summed estimate meets max(abs_tol, rel_tol·|value|).
// Callers with infinite domains are expected to truncate to a finite window
// using the known decay of their integrand.
QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           const QuadratureConfig& cfg = {});

// integrate(), but throws std::runtime_error when the tolerance is not met.
double integrate_or_throw(const std::function<double(double)>& f, double a, double b,
                          const QuadratureConfig& cfg = {});

}  // namespace qlbe

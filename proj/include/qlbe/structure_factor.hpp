// qlbe/structure_factor.hpp — Maxwell–Boltzmann dynamic structure factor and
// the correlation/response functions derived from it
#pragma once

#include <Eigen/Dense>

#include "qlbe/core.hpp"
#include "qlbe/quadrature.hpp"

namespace qlbe {

// One (momentum transfer, energy transfer) sample point.  The magnitude q is
// strictly positive: the 1/Q prefactor of the structure factor is singular at
// zero transfer, so Q=0 is excluded at the type level.
struct SFPoint {
  double q;  // |Q| > 0
  double e;  // signed energy, positive when transferred to the particle

  SFPoint(double q_mag, double energy);
};

// Energy gained by a tracer of mass `mass` absorbing momentum Q:
//   E(Q,P) = ((P+Q)² − P²) / (2 mass)
double energy_transfer(const Eigen::Vector3d& q_vec, const Eigen::Vector3d& p_vec, double mass);
double energy_transfer(double q, double p, double mass);  // collinear case

// Dynamic structure factor of the ideal Maxwell–Boltzmann gas:
//   S(Q,E) = sqrt(βm/2π) (1/Q) exp(−(β/8m)(2mE+Q²)²/Q²)
double s_mb(const SFPoint& point, const GasModel& gas);

// S(Q,E) − e^{−βE} S(−Q,−E) (with S(−Q,·) = S(Q,·) by isotropy).  Vanishes
// identically — detailed balance — and is exposed so callers can audit the
// floating-point defect.
double detailed_balance_residual(const SFPoint& point, const GasModel& gas);

// Dynamic response function χ''(Q,E) = π (1 − e^{βE}) S(Q,E); the E=0 value is
// the continuous limit 0.
double response_function(const SFPoint& point, const GasModel& gas);

// (1 − e^x)·coth(x/2) continued through its removable singularity: the product
// equals −(1 + e^x) for all x, with limit −2 at x = 0.
double one_minus_exp_coth(double x);

// Energy window outside which the Gaussian factor of S(q,·) is below
// exp(−half_width²/2) of its peak; used to truncate infinite E-integrals.
struct EnergyWindow {
  double lo;
  double hi;
};
EnergyWindow s_mb_energy_window(double q, const GasModel& gas, double half_width = 16.0);

// Commutator and anticommutator correlation functions of the gas density,
// expressed through S via the fluctuation–dissipation relations
//   φ⁻(Q,t) = −2 ∫_{−∞}^0 dE sin(Et) (1 − e^{βE}) S(Q,E)
//   φ⁺(Q,t) = −2 ∫_{−∞}^0 dE cos(Et) coth(βE/2) (1 − e^{βE}) S(Q,E)
double fdt_phi_minus(double q, double t, const GasModel& gas, const QuadratureConfig& quad = {});
double fdt_phi_plus(double q, double t, const GasModel& gas, const QuadratureConfig& quad = {});

// Double-differential cross section for a probe scattering P → P+Q off the
// gas: (2π)⁶ (M/2π)² (P'/P) |Ṽ(Q)|² S(Q,E).
double van_hove_cross_section(const Eigen::Vector3d& p_in, const Eigen::Vector3d& q_vec,
                              double mass, const GasModel& gas, const PotentialSpec& pot);

}  // namespace qlbe

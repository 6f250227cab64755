// structure_factor.cpp — closed-form S(Q,E) and derived response functions
#include "qlbe/structure_factor.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qlbe {

SFPoint::SFPoint(double q_mag, double energy) : q(q_mag), e(energy) {
  if (!(std::isfinite(q_mag) && q_mag > 0.0))
    throw std::invalid_argument("SFPoint: momentum transfer magnitude must be > 0");
  if (!std::isfinite(energy)) throw std::invalid_argument("SFPoint: energy must be finite");
}

double energy_transfer(const Eigen::Vector3d& q_vec, const Eigen::Vector3d& p_vec, double mass) {
  if (!(std::isfinite(mass) && mass > 0.0))
    throw std::invalid_argument("energy_transfer: mass must be > 0");
  return ((p_vec + q_vec).squaredNorm() - p_vec.squaredNorm()) / (2.0 * mass);
}

double energy_transfer(double q, double p, double mass) {
  if (!(std::isfinite(mass) && mass > 0.0))
    throw std::invalid_argument("energy_transfer: mass must be > 0");
  return ((p + q) * (p + q) - p * p) / (2.0 * mass);
}

double s_mb(const SFPoint& point, const GasModel& gas) {
  validate(gas);
  const double beta = gas.beta, m = gas.mass, q = point.q;
  const double arg = 2.0 * m * point.e + q * q;
  return std::sqrt(beta * m / (2.0 * std::numbers::pi)) / q *
         std::exp(-beta / (8.0 * m) * arg * arg / (q * q));
}

double detailed_balance_residual(const SFPoint& point, const GasModel& gas) {
  const double direct = s_mb(point, gas);
  const double reversed = std::exp(-gas.beta * point.e) * s_mb(SFPoint(point.q, -point.e), gas);
  return direct - reversed;
}

double response_function(const SFPoint& point, const GasModel& gas) {
  if (point.e == 0.0) return 0.0;
  return std::numbers::pi * (1.0 - std::exp(gas.beta * point.e)) * s_mb(point, gas);
}

double one_minus_exp_coth(double x) {
  // (1 − e^x) coth(x/2) = (1 − e^x)(e^x + 1)/(e^x − 1) = −(1 + e^x);
  // the right-hand side is the analytic continuation through x = 0.
  return -(1.0 + std::exp(x));
}

EnergyWindow s_mb_energy_window(double q, const GasModel& gas, double half_width) {
  if (!(std::isfinite(q) && q > 0.0))
    throw std::invalid_argument("s_mb_energy_window: q must be > 0");
  // Gaussian in E with centre −Q²/2m and standard deviation Q/sqrt(βm)
  const double center = -q * q / (2.0 * gas.mass);
  const double sigma = q / std::sqrt(gas.beta * gas.mass);
  return EnergyWindow{center - half_width * sigma, center + half_width * sigma};
}

namespace {

double fdt_integral(double q, double t, const GasModel& gas, const QuadratureConfig& quad,
                    bool plus_branch) {
  validate(gas);
  if (!(std::isfinite(t))) throw std::invalid_argument("fdt: time must be finite");
  const EnergyWindow window = s_mb_energy_window(q, gas);
  const double lo = window.lo;
  const double hi = std::min(0.0, window.hi);
  if (hi <= lo) return 0.0;
  const auto integrand = [&](double e) {
    const SFPoint point(q, e);
    const double s = s_mb(point, gas);
    if (plus_branch) return std::cos(e * t) * one_minus_exp_coth(gas.beta * e) * s;
    return std::sin(e * t) * (1.0 - std::exp(gas.beta * e)) * s;
  };
  return -2.0 * integrate_or_throw(integrand, lo, hi, quad);
}

}  // namespace

double fdt_phi_minus(double q, double t, const GasModel& gas, const QuadratureConfig& quad) {
  return fdt_integral(q, t, gas, quad, false);
}

double fdt_phi_plus(double q, double t, const GasModel& gas, const QuadratureConfig& quad) {
  return fdt_integral(q, t, gas, quad, true);
}

double van_hove_cross_section(const Eigen::Vector3d& p_in, const Eigen::Vector3d& q_vec,
                              double mass, const GasModel& gas, const PotentialSpec& pot) {
  validate(pot);
  const double p = p_in.norm();
  if (p == 0.0)
    throw std::invalid_argument("van_hove_cross_section: flux factor undefined at P = 0");
  const double p_out = (p_in + q_vec).norm();
  if (p_out == 0.0)
    throw std::invalid_argument("van_hove_cross_section: outgoing momentum must be nonzero");
  const SFPoint point(q_vec.norm(), energy_transfer(q_vec, p_in, mass));
  const double two_pi = 2.0 * std::numbers::pi;
  const double flux = p_out / p;
  return std::pow(two_pi, 6) * std::pow(mass / two_pi, 2) * flux *
         pot.vtilde_sq(point.q) * s_mb(point, gas);
}

}  // namespace qlbe

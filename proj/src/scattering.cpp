// scattering.cpp — Lindblad amplitudes, kernel identity, and collision rates
#include "qlbe/scattering.hpp"

#include <atomic>
#include <cmath>
#include <iostream>
#include <numbers>
#include <stdexcept>

#include "qlbe/structure_factor.hpp"

namespace qlbe {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

void require(bool condition, const std::string& message) {
  if (!condition) throw std::invalid_argument(message);
}

Eigen::Vector3d project_perp(const Eigen::Vector3d& p, const Eigen::Vector3d& q_hat) {
  return p - p.dot(q_hat) * q_hat;
}

// Orthonormal basis of the plane perpendicular to unit vector q_hat.
std::pair<Eigen::Vector3d, Eigen::Vector3d> perp_basis(const Eigen::Vector3d& q_hat) {
  const Eigen::Vector3d helper =
      std::abs(q_hat.x()) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
  const Eigen::Vector3d e1 = q_hat.cross(helper).normalized();
  const Eigen::Vector3d e2 = q_hat.cross(e1);
  return {e1, e2};
}

}  // namespace

ScatteringAmplitude ScatteringAmplitude::constant(double f0) {
  require(std::isfinite(f0), "ScatteringAmplitude: f0 must be finite");
  ScatteringAmplitude amp;
  amp.kind = Kind::constant;
  amp.f0 = f0;
  return amp;
}

ScatteringAmplitude ScatteringAmplitude::born_gaussian(double g, double sigma) {
  require(std::isfinite(g), "ScatteringAmplitude: g must be finite");
  require(std::isfinite(sigma) && sigma > 0.0, "ScatteringAmplitude: sigma must be > 0");
  ScatteringAmplitude amp;
  amp.kind = Kind::born_gaussian;
  amp.g = g;
  amp.sigma = sigma;
  return amp;
}

double ScatteringAmplitude::value(const Eigen::Vector3d& p_f, const Eigen::Vector3d& p_i,
                                  double reduced_mass) const {
  switch (kind) {
    case Kind::constant:
      return f0;
    case Kind::born_gaussian: {
      // Born amplitude −(2π)² m* Ṽ(p_f − p_i) of the Gaussian potential
      const double transfer_sq = (p_f - p_i).squaredNorm();
      return -(reduced_mass * g / two_pi) * std::exp(-0.5 * sigma * sigma * transfer_sq);
    }
  }
  throw std::logic_error("ScatteringAmplitude: unknown kind");
}

KinematicSplit split_parallel_perp(const Eigen::Vector3d& p, const Eigen::Vector3d& q_vec) {
  require(q_vec.norm() > 0.0, "split_parallel_perp: q_vec must be nonzero");
  const Eigen::Vector3d q_hat = q_vec.normalized();
  KinematicSplit split;
  split.q_vec = q_vec;
  split.p_par = p.dot(q_hat) * q_hat;
  split.p_perp = p - split.p_par;
  return split;
}

double reduced_mass(const GasModel& gas, const ParticleModel& particle) {
  validate(gas);
  validate(particle);
  return gas.mass * particle.mass / (gas.mass + particle.mass);
}

Eigen::Vector3d rel_momentum(const Eigen::Vector3d& p, const Eigen::Vector3d& P,
                             const GasModel& gas, const ParticleModel& particle) {
  const double m_star = reduced_mass(gas, particle);
  return (m_star / gas.mass) * p - (m_star / particle.mass) * P;
}

double mb_density(const Eigen::Vector3d& p, const GasModel& gas) {
  const double a = gas.beta / (2.0 * std::numbers::pi * gas.mass);
  return a * std::sqrt(a) * std::exp(-gas.beta * p.squaredNorm() / (2.0 * gas.mass));
}

double mb_density_perp(const Eigen::Vector3d& p_perp, const GasModel& gas) {
  const double a = gas.beta / (2.0 * std::numbers::pi * gas.mass);
  return a * std::exp(-gas.beta * p_perp.squaredNorm() / (2.0 * gas.mass));
}

namespace {

// Shared kinematics for both forms of L.
struct LContext {
  double q_mag;
  double f;              // scattering amplitude value
  Eigen::Vector3d p_perp;
  Eigen::Vector3d p_par_shift;  // (m/m*) Q/2 + (m/M) P_par
  double s_value;        // S(Q, E(Q,P))
};

LContext make_context(const Eigen::Vector3d& p, const Eigen::Vector3d& P,
                      const Eigen::Vector3d& q_vec, const ScatteringAmplitude& amp,
                      const GasModel& gas, const ParticleModel& particle) {
  const double q_mag = q_vec.norm();
  require(q_mag > 0.0, "lindblad_L: momentum transfer must be nonzero");
  const Eigen::Vector3d q_hat = q_vec / q_mag;

  Eigen::Vector3d p_perp = project_perp(p, q_hat);
  if (std::abs(p.dot(q_hat)) > 1e-12 * std::max(1.0, p.norm())) {
    static std::atomic<bool> warned{false};
    if (!warned.exchange(true))
      std::cerr << "qlbe: lindblad_L received a gas momentum with a component along Q; "
                   "projecting onto the perpendicular plane\n";
  }

  const auto P_split = split_parallel_perp(P, q_vec);
  const double m_star = reduced_mass(gas, particle);
  const Eigen::Vector3d rel_perp = rel_momentum(p_perp, P_split.p_perp, gas, particle);

  LContext ctx;
  ctx.q_mag = q_mag;
  ctx.p_perp = p_perp;
  ctx.f = amp.value(rel_perp - 0.5 * q_vec, rel_perp + 0.5 * q_vec, m_star);
  ctx.p_par_shift =
      (gas.mass / m_star) * 0.5 * q_vec + (gas.mass / particle.mass) * P_split.p_par;
  ctx.s_value = s_mb(SFPoint(q_mag, energy_transfer(q_vec, P, particle.mass)), gas);
  return ctx;
}

}  // namespace

std::complex<double> lindblad_L(const Eigen::Vector3d& p, const Eigen::Vector3d& P,
                                const Eigen::Vector3d& q_vec, const ScatteringAmplitude& amp,
                                const GasModel& gas, const ParticleModel& particle) {
  const LContext ctx = make_context(p, P, q_vec, amp, gas, particle);
  const double m_star = reduced_mass(gas, particle);
  const double prefactor =
      std::sqrt(gas.number_density * gas.mass / (m_star * m_star * ctx.q_mag));
  return prefactor * ctx.f * std::sqrt(mb_density(ctx.p_perp + ctx.p_par_shift, gas));
}

std::complex<double> lindblad_L_rewritten(const Eigen::Vector3d& p, const Eigen::Vector3d& P,
                                          const Eigen::Vector3d& q_vec,
                                          const ScatteringAmplitude& amp, const GasModel& gas,
                                          const ParticleModel& particle) {
  const LContext ctx = make_context(p, P, q_vec, amp, gas, particle);
  const double m_star = reduced_mass(gas, particle);
  const double prefactor = std::sqrt(gas.number_density / (m_star * m_star));
  return prefactor * ctx.f * std::sqrt(mb_density_perp(ctx.p_perp, gas)) *
         std::sqrt(ctx.s_value);
}

double mb_identity_lhs(const Eigen::Vector3d& p_perp, const Eigen::Vector3d& P,
                       const Eigen::Vector3d& q_vec, const GasModel& gas,
                       const ParticleModel& particle) {
  const double q_mag = q_vec.norm();
  require(q_mag > 0.0, "mb_identity: momentum transfer must be nonzero");
  const auto P_split = split_parallel_perp(P, q_vec);
  const double m_star = reduced_mass(gas, particle);
  const Eigen::Vector3d arg = p_perp + (gas.mass / m_star) * 0.5 * q_vec +
                              (gas.mass / particle.mass) * P_split.p_par;
  return gas.mass / q_mag * mb_density(arg, gas);
}

double mb_identity_middle(const Eigen::Vector3d& p_perp, const Eigen::Vector3d& P,
                          const Eigen::Vector3d& q_vec, const GasModel& gas,
                          const ParticleModel& particle) {
  const double q_mag = q_vec.norm();
  require(q_mag > 0.0, "mb_identity: momentum transfer must be nonzero");
  const double e = energy_transfer(q_vec, P, particle.mass);
  const Eigen::Vector3d arg =
      p_perp + (2.0 * gas.mass * e + q_mag * q_mag) / (q_mag * q_mag) * 0.5 * q_vec;
  return gas.mass / q_mag * mb_density(arg, gas);
}

double mb_identity_rhs(const Eigen::Vector3d& p_perp, const Eigen::Vector3d& P,
                       const Eigen::Vector3d& q_vec, const GasModel& gas,
                       const ParticleModel& particle) {
  const double q_mag = q_vec.norm();
  require(q_mag > 0.0, "mb_identity: momentum transfer must be nonzero");
  const double e = energy_transfer(q_vec, P, particle.mass);
  return mb_density_perp(p_perp, gas) * s_mb(SFPoint(q_mag, e), gas);
}

double mb_identity_residual(const Eigen::Vector3d& p_perp, const Eigen::Vector3d& P,
                            const Eigen::Vector3d& q_vec, const GasModel& gas,
                            const ParticleModel& particle) {
  return mb_identity_lhs(p_perp, P, q_vec, gas, particle) -
         mb_identity_rhs(p_perp, P, q_vec, gas, particle);
}

double total_rate_full(const Eigen::Vector3d& P, const ScatteringAmplitude& amp,
                       const GasModel& gas, const ParticleModel& particle,
                       const QuadratureConfig& quad) {
  validate(gas);
  validate(particle);
  const double m = gas.mass, M = particle.mass, beta = gas.beta;
  const double p_mag = P.norm();

  // frame with z along P (arbitrary for P = 0)
  const Eigen::Vector3d z_hat = p_mag > 0.0 ? Eigen::Vector3d(P / p_mag) : Eigen::Vector3d::UnitZ();
  const auto [x_hat, y_hat] = perp_basis(z_hat);
  (void)y_hat;

  // windows from the Gaussian decay of the integrand (tails below e^{-80})
  const double r_max = std::sqrt(170.0 * m / beta);
  const double q_max =
      1.2 * (std::sqrt(640.0 * m / beta) + 2.0 * (m / M) * p_mag) / (1.0 + m / M) + 1.0;

  constexpr int n_angles = 16;

  const auto rate_density_q = [&](double q_mag, double u) {
    // ∫ d²p |L|² over the plane perpendicular to q at fixed transfer q
    const double s = std::sqrt(std::max(0.0, 1.0 - u * u));
    const Eigen::Vector3d q_hat = u * z_hat + s * x_hat;
    const Eigen::Vector3d q_vec = q_mag * q_hat;
    const auto [e1, e2] = perp_basis(q_hat);
    const auto radial = [&](double r) {
      double angle_sum = 0.0;
      for (int k = 0; k < n_angles; ++k) {
        const double theta = two_pi * (k + 0.5) / n_angles;
        const Eigen::Vector3d p = r * (std::cos(theta) * e1 + std::sin(theta) * e2);
        angle_sum += std::norm(lindblad_L(p, P, q_vec, amp, gas, particle));
      }
      return r * angle_sum * (two_pi / n_angles);
    };
    return integrate_or_throw(radial, 0.0, r_max, quad);
  };

  const auto over_directions = [&](double q_mag) {
    if (q_mag <= 0.0) return 0.0;
    const auto in_u = [&](double u) { return rate_density_q(q_mag, u); };
    return q_mag * q_mag * two_pi * integrate_or_throw(in_u, -1.0, 1.0, quad);
  };

  return integrate_or_throw(over_directions, 0.0, q_max, quad);
}

}  // namespace qlbe

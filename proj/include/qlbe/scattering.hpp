// qlbe/scattering.hpp — beyond-Born Lindblad amplitudes, the Maxwell–Boltzmann
// kernel identity, and total collision rates for sharp momenta
#pragma once

#include <Eigen/Dense>
#include <complex>

#include "qlbe/core.hpp"
#include "qlbe/quadrature.hpp"

namespace qlbe {

// Elastic scattering amplitude f(p_f, p_i).  Two parametric kinds:
//   constant:      f ≡ f0 (s-wave, energy-independent)
//   born_gaussian: Born amplitude of the Gaussian potential,
//                  f = −(2π)² m* Ṽ(p_f − p_i) = −(m* g/2π) exp(−σ²|Δ|²/2)
struct ScatteringAmplitude {
  enum class Kind { constant, born_gaussian };
  Kind kind = Kind::constant;
  double f0 = 1.0;     // constant kind
  double g = 0.0;      // born_gaussian coupling
  double sigma = 1.0;  // born_gaussian width

  static ScatteringAmplitude constant(double f0);
  static ScatteringAmplitude born_gaussian(double g, double sigma);

  // Real amplitude (isotropic real potential in Born approximation).
  double value(const Eigen::Vector3d& p_f, const Eigen::Vector3d& p_i, double reduced_mass) const;
};

// Decomposition of a vector relative to a momentum-transfer direction.
struct KinematicSplit {
  Eigen::Vector3d q_vec;
  Eigen::Vector3d p_par;   // (p·Q) Q/Q²
  Eigen::Vector3d p_perp;  // p − p_par
};
KinematicSplit split_parallel_perp(const Eigen::Vector3d& p, const Eigen::Vector3d& q_vec);

double reduced_mass(const GasModel& gas, const ParticleModel& particle);

// rel(p,P) = (m*/m) p − (m*/M) P
Eigen::Vector3d rel_momentum(const Eigen::Vector3d& p, const Eigen::Vector3d& P,
                             const GasModel& gas, const ParticleModel& particle);

// Normalised Maxwell–Boltzmann momentum densities of the gas:
// the full 3D density and its marginal over the plane perpendicular to Q.
double mb_density(const Eigen::Vector3d& p, const GasModel& gas);
double mb_density_perp(const Eigen::Vector3d& p_perp, const GasModel& gas);

// Lindblad amplitude at gas momentum p (in the plane ⊥ Q), particle momentum
// P, and momentum transfer Q:
//   L = sqrt(n m/(m*² Q)) f(rel(p⊥,P⊥) − Q/2, rel(p⊥,P⊥) + Q/2)
//       · sqrt(μ_MB(p⊥ + (m/m*) Q/2 + (m/M) P_∥))
// A p with a component along Q is projected out (with a one-time warning).
std::complex<double> lindblad_L(const Eigen::Vector3d& p, const Eigen::Vector3d& P,
                                const Eigen::Vector3d& q_vec, const ScatteringAmplitude& amp,
                                const GasModel& gas, const ParticleModel& particle);

// Same operator, written through the structure factor:
//   L = sqrt(n/m*²) f(…) · sqrt(μ_MB^⊥(p⊥)) · sqrt(S(Q, E(Q,P)))
std::complex<double> lindblad_L_rewritten(const Eigen::Vector3d& p, const Eigen::Vector3d& P,
                                          const Eigen::Vector3d& q_vec,
                                          const ScatteringAmplitude& amp, const GasModel& gas,
                                          const ParticleModel& particle);

// The two equal forms of the kernel identity that powers the rewrite:
//   lhs    = (m/Q) μ_MB(p⊥ + (m/m*) Q/2 + (m/M) P_∥)
//   middle = (m/Q) μ_MB(p⊥ + ((2mE+Q²)/Q²) Q/2)
//   rhs    = μ_MB^⊥(p⊥) S(Q, E(Q,P))
double mb_identity_lhs(const Eigen::Vector3d& p_perp, const Eigen::Vector3d& P,
                       const Eigen::Vector3d& q_vec, const GasModel& gas,
                       const ParticleModel& particle);
double mb_identity_middle(const Eigen::Vector3d& p_perp, const Eigen::Vector3d& P,
                          const Eigen::Vector3d& q_vec, const GasModel& gas,
                          const ParticleModel& particle);
double mb_identity_rhs(const Eigen::Vector3d& p_perp, const Eigen::Vector3d& P,
                       const Eigen::Vector3d& q_vec, const GasModel& gas,
                       const ParticleModel& particle);
double mb_identity_residual(const Eigen::Vector3d& p_perp, const Eigen::Vector3d& P,
                            const Eigen::Vector3d& q_vec, const GasModel& gas,
                            const ParticleModel& particle);

// Total collision rate out of the sharp momentum P:
//   M_out(P) = ∫d³Q ∫_{⊥Q} d²p |L(p,P;Q)|²
// computed with adaptive radial/polar quadratures and Gaussian-decay windows.
double total_rate_full(const Eigen::Vector3d& P, const ScatteringAmplitude& amp,
                       const GasModel& gas, const ParticleModel& particle,
                       const QuadratureConfig& quad = {});

}  // namespace qlbe

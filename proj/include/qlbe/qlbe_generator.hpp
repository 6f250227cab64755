// qlbe/qlbe_generator.hpp — discretized quantum linear Boltzmann generator on a
// 1D momentum lattice: build, apply, evolve, and the classical diagonal reduction
#pragma once

#include <Eigen/Dense>
#include <vector>

#include "qlbe/core.hpp"

namespace qlbe {

// γ = 2π (2π)³ n_gas, the rate prefactor shared by every collision-term
// construction (generator weights, classical rate densities, friction).
double collision_rate_prefactor(const GasModel& gas);

struct EvolutionConfig {
  double dt = 1e-3;
  double t_final = 1.0;
  int record_every = 1;  // record after every k-th step (t=0 and final always)
};

// Classical Markov jump rates read off the diagonal part of the generator:
// W(P → P + jΔ) = w(j, P) for lattice transfers j ≠ 0, exit rates R(P).
struct TransitionRates {
  MomentumGrid grid;
  std::vector<int> transfers;  // lattice steps j, Q = j·Δ
  Eigen::MatrixXd w;           // w(transfer index, source index)
  Eigen::ArrayXd total;        // R(P_k) = Σ_j w(j, k)
};

struct EvolutionResult {
  std::vector<double> times;
  std::vector<DensityMatrix> states;
  std::vector<double> boundary_occupancy;  // diagonal mass on the two edge sites
  long steps = 0;
};

struct ClassicalEvolutionResult {
  std::vector<double> times;
  std::vector<Eigen::ArrayXd> weights;
};

// Collision generator with loss rates R(P) and gain factors √(w(Q,P−Q) w(Q,P′−Q)),
// where w(Q,P) = γ ΔQ |Ṽ(Q)|² S(Q, E(Q,P)) and γ = 2π (2π)³ n_gas.  Transfers
// that would leave the lattice carry zero weight on both the gain and the loss
// side, so the discrete map is exactly trace preserving, commutes exactly with
// momentum-space phases e^{-iaP} for every displacement a, and leaves the
// lattice Maxwell-Boltzmann state exactly stationary.  The edge-site occupancy
// reported by evolve() signals when this boundary treatment starts to matter.
class QlbeGenerator {
 public:
  static QlbeGenerator build(const MomentumGrid& grid, const GasModel& gas,
                             const ParticleModel& particle, const PotentialSpec& pot);

  const MomentumGrid& grid() const { return grid_; }
  double rate_prefactor() const { return prefactor_; }
  double particle_mass() const { return particle_mass_; }
  double max_total_rate() const { return max_rate_; }

  // dϱ/dt in the momentum representation; linear, so usable on any matrix.
  Eigen::MatrixXcd apply_to(const Eigen::MatrixXcd& entries) const;
  Eigen::MatrixXcd apply(const DensityMatrix& rho) const;

  // Fixed-step RK4 under the stability bound dt·max R ≤ 0.1.  Recorded states
  // are checked for trace drift and positivity; violations abort with a
  // diagnostic rather than returning silently corrupted states.
  EvolutionResult evolve(const DensityMatrix& rho0, const EvolutionConfig& cfg) const;

  // ‖L[U ϱ U†] − U L[ϱ] U†‖_max for the momentum-space phase U = e^{−ia P}.
  double covariance_residual(const DensityMatrix& rho, double displacement) const;

  TransitionRates diagonal_rates() const { return rates_; }

 private:
  QlbeGenerator() = default;

  MomentumGrid grid_;
  double prefactor_ = 0.0;
  double particle_mass_ = 1.0;
  double max_rate_ = 0.0;
  TransitionRates rates_;
  Eigen::MatrixXd sqrt_w_;  // √w, same layout as rates_.w
};

// dμ(P)/dt = Σ_j [w(j, P−jΔ) μ(P−jΔ) − w(j, P) μ(P)] with the same in-lattice
// transfer set as the quantum generator (diagonal restriction of apply).
Eigen::ArrayXd classical_derivative(const TransitionRates& rates, const Eigen::ArrayXd& mu);

// RK4 for the classical master equation, same stability bound as evolve.
ClassicalEvolutionResult classical_evolve(const TransitionRates& rates,
                                          const MomentumDistribution& mu0,
                                          const EvolutionConfig& cfg);

}  // namespace qlbe

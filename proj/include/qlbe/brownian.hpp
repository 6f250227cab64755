// qlbe/brownian.hpp — Caldeira–Leggett limit of the collisional dynamics:
// microscopic friction, moment evolution, phase-space transport, and the
// consistency check between the full lattice dynamics and its diffusive limit
#pragma once

#include <Eigen/Dense>
#include <vector>

#include "qlbe/core.hpp"
#include "qlbe/qlbe_generator.hpp"
#include "qlbe/quadrature.hpp"

namespace qlbe {

// Friction and diffusion constants of the quantum Brownian master equation
//   dϱ/dt = −i[H₀,ϱ] − i(η/2)[X,{P,ϱ}] − D_pp[X,[X,ϱ]] − D_xx[P,[P,ϱ]]
// (per axis; ħ = 1).  The thermal pair tied to a friction constant η is
//   D_pp = M η / β,   D_xx = β η / (16 M),
// which saturates the positivity bound D_pp·D_xx ≥ η²/16 exactly.
struct CLCoefficients {
  double eta = 0.0;   // momentum relaxation rate
  double d_pp = 0.0;  // momentum diffusion
  double d_xx = 0.0;  // position diffusion
};

CLCoefficients cl_coefficients(double eta, const GasModel& gas, const ParticleModel& particle);

// Microscopic friction constant
//   η = (β/2M) γ ∫ d^dQ |Ṽ(Q)|² (Q²/d) S(Q,0),   γ = 2π(2π)³ n_gas.
// dimension = 3 is the physical isotropic gas; dimension = 1 is the same
// expansion carried out for the one-dimensional lattice dynamics, which is
// what the discretized generator actually relaxes with (the two differ by the
// angular average of Q², not by physics input).
double friction_eta(const GasModel& gas, const ParticleModel& particle, const PotentialSpec& pot,
                    const QuadratureConfig& quad = {}, int dimension = 3);

// First and second moments of the tracer state; xp is the symmetrized
// correlation ⟨XP + PX⟩/2.  Order (x, p, xx, xp, pp) is shared with
// MomentSystem rows.
struct Moments {
  double x = 0.0;
  double p = 0.0;
  double xx = 0.0;
  double xp = 0.0;
  double pp = 0.0;
};

// Closed linear moment system dm/dt = a·m + b induced on (x, p, xx, xp, pp)
// by a generator that is at most quadratic in X and P.
struct MomentSystem {
  Eigen::Matrix<double, 5, 5> a = Eigen::Matrix<double, 5, 5>::Zero();
  Eigen::Matrix<double, 5, 1> b = Eigen::Matrix<double, 5, 1>::Zero();
};

MomentSystem cl_moment_system(const CLCoefficients& coeffs, const ParticleModel& particle);

// Exact solution m(t) of dm/dt = a·m + b via the augmented matrix exponential.
Moments evolve_moments(const MomentSystem& system, const Moments& m0, double t);

Moments cl_moment_evolve(const CLCoefficients& coeffs, const ParticleModel& particle,
                         const Moments& m0, double t);

// Cell-centered phase-space density W(x, p) on [x_min, x_min+nx·dx) ×
// [p_min, p_min+np·dp): values(k, i) is the cell with center
// (x_min + (i+1/2)dx, p_min + (k+1/2)dp).  Position is periodic, momentum has
// zero-flux walls.  A valid field is normalized (mass within 1e-10 of 1) and
// nonnegative up to -1e-12.
struct PhaseSpaceField {
  int nx = 0;
  int np = 0;
  double x_min = 0.0;
  double p_min = 0.0;
  double dx = 0.0;
  double dp = 0.0;
  Eigen::MatrixXd values;  // np rows × nx cols

  double x_center(int i) const { return x_min + (i + 0.5) * dx; }
  double p_center(int k) const { return p_min + (k + 0.5) * dp; }
  double mass() const { return values.sum() * dx * dp; }
};

void validate(const PhaseSpaceField& field);

// Product Gaussian exp(−(x−mean_x)²/2sd_x²) exp(−(p−mean_p)²/2sd_p²) sampled
// at cell centers and normalized to unit mass.
PhaseSpaceField gaussian_phase_space_field(int nx, int np, double x_min, double x_max,
                                           double p_min, double p_max, double mean_x,
                                           double mean_p, double sd_x, double sd_p);

// Uniform in position, Maxwell–Boltzmann exp(−β p²/2M) in momentum; this is
// the exact discrete stationary state of wigner_kramers_evolve.
PhaseSpaceField uniform_maxwell_field(int nx, int np, double x_min, double x_max, double p_min,
                                      double p_max, const ParticleModel& particle, double beta);

struct FieldMoments {
  double mass = 0.0;
  double mean_x = 0.0;
  double mean_p = 0.0;
  double var_x = 0.0;
  double var_p = 0.0;
  double cov_xp = 0.0;
};

FieldMoments field_moments(const PhaseSpaceField& field);

struct WignerResult {
  std::vector<double> times;
  std::vector<PhaseSpaceField> fields;
  long steps = 0;
};

// Kramers (Fokker–Planck) transport of the classical-limit Wigner function,
//   ∂W/∂t = −(P/M)∂_X W + η ∂_P(P W) + D_pp ∂²_P W + D_xx ∂²_X W,
// in conservative flux form with exponentially fitted (Chang–Cooper) face
// fluxes on both axes; each drift–diffusion pair reduces to donor-cell upwind
// when its diffusion constant vanishes, and the cell-centered Maxwell–
// Boltzmann profile is an exact fixed point of the momentum fluxes.  Mass is
// conserved to rounding by construction.  Time stepping is RK4 under the
// explicit stability bound
//   dt·( max|P|/(M·dx) + η·max|P|/dp + 2 D_pp/dp² + 2 D_xx/dx² ) ≤ 0.5;
// configurations violating it are rejected.  Recorded snapshots are checked
// for mass drift and negative undershoot beyond -1e-10.
WignerResult wigner_kramers_evolve(const CLCoefficients& coeffs, const ParticleModel& particle,
                                   const PhaseSpaceField& w0, const EvolutionConfig& cfg);

// Outcome of the lattice-vs-Brownian consistency run: ⟨P⟩(t) from the full
// classical collision dynamics, the exponential rate fitted on the window
// [0.2/η, 2/η], and the microscopic prediction it is compared against.
struct BrownianReport {
  double eta_fitted = 0.0;
  double eta_microscopic = 0.0;    // friction_eta with dimension = 1
  double relative_deviation = 0.0;
  double r_squared = 0.0;
  std::vector<double> times;
  std::vector<double> mean_momentum;
};

// Evolves a shifted thermal state under the full lattice master equation and
// fits the momentum relaxation rate.  Requires a mass ratio m/M ≤ 0.1 (the
// Brownian expansion parameter; deviations are O(m/M), so ≲ 5% accuracy needs
// m/M ≲ 0.05), a grid wide enough to hold the shifted thermal state, and a
// nonzero coupling.  Throws if the decay fails to be exponential (R² < 0.99).
BrownianReport brownian_consistency(const GasModel& gas, const ParticleModel& particle,
                                    const PotentialSpec& pot, const MomentumGrid& grid);

}  // namespace qlbe

// qlbe/core.hpp — model parameters, momentum lattices, and quantum/classical states
#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <cstddef>

namespace qlbe {

// Natural units: ħ = 1 and k_B = 1 everywhere.  Masses, momenta, energies and
// times are all expressed in the resulting consistent unit system.
inline constexpr double hbar = 1.0;

struct GasModel {
  double mass = 1.0;            // gas particle mass m
  double beta = 1.0;            // inverse temperature 1/T
  double number_density = 1.0;  // spatial density n of the gas
};

struct ParticleModel {
  double mass = 1.0;  // tracer mass M
};

// Isotropic interaction through its momentum-space kernel Ṽ(Q):
//   gaussian:        V(x) = g (2πσ²)^{-3/2} exp(-|x|²/(2σ²)),
//                    Ṽ(Q) = (2π)^{-3} g exp(-σ²|Q|²/2)
//   cutoff_constant: Ṽ(Q) = (2π)^{-3} g for |Q| ≤ q_max, else 0
//                    (point-contact interaction with a hard momentum cutoff)
// Zero coupling is allowed and turns every collision term off.
struct PotentialSpec {
  enum class Kind { gaussian, cutoff_constant };
  Kind kind = Kind::gaussian;
  double coupling = 1.0;  // g
  double sigma = 1.0;     // gaussian width (unused for cutoff_constant)
  double q_max = 1.0;     // cutoff (unused for gaussian)

  static PotentialSpec make_gaussian(double g, double sigma);
  static PotentialSpec make_cutoff_constant(double g, double q_max);

  // |Ṽ(Q)|² as a function of the momentum-transfer magnitude.
  double vtilde_sq(double q_mag) const;
};

void validate(const GasModel& gas);
void validate(const ParticleModel& particle);
void validate(const PotentialSpec& pot);

// Uniform symmetric momentum lattice with points k·Δ for k = -n…n on each
// axis.  Collision channels that would leave the lattice are truncated (zero
// weight), so the boundary never aliases momenta; wrap() is a plain index
// utility for callers that need modular bookkeeping.
struct MomentumGrid {
  int dimension = 1;     // 1 or 3
  double spacing = 0.1;  // Δ
  int half_extent = 16;  // n

  int points_per_axis() const { return 2 * half_extent + 1; }
  std::size_t size() const;
  double momentum(int axis_index) const { return spacing * (axis_index - half_extent); }
  double max_momentum() const { return spacing * half_extent; }
  int wrap(int axis_index) const;

  std::size_t flat_index(const std::array<int, 3>& idx) const;
  std::array<int, 3> axis_indices(std::size_t flat) const;
};

void validate(const MomentumGrid& grid);

// Probability weights over the lattice points (classical momentum state).
struct MomentumDistribution {
  MomentumGrid grid;
  Eigen::ArrayXd weights;  // size grid.size(), nonnegative, sums to 1

  double mean(int axis = 0) const;
  double second_moment(int axis = 0) const;
  double variance(int axis = 0) const;
};

MomentumDistribution make_distribution(const MomentumGrid& grid, Eigen::ArrayXd weights);

// Lattice restriction of exp(-β p²/(2 mass)), normalised to unit total weight.
MomentumDistribution maxwell_boltzmann_distribution(const MomentumGrid& grid, double mass,
                                                    double beta);

// Momentum-representation density matrix on a 1D lattice.
struct DensityMatrix {
  MomentumGrid grid;         // dimension must be 1
  Eigen::MatrixXcd entries;  // ⟨P_i|ϱ|P_j⟩

  static DensityMatrix from_matrix(const MomentumGrid& grid, Eigen::MatrixXcd entries);
  static DensityMatrix diagonal(const MomentumDistribution& mu);

  double trace_error() const;        // |tr ϱ - 1|
  double hermiticity_error() const;  // max |ϱ - ϱ†|
  double min_eigenvalue() const;
  Eigen::ArrayXd diagonal_weights() const;  // real part of the diagonal
};

// Normalised Gaussian wave packet ψ(P) ∝ exp(-(P-mean)²/(4 width²)) as a pure
// state ϱ = |ψ⟩⟨ψ|.  `width` is the momentum-space standard deviation; packets
// with fewer than 4 lattice points inside one standard deviation are rejected
// as under-resolved.
DensityMatrix pure_state_gaussian(const MomentumGrid& grid, double mean, double width);

}  // namespace qlbe

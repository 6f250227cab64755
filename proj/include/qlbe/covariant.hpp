// qlbe/covariant.hpp — translation-covariant generator construction and
// verification: discrete Poisson (jump) components built from momentum-kick
// atoms, a numerical covariance check for arbitrary superoperators, and the
// moment system of the Gaussian (diffusive) component
#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <functional>
#include <vector>

#include "qlbe/brownian.hpp"
#include "qlbe/core.hpp"

namespace qlbe {

// One point of the discrete jump measure: momentum kick q (a whole number of
// lattice steps) entering with nonnegative weight μ({q}).
struct PoissonAtom {
  double q = 0.0;
  double weight = 0.0;
};

// L_j(q, P): the momentum-dependent amplitude attached to a kick q.
using MomentumJumpFunction = std::function<std::complex<double>(double q, double p)>;

// Jump part of a translation-covariant generator,
//   Σ_q Σ_j w(q) [ e^{iqX} L_j(q,P) ϱ L_j†(q,P) e^{−iqX} − ½{L_j†L_j(q,P), ϱ} ],
// plus an optional momentum-diagonal Hamiltonian −i[H(P), ϱ].
struct PoissonFormSpec {
  std::vector<PoissonAtom> atoms;
  std::vector<MomentumJumpFunction> jump_functions;
};

// Discretization on the momentum lattice.  Kicks that would leave the lattice
// are dropped from gain and loss alike — the same truncation as the collision
// generator — so the map stays trace preserving and exactly covariant under
// momentum-space phases.  With atoms q = jΔ, weight Δ, and amplitudes
// L = sqrt(γ |Ṽ(q)|² S(q, E(q,P))) plus H(P) = P²/2M this reproduces the
// collision generator entry for entry.
class PoissonGenerator {
 public:
  static PoissonGenerator build(const PoissonFormSpec& spec, const MomentumGrid& grid,
                                std::function<double(double)> h_of_p = nullptr);

  const MomentumGrid& grid() const { return grid_; }
  // Exit rates R(P_k) = Σ over in-lattice channels of w |L|².
  const Eigen::ArrayXd& loss_rates() const { return loss_; }

  Eigen::MatrixXcd apply_to(const Eigen::MatrixXcd& entries) const;
  Eigen::MatrixXcd apply(const DensityMatrix& rho) const;

 private:
  PoissonGenerator() = default;

  struct Channel {
    int shift = 0;             // lattice steps of the kick
    Eigen::VectorXcd amp;      // √w · L(q, P_k), zero when k+shift is off-lattice
  };

  MomentumGrid grid_;
  std::vector<Channel> channels_;
  Eigen::ArrayXd loss_;
  Eigen::VectorXd h_diag_;  // empty when no Hamiltonian was given
};

// Max-norm covariance residual ‖L[U ϱ U†] − U L[ϱ] U†‖_max of an arbitrary
// superoperator over random full-rank states and random displacements a, with
// U = e^{−iaP}.  Translation-covariant generators return rounding noise
// (≲ 1e−13); a generator with any position dependence beyond phases e^{iqX}
// is caught at O(1) of its coupling.
double covariance_check(const std::function<Eigen::MatrixXcd(const Eigen::MatrixXcd&)>& generator,
                        const MomentumGrid& grid, int trials, std::uint64_t seed = 2026);

// Moment system of the Gaussian component with a single jump operator
//   K = α X + c + d P   (α real; c, d complex)
// and Hamiltonian P²/2M plus the induced effective potential: the closed ODEs
// for (x, p, xx, xp, pp).  The Caldeira–Leggett instance is α = √(2 D_pp),
// c = 0, d = i√(2 D_xx) with the thermal pair saturating D_pp·D_xx = η²/16.
MomentSystem gaussian_moment_system(double alpha, std::complex<double> c,
                                    std::complex<double> d, const ParticleModel& particle);

}  // namespace qlbe

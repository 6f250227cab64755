// qlbe/unravel.hpp — Monte Carlo jump unraveling of the classical collision
// dynamics: exact-waiting-time sampling of momentum kicks by thinning, and
// ensemble statistics with deterministic, scheduling-independent reduction
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "qlbe/core.hpp"
#include "qlbe/qlbe_generator.hpp"
#include "qlbe/quadrature.hpp"
#include "qlbe/rng.hpp"

namespace qlbe {

// Classical jump-rate density r(Q|P) = γ |Ṽ(Q)|² S(|Q|, E(Q,P)): the rate per
// unit momentum transfer for a tracer at P to absorb Q.  The 3D overload uses
// the full vector kinematics; the 1D overload is the collinear restriction
// that the lattice generator discretizes (w(j,k) = Δ·r(jΔ|P_k)).
double jump_rate_density(double q, double p, const GasModel& gas, const ParticleModel& particle,
                         const PotentialSpec& pot);
double jump_rate_density(const Eigen::Vector3d& q, const Eigen::Vector3d& p, const GasModel& gas,
                         const ParticleModel& particle, const PotentialSpec& pot);

// Total collision rate R(P) = ∫ r(Q|P) dQ.  In 1D the transfer magnitude runs
// over [q_min, q_max] on both signs; q_min > 0 is required because the 1/|Q|
// singularity of S makes the one-dimensional rate logarithmically divergent
// (the excluded transfers carry vanishing momentum-transfer power).  In 3D
// the integral is finite and taken over the full ball |Q| ≤ q_max, reduced to
// a single radial quadrature through the closed-form angular average.
double total_jump_rate(double p, const GasModel& gas, const ParticleModel& particle,
                       const PotentialSpec& pot, double q_min, double q_max,
                       const QuadratureConfig& quad = {});
double total_jump_rate(const Eigen::Vector3d& p, const GasModel& gas,
                       const ParticleModel& particle, const PotentialSpec& pot, double q_max,
                       const QuadratureConfig& quad = {});

// Samples (waiting time, momentum kick) pairs of the collision process by
// thinning: candidates are drawn from an analytic envelope rate that bounds
// r(Q|P) pointwise for every P, and accepted with probability r/envelope —
// the Gaussian energy factor of S.  Rejected candidates advance time without
// a kick, so the accepted waiting time is exactly Exp(R(P)) and no quadrature
// is ever needed in the sampling loop.
class JumpSampler {
 public:
  // dimension 1 or 3.  q_min is the infrared transfer cutoff, used (and
  // required > 0) only in 1D; in 3D the envelope is already integrable.
  JumpSampler(const GasModel& gas, const ParticleModel& particle, const PotentialSpec& pot,
              int dimension, double q_min = 1e-6);

  int dimension() const { return dimension_; }
  double q_min() const { return q_min_; }
  // Total envelope rate; zero exactly when the coupling vanishes.
  double envelope_rate() const { return envelope_rate_; }

  struct Step {
    double waiting_time = 0.0;   // +inf when the envelope rate is zero
    Eigen::Vector3d transfer = Eigen::Vector3d::Zero();  // 1D uses component 0
    long candidates = 0;         // envelope draws consumed, for efficiency audits
  };

  // Next accepted collision for a tracer currently at momentum p (component 0
  // in 1D).  Throws after 2·10⁵ consecutive rejections — at the design
  // acceptance floor of 1e-4 that has probability < e⁻²⁰, so reaching it
  // means the envelope no longer bounds the rate density.
  Step sample_step(const Eigen::Vector3d& p, Rng& rng) const;

 private:
  GasModel gas_;
  ParticleModel particle_;
  PotentialSpec pot_;
  int dimension_ = 1;
  double q_min_ = 0.0;
  double envelope_rate_ = 0.0;
  // 1D gaussian-potential envelope splits at q_split_: log-uniform transfer
  // density below (bounding the potential factor by 1), half-Gaussian tail
  // above (bounding 1/|Q| by 1/q_split_).
  double q_split_ = 0.0;
  double piece_low_weight_ = 0.0;  // probability of the low-|Q| piece
};

struct TrajectoryConfig {
  std::uint64_t seed = 1;
  int n_trajectories = 100;
  double t_final = 1.0;
  double record_interval = 0.1;
};

// Ensemble averages on the record-time grid {0, δ, 2δ, …} ∪ {t_final}.  Means
// come with their standard errors; var_p sums the per-axis variances and
// ke_mean is ⟨|P|²⟩/2M.  The histogram bins the axis-0 momentum at t_final
// onto the given lattice by nearest point.  Trajectory i always consumes the
// stream Rng(seed, i), and the reduction is a fixed-order compensated sum, so
// results are bit-identical for a given seed regardless of scheduling.
struct EnsembleStats {
  std::vector<double> times;
  Eigen::MatrixXd mean_p;      // record × axis
  Eigen::MatrixXd sem_mean_p;  // record × axis
  Eigen::MatrixXd mean_p_sq;   // record × axis, ⟨p_a²⟩ (per-axis equipartition)
  Eigen::VectorXd var_p;
  Eigen::VectorXd ke_mean;
  Eigen::VectorXd sem_ke;
  MomentumDistribution histogram;
};

// Continuum unraveling: trajectories start at p0 and jump via the sampler.
EnsembleStats run_ensemble(const TrajectoryConfig& cfg, const Eigen::Vector3d& p0,
                           const JumpSampler& sampler, const ParticleModel& particle,
                           const MomentumGrid& histogram_grid);

// Lattice unraveling of the classical master equation defined by `rates`:
// initial momenta are drawn from `initial`, waiting times are Exp(R(P_k)),
// and transfer channels are drawn proportionally to w(j,k).  Its histograms
// converge to classical_evolve of the same rates.
EnsembleStats run_ensemble(const TrajectoryConfig& cfg, const MomentumDistribution& initial,
                           const TransitionRates& rates, const ParticleModel& particle);

}  // namespace qlbe

// qlbe_generator.cpp — lattice collision generator and its time evolution
#include "qlbe/qlbe_generator.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

#include "qlbe/structure_factor.hpp"

namespace qlbe {

namespace {

constexpr double stability_limit = 0.1;   // dt · max R must stay below this
constexpr double min_resolvable_dt = 1e-6;

void require(bool condition, const std::string& message) {
  if (!condition) throw std::invalid_argument(message);
}

void check_evolution_config(const EvolutionConfig& cfg, double max_rate) {
  require(std::isfinite(cfg.dt) && cfg.dt > 0.0, "EvolutionConfig: dt must be > 0");
  require(std::isfinite(cfg.t_final) && cfg.t_final >= 0.0,
          "EvolutionConfig: t_final must be >= 0");
  require(cfg.record_every >= 1, "EvolutionConfig: record_every must be >= 1");
  if (cfg.dt * max_rate > stability_limit)
    throw std::invalid_argument("EvolutionConfig: dt * max total rate = " +
                                std::to_string(cfg.dt * max_rate) +
                                " exceeds the stability bound 0.1");
}

long step_count(double t_final, double dt, double& last_dt) {
  const long full = static_cast<long>(std::floor(t_final / dt + 1e-12));
  const double remainder = t_final - static_cast<double>(full) * dt;
  if (remainder > 1e-12 * dt) {
    last_dt = remainder;
    return full + 1;
  }
  last_dt = dt;
  return full;
}

}  // namespace

double collision_rate_prefactor(const GasModel& gas) {
  validate(gas);
  return 2.0 * std::numbers::pi * std::pow(2.0 * std::numbers::pi, 3) * gas.number_density;
}

QlbeGenerator QlbeGenerator::build(const MomentumGrid& grid, const GasModel& gas,
                                   const ParticleModel& particle, const PotentialSpec& pot) {
  validate(grid);
  validate(gas);
  validate(particle);
  validate(pot);
  require(grid.dimension == 1, "QlbeGenerator: grid must be one-dimensional");

  QlbeGenerator gen;
  gen.grid_ = grid;
  gen.particle_mass_ = particle.mass;
  gen.prefactor_ = collision_rate_prefactor(gas);

  const int n_points = grid.points_per_axis();
  const int n = grid.half_extent;
  std::vector<int> transfers;
  transfers.reserve(static_cast<std::size_t>(2 * n));
  for (int j = -n; j <= n; ++j)
    if (j != 0) transfers.push_back(j);

  // Transfers that would leave the lattice carry weight zero on both the gain
  // and the loss side.  Restricting both sides to the same set keeps the
  // discrete map exactly trace preserving, makes the lattice
  // Maxwell-Boltzmann state exactly stationary (every allowed transition is
  // paired with its reverse), and keeps translation covariance exact for
  // arbitrary displacements — a periodic wrap would break the phase
  // cancellation e^{-ia(P-P')} across the seam.
  Eigen::MatrixXd w(static_cast<Eigen::Index>(transfers.size()), n_points);
  for (std::size_t jt = 0; jt < transfers.size(); ++jt) {
    const int j = transfers[jt];
    const double q = grid.spacing * j;
    const double vsq = pot.vtilde_sq(std::abs(q));
    for (int k = 0; k < n_points; ++k) {
      if (vsq == 0.0 || k + j < 0 || k + j >= n_points) {
        w(static_cast<Eigen::Index>(jt), k) = 0.0;
        continue;
      }
      const double e = energy_transfer(q, grid.momentum(k), particle.mass);
      w(static_cast<Eigen::Index>(jt), k) =
          gen.prefactor_ * grid.spacing * vsq * s_mb(SFPoint(std::abs(q), e), gas);
    }
  }

  gen.rates_.grid = grid;
  gen.rates_.transfers = std::move(transfers);
  gen.rates_.total = w.colwise().sum().array();
  gen.rates_.w = std::move(w);
  gen.sqrt_w_ = gen.rates_.w.cwiseSqrt();
  gen.max_rate_ = gen.rates_.total.size() ? gen.rates_.total.maxCoeff() : 0.0;

  if (gen.max_rate_ * min_resolvable_dt > stability_limit)
    throw std::invalid_argument(
        "QlbeGenerator: max total rate " + std::to_string(gen.max_rate_) +
        " violates the stability bound for every usable time step (dt >= 1e-6); "
        "reduce coupling, density, or grid extent");
  return gen;
}

Eigen::MatrixXcd QlbeGenerator::apply_to(const Eigen::MatrixXcd& entries) const {
  const int n_points = grid_.points_per_axis();
  require(entries.rows() == n_points && entries.cols() == n_points,
          "QlbeGenerator: state size does not match the grid");

  Eigen::MatrixXcd out(n_points, n_points);
  const auto& total = rates_.total;
  // free Hamiltonian phase and collision loss, both diagonal factors
  for (int l = 0; l < n_points; ++l) {
    const double p_l = grid_.momentum(l);
    for (int i = 0; i < n_points; ++i) {
      const double p_i = grid_.momentum(i);
      const std::complex<double> coeff(-0.5 * (total[i] + total[l]),
                                       -(p_i * p_i - p_l * p_l) / (2.0 * particle_mass_));
      out(i, l) = coeff * entries(i, l);
    }
  }
  // gain: √(w(Q,P−Q) w(Q,P'−Q)) ⟨P−Q|ϱ|P'−Q⟩; shifts that leave the lattice
  // carry zero weight, so source indices stay in range
  for (std::size_t jt = 0; jt < rates_.transfers.size(); ++jt) {
    const auto row = sqrt_w_.row(static_cast<Eigen::Index>(jt));
    if (row.maxCoeff() == 0.0) continue;
    const int shift = rates_.transfers[jt];
    const int lo = std::max(0, shift);
    const int hi = std::min(n_points, n_points + shift);
    for (int l = lo; l < hi; ++l) {
      const double w_l = row[l - shift];
      if (w_l == 0.0) continue;
      for (int i = lo; i < hi; ++i)
        out(i, l) += row[i - shift] * w_l * entries(i - shift, l - shift);
    }
  }
  return out;
}

Eigen::MatrixXcd QlbeGenerator::apply(const DensityMatrix& rho) const {
  require(rho.grid.dimension == 1 && rho.grid.spacing == grid_.spacing &&
              rho.grid.half_extent == grid_.half_extent,
          "QlbeGenerator: state grid does not match the generator grid");
  return apply_to(rho.entries);
}

EvolutionResult QlbeGenerator::evolve(const DensityMatrix& rho0, const EvolutionConfig& cfg) const {
  require(rho0.grid.spacing == grid_.spacing && rho0.grid.half_extent == grid_.half_extent,
          "QlbeGenerator: state grid does not match the generator grid");
  check_evolution_config(cfg, max_rate_);

  const int n_points = grid_.points_per_axis();
  EvolutionResult result;
  Eigen::MatrixXcd state = rho0.entries;
  double t = 0.0;

  const auto record = [&](long steps_taken) {
    const double trace_err = std::abs(state.trace() - 1.0);
    const double trace_tol = 1e-10 * static_cast<double>(std::max<long>(steps_taken, 1));
    if (trace_err > trace_tol)
      throw std::runtime_error("evolve: trace drift " + std::to_string(trace_err) +
                               " at t = " + std::to_string(t) +
                               " exceeds tolerance; reduce dt");
    DensityMatrix snapshot{grid_, state};
    const double min_eig = snapshot.min_eigenvalue();
    if (min_eig < -1e-8)
      throw std::runtime_error("evolve: positivity violated (min eigenvalue " +
                               std::to_string(min_eig) + " at t = " + std::to_string(t) +
                               "); the time step or grid is too coarse");
    result.times.push_back(t);
    result.boundary_occupancy.push_back(state(0, 0).real() +
                                        state(n_points - 1, n_points - 1).real());
    result.states.push_back(std::move(snapshot));
  };

  record(0);
  double last_dt = cfg.dt;
  const long steps = step_count(cfg.t_final, cfg.dt, last_dt);
  for (long s = 1; s <= steps; ++s) {
    const double h = (s == steps) ? last_dt : cfg.dt;
    const Eigen::MatrixXcd k1 = apply_to(state);
    const Eigen::MatrixXcd k2 = apply_to(state + 0.5 * h * k1);
    const Eigen::MatrixXcd k3 = apply_to(state + 0.5 * h * k2);
    const Eigen::MatrixXcd k4 = apply_to(state + h * k3);
    state += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t = (s == steps) ? cfg.t_final : t + h;
    if (s % cfg.record_every == 0 || s == steps) record(s);
  }
  result.steps = steps;
  return result;
}

double QlbeGenerator::covariance_residual(const DensityMatrix& rho, double displacement) const {
  require(std::isfinite(displacement), "covariance_residual: displacement must be finite");
  const int n_points = grid_.points_per_axis();
  Eigen::VectorXcd phase(n_points);
  for (int i = 0; i < n_points; ++i) {
    const double arg = -displacement * grid_.momentum(i);
    phase[i] = std::complex<double>(std::cos(arg), std::sin(arg));
  }
  const Eigen::VectorXcd phase_conj = phase.conjugate();
  const Eigen::MatrixXcd shifted = phase.asDiagonal() * rho.entries * phase_conj.asDiagonal();
  const Eigen::MatrixXcd lhs = apply_to(shifted);
  const Eigen::MatrixXcd rhs =
      phase.asDiagonal() * apply_to(rho.entries) * phase_conj.asDiagonal();
  return (lhs - rhs).cwiseAbs().maxCoeff();
}

Eigen::ArrayXd classical_derivative(const TransitionRates& rates, const Eigen::ArrayXd& mu) {
  const int n_points = rates.grid.points_per_axis();
  if (mu.size() != n_points)
    throw std::invalid_argument("classical_derivative: weight size does not match grid");
  Eigen::ArrayXd out = -rates.total * mu;
  for (std::size_t jt = 0; jt < rates.transfers.size(); ++jt) {
    const int shift = rates.transfers[jt];
    const auto row = rates.w.row(static_cast<Eigen::Index>(jt));
    if (row.maxCoeff() == 0.0) continue;
    const int lo = std::max(0, shift);
    const int hi = std::min(n_points, n_points + shift);
    for (int k = lo; k < hi; ++k) out[k] += row[k - shift] * mu[k - shift];
  }
  return out;
}

ClassicalEvolutionResult classical_evolve(const TransitionRates& rates,
                                          const MomentumDistribution& mu0,
                                          const EvolutionConfig& cfg) {
  if (mu0.grid.spacing != rates.grid.spacing || mu0.grid.half_extent != rates.grid.half_extent)
    throw std::invalid_argument("classical_evolve: distribution grid does not match rates grid");
  const double max_rate = rates.total.size() ? rates.total.maxCoeff() : 0.0;
  check_evolution_config(cfg, max_rate);

  ClassicalEvolutionResult result;
  Eigen::ArrayXd mu = mu0.weights;
  double t = 0.0;
  result.times.push_back(t);
  result.weights.push_back(mu);

  double last_dt = cfg.dt;
  const long steps = step_count(cfg.t_final, cfg.dt, last_dt);
  for (long s = 1; s <= steps; ++s) {
    const double h = (s == steps) ? last_dt : cfg.dt;
    const Eigen::ArrayXd k1 = classical_derivative(rates, mu);
    const Eigen::ArrayXd k2 = classical_derivative(rates, mu + 0.5 * h * k1);
    const Eigen::ArrayXd k3 = classical_derivative(rates, mu + 0.5 * h * k2);
    const Eigen::ArrayXd k4 = classical_derivative(rates, mu + h * k3);
    mu += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t = (s == steps) ? cfg.t_final : t + h;
    if (s % cfg.record_every == 0 || s == steps) {
      result.times.push_back(t);
      result.weights.push_back(mu);
    }
  }
  return result;
}

}  // namespace qlbe

// core.cpp — validation and construction of model parameters and states
#include "qlbe/core.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace qlbe {

namespace {

void require(bool condition, const std::string& message) {
  if (!condition) throw std::invalid_argument(message);
}

bool finite_positive(double x) { return std::isfinite(x) && x > 0.0; }

constexpr double trace_tol = 1e-12;
constexpr double hermiticity_tol = 1e-10;
constexpr double positivity_tol = 1e-10;
constexpr double weight_sum_tol = 1e-12;

}  // namespace

PotentialSpec PotentialSpec::make_gaussian(double g, double sigma) {
  PotentialSpec pot{Kind::gaussian, g, sigma, 1.0};
  validate(pot);
  return pot;
}

PotentialSpec PotentialSpec::make_cutoff_constant(double g, double q_max) {
  PotentialSpec pot{Kind::cutoff_constant, g, 1.0, q_max};
  validate(pot);
  return pot;
}

double PotentialSpec::vtilde_sq(double q_mag) const {
  const double c = coupling / std::pow(2.0 * std::numbers::pi, 3);
  switch (kind) {
    case Kind::gaussian:
      return c * c * std::exp(-sigma * sigma * q_mag * q_mag);
    case Kind::cutoff_constant:
      return q_mag <= q_max ? c * c : 0.0;
  }
  throw std::logic_error("PotentialSpec: unknown kind");
}

void validate(const GasModel& gas) {
  require(finite_positive(gas.mass), "GasModel: mass must be finite and > 0");
  require(finite_positive(gas.beta), "GasModel: beta must be finite and > 0");
  require(finite_positive(gas.number_density),
          "GasModel: number_density must be finite and > 0");
}

void validate(const ParticleModel& particle) {
  require(finite_positive(particle.mass), "ParticleModel: mass must be finite and > 0");
}

void validate(const PotentialSpec& pot) {
  require(pot.kind == PotentialSpec::Kind::gaussian ||
              pot.kind == PotentialSpec::Kind::cutoff_constant,
          "PotentialSpec: unknown kind");
  require(std::isfinite(pot.coupling), "PotentialSpec: coupling must be finite");
  if (pot.kind == PotentialSpec::Kind::gaussian)
    require(finite_positive(pot.sigma), "PotentialSpec: sigma must be finite and > 0");
  else
    require(finite_positive(pot.q_max), "PotentialSpec: q_max must be finite and > 0");
}

std::size_t MomentumGrid::size() const {
  std::size_t n = static_cast<std::size_t>(points_per_axis());
  return dimension == 1 ? n : n * n * n;
}

int MomentumGrid::wrap(int axis_index) const {
  const int n = points_per_axis();
  int r = axis_index % n;
  return r < 0 ? r + n : r;
}

std::size_t MomentumGrid::flat_index(const std::array<int, 3>& idx) const {
  const std::size_t n = static_cast<std::size_t>(points_per_axis());
  if (dimension == 1) return static_cast<std::size_t>(idx[0]);
  return (static_cast<std::size_t>(idx[0]) * n + static_cast<std::size_t>(idx[1])) * n +
         static_cast<std::size_t>(idx[2]);
}

std::array<int, 3> MomentumGrid::axis_indices(std::size_t flat) const {
  const std::size_t n = static_cast<std::size_t>(points_per_axis());
  if (dimension == 1) return {static_cast<int>(flat), 0, 0};
  return {static_cast<int>(flat / (n * n)), static_cast<int>((flat / n) % n),
          static_cast<int>(flat % n)};
}

void validate(const MomentumGrid& grid) {
  require(grid.dimension == 1 || grid.dimension == 3, "MomentumGrid: dimension must be 1 or 3");
  require(finite_positive(grid.spacing), "MomentumGrid: spacing must be finite and > 0");
  require(grid.half_extent >= 1, "MomentumGrid: half_extent must be >= 1");
  require(grid.points_per_axis() <= (grid.dimension == 1 ? 1 << 20 : 1 << 10),
          "MomentumGrid: lattice too large");
}

double MomentumDistribution::mean(int axis) const {
  double m = 0.0;
  for (std::size_t k = 0; k < static_cast<std::size_t>(weights.size()); ++k)
    m += weights[static_cast<Eigen::Index>(k)] * grid.momentum(grid.axis_indices(k)[axis]);
  return m;
}

double MomentumDistribution::second_moment(int axis) const {
  double m = 0.0;
  for (std::size_t k = 0; k < static_cast<std::size_t>(weights.size()); ++k) {
    const double p = grid.momentum(grid.axis_indices(k)[axis]);
    m += weights[static_cast<Eigen::Index>(k)] * p * p;
  }
  return m;
}

double MomentumDistribution::variance(int axis) const {
  const double m = mean(axis);
  return second_moment(axis) - m * m;
}

MomentumDistribution make_distribution(const MomentumGrid& grid, Eigen::ArrayXd weights) {
  validate(grid);
  require(static_cast<std::size_t>(weights.size()) == grid.size(),
          "MomentumDistribution: weight count must match grid size");
  require((weights >= 0.0).all() && weights.allFinite(),
          "MomentumDistribution: weights must be finite and nonnegative");
  require(std::abs(weights.sum() - 1.0) <= weight_sum_tol,
          "MomentumDistribution: weights must sum to 1");
  return MomentumDistribution{grid, std::move(weights)};
}

MomentumDistribution maxwell_boltzmann_distribution(const MomentumGrid& grid, double mass,
                                                    double beta) {
  validate(grid);
  require(finite_positive(mass), "maxwell_boltzmann_distribution: mass must be > 0");
  require(finite_positive(beta), "maxwell_boltzmann_distribution: beta must be > 0");
  Eigen::ArrayXd w(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const auto idx = grid.axis_indices(k);
    double p_sq = 0.0;
    for (int axis = 0; axis < grid.dimension; ++axis) {
      const double p = grid.momentum(idx[static_cast<std::size_t>(axis)]);
      p_sq += p * p;
    }
    w[static_cast<Eigen::Index>(k)] = std::exp(-beta * p_sq / (2.0 * mass));
  }
  w /= w.sum();
  return MomentumDistribution{grid, std::move(w)};
}

DensityMatrix DensityMatrix::from_matrix(const MomentumGrid& grid, Eigen::MatrixXcd entries) {
  validate(grid);
  require(grid.dimension == 1, "DensityMatrix: grid must be one-dimensional");
  const Eigen::Index n = static_cast<Eigen::Index>(grid.size());
  require(entries.rows() == n && entries.cols() == n,
          "DensityMatrix: entries must be square and match the grid size");
  require(entries.allFinite(), "DensityMatrix: entries must be finite");
  DensityMatrix rho{grid, std::move(entries)};
  require(rho.hermiticity_error() <= hermiticity_tol, "DensityMatrix: not Hermitian");
  require(rho.trace_error() <= trace_tol, "DensityMatrix: trace must equal 1");
  require(rho.min_eigenvalue() >= -positivity_tol, "DensityMatrix: not positive semidefinite");
  rho.entries = 0.5 * (rho.entries + rho.entries.adjoint()).eval();  // exact Hermitian part
  return rho;
}

DensityMatrix DensityMatrix::diagonal(const MomentumDistribution& mu) {
  require(mu.grid.dimension == 1, "DensityMatrix: grid must be one-dimensional");
  Eigen::MatrixXcd entries = Eigen::MatrixXcd::Zero(mu.weights.size(), mu.weights.size());
  entries.diagonal() = mu.weights.cast<std::complex<double>>();
  return DensityMatrix{mu.grid, std::move(entries)};
}

double DensityMatrix::trace_error() const { return std::abs(entries.trace() - 1.0); }

double DensityMatrix::hermiticity_error() const {
  return (entries - entries.adjoint()).cwiseAbs().maxCoeff();
}

double DensityMatrix::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(entries,
                                                         Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

Eigen::ArrayXd DensityMatrix::diagonal_weights() const { return entries.diagonal().real(); }

DensityMatrix pure_state_gaussian(const MomentumGrid& grid, double mean, double width) {
  validate(grid);
  require(grid.dimension == 1, "pure_state_gaussian: grid must be one-dimensional");
  require(std::isfinite(mean), "pure_state_gaussian: mean must be finite");
  require(finite_positive(width), "pure_state_gaussian: width must be > 0");
  require(std::abs(mean) <= grid.max_momentum(),
          "pure_state_gaussian: mean must lie inside the grid");
  int in_one_sigma = 0;
  for (int i = 0; i < grid.points_per_axis(); ++i)
    in_one_sigma += std::abs(grid.momentum(i) - mean) <= width;
  require(in_one_sigma >= 4,
          "pure_state_gaussian: width under-resolved "
          "(fewer than 4 lattice points within one standard deviation)");
  const int n = grid.points_per_axis();
  Eigen::VectorXcd psi(n);
  for (int i = 0; i < n; ++i) {
    const double p = grid.momentum(i);
    psi[i] = std::exp(-(p - mean) * (p - mean) / (4.0 * width * width));
  }
  psi.normalize();
  return DensityMatrix{grid, psi * psi.adjoint()};
}

}  // namespace qlbe

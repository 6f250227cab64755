// covariant.cpp — Poisson-component construction, the covariance residual
// check, and the Gaussian-component moment system
#include "qlbe/covariant.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "qlbe/rng.hpp"

namespace qlbe {

namespace {

void require(bool condition, const std::string& message) {
  if (!condition) throw std::invalid_argument(message);
}

}  // namespace

PoissonGenerator PoissonGenerator::build(const PoissonFormSpec& spec, const MomentumGrid& grid,
                                         std::function<double(double)> h_of_p) {
  validate(grid);
  require(grid.dimension == 1, "PoissonGenerator: grid must be one-dimensional");
  const int n_points = grid.points_per_axis();

  PoissonGenerator gen;
  gen.grid_ = grid;
  gen.loss_ = Eigen::ArrayXd::Zero(n_points);

  for (std::size_t a = 0; a < spec.atoms.size(); ++a) {
    const PoissonAtom& atom = spec.atoms[a];
    require(std::isfinite(atom.q) && std::isfinite(atom.weight) && atom.weight >= 0.0,
            "PoissonAtom: weight must be finite and >= 0");
    const double steps = atom.q / grid.spacing;
    const int shift = static_cast<int>(std::lround(steps));
    if (std::abs(steps - shift) > 1e-9)
      throw std::invalid_argument("PoissonAtom: kick " + std::to_string(atom.q) +
                                  " is not a whole number of lattice steps");
    if (std::abs(shift) > n_points - 1)
      throw std::invalid_argument("PoissonAtom: kick " + std::to_string(atom.q) +
                                  " exceeds the lattice span");
    if (atom.weight == 0.0) continue;

    const double sqrt_w = std::sqrt(atom.weight);
    const int lo = std::max(0, -shift);
    const int hi = std::min(n_points, n_points - shift);
    for (const MomentumJumpFunction& jump : spec.jump_functions) {
      require(static_cast<bool>(jump), "PoissonFormSpec: null jump function");
      Channel channel;
      channel.shift = shift;
      channel.amp = Eigen::VectorXcd::Zero(n_points);
      for (int k = lo; k < hi; ++k) {
        const std::complex<double> value = jump(atom.q, grid.momentum(k));
        if (!std::isfinite(value.real()) || !std::isfinite(value.imag()))
          throw std::invalid_argument("PoissonFormSpec: jump function returned a non-finite "
                                      "amplitude at q = " +
                                      std::to_string(atom.q));
        channel.amp[k] = sqrt_w * value;
        gen.loss_[k] += std::norm(channel.amp[k]);
      }
      gen.channels_.push_back(std::move(channel));
    }
  }

  if (h_of_p) {
    gen.h_diag_.resize(n_points);
    for (int k = 0; k < n_points; ++k) {
      gen.h_diag_[k] = h_of_p(grid.momentum(k));
      require(std::isfinite(gen.h_diag_[k]), "PoissonGenerator: H(P) must be finite");
    }
  }
  return gen;
}

Eigen::MatrixXcd PoissonGenerator::apply_to(const Eigen::MatrixXcd& entries) const {
  const int n_points = grid_.points_per_axis();
  require(entries.rows() == n_points && entries.cols() == n_points,
          "PoissonGenerator: state size does not match the grid");

  Eigen::MatrixXcd out(n_points, n_points);
  const bool with_h = h_diag_.size() > 0;
  for (int l = 0; l < n_points; ++l) {
    for (int i = 0; i < n_points; ++i) {
      std::complex<double> coeff(-0.5 * (loss_[i] + loss_[l]), 0.0);
      if (with_h) coeff.imag(-(h_diag_[i] - h_diag_[l]));
      out(i, l) = coeff * entries(i, l);
    }
  }
  // gain: e^{iqX} shifts the momentum representation by the kick, so the
  // (i,l) entry receives amp(i−j)·amp*(l−j)·ϱ(i−j, l−j)
  for (const Channel& channel : channels_) {
    const int shift = channel.shift;
    const int lo = std::max(0, shift);
    const int hi = std::min(n_points, n_points + shift);
    for (int l = lo; l < hi; ++l) {
      const std::complex<double> amp_l = std::conj(channel.amp[l - shift]);
      if (amp_l == std::complex<double>(0.0, 0.0)) continue;
      for (int i = lo; i < hi; ++i)
        out(i, l) += channel.amp[i - shift] * amp_l * entries(i - shift, l - shift);
    }
  }
  return out;
}

Eigen::MatrixXcd PoissonGenerator::apply(const DensityMatrix& rho) const {
  require(rho.grid.dimension == 1 && rho.grid.spacing == grid_.spacing &&
              rho.grid.half_extent == grid_.half_extent,
          "PoissonGenerator: state grid does not match the generator grid");
  return apply_to(rho.entries);
}

double covariance_check(const std::function<Eigen::MatrixXcd(const Eigen::MatrixXcd&)>& generator,
                        const MomentumGrid& grid, int trials, std::uint64_t seed) {
  validate(grid);
  require(grid.dimension == 1, "covariance_check: grid must be one-dimensional");
  require(static_cast<bool>(generator), "covariance_check: null generator");
  require(trials >= 1, "covariance_check: need at least one trial");

  const int n_points = grid.points_per_axis();
  double worst = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    Rng rng(seed, static_cast<std::uint64_t>(trial));
    Eigen::MatrixXcd g(n_points, n_points);
    for (int l = 0; l < n_points; ++l)
      for (int i = 0; i < n_points; ++i) g(i, l) = std::complex<double>(rng.normal(), rng.normal());
    Eigen::MatrixXcd rho = g * g.adjoint();
    rho /= rho.trace();

    const double a = -5.0 + 10.0 * rng.uniform();
    Eigen::VectorXcd phase(n_points);
    for (int k = 0; k < n_points; ++k) {
      const double arg = -a * grid.momentum(k);
      phase[k] = std::complex<double>(std::cos(arg), std::sin(arg));
    }
    const Eigen::VectorXcd phase_conj = phase.conjugate();
    const Eigen::MatrixXcd shifted = phase.asDiagonal() * rho * phase_conj.asDiagonal();
    const Eigen::MatrixXcd lhs = generator(shifted);
    const Eigen::MatrixXcd rhs = phase.asDiagonal() * generator(rho) * phase_conj.asDiagonal();
    worst = std::max(worst, (lhs - rhs).cwiseAbs().maxCoeff());
  }
  return worst;
}

MomentSystem gaussian_moment_system(double alpha, std::complex<double> c,
                                    std::complex<double> d, const ParticleModel& particle) {
  validate(particle);
  require(std::isfinite(alpha) && std::isfinite(c.real()) && std::isfinite(c.imag()) &&
              std::isfinite(d.real()) && std::isfinite(d.imag()),
          "gaussian_moment_system: coefficients must be finite");

  const double inv_m = 1.0 / particle.mass;
  const double cr = c.real(), ci = c.imag();
  const double dr = d.real(), di = d.imag();
  const double drift = ci * dr - cr * di;  // Im(c d*) — the c–d interference drift

  MomentSystem sys;
  sys.a(0, 1) = inv_m;                 // dx/dt  = p/M + Im(c d*)
  sys.b(0) = drift;
  sys.a(1, 1) = -2.0 * alpha * di;     // dp/dt  = −2αd_i p − 2αc_i
  sys.b(1) = -2.0 * alpha * ci;
  sys.a(2, 0) = 2.0 * drift;           // dxx/dt = 2xp/M + 2 Im(c d*) x + |d|²
  sys.a(2, 3) = 2.0 * inv_m;
  sys.b(2) = std::norm(d);
  sys.a(3, 0) = -2.0 * alpha * ci;     // dxp/dt = pp/M − 2αd_i xp − 2αc_i x
  sys.a(3, 1) = drift;                 //          + Im(c d*) p − αd_r
  sys.a(3, 3) = -2.0 * alpha * di;
  sys.a(3, 4) = inv_m;
  sys.b(3) = -alpha * dr;
  sys.a(4, 1) = -4.0 * alpha * ci;     // dpp/dt = −4αd_i pp − 4αc_i p + α²
  sys.a(4, 4) = -4.0 * alpha * di;
  sys.b(4) = alpha * alpha;
  return sys;
}

}  // namespace qlbe

// brownian.cpp — Caldeira–Leggett coefficients, moment systems, Kramers
// phase-space transport, and the lattice-vs-Brownian consistency fit
#include "qlbe/brownian.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "qlbe/structure_factor.hpp"

namespace qlbe {

namespace {

void require(bool condition, const std::string& message) {
  if (!condition) throw std::invalid_argument(message);
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

// Bernoulli function x/(e^x − 1), the exponential-fitting weight.  The large-x
// limits fall out of expm1 (overflow → 0⁺, saturation → −x); only the
// removable singularity needs a series.
double bernoulli(double x) {
  if (std::abs(x) < 1e-5) return 1.0 - 0.5 * x + x * x / 12.0;
  return x / std::expm1(x);
}

// Face flux of a drift–diffusion pair: F = v·W_upwinded − D·∂W, discretized as
// (D/h)(B(−χ)W_L − B(χ)W_R) with χ = v·h/D, which is donor-cell upwind when
// D = 0 and makes exp(∫v/D) ratios exactly stationary otherwise.
struct FaceCoeffs {
  double left = 0.0;
  double right = 0.0;
};

FaceCoeffs face_coeffs(double v, double diffusion, double h) {
  if (diffusion > 0.0) {
    const double chi = v * h / diffusion;
    return {diffusion / h * bernoulli(-chi), diffusion / h * bernoulli(chi)};
  }
  return {std::max(v, 0.0), -std::min(v, 0.0)};
}

void validate_coeffs(const CLCoefficients& coeffs) {
  require(std::isfinite(coeffs.eta) && coeffs.eta >= 0.0, "CLCoefficients: eta must be >= 0");
  require(std::isfinite(coeffs.d_pp) && coeffs.d_pp >= 0.0, "CLCoefficients: d_pp must be >= 0");
  require(std::isfinite(coeffs.d_xx) && coeffs.d_xx >= 0.0, "CLCoefficients: d_xx must be >= 0");
}

}  // namespace

CLCoefficients cl_coefficients(double eta, const GasModel& gas, const ParticleModel& particle) {
  validate(gas);
  validate(particle);
  require(std::isfinite(eta) && eta > 0.0, "cl_coefficients: eta must be > 0");
  return {eta, particle.mass * eta / gas.beta, gas.beta * eta / (16.0 * particle.mass)};
}

double friction_eta(const GasModel& gas, const ParticleModel& particle, const PotentialSpec& pot,
                    const QuadratureConfig& quad, int dimension) {
  validate(gas);
  validate(particle);
  validate(pot);
  require(dimension == 1 || dimension == 3, "friction_eta: dimension must be 1 or 3");
  if (pot.coupling == 0.0) return 0.0;

  const double b = gas.beta / (8.0 * gas.mass);
  const double thermal = std::sqrt(gas.beta * gas.mass / (2.0 * std::numbers::pi));
  const double gamma = collision_rate_prefactor(gas);
  // angular measure of Q² d^dQ after pulling out S's 1/Q: 4π/3·Q³ vs 2·Q
  const double angular = (dimension == 3) ? 4.0 * std::numbers::pi / 3.0 : 2.0;
  const int power = (dimension == 3) ? 3 : 1;

  double q_hi = std::sqrt(750.0 / (b + (pot.kind == PotentialSpec::Kind::gaussian
                                            ? pot.sigma * pot.sigma
                                            : 0.0)));
  if (pot.kind == PotentialSpec::Kind::cutoff_constant) q_hi = std::min(q_hi, pot.q_max);

  const double integral = integrate_or_throw(
      [&](double q) { return std::pow(q, power) * pot.vtilde_sq(q) * std::exp(-b * q * q); },
      0.0, q_hi, quad);
  return gas.beta / (2.0 * particle.mass) * gamma * angular * thermal * integral;
}

MomentSystem cl_moment_system(const CLCoefficients& coeffs, const ParticleModel& particle) {
  validate_coeffs(coeffs);
  validate(particle);
  MomentSystem sys;
  const double inv_m = 1.0 / particle.mass;
  sys.a(0, 1) = inv_m;                       // dx/dt   = p/M
  sys.a(1, 1) = -coeffs.eta;                 // dp/dt   = −ηp
  sys.a(2, 3) = 2.0 * inv_m;                 // dxx/dt  = 2xp/M + 2D_xx
  sys.b(2) = 2.0 * coeffs.d_xx;
  sys.a(3, 3) = -coeffs.eta;                 // dxp/dt  = pp/M − ηxp
  sys.a(3, 4) = inv_m;
  sys.a(4, 4) = -2.0 * coeffs.eta;           // dpp/dt  = −2ηpp + 2D_pp
  sys.b(4) = 2.0 * coeffs.d_pp;
  return sys;
}

Moments evolve_moments(const MomentSystem& system, const Moments& m0, double t) {
  require(std::isfinite(t) && t >= 0.0, "evolve_moments: t must be >= 0");
  Eigen::Matrix<double, 6, 6> aug = Eigen::Matrix<double, 6, 6>::Zero();
  aug.topLeftCorner<5, 5>() = system.a;
  aug.topRightCorner<5, 1>() = system.b;
  const Eigen::Matrix<double, 6, 6> propagator = (aug * t).exp();
  Eigen::Matrix<double, 6, 1> v;
  v << m0.x, m0.p, m0.xx, m0.xp, m0.pp, 1.0;
  const Eigen::Matrix<double, 6, 1> mt = propagator * v;
  return {mt[0], mt[1], mt[2], mt[3], mt[4]};
}

Moments cl_moment_evolve(const CLCoefficients& coeffs, const ParticleModel& particle,
                         const Moments& m0, double t) {
  return evolve_moments(cl_moment_system(coeffs, particle), m0, t);
}

void validate(const PhaseSpaceField& field) {
  require(field.nx >= 2 && field.np >= 2, "PhaseSpaceField: need at least 2 cells per axis");
  require(field.values.rows() == field.np && field.values.cols() == field.nx,
          "PhaseSpaceField: values shape does not match nx/np");
  require(std::isfinite(field.dx) && field.dx > 0.0, "PhaseSpaceField: dx must be > 0");
  require(std::isfinite(field.dp) && field.dp > 0.0, "PhaseSpaceField: dp must be > 0");
  require(std::isfinite(field.x_min) && std::isfinite(field.p_min),
          "PhaseSpaceField: origin must be finite");
  if (std::abs(field.mass() - 1.0) > 1e-10)
    throw std::invalid_argument("PhaseSpaceField: mass " + std::to_string(field.mass()) +
                                " is not normalized to 1");
  if (field.values.minCoeff() < -1e-12)
    throw std::invalid_argument("PhaseSpaceField: negative density " +
                                std::to_string(field.values.minCoeff()));
}

namespace {

PhaseSpaceField empty_field(int nx, int np, double x_min, double x_max, double p_min,
                            double p_max) {
  require(nx >= 2 && np >= 2, "PhaseSpaceField: need at least 2 cells per axis");
  require(x_max > x_min && p_max > p_min, "PhaseSpaceField: empty domain");
  PhaseSpaceField field;
  field.nx = nx;
  field.np = np;
  field.x_min = x_min;
  field.p_min = p_min;
  field.dx = (x_max - x_min) / nx;
  field.dp = (p_max - p_min) / np;
  field.values = Eigen::MatrixXd::Zero(np, nx);
  return field;
}

void normalize_field(PhaseSpaceField& field, const char* what) {
  const double mass = field.mass();
  if (!(mass > 0.0) || !std::isfinite(mass))
    throw std::invalid_argument(std::string(what) + ": profile has no mass on this grid");
  field.values /= mass;
}

}  // namespace

PhaseSpaceField gaussian_phase_space_field(int nx, int np, double x_min, double x_max,
                                           double p_min, double p_max, double mean_x,
                                           double mean_p, double sd_x, double sd_p) {
  require(std::isfinite(sd_x) && sd_x > 0.0 && std::isfinite(sd_p) && sd_p > 0.0,
          "gaussian_phase_space_field: standard deviations must be > 0");
  PhaseSpaceField field = empty_field(nx, np, x_min, x_max, p_min, p_max);
  for (int k = 0; k < np; ++k) {
    const double zp = (field.p_center(k) - mean_p) / sd_p;
    for (int i = 0; i < nx; ++i) {
      const double zx = (field.x_center(i) - mean_x) / sd_x;
      field.values(k, i) = std::exp(-0.5 * (zx * zx + zp * zp));
    }
  }
  normalize_field(field, "gaussian_phase_space_field");
  return field;
}

PhaseSpaceField uniform_maxwell_field(int nx, int np, double x_min, double x_max, double p_min,
                                      double p_max, const ParticleModel& particle, double beta) {
  validate(particle);
  require(std::isfinite(beta) && beta > 0.0, "uniform_maxwell_field: beta must be > 0");
  PhaseSpaceField field = empty_field(nx, np, x_min, x_max, p_min, p_max);
  for (int k = 0; k < np; ++k) {
    const double p = field.p_center(k);
    field.values.row(k).setConstant(std::exp(-beta * p * p / (2.0 * particle.mass)));
  }
  normalize_field(field, "uniform_maxwell_field");
  return field;
}

FieldMoments field_moments(const PhaseSpaceField& field) {
  FieldMoments m;
  const double cell = field.dx * field.dp;
  double sx = 0.0, sp = 0.0, sxx = 0.0, spp = 0.0, sxp = 0.0, mass = 0.0;
  for (int k = 0; k < field.np; ++k) {
    const double p = field.p_center(k);
    for (int i = 0; i < field.nx; ++i) {
      const double x = field.x_center(i);
      const double wgt = field.values(k, i) * cell;
      mass += wgt;
      sx += wgt * x;
      sp += wgt * p;
      sxx += wgt * x * x;
      spp += wgt * p * p;
      sxp += wgt * x * p;
    }
  }
  m.mass = mass;
  m.mean_x = sx / mass;
  m.mean_p = sp / mass;
  m.var_x = sxx / mass - m.mean_x * m.mean_x;
  m.var_p = spp / mass - m.mean_p * m.mean_p;
  m.cov_xp = sxp / mass - m.mean_x * m.mean_p;
  return m;
}

WignerResult wigner_kramers_evolve(const CLCoefficients& coeffs, const ParticleModel& particle,
                                   const PhaseSpaceField& w0, const EvolutionConfig& cfg) {
  validate_coeffs(coeffs);
  validate(particle);
  validate(w0);
  require(std::isfinite(cfg.dt) && cfg.dt > 0.0, "EvolutionConfig: dt must be > 0");
  require(std::isfinite(cfg.t_final) && cfg.t_final >= 0.0,
          "EvolutionConfig: t_final must be >= 0");
  require(cfg.record_every >= 1, "EvolutionConfig: record_every must be >= 1");

  const int nx = w0.nx;
  const int np = w0.np;
  const double dx = w0.dx;
  const double dp = w0.dp;
  const double p_top = w0.p_min + np * dp;
  const double max_p = std::max(std::abs(w0.p_min), std::abs(p_top));
  const double cfl = cfg.dt * (max_p / (particle.mass * dx) + coeffs.eta * max_p / dp +
                               2.0 * coeffs.d_pp / (dp * dp) + 2.0 * coeffs.d_xx / (dx * dx));
  if (cfl > 0.5 + 1e-12)
    throw std::invalid_argument("wigner_kramers_evolve: dt violates the stability bound (dt*(" +
                                std::string("max|P|/(M dx) + eta max|P|/dp + 2D_pp/dp^2 + ") +
                                "2D_xx/dx^2) = " + std::to_string(cfl) + " > 0.5)");

  // Per-row position-face coefficients (drift p/M, diffusion D_xx) and
  // per-face momentum coefficients (drift −ηp at the face, diffusion D_pp).
  std::vector<FaceCoeffs> x_face(np), p_face(np > 1 ? np - 1 : 0);
  for (int k = 0; k < np; ++k)
    x_face[k] = face_coeffs(w0.p_center(k) / particle.mass, coeffs.d_xx, dx);
  for (int k = 0; k + 1 < np; ++k)
    p_face[k] = face_coeffs(-coeffs.eta * (w0.p_min + (k + 1) * dp), coeffs.d_pp, dp);

  const auto derivative = [&](const Eigen::MatrixXd& w) {
    Eigen::MatrixXd dw = Eigen::MatrixXd::Zero(np, nx);
    for (int k = 0; k < np; ++k) {
      const auto [cl, cr] = x_face[k];
      if (cl == 0.0 && cr == 0.0) continue;
      for (int i = 0; i < nx; ++i) {
        const int right = (i + 1 == nx) ? 0 : i + 1;
        const double flux = cl * w(k, i) - cr * w(k, right);
        dw(k, i) -= flux / dx;
        dw(k, right) += flux / dx;
      }
    }
    for (int k = 0; k + 1 < np; ++k) {
      const auto [cl, cr] = p_face[k];
      if (cl == 0.0 && cr == 0.0) continue;
      const auto flux = (cl * w.row(k) - cr * w.row(k + 1)).eval();
      dw.row(k) -= flux / dp;
      dw.row(k + 1) += flux / dp;
    }
    return dw;
  };

  WignerResult result;
  Eigen::MatrixXd state = w0.values;
  double t = 0.0;
  const auto record = [&]() {
    PhaseSpaceField snapshot = w0;
    snapshot.values = state;
    const double mass_err = std::abs(snapshot.mass() - 1.0);
    if (mass_err > 1e-10 + 1e-8 * std::max(1.0, t))
      throw std::runtime_error("wigner_kramers_evolve: mass drift " + std::to_string(mass_err) +
                               " at t = " + std::to_string(t));
    if (state.minCoeff() < -1e-10)
      throw std::runtime_error("wigner_kramers_evolve: density undershoot " +
                               std::to_string(state.minCoeff()) + " at t = " +
                               std::to_string(t) + "; reduce dt or refine the grid");
    result.times.push_back(t);
    result.fields.push_back(std::move(snapshot));
  };

  record();
  double last_dt = cfg.dt;
  const long steps = step_count(cfg.t_final, cfg.dt, last_dt);
  for (long s = 1; s <= steps; ++s) {
    const double h = (s == steps) ? last_dt : cfg.dt;
    const Eigen::MatrixXd k1 = derivative(state);
    const Eigen::MatrixXd k2 = derivative(state + 0.5 * h * k1);
    const Eigen::MatrixXd k3 = derivative(state + 0.5 * h * k2);
    const Eigen::MatrixXd k4 = derivative(state + h * k3);
    state += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t = (s == steps) ? cfg.t_final : t + h;
    if (s % cfg.record_every == 0 || s == steps) record();
  }
  result.steps = steps;
  return result;
}

BrownianReport brownian_consistency(const GasModel& gas, const ParticleModel& particle,
                                    const PotentialSpec& pot, const MomentumGrid& grid) {
  validate(gas);
  validate(particle);
  validate(pot);
  validate(grid);
  require(grid.dimension == 1, "brownian_consistency: grid must be one-dimensional");
  const double ratio = gas.mass / particle.mass;
  if (ratio > 0.1 + 1e-12)
    throw std::invalid_argument("brownian_consistency: mass ratio m/M = " +
                                std::to_string(ratio) +
                                " is outside the Brownian regime (need <= 0.1)");

  const double eta_micro = friction_eta(gas, particle, pot, {}, 1);
  if (eta_micro <= 0.0)
    throw std::invalid_argument(
        "brownian_consistency: zero coupling gives no relaxation to fit");

  const double sigma_p = std::sqrt(particle.mass / gas.beta);
  if (grid.max_momentum() < 4.0 * sigma_p)
    throw std::invalid_argument(
        "brownian_consistency: grid must extend to at least 4 thermal widths (needs " +
        std::to_string(4.0 * sigma_p) + ")");

  const QlbeGenerator gen = QlbeGenerator::build(grid, gas, particle, pot);
  const TransitionRates rates = gen.diagonal_rates();
  if (gen.max_total_rate() <= 0.0)
    throw std::invalid_argument(
        "brownian_consistency: no open transfer channels on this lattice");

  // Thermal state displaced by a sub-thermal kick; its mean relaxes at η.
  const int n_points = grid.points_per_axis();
  const double p0 = 0.75 * sigma_p;
  Eigen::ArrayXd weights(n_points);
  for (int k = 0; k < n_points; ++k) {
    const double p = grid.momentum(k) - p0;
    weights[k] = std::exp(-gas.beta * p * p / (2.0 * particle.mass));
  }
  const MomentumDistribution mu0 = make_distribution(grid, weights / weights.sum());

  EvolutionConfig cfg;
  cfg.dt = 0.08 / gen.max_total_rate();
  cfg.t_final = 2.05 / eta_micro;
  const long total_steps = static_cast<long>(std::ceil(cfg.t_final / cfg.dt));
  cfg.record_every = std::max(1L, total_steps / 140);
  const ClassicalEvolutionResult evo = classical_evolve(rates, mu0, cfg);

  BrownianReport report;
  report.eta_microscopic = eta_micro;
  report.times = evo.times;
  report.mean_momentum.reserve(evo.times.size());
  for (const auto& mu : evo.weights) {
    double mean = 0.0;
    for (int k = 0; k < n_points; ++k) mean += mu[k] * grid.momentum(k);
    report.mean_momentum.push_back(mean);
  }

  // Log-linear least squares on the window [0.2/η, 2/η].
  const double t_lo = 0.2 / eta_micro;
  const double t_hi = 2.0 / eta_micro;
  double sum_t = 0.0, sum_y = 0.0, sum_tt = 0.0, sum_ty = 0.0, sum_yy = 0.0;
  long n_fit = 0;
  for (std::size_t r = 0; r < report.times.size(); ++r) {
    const double t = report.times[r];
    if (t < t_lo || t > t_hi) continue;
    const double mean = report.mean_momentum[r];
    if (mean <= 0.0)
      throw std::runtime_error(
          "brownian_consistency: mean momentum crossed zero inside the fit window; "
          "the decay is not a clean exponential at these parameters");
    const double y = std::log(mean);
    sum_t += t;
    sum_y += y;
    sum_tt += t * t;
    sum_ty += t * y;
    sum_yy += y * y;
    ++n_fit;
  }
  if (n_fit < 10)
    throw std::runtime_error("brownian_consistency: too few samples in the fit window");

  const double denom = n_fit * sum_tt - sum_t * sum_t;
  const double slope = (n_fit * sum_ty - sum_t * sum_y) / denom;
  const double intercept = (sum_y - slope * sum_t) / n_fit;
  const double ss_tot = sum_yy - sum_y * sum_y / n_fit;
  const double ss_res = sum_yy - intercept * sum_y - slope * sum_ty;
  report.r_squared = (ss_tot > 0.0) ? 1.0 - ss_res / ss_tot : 0.0;
  if (report.r_squared < 0.99)
    throw std::runtime_error("brownian_consistency: momentum decay is not exponential (R^2 = " +
                             std::to_string(report.r_squared) + ")");

  report.eta_fitted = -slope;
  report.relative_deviation = std::abs(report.eta_fitted - eta_micro) / eta_micro;
  return report;
}

}  // namespace qlbe

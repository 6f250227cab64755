// qlbe_main.cpp — command line front end: every subcommand loads one JSON
// configuration, writes its tables/reports atomically into the output
// directory, and finishes with a manifest describing the run.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qlbe/brownian.hpp"
#include "qlbe/config.hpp"
#include "qlbe/core.hpp"
#include "qlbe/covariant.hpp"
#include "qlbe/io.hpp"
#include "qlbe/qlbe_generator.hpp"
#include "qlbe/rng.hpp"
#include "qlbe/scattering.hpp"
#include "qlbe/structure_factor.hpp"
#include "qlbe/unravel.hpp"
#include "qlbe/version.hpp"

namespace {

using namespace qlbe;
namespace fs = std::filesystem;

// Accumulates a numeric table and serializes it as CSV (one header line) or
// as a JSON document {"columns": [...], "rows": [[...], ...]}, controlled by
// output.format.  Both encodings use shortest round-trip decimals, so output
// is byte-stable for identical inputs.
class Table {
 public:
  Table(std::string base_name, std::vector<std::string> columns, std::string format)
      : base_(std::move(base_name)), columns_(std::move(columns)), format_(std::move(format)) {}

  void append_row(std::vector<double> values) {
    if (values.size() != columns_.size())
      throw std::logic_error("Table: row width does not match header");
    rows_.push_back(std::move(values));
  }

  OutputFileInfo write(const fs::path& out_dir) const {
    std::string name;
    if (format_ == "json") {
      name = base_ + ".json";
      nlohmann::json doc;
      doc["columns"] = columns_;
      doc["rows"] = rows_;
      atomic_write_file(out_dir / name, doc.dump(2) + "\n");
    } else {
      name = base_ + ".csv";
      CsvWriter csv(columns_);
      for (const auto& row : rows_) csv.append_row(row);
      atomic_write_file(out_dir / name, csv.str());
    }
    return {name, rows_.size()};
  }

 private:
  std::string base_;
  std::vector<std::string> columns_;
  std::string format_;
  std::vector<std::vector<double>> rows_;
};

std::string slurp_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string snapshot_name(const std::string& base, std::size_t index, std::size_t count) {
  std::size_t width = 3;
  for (std::size_t c = count; c > 1000; c /= 10) ++width;
  std::string digits = std::to_string(index);
  return base + "_" + std::string(width - std::min(width, digits.size()), '0') + digits;
}

// Record times of the exact (matrix-exponential) solvers, matching the
// stepped solvers' convention: {0, k·dt·record_every, ...} plus t_final.
std::vector<double> record_times(const EvolutionConfig& evo) {
  const double interval = evo.dt * evo.record_every;
  std::vector<double> times{0.0};
  for (double t = interval; t < evo.t_final - 1e-12 * interval; t += interval)
    times.push_back(t);
  if (evo.t_final > 0.0) times.push_back(evo.t_final);
  return times;
}

int nearest_lattice_index(const MomentumGrid& grid, double p, const char* key) {
  const double steps = p / grid.spacing;
  const long j = std::lround(steps);
  if (std::abs(steps - static_cast<double>(j)) > 1e-9 || std::abs(j) > grid.half_extent)
    throw ConfigError(std::string(key) + " must lie on the momentum grid (|" +
                      format_double(p) + "| exceeds the lattice or falls between points)");
  return static_cast<int>(j) + grid.half_extent;
}

MomentumGrid axis_grid(const MomentumGrid& grid) {
  return MomentumGrid{1, grid.spacing, grid.half_extent};
}

// Diagonal state CSV (p, weight) -> lattice weights.  Every row must sit on a
// lattice point; unlisted points carry zero weight.
MomentumDistribution read_distribution_file(const MomentumGrid& grid, const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("initial_state.path: cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "p,weight")
    throw ConfigError("initial_state.path: " + path.string() +
                      " must start with the header \"p,weight\"");
  Eigen::ArrayXd weights = Eigen::ArrayXd::Zero(grid.size());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw ConfigError("initial_state.path: malformed row \"" + line + "\"");
    char* end = nullptr;
    const double p = std::strtod(line.c_str(), &end);
    if (end != line.c_str() + comma)
      throw ConfigError("initial_state.path: malformed row \"" + line + "\"");
    const double w = std::strtod(line.c_str() + comma + 1, &end);
    if (end != line.c_str() + line.size())
      throw ConfigError("initial_state.path: malformed row \"" + line + "\"");
    weights[nearest_lattice_index(grid, p, "initial_state.path: every p")] = w;
  }
  return make_distribution(grid, std::move(weights));
}

MomentumDistribution initial_distribution(const RunConfig& cfg, const MomentumGrid& grid) {
  const auto& init = cfg.initial_state;
  if (init.kind == "maxwell")
    return maxwell_boltzmann_distribution(grid, cfg.particle.mass, cfg.gas.beta);
  if (init.kind == "delta") {
    Eigen::ArrayXd weights = Eigen::ArrayXd::Zero(grid.size());
    weights[nearest_lattice_index(grid, init.offset, "initial_state.offset")] = 1.0;
    return make_distribution(grid, std::move(weights));
  }
  if (init.kind == "file") return read_distribution_file(grid, init.path);
  throw ConfigError("initial_state.kind \"" + init.kind +
                    "\" does not define a diagonal state for this subcommand");
}

ScatteringAmplitude amplitude_from_potential(const RunConfig& cfg) {
  if (cfg.potential.kind == PotentialSpec::Kind::gaussian)
    return ScatteringAmplitude::born_gaussian(cfg.potential.coupling, cfg.potential.sigma);
  // Born amplitude of the contact kernel: f = -(2pi)^2 m* Vtilde = -m* g / 2pi.
  const double mu = reduced_mass(cfg.gas, cfg.particle);
  return ScatteringAmplitude::constant(-mu * cfg.potential.coupling / (2.0 * std::numbers::pi));
}

// ---------------------------------------------------------------------------
// sfactor: S(Q,E) and the response function on a (Q,E) grid derived from the
// momentum lattice, plus the correlation functions phi±(Q,t) on record times.
std::vector<OutputFileInfo> run_sfactor(const RunConfig& cfg, const fs::path& out) {
  std::vector<OutputFileInfo> files;
  constexpr int energy_samples = 33;

  Table sf("sfactor", {"q", "e", "s", "chi"}, cfg.output.format);
  for (int j = 1; j <= cfg.grid.half_extent; ++j) {
    const double q = j * cfg.grid.spacing;
    const auto window = s_mb_energy_window(q, cfg.gas, 6.0);
    for (int i = 0; i < energy_samples; ++i) {
      const double e = window.lo + (window.hi - window.lo) * i / (energy_samples - 1);
      const SFPoint point(q, e);
      sf.append_row({q, e, s_mb(point, cfg.gas), response_function(point, cfg.gas)});
    }
  }
  files.push_back(sf.write(out));

  Table fdt("fdt", {"q", "t", "phi_minus", "phi_plus"}, cfg.output.format);
  for (int j = 1; j <= cfg.grid.half_extent; ++j) {
    const double q = j * cfg.grid.spacing;
    for (const double t : record_times(cfg.evolution))
      fdt.append_row({q, t, fdt_phi_minus(q, t, cfg.gas), fdt_phi_plus(q, t, cfg.gas)});
  }
  files.push_back(fdt.write(out));
  return files;
}

// ---------------------------------------------------------------------------
// evolve: deterministic master-equation evolution.  Diagonal initial states
// follow the classical (Pauli) reduction and are written as (p, weight)
// snapshots; a pure-state start evolves the full density matrix and is
// written as (p_row, p_col, re, im) snapshots.
std::vector<OutputFileInfo> run_evolve(const RunConfig& cfg, const fs::path& out) {
  if (cfg.grid.dimension != 1)
    throw ConfigError("grid.dimension must be 1 for evolve");
  const auto generator = QlbeGenerator::build(cfg.grid, cfg.gas, cfg.particle, cfg.potential);
  std::vector<OutputFileInfo> files;

  if (cfg.initial_state.kind == "pure") {
    const auto rho0 =
        pure_state_gaussian(cfg.grid, cfg.initial_state.offset, cfg.initial_state.width);
    const auto result = generator.evolve(rho0, cfg.evolution);
    Table summary("summary", {"t", "trace_error", "min_eigenvalue", "boundary_occupancy"},
                  cfg.output.format);
    for (std::size_t k = 0; k < result.states.size(); ++k) {
      const auto& state = result.states[k];
      Table snap(snapshot_name("state", k, result.states.size()),
                 {"p_row", "p_col", "re", "im"}, cfg.output.format);
      const int n = cfg.grid.points_per_axis();
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          snap.append_row({cfg.grid.momentum(i), cfg.grid.momentum(j),
                           state.entries(i, j).real(), state.entries(i, j).imag()});
      files.push_back(snap.write(out));
      summary.append_row({result.times[k], state.trace_error(), state.min_eigenvalue(),
                          result.boundary_occupancy[k]});
    }
    files.push_back(summary.write(out));
    return files;
  }

  const auto mu0 = initial_distribution(cfg, cfg.grid);
  const auto result = classical_evolve(generator.diagonal_rates(), mu0, cfg.evolution);
  for (std::size_t k = 0; k < result.weights.size(); ++k) {
    Table snap(snapshot_name("state", k, result.weights.size()), {"p", "weight"},
               cfg.output.format);
    for (int i = 0; i < cfg.grid.points_per_axis(); ++i)
      snap.append_row({cfg.grid.momentum(i), result.weights[k][i]});
    files.push_back(snap.write(out));
  }
  return files;
}

// ---------------------------------------------------------------------------
// unravel: Monte Carlo jump ensemble.  Lattice mode reproduces the classical
// master equation on the configured grid; continuum mode samples momentum
// transfers by thinning (1D needs the infrared cutoff monte_carlo.q_min).
std::vector<OutputFileInfo> run_unravel(const RunConfig& cfg, const fs::path& out) {
  TrajectoryConfig traj;
  traj.seed = cfg.monte_carlo.seed;
  traj.n_trajectories = cfg.monte_carlo.n_trajectories;
  traj.t_final = cfg.evolution.t_final;
  traj.record_interval = cfg.evolution.dt * cfg.evolution.record_every;

  std::string mode = cfg.monte_carlo.mode;
  if (mode == "auto") mode = cfg.grid.dimension == 1 ? "lattice" : "continuum";

  EnsembleStats stats;
  if (mode == "lattice") {
    const auto generator = QlbeGenerator::build(cfg.grid, cfg.gas, cfg.particle, cfg.potential);
    const auto mu0 = initial_distribution(cfg, cfg.grid);
    stats = run_ensemble(traj, mu0, generator.diagonal_rates(), cfg.particle);
  } else {
    if (cfg.initial_state.kind != "delta")
      throw ConfigError("initial_state.kind must be \"delta\" for continuum unraveling");
    const JumpSampler sampler(cfg.gas, cfg.particle, cfg.potential, cfg.grid.dimension,
                              cfg.monte_carlo.q_min);
    const Eigen::Vector3d p0{cfg.initial_state.offset, 0.0, 0.0};
    stats = run_ensemble(traj, p0, sampler, cfg.particle, axis_grid(cfg.grid));
  }

  const auto axes = stats.mean_p.cols();
  std::vector<std::string> columns{"t"};
  const char* axis_names[] = {"px", "py", "pz"};
  for (long a = 0; a < axes; ++a) columns.push_back(std::string("mean_") + axis_names[a]);
  columns.insert(columns.end(), {"var_p", "ke_mean"});
  for (long a = 0; a < axes; ++a) columns.push_back(std::string("se_") + axis_names[a]);
  columns.push_back("se_ke");

  Table ensemble("ensemble", columns, cfg.output.format);
  for (std::size_t k = 0; k < stats.times.size(); ++k) {
    std::vector<double> row{stats.times[k]};
    for (long a = 0; a < axes; ++a) row.push_back(stats.mean_p(static_cast<long>(k), a));
    row.push_back(stats.var_p[static_cast<long>(k)]);
    row.push_back(stats.ke_mean[static_cast<long>(k)]);
    for (long a = 0; a < axes; ++a) row.push_back(stats.sem_mean_p(static_cast<long>(k), a));
    row.push_back(stats.sem_ke[static_cast<long>(k)]);
    ensemble.append_row(std::move(row));
  }

  Table histogram("histogram", {"p", "weight"}, cfg.output.format);
  for (int i = 0; i < stats.histogram.grid.points_per_axis(); ++i)
    histogram.append_row({stats.histogram.grid.momentum(i), stats.histogram.weights[i]});

  return {ensemble.write(out), histogram.write(out)};
}

// ---------------------------------------------------------------------------
// rates: total collision rate out of a sharp momentum versus |P|.
std::vector<OutputFileInfo> run_rates(const RunConfig& cfg, const fs::path& out) {
  const auto amp = amplitude_from_potential(cfg);
  Table table("rates", {"p", "rate"}, cfg.output.format);
  for (int j = 0; j <= cfg.grid.half_extent; ++j) {
    const double p = j * cfg.grid.spacing;
    table.append_row(
        {p, total_rate_full(Eigen::Vector3d{p, 0.0, 0.0}, amp, cfg.gas, cfg.particle)});
  }
  return {table.write(out)};
}

// ---------------------------------------------------------------------------
// friction: microscopic friction constant and the thermal diffusion pair.
std::vector<OutputFileInfo> run_friction(const RunConfig& cfg, const fs::path& out) {
  const double eta =
      friction_eta(cfg.gas, cfg.particle, cfg.potential, {}, cfg.grid.dimension);
  const auto coeffs = cl_coefficients(eta, cfg.gas, cfg.particle);
  nlohmann::json report{{"eta", coeffs.eta},
                        {"d_pp", coeffs.d_pp},
                        {"d_xx", coeffs.d_xx},
                        {"dimension", cfg.grid.dimension}};
  atomic_write_file(out / "friction.json", report.dump(2) + "\n");
  return {{"friction.json", 1}};
}

// ---------------------------------------------------------------------------
// cl-evolve: exact Gaussian moment evolution of the diffusive limit; initial
// state is a Gaussian with <x>=0, sd_x=1, <p>=offset, sd_p=width.  With
// output.fields=true the Kramers solver also emits phase-space snapshots.
std::vector<OutputFileInfo> run_cl_evolve(const RunConfig& cfg, const fs::path& out) {
  const double eta =
      friction_eta(cfg.gas, cfg.particle, cfg.potential, {}, cfg.grid.dimension);
  const auto coeffs = cl_coefficients(eta, cfg.gas, cfg.particle);
  const auto system = cl_moment_system(coeffs, cfg.particle);

  Moments m0;
  m0.p = cfg.initial_state.offset;
  m0.xx = 1.0;
  m0.pp = cfg.initial_state.width * cfg.initial_state.width + m0.p * m0.p;

  Table moments("moments", {"t", "mean_x", "mean_p", "var_x", "var_p", "cov_xp"},
                cfg.output.format);
  for (const double t : record_times(cfg.evolution)) {
    const Moments m = evolve_moments(system, m0, t);
    moments.append_row({t, m.x, m.p, m.xx - m.x * m.x, m.pp - m.p * m.p, m.xp - m.x * m.p});
  }
  std::vector<OutputFileInfo> files{moments.write(out)};

  if (cfg.output.fields) {
    const double sd_p = std::max(cfg.initial_state.width,
                                 std::sqrt(cfg.particle.mass / cfg.gas.beta));
    const double p_half = std::abs(m0.p) + 8.0 * sd_p;
    const double drift = (std::abs(m0.p) + 4.0 * sd_p) * cfg.evolution.t_final /
                         cfg.particle.mass;
    const double x_half = 8.0 + drift;
    const auto w0 = gaussian_phase_space_field(96, 96, -x_half, x_half, -p_half, p_half, 0.0,
                                               m0.p, 1.0, cfg.initial_state.width);
    const auto result = wigner_kramers_evolve(coeffs, cfg.particle, w0, cfg.evolution);
    for (std::size_t k = 0; k < result.fields.size(); ++k) {
      const auto& field = result.fields[k];
      Table snap(snapshot_name("field", k, result.fields.size()), {"x", "p", "w"},
                 cfg.output.format);
      for (int kp = 0; kp < field.np; ++kp)
        for (int i = 0; i < field.nx; ++i)
          snap.append_row({field.x_center(i), field.p_center(kp), field.values(kp, i)});
      files.push_back(snap.write(out));
    }
  }
  return files;
}

// ---------------------------------------------------------------------------
// validate: the invariant suites, reported as JSON.  Every suite is
// deterministic for a fixed seed, so repeated runs are byte-identical.
struct SuiteResult {
  std::string name;
  bool pass = false;
  double metric = 0.0;
  double bound = 0.0;
  // "below" means metric must stay under the bound, "above" the opposite
  // (used by the planted covariance-breaking counterexample).
  const char* direction = "below";
};

SuiteResult suite_detailed_balance(std::uint64_t seed) {
  Rng rng(seed, 101);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    GasModel gas;
    gas.beta = std::exp(std::log(0.2) + rng.uniform() * std::log(25.0));
    gas.mass = std::exp(std::log(0.3) + rng.uniform() * std::log(10.0));
    const double q = std::exp(std::log(0.05) + rng.uniform() * std::log(200.0));
    const auto window = s_mb_energy_window(q, gas, 5.0);
    const double e = window.lo + rng.uniform() * (window.hi - window.lo);
    const SFPoint point(q, e);
    const double s = s_mb(point, gas);
    if (s < 1e-280) continue;
    worst = std::max(worst, std::abs(detailed_balance_residual(point, gas)) / s);
  }
  return {"detailed_balance", worst <= 1e-12, worst, 1e-12};
}

// Sampling stays at moderate exponents: the identity is exact algebra, but
// its floating-point defect grows with the Gaussian exponent magnitude, so
// extreme parameters measure cancellation, not correctness.
SuiteResult suite_mb_identity(std::uint64_t seed) {
  Rng rng(seed, 102);
  const auto normal3 = [&rng] {
    return Eigen::Vector3d{rng.normal(), rng.normal(), rng.normal()};
  };
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const GasModel gas{0.3 + 2.0 * rng.uniform(), 0.2 + 2.0 * rng.uniform(), 1.0};
    const ParticleModel particle{0.3 + 4.0 * rng.uniform()};
    const Eigen::Vector3d q_vec = normal3() + Eigen::Vector3d(0.02, 0.0, 0.0);
    if (q_vec.norm() < 1e-3) continue;
    const Eigen::Vector3d big_p = normal3() * 1.5;
    Eigen::Vector3d p_perp = normal3() * 1.2;
    p_perp -= p_perp.dot(q_vec) / q_vec.squaredNorm() * q_vec;
    const auto amp = ScatteringAmplitude::born_gaussian(1.0 + rng.uniform(), 0.3 + rng.uniform());

    const double lhs = mb_identity_lhs(p_perp, big_p, q_vec, gas, particle);
    if (lhs > 1e-150)
      worst = std::max(
          worst, std::abs(mb_identity_residual(p_perp, big_p, q_vec, gas, particle)) / lhs);
    const double l1 = std::norm(lindblad_L(p_perp, big_p, q_vec, amp, gas, particle));
    const double l2 = std::norm(lindblad_L_rewritten(p_perp, big_p, q_vec, amp, gas, particle));
    if (l1 > 1e-300) worst = std::max(worst, std::abs(l1 - l2) / l1);
  }
  return {"mb_identity", worst <= 1e-12, worst, 1e-12};
}

Eigen::MatrixXcd position_cosine_dissipator(const Eigen::MatrixXcd& rho) {
  const auto n = rho.rows();
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(n, n);
  for (long i = 0; i + 1 < n; ++i) {
    a(i, i + 1) = 1.0;
    a(i + 1, i) = 1.0;
  }
  return a * rho * a.adjoint() - 0.5 * (a.adjoint() * a * rho + rho * a.adjoint() * a);
}

std::pair<SuiteResult, SuiteResult> suite_covariance(const RunConfig& cfg, std::uint64_t seed) {
  const MomentumGrid grid = axis_grid(cfg.grid);
  const auto generator = QlbeGenerator::build(grid, cfg.gas, cfg.particle, cfg.potential);
  const double res = covariance_check(
      [&generator](const Eigen::MatrixXcd& rho) { return generator.apply_to(rho); }, grid, 20,
      seed);
  const double planted = covariance_check(position_cosine_dissipator, grid, 20, seed);
  return {{"translation_covariance", res <= 1e-13, res, 1e-13},
          {"covariance_detects_breaking", planted > 1e-3, planted, 1e-3, "above"}};
}

std::pair<SuiteResult, SuiteResult> suite_lindblad(const RunConfig& cfg) {
  const MomentumGrid grid{1, cfg.grid.spacing, std::min(cfg.grid.half_extent, 8)};
  const auto generator = QlbeGenerator::build(grid, cfg.gas, cfg.particle, cfg.potential);
  const double width = std::max(cfg.initial_state.width, 4.5 * grid.spacing);
  const auto rho0 = pure_state_gaussian(grid, 0.0, width);

  EvolutionConfig evo;
  evo.dt = std::min(0.05, 0.09 / std::max(generator.max_total_rate(), 1e-12));
  evo.t_final = 50.0 * evo.dt;
  evo.record_every = 10;
  const auto result = generator.evolve(rho0, evo);

  double trace_rate = 0.0;
  double min_eig = 0.0;
  for (std::size_t k = 0; k < result.states.size(); ++k) {
    if (result.times[k] > 0.0)
      trace_rate = std::max(trace_rate, result.states[k].trace_error() / result.times[k]);
    min_eig = std::min(min_eig, result.states[k].min_eigenvalue());
  }
  return {{"lindblad_trace_preservation", trace_rate <= 1e-10, trace_rate, 1e-10},
          {"lindblad_positivity", min_eig >= -1e-8, min_eig, -1e-8, "above"}};
}

std::pair<SuiteResult, SuiteResult> suite_stationarity(const RunConfig& cfg) {
  const MomentumGrid grid = axis_grid(cfg.grid);
  const auto rates =
      QlbeGenerator::build(grid, cfg.gas, cfg.particle, cfg.potential).diagonal_rates();
  const auto mb = maxwell_boltzmann_distribution(grid, cfg.particle.mass, cfg.gas.beta);
  const double defect = classical_derivative(rates, mb.weights).cwiseAbs().maxCoeff();

  const double eta = friction_eta(cfg.gas, cfg.particle, cfg.potential, {}, 1);
  Eigen::ArrayXd displaced = Eigen::ArrayXd::Zero(grid.size());
  displaced[grid.half_extent + grid.half_extent / 2] = 1.0;
  EvolutionConfig evo;
  evo.dt = 0.09 / std::max(rates.total.maxCoeff(), 1e-12);
  evo.t_final = 20.0 / std::max(eta, 1e-12);
  evo.record_every = 1 << 30;
  const auto result = classical_evolve(rates, make_distribution(grid, displaced), evo);
  const double tv = 0.5 * (result.weights.back() - mb.weights).abs().sum();
  return {{"mb_exact_stationarity", defect <= 1e-14, defect, 1e-14},
          {"relaxation_to_mb", tv < 1e-3, tv, 1e-3}};
}

std::pair<SuiteResult, SuiteResult> suite_instance_equality(const RunConfig& cfg,
                                                            std::uint64_t seed) {
  const MomentumGrid grid{1, cfg.grid.spacing, std::min(cfg.grid.half_extent, 12)};
  const auto generator = QlbeGenerator::build(grid, cfg.gas, cfg.particle, cfg.potential);

  PoissonFormSpec spec;
  const double gamma = collision_rate_prefactor(cfg.gas);
  const GasModel gas = cfg.gas;
  const ParticleModel particle = cfg.particle;
  const PotentialSpec pot = cfg.potential;
  for (int j = -grid.half_extent; j <= grid.half_extent; ++j) {
    if (j == 0) continue;
    spec.atoms.push_back({j * grid.spacing, grid.spacing});
  }
  spec.jump_functions.push_back([gamma, gas, particle, pot](double q, double p) {
    const double mag = std::abs(q);
    const double e = energy_transfer(q, p, particle.mass);
    return std::complex<double>(
        std::sqrt(gamma * pot.vtilde_sq(mag) * s_mb(SFPoint(mag, e), gas)), 0.0);
  });
  const double mass = particle.mass;
  const auto poisson =
      PoissonGenerator::build(spec, grid, [mass](double p) { return p * p / (2.0 * mass); });

  double worst = (poisson.loss_rates() - generator.diagonal_rates().total).cwiseAbs().maxCoeff();
  Rng rng(seed, 103);
  const auto n = static_cast<long>(grid.size());
  for (int trial = 0; trial < 3; ++trial) {
    Eigen::MatrixXcd g(n, n);
    for (long i = 0; i < n; ++i)
      for (long j = 0; j < n; ++j) g(i, j) = std::complex<double>(rng.normal(), rng.normal());
    Eigen::MatrixXcd rho = g * g.adjoint();
    rho /= rho.trace().real();
    worst = std::max(worst,
                     (generator.apply_to(rho) - poisson.apply_to(rho)).cwiseAbs().maxCoeff());
  }

  const auto coeffs = cl_coefficients(0.8, cfg.gas, cfg.particle);
  const auto reference = cl_moment_system(coeffs, cfg.particle);
  const auto gaussian = gaussian_moment_system(
      std::sqrt(2.0 * coeffs.d_pp), 0.0,
      std::complex<double>(0.0, std::sqrt(2.0 * coeffs.d_xx)), cfg.particle);
  const double moment_diff =
      std::max((gaussian.a - reference.a).cwiseAbs().maxCoeff(),
               (gaussian.b - reference.b).cwiseAbs().maxCoeff());
  return {{"poisson_instance_equality", worst <= 1e-13, worst, 1e-13},
          {"gaussian_moment_equality", moment_diff <= 1e-12, moment_diff, 1e-12}};
}

SuiteResult suite_cl_pair(const RunConfig& cfg) {
  const auto coeffs = cl_coefficients(0.8, cfg.gas, cfg.particle);
  const double target = coeffs.eta * coeffs.eta / 16.0;
  const double rel = std::abs(coeffs.d_pp * coeffs.d_xx - target) / target;
  return {"cl_saturated_pair", rel <= 1e-14, rel, 1e-14};
}

std::pair<std::vector<OutputFileInfo>, bool> run_validate(const RunConfig& cfg,
                                                          const fs::path& out) {
  std::vector<SuiteResult> suites;
  suites.push_back(suite_detailed_balance(cfg.monte_carlo.seed));
  suites.push_back(suite_mb_identity(cfg.monte_carlo.seed));
  const auto [cov, planted] = suite_covariance(cfg, cfg.monte_carlo.seed);
  suites.push_back(cov);
  suites.push_back(planted);
  const auto [trace, positivity] = suite_lindblad(cfg);
  suites.push_back(trace);
  suites.push_back(positivity);
  const auto [stationary, relax] = suite_stationarity(cfg);
  suites.push_back(stationary);
  suites.push_back(relax);
  const auto [poisson, gaussian] = suite_instance_equality(cfg, cfg.monte_carlo.seed);
  suites.push_back(poisson);
  suites.push_back(gaussian);
  suites.push_back(suite_cl_pair(cfg));

  bool all_pass = true;
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& suite : suites) {
    all_pass &= suite.pass;
    entries.push_back({{"name", suite.name},
                       {"pass", suite.pass},
                       {"metric", suite.metric},
                       {"bound", suite.bound},
                       {"direction", suite.direction}});
  }
  nlohmann::json report{{"all_pass", all_pass}, {"suites", entries}};
  atomic_write_file(out / "validate.json", report.dump(2) + "\n");
  return {{{"validate.json", suites.size()}}, all_pass};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qlbe: collisional quantum dynamics of a tracer particle in an ideal gas"};
  app.set_version_flag("--version", std::string("qlbe ") + qlbe::version);
  app.require_subcommand(1);

  std::string config_path;
  std::string out_override;
  std::uint64_t seed_override = 0;
  std::vector<CLI::Option*> seed_options;
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON configuration file")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", out_override, "output directory (overrides output.directory)");
    seed_options.push_back(
        sub->add_option("--seed", seed_override, "seed override (overrides monte_carlo.seed)"));
  };

  CLI::App* sub_sfactor = app.add_subcommand(
      "sfactor", "tabulate the structure factor, response, and correlation functions");
  CLI::App* sub_evolve =
      app.add_subcommand("evolve", "deterministic master-equation evolution on the lattice");
  CLI::App* sub_unravel =
      app.add_subcommand("unravel", "Monte Carlo jump-process ensemble statistics");
  CLI::App* sub_rates =
      app.add_subcommand("rates", "total collision rate versus momentum magnitude");
  CLI::App* sub_friction =
      app.add_subcommand("friction", "microscopic friction and diffusion coefficients");
  CLI::App* sub_cl =
      app.add_subcommand("cl-evolve", "diffusive-limit moment evolution (optional fields)");
  CLI::App* sub_validate = app.add_subcommand("validate", "run the invariant suites");
  for (CLI::App* sub :
       {sub_sfactor, sub_evolve, sub_unravel, sub_rates, sub_friction, sub_cl, sub_validate})
    add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    nlohmann::json doc = qlbe::parse_json_text(slurp_file(config_path));
    qlbe::apply_env_overrides(doc);
    qlbe::RunConfig cfg = qlbe::config_from_json(doc);
    for (const CLI::Option* opt : seed_options) {
      if (opt->count() > 0) {
        cfg.monte_carlo.seed = seed_override;
        cfg.resolved["monte_carlo"]["seed"] = seed_override;
      }
    }
    if (!out_override.empty()) {
      cfg.output.directory = out_override;
      cfg.resolved["output"]["directory"] = out_override;
    }
    const fs::path out = cfg.output.directory;

    const auto start = std::chrono::steady_clock::now();
    std::vector<qlbe::OutputFileInfo> outputs;
    std::string name;
    int exit_code = 0;
    if (sub_sfactor->parsed()) {
      name = "sfactor";
      outputs = run_sfactor(cfg, out);
    } else if (sub_evolve->parsed()) {
      name = "evolve";
      outputs = run_evolve(cfg, out);
    } else if (sub_unravel->parsed()) {
      name = "unravel";
      outputs = run_unravel(cfg, out);
    } else if (sub_rates->parsed()) {
      name = "rates";
      outputs = run_rates(cfg, out);
    } else if (sub_friction->parsed()) {
      name = "friction";
      outputs = run_friction(cfg, out);
    } else if (sub_cl->parsed()) {
      name = "cl-evolve";
      outputs = run_cl_evolve(cfg, out);
    } else {
      name = "validate";
      const auto [files, all_pass] = run_validate(cfg, out);
      outputs = files;
      if (!all_pass) {
        std::cerr << "validate: at least one invariant suite failed (see validate.json)\n";
        exit_code = 1;
      }
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    qlbe::write_run_manifest(out, name, cfg.resolved, cfg.monte_carlo.seed, outputs, wall);
    return exit_code;
  } catch (const qlbe::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

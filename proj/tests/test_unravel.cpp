// test_unravel.cpp — classical jump rates, exact-waiting-time thinning sampler,
// and Monte Carlo ensembles against deterministic and analytic references
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "qlbe/brownian.hpp"
#include "qlbe/qlbe_generator.hpp"
#include "qlbe/structure_factor.hpp"
#include "qlbe/unravel.hpp"

using namespace qlbe;

namespace {

const GasModel gas{1.0, 1.0, 0.4};
const ParticleModel particle{2.0};
const PotentialSpec pot = PotentialSpec::make_gaussian(1.2, 0.8);

}  // namespace

TEST_CASE("rate density: frozen values, detailed balance, lattice correspondence") {
  CHECK(jump_rate_density(0.5, 0.75, gas, particle, pot) ==
        doctest::Approx(7.488078145603943e-03).epsilon(1e-14));
  CHECK(jump_rate_density(-0.5, 0.75, gas, particle, pot) ==
        doctest::Approx(9.920091799466811e-03).epsilon(1e-14));

  // Δ·r(jΔ|P) is exactly the lattice weight of the collision generator
  CHECK(0.25 * jump_rate_density(0.5, 0.75, gas, particle, pot) ==
        doctest::Approx(0.00187201953640098587).epsilon(1e-13));

  // detailed balance r(Q|P) = e^{-βE} r(-Q|P+Q) transfers the MB weight
  for (const double q : {0.3, -0.8, 1.7}) {
    for (const double p : {-1.2, 0.0, 0.9}) {
      const double lhs = jump_rate_density(q, p, gas, particle, pot);
      const double e = energy_transfer(q, p, particle.mass);
      const double rhs =
          std::exp(-gas.beta * e) * jump_rate_density(-q, p + q, gas, particle, pot);
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
  }

  // the 3D density restricted to collinear kinematics is the 1D density
  const Eigen::Vector3d qv{0.5, 0.0, 0.0};
  const Eigen::Vector3d pv{0.75, 0.0, 0.0};
  CHECK(jump_rate_density(qv, pv, gas, particle, pot) ==
        doctest::Approx(jump_rate_density(0.5, 0.75, gas, particle, pot)).epsilon(1e-14));

  // detailed balance with genuinely three-dimensional kinematics
  const Eigen::Vector3d q3{0.4, -0.7, 0.2};
  const Eigen::Vector3d p3{-0.3, 0.5, 1.1};
  const double e3 = energy_transfer(q3, p3, particle.mass);
  CHECK(jump_rate_density(q3, p3, gas, particle, pot) ==
        doctest::Approx(std::exp(-gas.beta * e3) *
                        jump_rate_density(Eigen::Vector3d(-q3), Eigen::Vector3d(p3 + q3), gas,
                                          particle, pot))
            .epsilon(1e-12));

  CHECK_THROWS_AS(jump_rate_density(0.0, 0.75, gas, particle, pot), std::invalid_argument);
  CHECK_THROWS_AS(
      jump_rate_density(Eigen::Vector3d::Zero(), pv, gas, particle, pot),
      std::invalid_argument);
}

TEST_CASE("total rate: frozen quadrature values and symmetries") {
  const double r1 = total_jump_rate(0.6, gas, particle, pot, 0.01, 12.0);
  CHECK(r1 == doctest::Approx(4.864991938774537e-02).epsilon(1e-8));
  // q → −q maps the rate at P onto the rate at −P
  CHECK(total_jump_rate(-0.6, gas, particle, pot, 0.01, 12.0) ==
        doctest::Approx(r1).epsilon(1e-10));

  const double r3 = total_jump_rate(Eigen::Vector3d{1.0, 0.0, 0.0}, gas, particle, pot, 12.0);
  CHECK(r3 == doctest::Approx(3.905647450030886e-02).epsilon(1e-8));
  CHECK(total_jump_rate(Eigen::Vector3d{0.0, -1.0, 0.0}, gas, particle, pot, 12.0) ==
        doctest::Approx(r3).epsilon(1e-10));
  CHECK(total_jump_rate(Eigen::Vector3d::Zero(), gas, particle, pot, 12.0) ==
        doctest::Approx(3.969859896675473e-02).epsilon(1e-8));

  // the Gaussian potential makes the rate saturate long before the cutoff
  CHECK(total_jump_rate(Eigen::Vector3d{1.0, 0.0, 0.0}, gas, particle, pot, 20.0) ==
        doctest::Approx(r3).epsilon(1e-10));

  CHECK_THROWS_AS(total_jump_rate(0.6, gas, particle, pot, 0.0, 12.0), std::invalid_argument);
  CHECK_THROWS_AS(total_jump_rate(0.6, gas, particle, pot, 2.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(total_jump_rate(Eigen::Vector3d::Zero(), gas, particle, pot, -1.0),
                  std::invalid_argument);
}

TEST_CASE("lattice exit rates approach the continuum rate away from the infrared cell") {
  const MomentumGrid grid{1, 0.125, 16};
  const auto rates = QlbeGenerator::build(grid, gas, particle, pot).diagonal_rates();
  const int k0 = grid.half_extent;  // P = 0

  // transfers with |j| ≥ 8 against the matching continuum window: the midpoint
  // rule resolves 1/|Q| well once cells sit away from Q = 0
  double tail = 0.0;
  for (std::size_t jt = 0; jt < rates.transfers.size(); ++jt) {
    if (std::abs(rates.transfers[jt]) >= 8) tail += rates.w(static_cast<int>(jt), k0);
  }
  const double tail_ref =
      total_jump_rate(0.0, gas, particle, pot, 7.5 * grid.spacing, 16.5 * grid.spacing);
  CHECK(std::abs(tail - tail_ref) <= 0.01 * tail_ref);

  // the full sum includes the cell straddling the logarithmic 1/|Q| peak,
  // where a midpoint rule is biased by a spacing-independent few percent
  const double full_ref =
      total_jump_rate(0.0, gas, particle, pot, 0.5 * grid.spacing, 16.5 * grid.spacing);
  CHECK(std::abs(rates.total[k0] - full_ref) <= 0.08 * full_ref);
}

TEST_CASE("thinned waiting times are exponential with the quadrature rate") {
  const double q_min = 0.01;
  const JumpSampler sampler(gas, particle, pot, 1, q_min);
  CHECK(sampler.dimension() == 1);
  CHECK(sampler.q_min() == q_min);
  const double rate = total_jump_rate(0.6, gas, particle, pot, q_min, 12.0);
  CHECK(sampler.envelope_rate() >= rate);

  Rng rng(321, 0);
  const Eigen::Vector3d p{0.6, 0.0, 0.0};
  const int n = 20000;
  double sum = 0.0, sum_sq = 0.0;
  long candidates = 0;
  for (int i = 0; i < n; ++i) {
    const auto step = sampler.sample_step(p, rng);
    CHECK(step.transfer[1] == 0.0);
    CHECK(step.transfer[2] == 0.0);
    CHECK(std::abs(step.transfer[0]) >= q_min);
    sum += step.waiting_time;
    sum_sq += step.waiting_time * step.waiting_time;
    candidates += step.candidates;
  }
  const double mean = sum / n;
  const double var = (sum_sq - n * mean * mean) / (n - 1);
  // Exp(R): mean 1/R with sampling sd (1/R)/√n, variance 1/R² with relative
  // sampling sd √(8/n); the seed is fixed, so these are deterministic checks
  CHECK(std::abs(mean - 1.0 / rate) <= 3.5 / (rate * std::sqrt(static_cast<double>(n))));
  CHECK(std::abs(var - 1.0 / (rate * rate)) <= 0.08 / (rate * rate));
  CHECK(static_cast<double>(candidates) / n <= 3.0);  // envelope efficiency
}

TEST_CASE("accepted transfer magnitudes follow the rate density") {
  const JumpSampler sampler(gas, particle, pot, 3);

  // radial density of kicks at P = 0 is ∝ q² |Ṽ(q)|² S(q, q²/2M); build the
  // 50 equal-probability bin edges from its quadrature CDF by bisection
  const auto dens = [&](double q) {
    return q * q * pot.vtilde_sq(q) * s_mb(SFPoint(q, q * q / (2.0 * particle.mass)), gas);
  };
  const double q_hi = 10.0;
  const double total = integrate_or_throw(dens, 1e-12, q_hi);
  const int n_bins = 50;
  std::vector<double> edges;  // 49 interior edges
  for (int i = 1; i < n_bins; ++i) {
    double lo = 1e-12, hi = q_hi;
    const double target = total * static_cast<double>(i) / n_bins;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      (integrate_or_throw(dens, 1e-12, mid) < target ? lo : hi) = mid;
    }
    edges.push_back(0.5 * (lo + hi));
  }

  Rng rng(777, 0);
  const int n = 100000;
  std::vector<long> counts(n_bins, 0);
  Eigen::Vector3d direction_sum = Eigen::Vector3d::Zero();
  for (int i = 0; i < n; ++i) {
    const auto step = sampler.sample_step(Eigen::Vector3d::Zero(), rng);
    const double q = step.transfer.norm();
    const auto it = std::upper_bound(edges.begin(), edges.end(), q);
    ++counts[static_cast<std::size_t>(it - edges.begin())];
    direction_sum += step.transfer / q;
  }
  double chi_sq = 0.0;
  const double expected = static_cast<double>(n) / n_bins;
  for (const long c : counts) {
    const double d = static_cast<double>(c) - expected;
    chi_sq += d * d / expected;
  }
  // 99.9% quantile of χ² with 49 degrees of freedom
  CHECK(chi_sq < 85.35056460859305);

  // directions are isotropic: each mean component within 4 sampling sds of 0
  const double sem = std::sqrt(1.0 / 3.0 / static_cast<double>(n));
  for (int a = 0; a < 3; ++a) CHECK(std::abs(direction_sum[a] / n) <= 4.0 * sem);
}

TEST_CASE("lattice ensembles converge to the deterministic master equation") {
  const MomentumGrid grid{1, 0.25, 8};
  const auto strong = PotentialSpec::make_gaussian(6.0, 0.8);
  const auto gen = QlbeGenerator::build(grid, gas, particle, strong);
  const auto rates = gen.diagonal_rates();

  Eigen::ArrayXd w0 = Eigen::ArrayXd::Zero(grid.size());
  const int k0 = 12;  // P = 1.0
  w0[k0] = 1.0;
  const auto mu0 = make_distribution(grid, w0);

  EvolutionConfig det;
  det.dt = 0.09 / gen.max_total_rate();
  det.t_final = 1.5;
  det.record_every = 1 << 30;
  const auto classical = classical_evolve(rates, mu0, det);
  const auto& target = classical.weights.back();

  TrajectoryConfig cfg;
  cfg.seed = 424242;
  cfg.n_trajectories = 20000;
  cfg.t_final = 1.5;
  cfg.record_interval = 0.5;
  const auto stats = run_ensemble(cfg, mu0, rates, particle);

  CHECK(stats.times.size() == 4);
  CHECK(stats.mean_p(0, 0) == doctest::Approx(grid.momentum(k0)).epsilon(1e-14));
  CHECK(stats.sem_mean_p(0, 0) == 0.0);

  CHECK(stats.histogram.weights.sum() == doctest::Approx(1.0).epsilon(1e-12));
  for (int k = 0; k < static_cast<int>(grid.size()); ++k) {
    const double mu = target[k];
    const double sd = std::sqrt(mu * (1.0 - mu) / cfg.n_trajectories);
    CHECK(std::abs(stats.histogram.weights[k] - mu) <= 3.5 * sd + 1e-9);
  }

  // fixed-order compensated reduction: identical seeds give identical bits
  const auto again = run_ensemble(cfg, mu0, rates, particle);
  CHECK((again.mean_p - stats.mean_p).cwiseAbs().maxCoeff() == 0.0);
  CHECK((again.histogram.weights - stats.histogram.weights).abs().maxCoeff() == 0.0);
  TrajectoryConfig other = cfg;
  other.seed = 424243;
  const auto different = run_ensemble(other, mu0, rates, particle);
  CHECK((different.mean_p - stats.mean_p).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("momentum ensembles thermalize to the lattice Maxwell-Boltzmann state") {
  const MomentumGrid grid{1, 0.25, 24};
  const auto strong = PotentialSpec::make_gaussian(6.0, 0.8);
  const auto rates = QlbeGenerator::build(grid, gas, particle, strong).diagonal_rates();

  Eigen::ArrayXd w0 = Eigen::ArrayXd::Zero(grid.size());
  w0[grid.half_extent + 8] = 1.0;  // start at P = +2
  const auto mu0 = make_distribution(grid, w0);

  // the friction time 1/eta is about 21 here, so integrate well past it
  TrajectoryConfig cfg;
  cfg.seed = 90125;
  cfg.n_trajectories = 30000;
  cfg.t_final = 150.0;
  cfg.record_interval = 30.0;
  const auto stats = run_ensemble(cfg, mu0, rates, particle);

  const auto mb = maxwell_boltzmann_distribution(grid, particle.mass, gas.beta);
  const double tv = 0.5 * (stats.histogram.weights - mb.weights).abs().sum();
  CHECK(tv < 0.02);

  const double ke_target = mb.second_moment() / (2.0 * particle.mass);
  CHECK(std::abs(stats.ke_mean[stats.ke_mean.size() - 1] - ke_target) <= 0.02 * ke_target);
  CHECK(std::abs(stats.var_p[stats.var_p.size() - 1] - mb.variance()) <= 0.03 * mb.variance());
}

TEST_CASE("three-dimensional ensembles reach isotropic equipartition") {
  const JumpSampler sampler(gas, particle, pot, 3);

  // the weak-coupling friction time is a few hundred; run to ten of them so
  // the directed initial momentum decays below the ensemble standard error
  TrajectoryConfig cfg;
  cfg.seed = 3141;
  cfg.n_trajectories = 20000;
  cfg.t_final = 2500.0;
  cfg.record_interval = 500.0;
  const MomentumGrid hist_grid{1, 0.25, 24};
  const auto stats =
      run_ensemble(cfg, Eigen::Vector3d{2.0, 0.0, 0.0}, sampler, particle, hist_grid);

  CHECK(stats.mean_p.cols() == 3);
  const auto last = stats.times.size() - 1;
  // ⟨|P|²⟩/2M → 3/(2β) and each axis mean decays to zero
  const double ke_target = 1.5 / gas.beta;
  CHECK(std::abs(stats.ke_mean[last] - ke_target) <= 0.02 * ke_target);
  CHECK(std::abs(stats.var_p[last] - 3.0 * particle.mass / gas.beta) <=
        0.03 * 3.0 * particle.mass / gas.beta);
  for (int a = 0; a < 3; ++a) {
    CHECK(std::abs(stats.mean_p(static_cast<long>(last), a)) <=
          4.0 * stats.sem_mean_p(static_cast<long>(last), a));
  }
}

TEST_CASE("heavy-tracer momentum decays at the microscopic friction rate") {
  const GasModel bath{1.0, 1.0, 0.3};
  const ParticleModel heavy{25.0};
  const auto strong = PotentialSpec::make_gaussian(10.0, 1.0);
  const double eta = friction_eta(bath, heavy, strong);  // dimension = 3

  const JumpSampler sampler(bath, heavy, strong, 3);
  TrajectoryConfig cfg;
  cfg.seed = 60902;
  cfg.n_trajectories = 4000;
  cfg.t_final = 150.0;
  cfg.record_interval = 10.0;
  const MomentumGrid hist_grid{1, 1.0, 24};
  const auto stats =
      run_ensemble(cfg, Eigen::Vector3d{6.0, 0.0, 0.0}, sampler, heavy, hist_grid);

  // least-squares slope of ln⟨P_x⟩(t) on [20, 150]
  double st = 0, sy = 0, stt = 0, sty = 0;
  int m = 0;
  for (std::size_t r = 0; r < stats.times.size(); ++r) {
    if (stats.times[r] < 20.0) continue;
    const double y = std::log(stats.mean_p(static_cast<long>(r), 0));
    st += stats.times[r];
    sy += y;
    stt += stats.times[r] * stats.times[r];
    sty += stats.times[r] * y;
    ++m;
  }
  const double slope = (m * sty - st * sy) / (m * stt - st * st);
  CHECK(std::abs(-slope - eta) <= 0.10 * eta);
}

TEST_CASE("zero coupling freezes the ensemble") {
  const auto off = PotentialSpec::make_gaussian(0.0, 0.8);
  const JumpSampler sampler(gas, particle, off, 3);
  CHECK(sampler.envelope_rate() == 0.0);

  Rng rng(5, 0);
  const auto step = sampler.sample_step(Eigen::Vector3d{1.0, 0.0, 0.0}, rng);
  CHECK(std::isinf(step.waiting_time));
  CHECK(step.transfer.norm() == 0.0);

  TrajectoryConfig cfg;
  cfg.seed = 8;
  cfg.n_trajectories = 50;
  cfg.t_final = 2.0;
  cfg.record_interval = 1.0;
  const MomentumGrid hist_grid{1, 0.25, 8};
  const auto stats =
      run_ensemble(cfg, Eigen::Vector3d{1.25, 0.0, 0.0}, sampler, particle, hist_grid);
  for (std::size_t r = 0; r < stats.times.size(); ++r) {
    CHECK(stats.mean_p(static_cast<long>(r), 0) == 1.25);
  }
  // all mass in the lattice bin holding 1.25
  CHECK(stats.histogram.weights[hist_grid.half_extent + 5] == 1.0);
}

TEST_CASE("cutoff potentials restrict sampled transfers to the ball") {
  const auto cut = PotentialSpec::make_cutoff_constant(1.5, 1.75);
  const JumpSampler s1(gas, particle, cut, 1, 0.05);
  const JumpSampler s3(gas, particle, cut, 3);
  Rng rng(99, 0);
  for (int i = 0; i < 2000; ++i) {
    const auto k1 = s1.sample_step(Eigen::Vector3d{0.3, 0.0, 0.0}, rng);
    const double q1 = std::abs(k1.transfer[0]);
    CHECK(q1 >= 0.05);
    CHECK(q1 <= 1.75);
    const auto k3 = s3.sample_step(Eigen::Vector3d{0.3, -0.2, 0.0}, rng);
    CHECK(k3.transfer.norm() <= 1.75);
  }
}

TEST_CASE("sampler and ensemble configuration validation") {
  CHECK_THROWS_AS(JumpSampler(gas, particle, pot, 2), std::invalid_argument);
  CHECK_THROWS_AS(JumpSampler(gas, particle, pot, 1, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(JumpSampler(gas, particle, pot, 1, -0.1), std::invalid_argument);
  const auto cut = PotentialSpec::make_cutoff_constant(1.5, 1.0);
  CHECK_THROWS_AS(JumpSampler(gas, particle, cut, 1, 1.5), std::invalid_argument);

  const JumpSampler sampler(gas, particle, pot, 1, 0.01);
  const MomentumGrid hist_grid{1, 0.5, 8};
  TrajectoryConfig bad;
  bad.n_trajectories = 1;
  CHECK_THROWS_AS(run_ensemble(bad, Eigen::Vector3d::Zero(), sampler, particle, hist_grid),
                  std::invalid_argument);
  bad = TrajectoryConfig{};
  bad.record_interval = 0.0;
  CHECK_THROWS_AS(run_ensemble(bad, Eigen::Vector3d::Zero(), sampler, particle, hist_grid),
                  std::invalid_argument);
  bad = TrajectoryConfig{};
  bad.t_final = -1.0;
  CHECK_THROWS_AS(run_ensemble(bad, Eigen::Vector3d::Zero(), sampler, particle, hist_grid),
                  std::invalid_argument);

  // lattice mode requires the initial distribution to live on the rate grid
  const MomentumGrid grid{1, 0.25, 8};
  const auto rates = QlbeGenerator::build(grid, gas, particle, pot).diagonal_rates();
  const auto wrong = maxwell_boltzmann_distribution(MomentumGrid{1, 0.25, 6}, particle.mass, 1.0);
  CHECK_THROWS_AS(run_ensemble(TrajectoryConfig{}, wrong, rates, particle),
                  std::invalid_argument);
}

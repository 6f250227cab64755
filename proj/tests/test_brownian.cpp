// test_brownian.cpp — diffusive-limit coefficients, exact moment evolution,
// phase-space transport invariants, and the lattice-vs-friction consistency fit
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "qlbe/brownian.hpp"
#include "qlbe/qlbe_generator.hpp"

using namespace qlbe;

namespace {

const GasModel gas{1.0, 1.0, 0.4};
const ParticleModel particle{2.0};

}  // namespace

TEST_CASE("thermal coefficient pair ties both diffusion constants to the friction") {
  const auto coeffs = cl_coefficients(0.8, gas, particle);
  CHECK(coeffs.eta == 0.8);
  CHECK(coeffs.d_pp == doctest::Approx(1.6).epsilon(1e-15));
  CHECK(coeffs.d_xx == doctest::Approx(0.025).epsilon(1e-15));

  // the pair saturates the positivity bound D_pp·D_xx = η²/16 identically
  for (const double eta : {1e-6, 0.3, 2.0, 47.0}) {
    for (const double beta : {0.2, 1.0, 9.0}) {
      const GasModel g{1.0, beta, 0.4};
      for (const double mass : {0.5, 3.0, 80.0}) {
        const auto c = cl_coefficients(eta, g, ParticleModel{mass});
        CHECK(c.d_pp * c.d_xx == doctest::Approx(eta * eta / 16.0).epsilon(1e-14));
      }
    }
  }

  CHECK_THROWS_AS(cl_coefficients(0.0, gas, particle), std::invalid_argument);
  CHECK_THROWS_AS(cl_coefficients(-1.0, gas, particle), std::invalid_argument);
}

TEST_CASE("microscopic friction: frozen values and parameter scaling") {
  const auto pot = PotentialSpec::make_gaussian(1.0, 1.0);
  const GasModel ref_gas{1.0, 1.0, 0.1};
  const ParticleModel heavy{100.0};

  const double eta3 = friction_eta(ref_gas, heavy, pot);
  const double eta1 = friction_eta(ref_gas, heavy, pot, {}, 1);
  CHECK(eta3 == doctest::Approx(8.361301851422680e-06).epsilon(1e-12));
  CHECK(eta1 == doctest::Approx(4.491256006138508e-06).epsilon(1e-12));
  // 1D and 3D differ exactly by the angular average of Q²: (4π/3)/(2) per the
  // Gaussian moments, i.e. 2π/(3(σ² + β/8m)) at these parameters
  const double a = 1.0 + ref_gas.beta / (8.0 * ref_gas.mass);
  CHECK(eta3 / eta1 ==
        doctest::Approx(2.0 * std::numbers::pi / (3.0 * a)).epsilon(1e-12));

  // second frozen point, nothing shared with the first
  const GasModel gas2{0.8, 1.6, 0.25};
  const auto pot2 = PotentialSpec::make_gaussian(2.5, 0.7);
  CHECK(friction_eta(gas2, ParticleModel{40.0}, pot2) ==
        doctest::Approx(1.366471284736171e-03).epsilon(1e-12));
  CHECK(friction_eta(gas2, ParticleModel{40.0}, pot2, {}, 1) ==
        doctest::Approx(4.828070642207457e-04).epsilon(1e-12));

  // η is quadratic in the coupling and linear in the gas density
  const auto double_g = PotentialSpec::make_gaussian(2.0, 1.0);
  CHECK(friction_eta(ref_gas, heavy, double_g) == doctest::Approx(4.0 * eta3).epsilon(1e-12));
  const GasModel denser{1.0, 1.0, 0.3};
  CHECK(friction_eta(denser, heavy, pot) == doctest::Approx(3.0 * eta3).epsilon(1e-12));

  CHECK(friction_eta(ref_gas, heavy, PotentialSpec::make_gaussian(0.0, 1.0)) == 0.0);
  CHECK_THROWS_AS(friction_eta(ref_gas, heavy, pot, {}, 2), std::invalid_argument);

  // plain trapezoid on 1e5 points reproduces the adaptive quadrature
  const double b = ref_gas.beta / (8.0 * ref_gas.mass);
  const long n = 100000;
  const double lo = 1e-8, hi = 30.0;
  const double h = (hi - lo) / static_cast<double>(n - 1);
  const auto f = [&](double q) { return q * q * q * pot.vtilde_sq(q) * std::exp(-b * q * q); };
  double acc = 0.5 * (f(lo) + f(hi));
  for (long i = 1; i < n - 1; ++i) acc += f(lo + static_cast<double>(i) * h);
  const double prefactor = ref_gas.beta / (2.0 * heavy.mass) *
                           collision_rate_prefactor(ref_gas) *
                           (4.0 * std::numbers::pi / 3.0) *
                           std::sqrt(ref_gas.beta * ref_gas.mass / (2.0 * std::numbers::pi));
  CHECK(eta3 == doctest::Approx(prefactor * acc * h).epsilon(1e-8));
}

TEST_CASE("microscopic friction: cutoff potential against closed forms") {
  const auto pot = PotentialSpec::make_cutoff_constant(2.0, 3.0);
  const double b = gas.beta / (8.0 * gas.mass);
  const double c2 = pot.vtilde_sq(0.0);
  const double common = gas.beta / (2.0 * particle.mass) * collision_rate_prefactor(gas) *
                        std::sqrt(gas.beta * gas.mass / (2.0 * std::numbers::pi));
  const double bq2 = b * pot.q_max * pot.q_max;
  // ∫₀^q Q³e^{−bQ²} = (1−(1+bq²)e^{−bq²})/(2b²), ∫₀^q Qe^{−bQ²} = (1−e^{−bq²})/(2b)
  const double eta3_closed = common * (4.0 * std::numbers::pi / 3.0) * c2 *
                             (1.0 - (1.0 + bq2) * std::exp(-bq2)) / (2.0 * b * b);
  const double eta1_closed = common * 2.0 * c2 * (1.0 - std::exp(-bq2)) / (2.0 * b);
  CHECK(friction_eta(gas, particle, pot) == doctest::Approx(eta3_closed).epsilon(1e-10));
  CHECK(friction_eta(gas, particle, pot, {}, 1) == doctest::Approx(eta1_closed).epsilon(1e-10));
}

TEST_CASE("moment system: structure, frozen evolution point, stationary sector") {
  const auto coeffs = cl_coefficients(0.8, gas, particle);
  const auto sys = cl_moment_system(coeffs, particle);
  CHECK(sys.a(0, 1) == 0.5);
  CHECK(sys.a(1, 1) == -0.8);
  CHECK(sys.a(2, 3) == 1.0);
  CHECK(sys.a(3, 3) == -0.8);
  CHECK(sys.a(3, 4) == 0.5);
  CHECK(sys.a(4, 4) == -1.6);
  CHECK(sys.b(2) == 0.05);
  CHECK(sys.b(4) == 3.2);
  CHECK(sys.a.cwiseAbs().sum() == doctest::Approx(0.5 + 0.8 + 1.0 + 0.8 + 0.5 + 1.6));

  const Moments m0{1.0, 2.0, 2.0, 0.5, 5.0};
  const Moments mt = cl_moment_evolve(coeffs, particle, m0, 0.7);
  CHECK(mt.x == doctest::Approx(1.535988670188981).epsilon(1e-12));
  CHECK(mt.p == doctest::Approx(1.142418127697630).epsilon(1e-12));
  CHECK(mt.xx == doctest::Approx(2.723471388286478).epsilon(1e-12));
  CHECK(mt.xp == doctest::Approx(1.280835581911718).epsilon(1e-12));
  CHECK(mt.pp == doctest::Approx(2.978839383869118).epsilon(1e-12));
  // mean momentum is exactly exponential
  CHECK(mt.p == doctest::Approx(2.0 * std::exp(-0.56)).epsilon(1e-13));

  // p, xp, pp have an exact fixed point; xx then grows at the Einstein rate
  const double beta = 1.0;
  const Moments fixed{0.0, 0.0, 0.0, 1.0 / (beta * coeffs.eta), particle.mass / beta};
  const Moments late = cl_moment_evolve(coeffs, particle, fixed, 5.0);
  CHECK(std::abs(late.p) <= 1e-13);
  CHECK(late.xp == doctest::Approx(fixed.xp).epsilon(1e-12));
  CHECK(late.pp == doctest::Approx(fixed.pp).epsilon(1e-12));
  const double einstein = 2.0 / (beta * particle.mass * coeffs.eta) + 2.0 * coeffs.d_xx;
  CHECK(late.xx - fixed.xx == doctest::Approx(5.0 * einstein).epsilon(1e-12));
  CHECK(einstein == doctest::Approx(1.3).epsilon(1e-15));

  // frictionless system streams ballistically
  const auto free_sys = cl_moment_system(CLCoefficients{}, particle);
  const Moments ball = evolve_moments(free_sys, m0, 10.0);
  CHECK(ball.x == doctest::Approx(m0.x + m0.p * 10.0 / particle.mass).epsilon(1e-12));
  CHECK(ball.p == doctest::Approx(m0.p).epsilon(1e-14));
  CHECK(ball.xx == doctest::Approx(m0.xx + 2.0 * m0.xp * 10.0 / particle.mass +
                                   m0.pp * 100.0 / (particle.mass * particle.mass))
                       .epsilon(1e-12));

  CHECK_THROWS_AS(evolve_moments(sys, m0, -1.0), std::invalid_argument);
}

TEST_CASE("phase-space fields: factories, moments, validation") {
  const auto field = gaussian_phase_space_field(64, 64, -8.0, 8.0, -6.0, 6.0, 1.0, -0.5, 1.2, 0.9);
  CHECK(field.mass() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(field.values.minCoeff() >= 0.0);
  validate(field);

  const auto m = field_moments(field);
  CHECK(m.mass == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(m.mean_x == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(m.mean_p == doctest::Approx(-0.5).epsilon(1e-6));
  CHECK(m.var_x == doctest::Approx(1.44).epsilon(1e-5));
  CHECK(m.var_p == doctest::Approx(0.81).epsilon(1e-5));
  CHECK(std::abs(m.cov_xp) <= 1e-10);

  const auto thermal = uniform_maxwell_field(16, 64, 0.0, 4.0, -8.0, 8.0, particle, 1.0);
  CHECK(thermal.mass() == doctest::Approx(1.0).epsilon(1e-14));
  const auto tm = field_moments(thermal);
  CHECK(tm.var_p == doctest::Approx(particle.mass).epsilon(1e-5));  // M/β
  CHECK(std::abs(tm.mean_p) <= 1e-12);

  PhaseSpaceField bad = field;
  bad.values *= 2.0;
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
  bad = field;
  bad.values(3, 3) = -1e-6;
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
  CHECK_THROWS_AS(gaussian_phase_space_field(64, 64, -8.0, 8.0, -6.0, 6.0, 500.0, 0.0, 1.0, 1.0),
                  std::invalid_argument);  // no mass on the grid
}

TEST_CASE("frictionless transport conserves mass and moves the mean exactly") {
  // the box is wide enough that upwind-diffused tails (D_num ≈ |v|dx/2) never
  // reach the periodic seam, so the transported mean telescopes exactly
  const auto w0 =
      gaussian_phase_space_field(96, 40, -12.0, 12.0, -3.0, 5.0, -2.0, 1.0, 1.0, 0.8);
  const auto m0 = field_moments(w0);

  EvolutionConfig cfg;
  cfg.dt = 0.04;
  cfg.t_final = 2.0;
  cfg.record_every = 10;
  const auto result = wigner_kramers_evolve(CLCoefficients{}, particle, w0, cfg);

  for (std::size_t r = 0; r < result.times.size(); ++r) {
    const auto& field = result.fields[r];
    CHECK(std::abs(field.mass() - 1.0) <= 1e-12);
    CHECK(field.values.minCoeff() >= -1e-10);
    const auto m = field_moments(field);
    // conservative upwinding transports ⟨X⟩ at exactly ⟨P⟩/M while the blob
    // stays away from the periodic seam, and ⟨P⟩ is untouched
    CHECK(m.mean_x ==
          doctest::Approx(m0.mean_x + m0.mean_p / particle.mass * result.times[r])
              .epsilon(1e-10));
    CHECK(m.mean_p == doctest::Approx(m0.mean_p).epsilon(1e-12));
  }
}

TEST_CASE("thermal state is an exact fixed point of the transport scheme") {
  const auto coeffs = cl_coefficients(0.8, gas, particle);
  const auto w0 = uniform_maxwell_field(32, 96, 0.0, 8.0, -8.5, 8.5, particle, gas.beta);

  EvolutionConfig cfg;
  cfg.dt = 2.8e-3;
  cfg.t_final = 6.25;  // 5/η
  cfg.record_every = 1000;
  const auto result = wigner_kramers_evolve(coeffs, particle, w0, cfg);

  const auto& last = result.fields.back().values;
  CHECK((last - w0.values).cwiseAbs().maxCoeff() <= 1e-11);
  const auto m0 = field_moments(w0);
  const auto mt = field_moments(result.fields.back());
  CHECK(std::abs(mt.mean_p) <= 1e-10);
  CHECK(mt.var_p == doctest::Approx(m0.var_p).epsilon(1e-9));
  CHECK(mt.var_x == doctest::Approx(m0.var_x).epsilon(1e-9));
}

TEST_CASE("transported moments track the exact moment solution") {
  const auto coeffs = cl_coefficients(0.8, gas, particle);
  const auto w0 =
      gaussian_phase_space_field(96, 128, -12.0, 12.0, -7.5, 7.5, -2.0, 1.5, 1.0, 1.0);
  const auto f0 = field_moments(w0);
  const Moments m0{f0.mean_x, f0.mean_p, f0.var_x + f0.mean_x * f0.mean_x,
                   f0.cov_xp + f0.mean_x * f0.mean_p, f0.var_p + f0.mean_p * f0.mean_p};
  const auto sys = cl_moment_system(coeffs, particle);

  EvolutionConfig cfg;
  cfg.dt = 1.5e-3;
  cfg.t_final = 3.75;  // 3/η
  cfg.record_every = 500;
  const auto result = wigner_kramers_evolve(coeffs, particle, w0, cfg);

  for (std::size_t r = 1; r < result.times.size(); ++r) {
    const auto m = field_moments(result.fields[r]);
    const Moments ref = evolve_moments(sys, m0, result.times[r]);
    CHECK(std::abs(m.mean_p - ref.p) <= 0.005 * std::abs(ref.p));
    CHECK(std::abs(m.mean_x - ref.x) <= 0.005 * std::max(1.0, std::abs(ref.x)));
    const double var_p_ref = ref.pp - ref.p * ref.p;
    CHECK(std::abs(m.var_p - var_p_ref) <= 0.01 * var_p_ref);
  }
}

TEST_CASE("strong friction: position variance grows at the composite diffusion rate") {
  // η large enough that the Einstein slope 2(1/βMη + D_xx) is D_xx-dominated
  const ParticleModel unit{1.0};
  const GasModel unit_gas{1.0, 1.0, 0.4};
  const auto coeffs = cl_coefficients(8.0, unit_gas, unit);
  const double slope = 2.0 * (1.0 / (unit_gas.beta * unit.mass * coeffs.eta) + coeffs.d_xx);
  CHECK(slope == doctest::Approx(1.25).epsilon(1e-15));

  const auto w0 =
      gaussian_phase_space_field(112, 88, -7.0, 7.0, -5.5, 5.5, 0.0, 0.0, 1.0, 1.0);
  EvolutionConfig cfg;
  cfg.dt = 3.0e-4;
  cfg.t_final = 1.5;
  cfg.record_every = 1000;
  const auto result = wigner_kramers_evolve(coeffs, unit, w0, cfg);

  // fit after the momentum sector has equilibrated (≳ 3/η)
  double t_lo = 0.0, var_lo = 0.0, t_hi = 0.0, var_hi = 0.0;
  for (std::size_t r = 0; r < result.times.size(); ++r) {
    const double t = result.times[r];
    if (t >= 0.6 && t_lo == 0.0) {
      t_lo = t;
      var_lo = field_moments(result.fields[r]).var_x;
    }
    t_hi = t;
    var_hi = field_moments(result.fields[r]).var_x;
  }
  const double fitted = (var_hi - var_lo) / (t_hi - t_lo);
  CHECK(std::abs(fitted - slope) <= 0.05 * slope);

  // the exact moment solution shows the same late-time slope (up to the
  // e^{-ηt} transient still present at t = 0.6)
  const Moments m1 = cl_moment_evolve(coeffs, unit, Moments{0, 0, 1, 0, 1}, 0.6);
  const Moments m2 = cl_moment_evolve(coeffs, unit, Moments{0, 0, 1, 0, 1}, 1.5);
  CHECK((m2.xx - m1.xx) / 0.9 == doctest::Approx(slope).epsilon(1e-3));
}

TEST_CASE("transport rejects unstable steps and invalid fields") {
  const auto coeffs = cl_coefficients(0.8, gas, particle);
  const auto w0 = uniform_maxwell_field(16, 32, 0.0, 4.0, -6.0, 6.0, particle, gas.beta);

  EvolutionConfig unstable;
  unstable.dt = 1.0;  // violates the CFL bound by orders of magnitude
  unstable.t_final = 1.0;
  CHECK_THROWS_AS(wigner_kramers_evolve(coeffs, particle, w0, unstable),
                  std::invalid_argument);

  PhaseSpaceField scaled = w0;
  scaled.values *= 1.5;
  EvolutionConfig cfg;
  cfg.dt = 1e-3;
  cfg.t_final = 0.01;
  CHECK_THROWS_AS(wigner_kramers_evolve(coeffs, particle, scaled, cfg), std::invalid_argument);

  CHECK_THROWS_AS(wigner_kramers_evolve(CLCoefficients{-0.1, 0.0, 0.0}, particle, w0, cfg),
                  std::invalid_argument);
}

TEST_CASE("lattice relaxation reproduces the microscopic friction") {
  const GasModel light{0.35, 1.0, 0.5};
  const ParticleModel heavy{17.5};  // m/M = 0.02
  const auto pot = PotentialSpec::make_gaussian(30.0, 1.0);
  // lattice relaxation underestimates the friction by O(a dq^2) on top of the
  // O(m/M) expansion error, so a fine spacing is needed to land inside 5%
  const MomentumGrid grid{1, 0.3, 60};

  const auto report = brownian_consistency(light, heavy, pot, grid);
  CHECK(report.eta_microscopic == doctest::Approx(friction_eta(light, heavy, pot, {}, 1)));
  CHECK(report.r_squared >= 0.999);
  CHECK(report.relative_deviation <= 0.05);
  // the initial mean sits at the requested 0.75 thermal widths
  const double sigma_p = std::sqrt(heavy.mass / light.beta);
  CHECK(report.mean_momentum.front() == doctest::Approx(0.75 * sigma_p).epsilon(1e-3));
  CHECK(report.times.front() == 0.0);
  CHECK(report.mean_momentum.size() == report.times.size());

  // a heavier gas (larger m/M) converges less well — Brownian-limit ordering
  const ParticleModel lighter{3.5};  // m/M = 0.1
  const auto worse = brownian_consistency(light, lighter, pot, MomentumGrid{1, 0.4, 20});
  CHECK(worse.relative_deviation > report.relative_deviation);
}

TEST_CASE("consistency check rejects non-Brownian setups") {
  const auto pot = PotentialSpec::make_gaussian(30.0, 1.0);
  // mass ratio beyond the expansion regime
  CHECK_THROWS_AS(
      brownian_consistency(GasModel{0.35, 1.0, 0.5}, ParticleModel{1.75}, pot,
                           MomentumGrid{1, 0.4, 45}),
      std::invalid_argument);
  // zero coupling: nothing to fit
  CHECK_THROWS_AS(
      brownian_consistency(GasModel{0.35, 1.0, 0.5}, ParticleModel{17.5},
                           PotentialSpec::make_gaussian(0.0, 1.0), MomentumGrid{1, 0.4, 45}),
      std::invalid_argument);
  // grid too narrow for the shifted thermal state
  CHECK_THROWS_AS(
      brownian_consistency(GasModel{0.35, 1.0, 0.5}, ParticleModel{17.5}, pot,
                           MomentumGrid{1, 0.4, 20}),
      std::invalid_argument);
}

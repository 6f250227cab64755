// test_scattering.cpp — Lindblad amplitudes, the kernel identity, total rates
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "qlbe/rng.hpp"
#include "qlbe/scattering.hpp"
#include "qlbe/structure_factor.hpp"

using namespace qlbe;

namespace {

Eigen::Vector3d random_vec(Rng& rng, double scale) {
  return scale * Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
}

// Mean speed of gas particles relative to a particle moving at speed V:
// <v_rel> = v_p [ exp(-x^2)/sqrt(pi) + (x + 1/(2x)) erf(x) ],  x = V/v_p,
// with v_p = sqrt(2/(beta m)) the most probable gas speed.  Classical
// kinetic-theory reference for the total collision rate n sigma <v_rel>.
double mean_relative_speed(double v_particle, const GasModel& gas) {
  const double v_p = std::sqrt(2.0 / (gas.beta * gas.mass));
  const double x = v_particle / v_p;
  if (x < 1e-8) return 2.0 * v_p / std::sqrt(std::numbers::pi);
  return v_p * (std::exp(-x * x) / std::sqrt(std::numbers::pi) +
                (x + 0.5 / x) * std::erf(x));
}

}  // namespace

TEST_CASE("reduced mass and relative momentum") {
  const GasModel gas{1.0, 1.0, 1.0};
  const ParticleModel particle{1.0};
  CHECK(reduced_mass(gas, particle) == doctest::Approx(0.5).epsilon(1e-15));

  const Eigen::Vector3d p(0.4, -1.0, 0.3);
  CHECK(rel_momentum(p, p, gas, particle).norm() == doctest::Approx(0.0));
  CHECK((rel_momentum(p, Eigen::Vector3d::Zero(), gas, particle) - 0.5 * p).norm() <= 1e-15);

  const ParticleModel heavy{1e6};
  CHECK((rel_momentum(p, p, gas, heavy) - p).norm() <= 1e-5 * p.norm());
}

TEST_CASE("parallel/perpendicular split") {
  Rng rng(31, 0);
  for (int i = 0; i < 200; ++i) {
    const Eigen::Vector3d p = random_vec(rng, 2.0);
    const Eigen::Vector3d q = random_vec(rng, 1.5);
    if (q.norm() < 1e-6) continue;
    const auto split = split_parallel_perp(p, q);
    CHECK(std::abs(split.p_perp.dot(q)) <= 1e-14 * std::max(1.0, p.norm() * q.norm()));
    CHECK((split.p_perp + split.p_par - p).norm() <= 1e-14 * std::max(1.0, p.norm()));
    CHECK(split.p_par.cross(q).norm() <= 1e-13 * std::max(1.0, p.norm() * q.norm()));
  }
  CHECK_THROWS_AS(split_parallel_perp(Eigen::Vector3d::UnitX(), Eigen::Vector3d::Zero()),
                  std::invalid_argument);
}

TEST_CASE("constant-amplitude Lindblad modulus factorizes") {
  const GasModel gas{1.0, 1.0, 0.3};
  const ParticleModel particle{2.0};
  const auto amp = ScatteringAmplitude::constant(0.7);
  const Eigen::Vector3d q(0.0, 0.0, 0.9);
  const Eigen::Vector3d P(0.4, -0.1, 1.1);
  const Eigen::Vector3d p_perp(0.25, -0.6, 0.0);

  const double m_star = reduced_mass(gas, particle);
  const auto split = split_parallel_perp(P, q);
  const Eigen::Vector3d arg = p_perp + (gas.mass / m_star) * 0.5 * q +
                              (gas.mass / particle.mass) * split.p_par;
  const double expected = gas.number_density * gas.mass / (m_star * m_star * q.norm()) *
                          0.49 * mb_density(arg, gas);
  CHECK(std::norm(lindblad_L(p_perp, P, q, amp, gas, particle)) ==
        doctest::Approx(expected).epsilon(1e-14));
  CHECK_THROWS_AS(lindblad_L(p_perp, P, Eigen::Vector3d::Zero(), amp, gas, particle),
                  std::invalid_argument);
}

TEST_CASE("the two printed forms of L agree over a random batch") {
  Rng rng(42, 0);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const GasModel gas{0.3 + 2.0 * rng.uniform(), 0.2 + 2.0 * rng.uniform(),
                       0.1 + rng.uniform()};
    const ParticleModel particle{0.3 + 4.0 * rng.uniform()};
    const Eigen::Vector3d q = random_vec(rng, 1.0) + Eigen::Vector3d(0.0, 0.0, 0.05);
    if (q.norm() < 1e-3) continue;
    const Eigen::Vector3d P = random_vec(rng, 1.5);
    const Eigen::Vector3d p_perp = split_parallel_perp(random_vec(rng, 1.2), q).p_perp;
    const auto amp = (i % 2 == 0) ? ScatteringAmplitude::constant(0.6 + rng.uniform())
                                  : ScatteringAmplitude::born_gaussian(1.0 + rng.uniform(),
                                                                       0.3 + rng.uniform());
    const double printed = std::norm(lindblad_L(p_perp, P, q, amp, gas, particle));
    const double rewritten =
        std::norm(lindblad_L_rewritten(p_perp, P, q, amp, gas, particle));
    if (printed > 1e-300)
      worst = std::max(worst, std::abs(printed - rewritten) / printed);
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("maxwell-boltzmann kernel identity") {
  Rng rng(7, 0);
  double worst = 0.0, worst_middle = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const GasModel gas{0.3 + 2.0 * rng.uniform(), 0.2 + 2.0 * rng.uniform(), 1.0};
    const ParticleModel particle{0.3 + 4.0 * rng.uniform()};
    const Eigen::Vector3d q = random_vec(rng, 1.0) + Eigen::Vector3d(0.02, 0.0, 0.0);
    if (q.norm() < 1e-3) continue;
    const Eigen::Vector3d P = random_vec(rng, 1.5);
    const Eigen::Vector3d p_perp = split_parallel_perp(random_vec(rng, 1.2), q).p_perp;

    const double lhs = mb_identity_lhs(p_perp, P, q, gas, particle);
    const double middle = mb_identity_middle(p_perp, P, q, gas, particle);
    const double residual = mb_identity_residual(p_perp, P, q, gas, particle);
    if (lhs > 1e-150) worst = std::max(worst, std::abs(residual) / lhs);
    // the middle form evaluates one large exponential in place of a product of
    // two, so the comparison is meaningful only away from extreme exponents,
    // where exp() still holds quotient accuracy
    if (lhs > 1e-30) worst_middle = std::max(worst_middle, std::abs(lhs - middle) / lhs);

    // doubling beta rescales both sides identically
    const GasModel hot{gas.mass, 2.0 * gas.beta, gas.number_density};
    const double lhs_hot = mb_identity_lhs(p_perp, P, q, hot, particle);
    if (lhs_hot > 1e-300)
      CHECK(std::abs(mb_identity_residual(p_perp, P, q, hot, particle)) <= 1e-12 * lhs_hot);
  }
  CHECK(worst <= 1e-12);
  CHECK(worst_middle <= 1e-13);

  // P = 0 special case called out explicitly
  const GasModel gas{1.0, 1.0, 1.0};
  const ParticleModel particle{2.0};
  const Eigen::Vector3d q(0.0, 0.7, 0.0);
  const Eigen::Vector3d p_perp(0.3, 0.0, -0.4);
  const double lhs = mb_identity_lhs(p_perp, Eigen::Vector3d::Zero(), q, gas, particle);
  CHECK(std::abs(mb_identity_residual(p_perp, Eigen::Vector3d::Zero(), q, gas, particle)) <=
        1e-12 * lhs);
}

TEST_CASE("total collision rate against classical kinetic theory") {
  const GasModel gas{1.0, 1.0, 0.3};
  const ParticleModel particle{2.0};
  const auto amp = ScatteringAmplitude::constant(0.7);
  const double sigma_tot = 4.0 * std::numbers::pi * 0.49;
  QuadratureConfig quad;
  quad.abs_tol = 1e-10;
  quad.rel_tol = 1e-8;

  // frozen high-precision reference at |P| = 1.7
  const double rate_17 =
      total_rate_full(Eigen::Vector3d(0.0, 0.0, 1.7), amp, gas, particle, quad);
  CHECK(rate_17 == doctest::Approx(3.2905654436624430).epsilon(1e-6));

  // classical oracle n sigma <v_rel> at P = 0 and P = 1.7
  const double rate_0 = total_rate_full(Eigen::Vector3d::Zero(), amp, gas, particle, quad);
  CHECK(rate_0 == doctest::Approx(gas.number_density * sigma_tot *
                                  mean_relative_speed(0.0, gas))
                      .epsilon(0.005));
  CHECK(rate_17 == doctest::Approx(gas.number_density * sigma_tot *
                                   mean_relative_speed(1.7 / particle.mass, gas))
                       .epsilon(0.005));

  // isotropy: rotations of P do not change the rate
  const double base =
      total_rate_full(Eigen::Vector3d(0.0, 0.0, 1.3), amp, gas, particle, quad);
  for (const auto& axis : {Eigen::Vector3d(1.0, 0.0, 0.0), Eigen::Vector3d(0.57, -0.57, 0.59)}) {
    const Eigen::Vector3d rotated = 1.3 * axis.normalized();
    CHECK(total_rate_full(rotated, amp, gas, particle, quad) ==
          doctest::Approx(base).epsilon(1e-6));
  }

  // rate grows with |P| for a constant amplitude
  CHECK(rate_0 < base);
  CHECK(base < rate_17);
}

// unravel.cpp — thinning-based jump sampling and ensemble statistics
#include "qlbe/unravel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "qlbe/structure_factor.hpp"

namespace qlbe {

namespace {

constexpr long max_rejections = 200000;

void require(bool condition, const std::string& message) {
  if (!condition) throw std::invalid_argument(message);
}

// Gaussian energy factor of the structure factor: S(Q,E) = K/Q ·
// exp(−(β/8m)(2mE+Q²)²/Q²).  This is exactly the thinning acceptance
// probability against an envelope that bounds it by 1.
double gauss_energy_factor(double q_mag, double e, const GasModel& gas) {
  const double y = 2.0 * gas.mass * e + q_mag * q_mag;
  return std::exp(-gas.beta / (8.0 * gas.mass) * (y / q_mag) * (y / q_mag));
}

// Compensated (Kahan) accumulator so ensemble reductions are a fixed-order,
// scheduling-independent sum.
struct KahanSum {
  double sum = 0.0;
  double carry = 0.0;
  void add(double v) {
    const double y = v - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
};

std::vector<double> record_times(const TrajectoryConfig& cfg) {
  require(cfg.n_trajectories >= 2, "TrajectoryConfig: need at least 2 trajectories");
  require(std::isfinite(cfg.t_final) && cfg.t_final >= 0.0,
          "TrajectoryConfig: t_final must be >= 0");
  require(std::isfinite(cfg.record_interval) && cfg.record_interval > 0.0,
          "TrajectoryConfig: record_interval must be > 0");
  std::vector<double> times;
  const long n_full = static_cast<long>(std::floor(cfg.t_final / cfg.record_interval + 1e-9));
  times.reserve(static_cast<std::size_t>(n_full) + 2);
  for (long j = 0; j <= n_full; ++j) times.push_back(static_cast<double>(j) * cfg.record_interval);
  if (times.back() < cfg.t_final - 1e-9 * cfg.record_interval)
    times.push_back(cfg.t_final);
  else
    times.back() = cfg.t_final;
  return times;
}

// Shared reduction state for both ensemble modes.
struct Accumulators {
  int n_axes;
  std::vector<std::array<KahanSum, 3>> sum_p, sum_p2;  // per record time
  std::vector<KahanSum> sum_ke, sum_ke2;
  std::vector<long> counts;  // histogram

  Accumulators(std::size_t n_records, int axes, std::size_t n_bins)
      : n_axes(axes), sum_p(n_records), sum_p2(n_records), sum_ke(n_records),
        sum_ke2(n_records), counts(n_bins, 0) {}

  void record(std::size_t rec, const Eigen::Vector3d& p, double particle_mass) {
    for (int a = 0; a < n_axes; ++a) {
      sum_p[rec][a].add(p[a]);
      sum_p2[rec][a].add(p[a] * p[a]);
    }
    const double ke = p.squaredNorm() / (2.0 * particle_mass);
    sum_ke[rec].add(ke);
    sum_ke2[rec].add(ke * ke);
  }

  void bin(const MomentumGrid& grid, double p_axis0) {
    const long idx = std::lround(p_axis0 / grid.spacing) + grid.half_extent;
    const long clamped = std::clamp<long>(idx, 0, static_cast<long>(counts.size()) - 1);
    counts[static_cast<std::size_t>(clamped)]++;
  }

  EnsembleStats finalize(std::vector<double> times, long n, const MomentumGrid& hist_grid) {
    const std::size_t n_records = times.size();
    EnsembleStats stats;
    stats.mean_p = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_records), n_axes);
    stats.sem_mean_p = stats.mean_p;
    stats.mean_p_sq = stats.mean_p;
    stats.var_p = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_records));
    stats.ke_mean = stats.var_p;
    stats.sem_ke = stats.var_p;
    const double dn = static_cast<double>(n);
    for (std::size_t r = 0; r < n_records; ++r) {
      for (int a = 0; a < n_axes; ++a) {
        const double mean = sum_p[r][a].sum / dn;
        const double var =
            std::max(0.0, (sum_p2[r][a].sum - dn * mean * mean) / (dn - 1.0));
        stats.mean_p(static_cast<Eigen::Index>(r), a) = mean;
        stats.sem_mean_p(static_cast<Eigen::Index>(r), a) = std::sqrt(var / dn);
        stats.mean_p_sq(static_cast<Eigen::Index>(r), a) = sum_p2[r][a].sum / dn;
        stats.var_p[static_cast<Eigen::Index>(r)] += var;
      }
      const double ke = sum_ke[r].sum / dn;
      const double ke_var = std::max(0.0, (sum_ke2[r].sum - dn * ke * ke) / (dn - 1.0));
      stats.ke_mean[static_cast<Eigen::Index>(r)] = ke;
      stats.sem_ke[static_cast<Eigen::Index>(r)] = std::sqrt(ke_var / dn);
    }
    Eigen::ArrayXd weights(static_cast<Eigen::Index>(counts.size()));
    for (std::size_t k = 0; k < counts.size(); ++k)
      weights[static_cast<Eigen::Index>(k)] = static_cast<double>(counts[k]) / dn;
    stats.histogram = make_distribution(hist_grid, std::move(weights));
    stats.times = std::move(times);
    return stats;
  }
};

}  // namespace

double jump_rate_density(double q, double p, const GasModel& gas, const ParticleModel& particle,
                         const PotentialSpec& pot) {
  require(q != 0.0 && std::isfinite(q), "jump_rate_density: transfer must be nonzero");
  const double vsq = pot.vtilde_sq(std::abs(q));
  if (vsq == 0.0) return 0.0;
  const double e = energy_transfer(q, p, particle.mass);
  return collision_rate_prefactor(gas) * vsq * s_mb(SFPoint(std::abs(q), e), gas);
}

double jump_rate_density(const Eigen::Vector3d& q, const Eigen::Vector3d& p, const GasModel& gas,
                         const ParticleModel& particle, const PotentialSpec& pot) {
  const double q_mag = q.norm();
  require(q_mag != 0.0 && q.allFinite(), "jump_rate_density: transfer must be nonzero");
  const double vsq = pot.vtilde_sq(q_mag);
  if (vsq == 0.0) return 0.0;
  const double e = energy_transfer(q, p, particle.mass);
  return collision_rate_prefactor(gas) * vsq * s_mb(SFPoint(q_mag, e), gas);
}

double total_jump_rate(double p, const GasModel& gas, const ParticleModel& particle,
                       const PotentialSpec& pot, double q_min, double q_max,
                       const QuadratureConfig& quad) {
  validate(gas);
  validate(particle);
  validate(pot);
  require(std::isfinite(q_min) && q_min > 0.0,
          "total_jump_rate: q_min must be > 0 (the 1D rate diverges logarithmically)");
  require(std::isfinite(q_max) && q_max > q_min, "total_jump_rate: need q_max > q_min");
  if (pot.coupling == 0.0) return 0.0;
  return integrate_or_throw(
      [&](double q) {
        return jump_rate_density(q, p, gas, particle, pot) +
               jump_rate_density(-q, p, gas, particle, pot);
      },
      q_min, q_max, quad);
}

double total_jump_rate(const Eigen::Vector3d& p, const GasModel& gas,
                       const ParticleModel& particle, const PotentialSpec& pot, double q_max,
                       const QuadratureConfig& quad) {
  validate(gas);
  validate(particle);
  validate(pot);
  require(std::isfinite(q_max) && q_max > 0.0, "total_jump_rate: q_max must be > 0");
  require(p.allFinite(), "total_jump_rate: momentum must be finite");
  if (pot.coupling == 0.0) return 0.0;

  const double p_mag = p.norm();
  const double mass_ratio = gas.mass / particle.mass;
  const double c_beta = gas.beta / (8.0 * gas.mass);
  const double prefactor = collision_rate_prefactor(gas) * 2.0 * std::numbers::pi *
                           std::sqrt(gas.beta * gas.mass / (2.0 * std::numbers::pi));
  // Angular average of the Gaussian energy factor over the transfer direction
  // reduces to an erf difference: with A = Q²(1+m/M) and B = 2|P|Q m/M the
  // exponent is −c(A+Bu)²/Q² in u = cos θ.
  const auto radial = [&](double q) {
    if (q == 0.0) return 0.0;
    const double vsq = pot.vtilde_sq(q);
    if (vsq == 0.0) return 0.0;
    const double sqrt_c = std::sqrt(c_beta) / q;
    const double a_lin = q * q * (1.0 + mass_ratio);
    const double b_lin = 2.0 * p_mag * q * mass_ratio;
    double angular;
    if (sqrt_c * b_lin < 1e-8) {
      const double z = sqrt_c * a_lin;
      angular = 2.0 * std::exp(-z * z);
    } else {
      angular = 0.5 * std::sqrt(std::numbers::pi) / (sqrt_c * b_lin) *
                (std::erf(sqrt_c * (a_lin + b_lin)) - std::erf(sqrt_c * (a_lin - b_lin)));
    }
    return q * vsq * angular;  // Q²·(1/Q from S)·angular
  };
  return prefactor * integrate_or_throw(radial, 0.0, q_max, quad);
}

JumpSampler::JumpSampler(const GasModel& gas, const ParticleModel& particle,
                         const PotentialSpec& pot, int dimension, double q_min)
    : gas_(gas), particle_(particle), pot_(pot), dimension_(dimension) {
  validate(gas);
  validate(particle);
  validate(pot);
  require(dimension == 1 || dimension == 3, "JumpSampler: dimension must be 1 or 3");

  const double bound_k =
      collision_rate_prefactor(gas) * std::sqrt(gas.beta * gas.mass / (2.0 * std::numbers::pi));
  const double vsq_peak = pot.vtilde_sq(0.0);

  if (dimension == 3) {
    q_min_ = 0.0;
    if (pot.kind == PotentialSpec::Kind::gaussian) {
      envelope_rate_ = bound_k * vsq_peak * 2.0 * std::numbers::pi / (pot.sigma * pot.sigma);
    } else {
      envelope_rate_ = bound_k * vsq_peak * 2.0 * std::numbers::pi * pot.q_max * pot.q_max;
    }
    return;
  }

  require(std::isfinite(q_min) && q_min > 0.0,
          "JumpSampler: 1D sampling needs an infrared cutoff q_min > 0");
  q_min_ = q_min;
  if (pot.kind == PotentialSpec::Kind::gaussian) {
    q_split_ = std::max(1.0 / pot.sigma, q_min);
    const double low = (q_split_ > q_min) ? std::log(q_split_ / q_min) : 0.0;
    const double tail = 0.5 * std::sqrt(std::numbers::pi) / pot.sigma *
                        std::erfc(pot.sigma * q_split_) / q_split_;
    envelope_rate_ = 2.0 * bound_k * vsq_peak * (low + tail);
    piece_low_weight_ = low / (low + tail);
  } else {
    require(q_min < pot.q_max, "JumpSampler: q_min is at or above the potential cutoff");
    q_split_ = pot.q_max;
    envelope_rate_ = 2.0 * bound_k * vsq_peak * std::log(pot.q_max / q_min);
    piece_low_weight_ = 1.0;
  }
  if (pot.coupling == 0.0) envelope_rate_ = 0.0;
}

JumpSampler::Step JumpSampler::sample_step(const Eigen::Vector3d& p, Rng& rng) const {
  Step step;
  if (envelope_rate_ == 0.0) {
    step.waiting_time = std::numeric_limits<double>::infinity();
    return step;
  }

  for (;;) {
    step.waiting_time += rng.exponential(envelope_rate_);
    if (++step.candidates > max_rejections)
      throw std::runtime_error(
          "JumpSampler: " + std::to_string(max_rejections) +
          " consecutive rejections; the envelope no longer bounds the rate density");

    Eigen::Vector3d q = Eigen::Vector3d::Zero();
    double bound_factor = 1.0;  // envelope slack beyond the energy factor
    if (dimension_ == 3) {
      double q_mag;
      if (pot_.kind == PotentialSpec::Kind::gaussian) {
        q_mag = std::sqrt(-std::log1p(-rng.uniform())) / pot_.sigma;
      } else {
        q_mag = pot_.q_max * std::sqrt(rng.uniform());
      }
      const double w = 2.0 * rng.uniform() - 1.0;
      const double phi = 2.0 * std::numbers::pi * rng.uniform();
      const double s = std::sqrt(std::max(0.0, 1.0 - w * w));
      q = q_mag * Eigen::Vector3d(s * std::cos(phi), s * std::sin(phi), w);
      if (q_mag == 0.0) continue;  // measure-zero guard
    } else {
      const double sign = (rng.uniform() < 0.5) ? -1.0 : 1.0;
      double q_mag;
      if (rng.uniform() < piece_low_weight_) {
        q_mag = q_min_ * std::pow(q_split_ / q_min_, rng.uniform());
        if (pot_.kind == PotentialSpec::Kind::gaussian)
          bound_factor = std::exp(-pot_.sigma * pot_.sigma * q_mag * q_mag);
      } else {
        const double sd = 1.0 / (std::numbers::sqrt2 * pot_.sigma);
        do {
          q_mag = sd * std::abs(rng.normal());
        } while (q_mag < q_split_);
        bound_factor = q_split_ / q_mag;
      }
      q[0] = sign * q_mag;
    }

    const double e = (dimension_ == 3) ? energy_transfer(q, p, particle_.mass)
                                       : energy_transfer(q[0], p[0], particle_.mass);
    if (rng.uniform() < bound_factor * gauss_energy_factor(q.norm(), e, gas_)) {
      step.transfer = q;
      return step;
    }
  }
}

EnsembleStats run_ensemble(const TrajectoryConfig& cfg, const Eigen::Vector3d& p0,
                           const JumpSampler& sampler, const ParticleModel& particle,
                           const MomentumGrid& histogram_grid) {
  validate(particle);
  validate(histogram_grid);
  require(histogram_grid.dimension == 1, "run_ensemble: histogram lattice must be 1D");
  require(p0.allFinite(), "run_ensemble: initial momentum must be finite");
  const std::vector<double> times = record_times(cfg);

  const int n_axes = sampler.dimension();
  Accumulators acc(times.size(), n_axes, histogram_grid.size());
  Eigen::Vector3d start = p0;
  if (n_axes == 1) start = Eigen::Vector3d(p0[0], 0.0, 0.0);

  for (int i = 0; i < cfg.n_trajectories; ++i) {
    Rng rng(cfg.seed, static_cast<std::uint64_t>(i));
    Eigen::Vector3d p = start;
    double t = 0.0;
    std::size_t rec = 0;
    while (rec < times.size()) {
      const JumpSampler::Step step = sampler.sample_step(p, rng);
      const double t_next = t + step.waiting_time;
      while (rec < times.size() && times[rec] <= t_next) {
        acc.record(rec, p, particle.mass);
        ++rec;
      }
      if (rec == times.size()) break;
      p += step.transfer;
      t = t_next;
    }
    acc.bin(histogram_grid, p[0]);
  }
  return acc.finalize(times, cfg.n_trajectories, histogram_grid);
}

EnsembleStats run_ensemble(const TrajectoryConfig& cfg, const MomentumDistribution& initial,
                           const TransitionRates& rates, const ParticleModel& particle) {
  validate(particle);
  if (initial.grid.spacing != rates.grid.spacing ||
      initial.grid.half_extent != rates.grid.half_extent)
    throw std::invalid_argument("run_ensemble: distribution grid does not match rates grid");
  require(rates.grid.dimension == 1, "run_ensemble: lattice rates must be 1D");
  const std::vector<double> times = record_times(cfg);

  const int n_points = rates.grid.points_per_axis();
  const Eigen::Index n_channels = rates.w.rows();
  // Per-source cumulative channel weights for inverse-CDF draws; zero-weight
  // (off-lattice) channels are flat segments that are never selected.
  Eigen::MatrixXd cum(n_channels, n_points);
  for (int k = 0; k < n_points; ++k) {
    double run = 0.0;
    for (Eigen::Index jt = 0; jt < n_channels; ++jt) {
      run += rates.w(jt, k);
      cum(jt, k) = run;
    }
  }
  std::vector<double> initial_cdf(static_cast<std::size_t>(n_points));
  double run = 0.0;
  for (int k = 0; k < n_points; ++k) {
    run += initial.weights[k];
    initial_cdf[static_cast<std::size_t>(k)] = run;
  }

  Accumulators acc(times.size(), 1, rates.grid.size());
  for (int i = 0; i < cfg.n_trajectories; ++i) {
    Rng rng(cfg.seed, static_cast<std::uint64_t>(i));
    const double u0 = rng.uniform() * initial_cdf.back();
    int k = static_cast<int>(std::lower_bound(initial_cdf.begin(), initial_cdf.end(), u0) -
                             initial_cdf.begin());
    k = std::min(k, n_points - 1);

    double t = 0.0;
    std::size_t rec = 0;
    while (rec < times.size()) {
      const double rate = rates.total[k];
      const double t_next =
          (rate > 0.0) ? t + rng.exponential(rate) : std::numeric_limits<double>::infinity();
      const Eigen::Vector3d p(rates.grid.momentum(k), 0.0, 0.0);
      while (rec < times.size() && times[rec] <= t_next) {
        acc.record(rec, p, particle.mass);
        ++rec;
      }
      if (rec == times.size()) break;

      const double u = rng.uniform() * rate;
      const double* col = cum.data() + static_cast<std::ptrdiff_t>(k) * n_channels;
      Eigen::Index jt = std::lower_bound(col, col + n_channels, u) - col;
      if (jt == n_channels) --jt;
      while (jt > 0 && rates.w(jt, k) == 0.0) --jt;
      k += rates.transfers[static_cast<std::size_t>(jt)];
      t = t_next;
    }
    acc.bin(rates.grid, rates.grid.momentum(k));
  }
  return acc.finalize(times, cfg.n_trajectories, rates.grid);
}

}  // namespace qlbe

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "pbc/distributions.hpp"
#include "pbc/error.hpp"
#include "pbc/numeric.hpp"
#include "pbc/random.hpp"

namespace pbc {

struct ConstantRate {
  double lambda = 0.0;  // events per unit time
};

/*!
 * Piecewise-linear failure rate lambda(t) through tabulated knots.
 *
 * Outside the knot range the rate is held at the nearest end value. The
 * thinning bound defaults to the largest knot value, which is the exact
 * maximum of a piecewise-linear function.
 */
class RateTable {
 public:
  RateTable(std::vector<double> times, std::vector<double> rates,
            std::optional<double> upper_bound = std::nullopt)
      : times_(std::move(times)), rates_(std::move(rates)) {
    detail::require(!times_.empty(), "rate table: at least one knot required");
    detail::require(times_.size() == rates_.size(), "rate table: times and rates differ in length");
    for (std::size_t i = 0; i < times_.size(); ++i) {
      detail::require(std::isfinite(times_[i]) && std::isfinite(rates_[i]),
                      "rate table: knot " + std::to_string(i) + " is not finite");
      detail::require(rates_[i] >= 0.0,
                      "rate table: negative rate at knot " + std::to_string(i));
      if (i > 0) {
        detail::require(times_[i] > times_[i - 1],
                        "rate table: knot times must be strictly increasing");
      }
    }
    const double table_max = *std::max_element(rates_.begin(), rates_.end());
    upper_bound_ = upper_bound.value_or(table_max);
    detail::require(std::isfinite(upper_bound_) && upper_bound_ >= table_max,
                    "rate table: upper bound must be finite and >= every tabulated rate");
  }

  double rate_at(double t) const noexcept {
    if (t <= times_.front()) return rates_.front();
    if (t >= times_.back()) return rates_.back();
    const auto it = std::upper_bound(times_.begin(), times_.end(), t);
    const auto j = static_cast<std::size_t>(it - times_.begin());
    const double w = (t - times_[j - 1]) / (times_[j] - times_[j - 1]);
    return rates_[j - 1] + w * (rates_[j] - rates_[j - 1]);
  }

  /// Cumulated rate over [0, t], exact for the piecewise-linear table.
  double cumulative(double t) const noexcept {
    return integral(0.0, t);
  }

  /// Exact integral of the rate over [a, b], a <= b.
  double integral(double a, double b) const noexcept {
    if (b <= a) return 0.0;
    // Breakpoints inside (a, b) split the integrand into linear pieces.
    std::vector<double> cuts{a};
    for (double t : times_) {
      if (t > a && t < b) cuts.push_back(t);
    }
    cuts.push_back(b);
    KahanSum<double> acc;
    for (std::size_t i = 1; i < cuts.size(); ++i) {
      acc += 0.5 * (rate_at(cuts[i - 1]) + rate_at(cuts[i])) * (cuts[i] - cuts[i - 1]);
    }
    return acc.value();
  }

  double upper_bound() const noexcept { return upper_bound_; }
  std::span<const double> times() const noexcept { return times_; }
  std::span<const double> rates() const noexcept { return rates_; }

 private:
  std::vector<double> times_;
  std::vector<double> rates_;
  double upper_bound_ = 0.0;
};

using RateSpec = std::variant<ConstantRate, RateTable>;

inline double cumulative_rate(const RateSpec& rate, double t) {
  return std::visit(detail::Overloaded{
                        [&](const ConstantRate& c) { return c.lambda * t; },
                        [&](const RateTable& table) { return table.cumulative(t); },
                    },
                    rate);
}

/// Parameters of X_t = drift*t + sigma*W_t + sum of jumps up to N(t).
struct ProcessParams {
  double drift = 0.0;  // EUR per unit time
  double sigma = 0.0;  // EUR per sqrt(unit time)
  RateSpec rate = ConstantRate{0.0};
  double horizon = 1.0;

  void validate() const {
    detail::require(std::isfinite(drift), "process: drift must be finite");
    detail::require(std::isfinite(sigma) && sigma >= 0.0, "process: sigma must be >= 0");
    detail::require(std::isfinite(horizon) && horizon > 0.0, "process: horizon must be > 0");
    if (const auto* c = std::get_if<ConstantRate>(&rate)) {
      detail::require(std::isfinite(c->lambda) && c->lambda >= 0.0,
                      "process: rate lambda must be >= 0");
    }
  }
};

/// One realised trajectory, summarised by its jumps and terminal value.
struct Path {
  std::vector<double> jump_times;
  std::vector<double> jump_heights;
  double terminal_value = 0.0;
  bool includes_diffusion = false;
};

/*!
 * Jump times of a homogeneous Poisson process on (0, horizon].
 *
 * Inter-arrival times are -ln(1 - eps)/lambda with eps uniform on [0, 1).
 * A time equal to the horizon is kept. A zero increment (eps == 0) is redrawn
 * so the times stay strictly increasing.
 */
template <UniformSource Source>
std::vector<double> sample_jump_times(double lambda, double horizon, Source& source) {
  std::vector<double> times;
  if (lambda <= 0.0) return times;
  double t = 0.0;
  for (;;) {
    const double next = t - std::log1p(-source.uniform()) / lambda;
    if (next > horizon) break;
    if (next <= t) continue;
    times.push_back(next);
    t = next;
  }
  return times;
}

/// Inhomogeneous jump times by thinning a homogeneous process at the table's
/// upper bound: a candidate at t survives with probability rate(t)/bound.
template <UniformSource Source>
std::vector<double> sample_jump_times_inhomogeneous(const RateTable& rate, double horizon,
                                                    Source& source) {
  std::vector<double> times;
  const double bound = rate.upper_bound();
  if (bound <= 0.0) return times;
  double t = 0.0;
  for (;;) {
    const double next = t - std::log1p(-source.uniform()) / bound;
    if (next > horizon) break;
    if (next <= t) continue;
    t = next;
    if (source.uniform() * bound < rate.rate_at(t)) times.push_back(t);
  }
  return times;
}

template <UniformSource Source>
std::vector<double> sample_jump_times(const RateSpec& rate, double horizon, Source& source) {
  if (const auto* c = std::get_if<ConstantRate>(&rate)) {
    return sample_jump_times(c->lambda, horizon, source);
  }
  return sample_jump_times_inhomogeneous(std::get<RateTable>(rate), horizon, source);
}

/*!
 * Simulates one path and its terminal value X_T.
 *
 * Draw order: jump times, then one height per jump, then a single
 * N(0, sigma^2 T) diffusion increment when sigma > 0. Only the terminal value
 * is priced, so the Brownian part is not discretised.
 */
template <RandomSource Source>
Path simulate_path(const ProcessParams& params, const JumpDistribution& dist, Source& source) {
  Path path;
  path.jump_times = sample_jump_times(params.rate, params.horizon, source);
  path.jump_heights.reserve(path.jump_times.size());
  KahanSum<double> jumps;
  for (std::size_t i = 0; i < path.jump_times.size(); ++i) {
    const double height = sample(dist, source);
    path.jump_heights.push_back(height);
    jumps += height;
  }
  double value = jumps.value();
  if (params.drift != 0.0) value += params.drift * params.horizon;
  if (params.sigma > 0.0) {
    value += params.sigma * std::sqrt(params.horizon) * source.normal();
    path.includes_diffusion = true;
  }
  path.terminal_value = value;
  return path;
}

/// Jump sum minus its compensator lambda*T*E[J]; a martingale in T.
inline double compensate(const Path& path, double lambda, double horizon, double mean_jump) {
  return kahan_total(path.jump_heights) - lambda * horizon * mean_jump;
}

/// Variant for any rate specification, using the cumulated rate Lambda(T).
inline double compensate(const Path& path, const RateSpec& rate, double horizon,
                         double mean_jump) {
  return kahan_total(path.jump_heights) - cumulative_rate(rate, horizon) * mean_jump;
}

struct PathPoint {
  double t = 0.0;
  double value = 0.0;
};

/*!
 * Step-sampled trajectory for plotting.
 *
 * The value is reported on a uniform grid of `n_steps` intervals, with the
 * Brownian part accumulated step by step, and each jump contributes a pair of
 * points (left limit, post-jump value) so the output draws as a step function.
 */
template <RandomSource Source>
std::vector<PathPoint> sample_step_path(const ProcessParams& params, const JumpDistribution& dist,
                                        std::size_t n_steps, Source& source) {
  detail::require(n_steps >= 1, "step path: need at least one step");
  const auto times = sample_jump_times(params.rate, params.horizon, source);
  std::vector<double> heights;
  heights.reserve(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) heights.push_back(sample(dist, source));

  const double dt = params.horizon / static_cast<double>(n_steps);
  const double step_sd = params.sigma * std::sqrt(dt);

  std::vector<PathPoint> points;
  points.reserve(n_steps + 1 + 2 * times.size());
  points.push_back({0.0, 0.0});
  double continuous = 0.0;  // drift + diffusion at the last grid time
  double jump_total = 0.0;
  std::size_t next_jump = 0;
  double last_grid_t = 0.0;
  for (std::size_t step = 1; step <= n_steps; ++step) {
    const double grid_t = step == n_steps ? params.horizon : dt * static_cast<double>(step);
    const double increment = params.sigma > 0.0 ? step_sd * source.normal() : 0.0;
    while (next_jump < times.size() && times[next_jump] <= grid_t) {
      const double tj = times[next_jump];
      // Linear interpolation of the continuous part between grid points.
      const double frac = (tj - last_grid_t) / (grid_t - last_grid_t);
      const double base = continuous + (params.drift * (tj - last_grid_t) + increment * frac);
      points.push_back({tj, base + jump_total});
      jump_total += heights[next_jump];
      points.push_back({tj, base + jump_total});
      ++next_jump;
    }
    continuous += params.drift * (grid_t - last_grid_t) + increment;
    last_grid_t = grid_t;
    points.push_back({grid_t, continuous + jump_total});
  }
  return points;
}

}  // namespace pbc

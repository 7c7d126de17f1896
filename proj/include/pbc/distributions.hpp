#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "pbc/error.hpp"
#include "pbc/numeric.hpp"
#include "pbc/overloaded.hpp"
#include "pbc/random.hpp"
#include "pbc/records.hpp"

namespace pbc {

struct GaussianJump {
  double mu = 0.0;
  double sd = 0.0;
};

struct ConstantJump {
  double value = 0.0;
};

/// ln(J) ~ Weibull(shape, scale), i.e. J = exp(W).
struct WeibullLogJump {
  double shape = 1.0;
  double scale = 1.0;
};

/// Resampling with replacement from observed jump heights.
struct EmpiricalJump {
  std::vector<double> samples;
};

/*!
 * Law of a single cost jump.
 *
 * Construct through the named factories, which validate parameters; the
 * object is immutable afterwards.
 */
class JumpDistribution {
 public:
  using Law = std::variant<GaussianJump, ConstantJump, WeibullLogJump, EmpiricalJump>;

  static JumpDistribution gaussian(double mu, double sd) {
    detail::require(std::isfinite(mu) && std::isfinite(sd), "gaussian: parameters must be finite");
    detail::require(sd >= 0.0, "gaussian: sd must be >= 0");
    return JumpDistribution(GaussianJump{mu, sd});
  }

  static JumpDistribution constant(double value) {
    detail::require(std::isfinite(value), "constant: value must be finite");
    return JumpDistribution(ConstantJump{value});
  }

  static JumpDistribution weibull_log(double shape, double scale) {
    detail::require(std::isfinite(shape) && shape > 0.0, "weibull-log: shape must be > 0");
    detail::require(std::isfinite(scale) && scale > 0.0, "weibull-log: scale must be > 0");
    return JumpDistribution(WeibullLogJump{shape, scale});
  }

  static JumpDistribution empirical(std::vector<double> samples) {
    detail::require(!samples.empty(), "empirical: sample list must not be empty");
    for (std::size_t i = 0; i < samples.size(); ++i) {
      detail::require(std::isfinite(samples[i]) && samples[i] > 0.0,
                      "empirical: sample " + std::to_string(i) + " must be > 0");
    }
    return JumpDistribution(EmpiricalJump{std::move(samples)});
  }

  const Law& law() const noexcept { return law_; }

  template <class T>
  bool is() const noexcept {
    return std::holds_alternative<T>(law_);
  }

  std::string_view name() const noexcept {
    switch (law_.index()) {
      case 0: return "gaussian";
      case 1: return "constant";
      case 2: return "weibull-log";
      default: return "empirical";
    }
  }

 private:
  explicit JumpDistribution(Law law) : law_(std::move(law)) {}

  Law law_;
};

namespace detail {

inline double weibull_sample(double shape, double scale, double u) {
  return scale * std::pow(-std::log1p(-u), 1.0 / shape);
}

/*!
 * E[exp(power * W)] for W ~ Weibull(shape, scale).
 *
 * Substituting u = (w/scale)^shape gives the integral of
 * exp(power*scale*u^(1/shape) - u) over [0, inf), which is finite iff
 * shape > 1, or shape == 1 and power*scale < 1.
 */
inline double weibull_exp_moment(double shape, double scale, double power) {
  const double reach = power * scale;
  if (shape < 1.0 || (shape == 1.0 && reach >= 1.0)) {
    throw DivergenceError("weibull-log: E[J^" + std::to_string(static_cast<int>(power)) +
                          "] is infinite for shape=" + std::to_string(shape) +
                          ", scale=" + std::to_string(scale));
  }
  if (shape == 1.0) return 1.0 / (1.0 - reach);

  const double inv_shape = 1.0 / shape;
  // Bounded in log space by the peak value so large scales do not overflow.
  const double peak_u = std::pow(reach * inv_shape, shape / (shape - 1.0));
  const double log_peak = reach * std::pow(peak_u, inv_shape) - peak_u;
  auto integrand = [&](double u) {
    return std::exp(reach * std::pow(u, inv_shape) - u - log_peak);
  };

  // tanh-sinh copes with the u^(1/shape) endpoint singularity at 0.
  constexpr double kTolerance = 1e-8;
  double err_left = 0.0;
  double err_right = 0.0;
  double left = 0.0;
  double right = 0.0;
  try {
    if (peak_u > 0.0) {
      boost::math::quadrature::tanh_sinh<double> left_rule;
      left = left_rule.integrate(integrand, 0.0, peak_u, kTolerance * 1e-2, &err_left);
    }
    using TailRule = boost::math::quadrature::gauss_kronrod<double, 61>;
    right = TailRule::integrate(integrand, peak_u, std::numeric_limits<double>::infinity(), 20,
                                kTolerance * 1e-2, &err_right);
  } catch (const std::exception& e) {
    throw ConvergenceError(std::string("weibull-log moment quadrature failed: ") + e.what());
  }
  const double scaled = left + right;
  if (!(scaled > 0.0) || !std::isfinite(scaled) ||
      err_left + err_right > kTolerance * scaled) {
    throw ConvergenceError("weibull-log moment quadrature did not reach relative tolerance 1e-8");
  }
  const double result = std::exp(log_peak) * scaled;
  if (!std::isfinite(result)) {
    throw DivergenceError("weibull-log: moment overflows double precision");
  }
  return result;
}

}  // namespace detail

/// Draws one jump height.
template <RandomSource Source>
double sample(const JumpDistribution& dist, Source& source) {
  return std::visit(
      detail::Overloaded{
          [&](const GaussianJump& g) { return g.mu + g.sd * source.normal(); },
          [](const ConstantJump& c) { return c.value; },
          [&](const WeibullLogJump& w) {
            return std::exp(detail::weibull_sample(w.shape, w.scale, source.uniform()));
          },
          [&](const EmpiricalJump& e) {
            const auto n = e.samples.size();
            auto index = static_cast<std::size_t>(source.uniform() * static_cast<double>(n));
            return e.samples[std::min(index, n - 1)];
          },
      },
      dist.law());
}

inline double mean(const JumpDistribution& dist) {
  return std::visit(
      detail::Overloaded{
          [](const GaussianJump& g) { return g.mu; },
          [](const ConstantJump& c) { return c.value; },
          [](const WeibullLogJump& w) { return detail::weibull_exp_moment(w.shape, w.scale, 1.0); },
          [](const EmpiricalJump& e) {
            return kahan_total(e.samples) / static_cast<double>(e.samples.size());
          },
      },
      dist.law());
}

/// Variance; population (1/n) convention for the empirical law.
inline double variance(const JumpDistribution& dist) {
  return std::visit(
      detail::Overloaded{
          [](const GaussianJump& g) { return g.sd * g.sd; },
          [](const ConstantJump&) { return 0.0; },
          [](const WeibullLogJump& w) {
            const double m1 = detail::weibull_exp_moment(w.shape, w.scale, 1.0);
            const double m2 = detail::weibull_exp_moment(w.shape, w.scale, 2.0);
            return std::max(0.0, m2 - m1 * m1);
          },
          [](const EmpiricalJump& e) {
            const double n = static_cast<double>(e.samples.size());
            const double mu = kahan_total(e.samples) / n;
            KahanSum<double> acc;
            for (double x : e.samples) acc += (x - mu) * (x - mu);
            return acc.value() / n;
          },
      },
      dist.law());
}

/// E[J^2], the per-event input to the compound Poisson variance.
inline double second_moment(const JumpDistribution& dist) {
  const double m = mean(dist);
  return variance(dist) + m * m;
}

/// Result of a maximum-likelihood Weibull fit to ln(cost).
struct WeibullFit {
  double shape = 0.0;
  double scale = 0.0;
  double log_likelihood = 0.0;
  std::size_t n_samples = 0;
  double ks_statistic = 0.0;
  int iterations = 0;

  JumpDistribution distribution() const { return JumpDistribution::weibull_log(shape, scale); }
};

inline double weibull_cdf(double x, double shape, double scale) {
  if (x <= 0.0) return 0.0;
  return -std::expm1(-std::pow(x / scale, shape));
}

/// Kolmogorov-Smirnov distance between a sorted sample and a continuous CDF.
template <class Cdf>
double ks_statistic(std::span<const double> sorted, Cdf cdf) {
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return d;
}

namespace detail {

/// Weibull MLE on strictly positive data via the profile equation in shape.
inline WeibullFit fit_weibull(std::vector<double> x) {
  const std::size_t n = x.size();
  const double nd = static_cast<double>(n);
  const double x_max = *std::max_element(x.begin(), x.end());

  std::vector<double> log_x(n);
  RunningMoments log_moments;
  for (std::size_t i = 0; i < n; ++i) {
    log_x[i] = std::log(x[i]);
    log_moments.add(log_x[i]);
  }
  const double mean_log = log_moments.mean;
  const double log_max = std::log(x_max);

  // g(k) = sum x^k ln x / sum x^k - 1/k - mean(ln x); increasing in k.
  // Powers are taken relative to x_max to stay finite for large k.
  struct Eval {
    double residual;
    double slope;
  };
  auto evaluate = [&](double k) {
    KahanSum<double> s0, s1, s2;
    for (double lx : log_x) {
      const double w = std::exp(k * (lx - log_max));
      s0 += w;
      s1 += w * lx;
      s2 += w * lx * lx;
    }
    const double a = s1.value() / s0.value();
    const double b = s2.value() / s0.value();
    return Eval{a - 1.0 / k - mean_log, (b - a * a) + 1.0 / (k * k)};
  };

  constexpr double kResidualTolerance = 1e-10;
  constexpr int kMaxIterations = 200;

  const double sd_log = std::sqrt(log_moments.population_variance());
  double k = std::clamp(1.2825 / std::max(sd_log, 1e-300), 1e-3, 1e6);
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  int iterations = 0;
  Eval e = evaluate(k);
  while (std::abs(e.residual) > kResidualTolerance) {
    if (++iterations > kMaxIterations) {
      throw ConvergenceError("weibull fit: shape equation did not converge in 200 iterations (residual " +
                             std::to_string(e.residual) + ")");
    }
    if (e.residual > 0.0) {
      hi = k;
    } else {
      lo = k;
    }
    double next = k - e.residual / e.slope;
    const bool outside = !(next > lo && next < hi) || !std::isfinite(next);
    if (outside) next = std::isfinite(hi) ? 0.5 * (lo + hi) : 2.0 * k;
    k = next;
    e = evaluate(k);
  }

  KahanSum<double> power_sum;
  for (double lx : log_x) power_sum += std::exp(k * (lx - log_max));
  // scale = (mean x^k)^(1/k), computed relative to x_max.
  const double scale = x_max * std::pow(power_sum.value() / nd, 1.0 / k);

  KahanSum<double> ll;
  for (double lx : log_x) {
    const double z = std::exp(k * (lx - std::log(scale)));
    ll += std::log(k / scale) + (k - 1.0) * (lx - std::log(scale)) - z;
  }

  std::sort(x.begin(), x.end());
  WeibullFit fit;
  fit.shape = k;
  fit.scale = scale;
  fit.log_likelihood = ll.value();
  fit.n_samples = n;
  fit.ks_statistic = ks_statistic(x, [&](double v) { return weibull_cdf(v, k, scale); });
  fit.iterations = iterations;
  return fit;
}

}  // namespace detail

/*!
 * Maximum-likelihood Weibull fit of ln(cost).
 *
 * Every cost must exceed 1 EUR so that ln(cost) lies on the Weibull support;
 * the first offending index is reported. At least 10 costs are required.
 */
inline WeibullFit fit_weibull_log(std::span<const double> costs) {
  detail::require(costs.size() >= 10, "weibull fit: need at least 10 costs, got " +
                                          std::to_string(costs.size()));
  std::vector<double> log_costs(costs.size());
  for (std::size_t i = 0; i < costs.size(); ++i) {
    if (!(std::isfinite(costs[i]) && costs[i] > 1.0)) {
      throw PreconditionError("weibull fit: record " + std::to_string(i) +
                              " has cost " + std::to_string(costs[i]) +
                              " EUR; costs must be > 1 EUR");
    }
    log_costs[i] = std::log(costs[i]);
  }
  const auto [lo, hi] = std::minmax_element(log_costs.begin(), log_costs.end());
  detail::require(*lo != *hi, "weibull fit: degenerate sample (zero variance)");
  return detail::fit_weibull(std::move(log_costs));
}

inline WeibullFit fit_weibull_log(std::span<const CostRecord> records) {
  std::vector<double> costs;
  costs.reserve(records.size());
  for (const auto& r : records) costs.push_back(r.cost_eur);
  return fit_weibull_log(std::span<const double>(costs));
}

/// Empirical jump law over the cost column; duplicates are kept.
inline JumpDistribution empirical_from_records(std::span<const CostRecord> records) {
  detail::require(!records.empty(), "empirical: record list is empty");
  std::vector<double> costs;
  costs.reserve(records.size());
  for (const auto& r : records) costs.push_back(r.cost_eur);
  return JumpDistribution::empirical(std::move(costs));
}

}  // namespace pbc

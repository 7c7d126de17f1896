#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "pbc/distributions.hpp"
#include "pbc/error.hpp"
#include "pbc/numeric.hpp"

// Semi-analytic compound Poisson law: a Poisson(lambda*T) mixture of m-fold
// jump convolutions, with the zero-jump atom e^(-lambda*T) kept separate.
// Only Gaussian and Constant jumps have closed-form convolutions.

namespace pbc {

struct SeriesControl {
  std::size_t max_terms = 200;
  double tail_tolerance = 1e-12;  // bound on the neglected Poisson mass

  void validate() const {
    detail::require(max_terms >= 1, "series: max_terms must be >= 1");
    detail::require(tail_tolerance > 0.0 && tail_tolerance < 1.0,
                    "series: tail_tolerance must lie in (0, 1)");
  }
};

/// Series ran out of terms before the neglected mass fell below tolerance.
class TruncationError : public ConvergenceError {
 public:
  TruncationError(std::size_t terms, double achieved)
      : ConvergenceError("series: " + std::to_string(terms) +
                         " terms leave Poisson tail mass " + std::to_string(achieved) +
                         " above tolerance"),
        achieved_(achieved) {}

  double achieved_bound() const noexcept { return achieved_; }

 private:
  double achieved_;
};

inline double poisson_log_pmf(std::size_t k, double mean) {
  detail::require(std::isfinite(mean) && mean >= 0.0, "poisson pmf: mean must be >= 0");
  const double kd = static_cast<double>(k);
  if (mean == 0.0) return k == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  return kd * std::log(mean) - mean - std::lgamma(kd + 1.0);
}

/// e^(-mean) mean^k / k!, evaluated in log space.
inline double poisson_pmf(std::size_t k, double mean) {
  return std::exp(poisson_log_pmf(k, mean));
}

namespace detail {

/// P(N > m) for N ~ Poisson(mean), accurate far into the tail.
inline double poisson_survival(std::size_t m, double mean) {
  if (mean == 0.0) return 0.0;
  return boost::math::gamma_p(static_cast<double>(m) + 1.0, mean);
}

/*!
 * Visits Poisson weights w_m for m = 0, 1, ... until m >= mean and the
 * neglected mass P(N > m) is below tolerance. Returns the number of terms.
 *
 * A payoff bounded by `slope * m + offset` on the m-jump term must also have
 * its neglected part, at most slope * mean * P(N >= m) + offset * P(N > m),
 * below tolerance * (slope * mean + offset + 1).
 */
template <class Term>
std::size_t poisson_series(double mean, const SeriesControl& ctrl, Term term, double slope = 0.0,
                           double offset = 0.0) {
  ctrl.validate();
  const double budget = ctrl.tail_tolerance * (slope * mean + offset + 1.0);
  double tail = 1.0;  // P(N > m - 1)
  for (std::size_t m = 0; m < ctrl.max_terms; ++m) {
    term(m, poisson_pmf(m, mean));
    const double at_least = tail;
    tail = poisson_survival(m, mean);
    if (static_cast<double>(m) < mean || tail >= ctrl.tail_tolerance) continue;
    if (slope * mean * at_least + offset * tail < budget) return m + 1;
  }
  throw TruncationError(ctrl.max_terms, tail);
}

/// E[max(Z - K, 0)] for Z ~ N(a, b^2), b >= 0.
inline double normal_call(double a, double b, double strike) {
  const double d = a - strike;
  if (b == 0.0) return std::max(d, 0.0);
  const double z = d / b;
  return d * normal_cdf(z) + b * normal_pdf(z);
}

}  // namespace detail

/*!
 * E[max(X_T - K, 0)] for compound Poisson X_T with N(mu, sd^2) jumps.
 *
 * Sum over m of Pois(m; lambda*T) times the normal call mean of
 * N(m*mu, m*sd^2); the m = 0 term is max(-K, 0).
 */
inline double gaussian_series_premium(double mu, double sd, double lambda, double horizon,
                                      double strike, const SeriesControl& ctrl = {}) {
  detail::require(sd >= 0.0, "series premium: sd must be >= 0");
  const double mean_count = lambda * horizon;
  detail::require(mean_count >= 0.0, "series premium: lambda*T must be >= 0");
  KahanSum<double> acc;
  detail::poisson_series(mean_count, ctrl, [&](std::size_t m, double w) {
    const double md = static_cast<double>(m);
    acc += w * detail::normal_call(md * mu, std::sqrt(md) * sd, strike);
  }, std::abs(mu) + sd, std::abs(strike));
  return acc.value();
}

/// E[max(K - X_T, 0)] by the same series; used for parity checks.
inline double gaussian_series_put(double mu, double sd, double lambda, double horizon,
                                  double strike, const SeriesControl& ctrl = {}) {
  detail::require(sd >= 0.0, "series put: sd must be >= 0");
  const double mean_count = lambda * horizon;
  detail::require(mean_count >= 0.0, "series put: lambda*T must be >= 0");
  KahanSum<double> acc;
  detail::poisson_series(mean_count, ctrl, [&](std::size_t m, double w) {
    const double md = static_cast<double>(m);
    // max(K - Z, 0) = max((-Z) - (-K), 0)
    acc += w * detail::normal_call(-md * mu, std::sqrt(md) * sd, -strike);
  }, std::abs(mu) + sd, std::abs(strike));
  return acc.value();
}

/// Premium for any jump law with a closed-form convolution.
inline double series_premium(const JumpDistribution& dist, double lambda, double horizon,
                             double strike, const SeriesControl& ctrl = {}) {
  if (const auto* g = std::get_if<GaussianJump>(&dist.law())) {
    return gaussian_series_premium(g->mu, g->sd, lambda, horizon, strike, ctrl);
  }
  if (const auto* c = std::get_if<ConstantJump>(&dist.law())) {
    return gaussian_series_premium(c->value, 0.0, lambda, horizon, strike, ctrl);
  }
  throw UnsupportedError("series oracle: no closed-form convolution for " +
                         std::string(dist.name()) + " jumps");
}

/// One mixture component: weight * N(mean, sd^2); sd == 0 is an atom.
struct MixtureTerm {
  std::size_t jumps = 0;
  double weight = 0.0;
  double mean = 0.0;
  double sd = 0.0;
};

struct Atom {
  double x = 0.0;
  double mass = 0.0;
};

/// Truncated compound Poisson law of X_T.
struct CompoundLaw {
  double zero_atom = 0.0;  // P(N_T = 0)
  std::vector<MixtureTerm> terms;  // m >= 1

  /// Density of the continuous part (atoms excluded).
  double density(double x) const {
    KahanSum<double> acc;
    for (const auto& t : terms) {
      if (t.sd > 0.0) acc += t.weight * normal_pdf((x - t.mean) / t.sd) / t.sd;
    }
    return acc.value();
  }

  /// All point masses, the zero-jump atom first.
  std::vector<Atom> atoms() const {
    std::vector<Atom> out{{0.0, zero_atom}};
    for (const auto& t : terms) {
      if (t.sd == 0.0) out.push_back({t.mean, t.weight});
    }
    return out;
  }

  double continuous_mass() const {
    KahanSum<double> acc;
    for (const auto& t : terms) {
      if (t.sd > 0.0) acc += t.weight;
    }
    return acc.value();
  }
};

inline CompoundLaw compound_law(const JumpDistribution& dist, double lambda, double horizon,
                                const SeriesControl& ctrl = {}) {
  double mu = 0.0;
  double sd = 0.0;
  if (const auto* g = std::get_if<GaussianJump>(&dist.law())) {
    mu = g->mu;
    sd = g->sd;
  } else if (const auto* c = std::get_if<ConstantJump>(&dist.law())) {
    mu = c->value;
  } else {
    throw UnsupportedError("compound density: no closed-form convolution for " +
                           std::string(dist.name()) + " jumps");
  }
  const double mean_count = lambda * horizon;
  detail::require(mean_count >= 0.0, "compound density: lambda*T must be >= 0");
  CompoundLaw law;
  detail::poisson_series(mean_count, ctrl, [&](std::size_t m, double w) {
    if (m == 0) {
      law.zero_atom = w;
      return;
    }
    const double md = static_cast<double>(m);
    law.terms.push_back({m, w, md * mu, std::sqrt(md) * sd});
  });
  return law;
}

/// Density of the continuous part of X_T at x (per EUR).
inline double compound_density(double x, const JumpDistribution& dist, double lambda,
                               double horizon, const SeriesControl& ctrl = {}) {
  return compound_law(dist, lambda, horizon, ctrl).density(x);
}

}  // namespace pbc

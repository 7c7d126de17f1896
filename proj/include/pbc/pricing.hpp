#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "pbc/distributions.hpp"
#include "pbc/error.hpp"
#include "pbc/numeric.hpp"
#include "pbc/process.hpp"
#include "pbc/random.hpp"

namespace pbc {

enum class StrikeMode {
  ExpectedTotal,   // K = lambda*T*E[J]
  SingleJumpMean,  // K = E[J]
};

/// E[X_T] of a compound Poisson process: lambda * T * E[J].
inline double expected_cost(double lambda, double horizon, double mean_jump) {
  detail::require(lambda >= 0.0, "expected cost: lambda must be >= 0");
  detail::require(horizon > 0.0, "expected cost: horizon must be > 0");
  if (lambda == 0.0) return 0.0;
  return lambda * horizon * mean_jump;
}

/// E[X_T] including drift and a time-varying rate: gamma*T + Lambda(T)*E[J].
inline double expected_terminal_cost(const ProcessParams& params, double mean_jump) {
  const double jumps = cumulative_rate(params.rate, params.horizon);
  return params.drift * params.horizon + (jumps == 0.0 ? 0.0 : jumps * mean_jump);
}

inline double strike_price(StrikeMode mode, double lambda, double horizon, double mean_jump) {
  switch (mode) {
    case StrikeMode::SingleJumpMean: return mean_jump;
    case StrikeMode::ExpectedTotal:
    default: return expected_cost(lambda, horizon, mean_jump);
  }
}

/// P = C + E[X].
inline double total_price(double premium, double expected) {
  detail::require(std::isfinite(premium) && std::isfinite(expected),
                  "total price: inputs must be finite");
  return premium + expected;
}

/// e^(-gamma*tau) * premium; gamma is the depreciation rate of the product price.
inline double discounted_premium(double premium, double gamma, double tau) {
  detail::require(tau >= 0.0, "discount: tau must be >= 0");
  if (gamma == 0.0 || tau == 0.0) return premium;
  return std::exp(-gamma * tau) * premium;
}

/// Safety-loading principle (1 + theta) * E[X].
inline double actuarial_loaded_premium(double expected_claims, double theta) {
  detail::require(std::isfinite(theta) && theta >= 0.0, "loaded premium: theta must be >= 0");
  return (1.0 + theta) * expected_claims;
}

/// Variance principle E[X] + alpha * Var[X].
inline double actuarial_variance_premium(double expected_claims, double variance_claims,
                                         double alpha) {
  detail::require(std::isfinite(alpha) && alpha > 0.0, "variance premium: alpha must be > 0");
  detail::require(variance_claims >= 0.0, "variance premium: variance must be >= 0");
  return expected_claims + alpha * variance_claims;
}

/// Var[X_T] of a compound Poisson process: lambda*T*E[J^2].
inline double compound_poisson_variance(double lambda, double horizon, double second_moment_jump) {
  return lambda * horizon * second_moment_jump;
}

inline unsigned resolve_thread_count(unsigned requested) noexcept {
  if (requested != 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

/// Paths per reduction chunk. Part of the numerical contract: changing it
/// changes the last bits of every estimate.
inline constexpr std::size_t kPathsPerChunk = 4096;

/*!
 * Evaluates `chunk_fn(begin, end)` over fixed-size chunks of [0, n) on up to
 * `threads` workers and returns the per-chunk results in chunk order.
 *
 * Chunk boundaries never depend on the worker count, so a deterministic
 * reduction over the returned vector is bit-stable across thread counts.
 */
template <class ChunkFn>
auto for_each_chunk(std::size_t n, unsigned threads, ChunkFn chunk_fn) {
  using Result = decltype(chunk_fn(std::size_t{}, std::size_t{}));
  const std::size_t n_chunks = (n + kPathsPerChunk - 1) / kPathsPerChunk;
  std::vector<Result> results(n_chunks);
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(resolve_thread_count(threads), n_chunks));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= n_chunks) return;
      try {
        const std::size_t begin = c * kPathsPerChunk;
        results[c] = chunk_fn(begin, std::min(n, begin + kPathsPerChunk));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(n_chunks);
      }
    }
  };

  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

struct MonteCarloOptions {
  std::size_t n_paths = 100000;
  std::uint64_t master_seed = 1;
  unsigned threads = 0;  // 0 = hardware concurrency
  bool check_parity = true;
};

/// Monte Carlo estimate of E[max(X_T - K, 0)] with diagnostics.
struct PremiumEstimate {
  double premium = 0.0;
  double std_error = 0.0;
  double put_mean = 0.0;  // E[max(K - X_T, 0)] on the same paths
  double terminal_mean = 0.0;
  double terminal_std_error = 0.0;
  double strike = 0.0;
  std::size_t n_paths = 0;
  // call - put - (mean X - K); zero up to rounding.
  double parity_gap = 0.0;
};

namespace detail {

struct PayoffMoments {
  RunningMoments call;
  RunningMoments put;
  RunningMoments terminal;

  static PayoffMoments merge(const PayoffMoments& a, const PayoffMoments& b) {
    return {RunningMoments::merge(a.call, b.call), RunningMoments::merge(a.put, b.put),
            RunningMoments::merge(a.terminal, b.terminal)};
  }
};

inline double parity_scale(const PremiumEstimate& e) {
  return std::max({std::abs(e.terminal_mean), std::abs(e.strike), e.premium, e.put_mean,
                   std::numeric_limits<double>::min()});
}

}  // namespace detail

inline constexpr double kParityRelativeTolerance = 1e-9;

/*!
 * Risk premium as the path average of max(X_T - K, 0).
 *
 * Path i draws from RandomStream(master_seed, i). The standard error uses the
 * unbiased sample variance. With `check_parity` the call/put parity on the
 * simulated sample is verified to 1e-9 relative and InvariantError raised on
 * violation.
 */
inline PremiumEstimate mc_risk_premium(const ProcessParams& params, const JumpDistribution& dist,
                                       double strike, const MonteCarloOptions& options) {
  params.validate();
  detail::require(options.n_paths >= 2, "risk premium: need at least 2 paths");
  detail::require(std::isfinite(strike), "risk premium: strike must be finite");

  const auto chunks = for_each_chunk(
      options.n_paths, options.threads, [&](std::size_t begin, std::size_t end) {
        detail::PayoffMoments m;
        for (std::size_t i = begin; i < end; ++i) {
          RandomStream stream(options.master_seed, i);
          const double x = simulate_path(params, dist, stream).terminal_value;
          m.call.add(std::max(x - strike, 0.0));
          m.put.add(std::max(strike - x, 0.0));
          m.terminal.add(x);
        }
        return m;
      });
  const auto total = pairwise_reduce(std::span<const detail::PayoffMoments>(chunks),
                                     detail::PayoffMoments::merge);

  PremiumEstimate out;
  out.n_paths = options.n_paths;
  out.strike = strike;
  out.premium = total.call.mean;
  out.std_error = std::sqrt(total.call.sample_variance() / total.call.count);
  out.put_mean = total.put.mean;
  out.terminal_mean = total.terminal.mean;
  out.terminal_std_error = std::sqrt(total.terminal.sample_variance() / total.terminal.count);
  out.parity_gap = (out.premium - out.put_mean) - (out.terminal_mean - strike);

  if (options.check_parity &&
      std::abs(out.parity_gap) > kParityRelativeTolerance * detail::parity_scale(out)) {
    throw InvariantError("risk premium: call/put parity violated (gap " +
                         std::to_string(out.parity_gap) + ")");
  }
  return out;
}

/// Sample mean and standard error of the compensated jump sum.
struct CompensatedEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n_paths = 0;
};

inline CompensatedEstimate mc_compensated_mean(const ProcessParams& params,
                                               const JumpDistribution& dist,
                                               const MonteCarloOptions& options) {
  params.validate();
  detail::require(options.n_paths >= 2, "compensated mean: need at least 2 paths");
  const double mean_jump = mean(dist);
  const auto chunks = for_each_chunk(
      options.n_paths, options.threads, [&](std::size_t begin, std::size_t end) {
        RunningMoments m;
        for (std::size_t i = begin; i < end; ++i) {
          RandomStream stream(options.master_seed, i);
          const Path path = simulate_path(params, dist, stream);
          m.add(compensate(path, params.rate, params.horizon, mean_jump));
        }
        return m;
      });
  const auto total = pairwise_reduce(std::span<const RunningMoments>(chunks), RunningMoments::merge);
  return {total.mean, std::sqrt(total.sample_variance() / total.count), options.n_paths};
}

struct Discount {
  double rate = 0.0;  // depreciation gamma per unit time
  double tau = 0.0;
};

struct PricingOptions {
  StrikeMode strike_mode = StrikeMode::ExpectedTotal;
  MonteCarloOptions monte_carlo;
  std::optional<Discount> discount;
};

struct PricingResult {
  double premium_C = 0.0;
  double expected_cost = 0.0;
  double strike_K = 0.0;
  double total_price_P = 0.0;
  double std_error = 0.0;
  std::size_t n_paths = 0;
  std::uint64_t master_seed = 0;
  bool discount_applied = false;
  double mc_terminal_mean = 0.0;
  double mc_terminal_std_error = 0.0;
  double parity_gap = 0.0;

  friend bool operator==(const PricingResult&, const PricingResult&) = default;
};

/*!
 * Prices a contract: strike, expected cost, Monte Carlo premium and total
 * price P = C + E[X_T].
 *
 * With a discount, the premium and the total price are both multiplied by
 * e^(-rate*tau); the expected cost is reported undiscounted.
 */
inline PricingResult price_contract(const ProcessParams& params, const JumpDistribution& dist,
                                    const PricingOptions& options) {
  params.validate();
  const double mean_jump = mean(dist);
  const double expected = expected_terminal_cost(params, mean_jump);
  const double strike =
      options.strike_mode == StrikeMode::SingleJumpMean ? mean_jump : expected;

  const auto estimate = mc_risk_premium(params, dist, strike, options.monte_carlo);

  PricingResult result;
  result.expected_cost = expected;
  result.strike_K = strike;
  result.n_paths = estimate.n_paths;
  result.master_seed = options.monte_carlo.master_seed;
  result.mc_terminal_mean = estimate.terminal_mean;
  result.mc_terminal_std_error = estimate.terminal_std_error;
  result.parity_gap = estimate.parity_gap;
  if (options.discount) {
    const auto& d = *options.discount;
    result.discount_applied = true;
    result.premium_C = discounted_premium(estimate.premium, d.rate, d.tau);
    result.std_error = discounted_premium(estimate.std_error, d.rate, d.tau);
    result.total_price_P = discounted_premium(total_price(estimate.premium, expected), d.rate, d.tau);
  } else {
    result.premium_C = estimate.premium;
    result.std_error = estimate.std_error;
    result.total_price_P = total_price(estimate.premium, expected);
  }
  return result;
}

}  // namespace pbc

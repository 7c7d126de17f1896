#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

namespace pbc {

/*!
 * Compensated summation (Neumaier's variant of Kahan).
 *
 * Unlike plain Kahan it stays accurate when an addend is larger in magnitude
 * than the running sum, which happens when series terms peak mid-way.
 */
template <typename Value = double>
class KahanSum {
 public:
  KahanSum& operator+=(Value value) noexcept {
    const Value t = sum_ + value;
    if (std::abs(sum_) >= std::abs(value)) {
      compensation_ += (sum_ - t) + value;
    } else {
      compensation_ += (value - t) + sum_;
    }
    sum_ = t;
    return *this;
  }

  Value value() const noexcept { return sum_ + compensation_; }

 private:
  Value sum_{0};
  Value compensation_{0};
};

template <typename Range>
double kahan_total(const Range& values) {
  KahanSum<double> acc;
  for (double v : values) acc += v;
  return acc.value();
}

/// Running mean and sum of squared deviations; mergeable in a fixed order.
struct RunningMoments {
  double count = 0.0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) noexcept {
    count += 1.0;
    const double delta = x - mean;
    mean += delta / count;
    m2 += delta * (x - mean);
  }

  /// Chan et al. pairwise combination.
  static RunningMoments merge(const RunningMoments& a, const RunningMoments& b) noexcept {
    if (a.count == 0.0) return b;
    if (b.count == 0.0) return a;
    RunningMoments out;
    out.count = a.count + b.count;
    const double delta = b.mean - a.mean;
    out.mean = a.mean + delta * (b.count / out.count);
    out.m2 = a.m2 + b.m2 + delta * delta * (a.count * b.count / out.count);
    return out;
  }

  /// Unbiased (n - 1) variance.
  double sample_variance() const noexcept {
    return count > 1.0 ? m2 / (count - 1.0) : 0.0;
  }
  double population_variance() const noexcept {
    return count > 0.0 ? m2 / count : 0.0;
  }
};

/// Reduces `items` with `combine` over a balanced binary tree whose shape
/// depends only on the number of items.
template <typename T, typename Combine>
T pairwise_reduce(std::span<const T> items, Combine combine) {
  if (items.empty()) return T{};
  if (items.size() == 1) return items.front();
  const std::size_t half = items.size() / 2;
  return combine(pairwise_reduce(items.first(half), combine),
                 pairwise_reduce(items.subspan(half), combine));
}

inline double normal_pdf(double z) noexcept {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

inline double normal_cdf(double z) noexcept {
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

}  // namespace pbc

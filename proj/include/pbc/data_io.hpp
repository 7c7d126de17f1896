#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pbc/distributions.hpp"
#include "pbc/error.hpp"
#include "pbc/numeric.hpp"
#include "pbc/process.hpp"
#include "pbc/random.hpp"
#include "pbc/records.hpp"
#include "pbc/table.hpp"

namespace pbc {

inline constexpr std::string_view kCostCsvHeader = "unit_id,event_time_days,cost_eur";
inline constexpr std::string_view kRateCsvHeader = "t,lambda";
inline constexpr double kDaysPerYear = 365.0;

/// Smallest accepted repair cost; keeps ln(cost) on the Weibull support.
inline constexpr double kMinCostEur = 1.0;

/*!
 * Reads field-service records from CSV with the exact header
 * `unit_id,event_time_days,cost_eur`.
 *
 * Row order is preserved; blank lines are skipped. Any malformed row raises a
 * ParseError naming the file line and column.
 */
inline std::vector<CostRecord> parse_cost_csv(std::istream& in) {
  std::string line;
  if (!detail::read_line(in, line)) throw ParseError(1, "", "empty input, missing header");
  if (!line.empty() && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  if (line != kCostCsvHeader) {
    throw ParseError(1, "", "expected header '" + std::string(kCostCsvHeader) + "', got '" +
                                line + "'");
  }
  std::vector<CostRecord> records;
  std::size_t line_no = 1;
  while (detail::read_line(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = detail::split_csv_line(line);
    if (fields.size() != 3) {
      throw ParseError(line_no, "", "expected 3 fields, got " + std::to_string(fields.size()));
    }
    CostRecord r;
    r.unit_id = std::move(fields[0].text);
    if (r.unit_id.empty()) throw ParseError(line_no, "unit_id", "empty unit id");
    if (!detail::parse_double(fields[1].text, r.event_time_days)) {
      throw ParseError(line_no, "event_time_days", "malformed number '" + fields[1].text + "'");
    }
    if (r.event_time_days < 0.0) {
      throw ParseError(line_no, "event_time_days", "negative event time");
    }
    if (!detail::parse_double(fields[2].text, r.cost_eur)) {
      throw ParseError(line_no, "cost_eur", "malformed number '" + fields[2].text + "'");
    }
    if (r.cost_eur <= 0.0) throw ParseError(line_no, "cost_eur", "cost must be positive");
    if (r.cost_eur < kMinCostEur) throw ParseError(line_no, "cost_eur", "cost below 1 EUR");
    records.push_back(std::move(r));
  }
  return records;
}

inline std::vector<CostRecord> parse_cost_csv(const std::filesystem::path& path) {
  auto in = detail::open_for_read(path);
  return parse_cost_csv(in);
}

inline void write_cost_csv(std::span<const CostRecord> records, std::ostream& out) {
  out << kCostCsvHeader << '\n';
  for (const auto& r : records) {
    out << detail::csv_quote_if_needed(r.unit_id) << ',' << format_double(r.event_time_days) << ','
        << format_double(r.cost_eur) << '\n';
  }
  if (!out) throw IoError("write failed while emitting cost records");
}

inline void write_cost_csv(std::span<const CostRecord> records, const std::filesystem::path& path) {
  auto out = detail::open_for_write(path);
  write_cost_csv(records, out);
}

/// Piecewise-linear rate table from CSV with header `t,lambda`.
inline RateTable parse_rate_csv(std::istream& in) {
  std::string line;
  if (!detail::read_line(in, line) || line != kRateCsvHeader) {
    throw ParseError(1, "", "expected header '" + std::string(kRateCsvHeader) + "'");
  }
  std::vector<double> times;
  std::vector<double> rates;
  std::size_t line_no = 1;
  while (detail::read_line(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = detail::split_csv_line(line);
    double t = 0.0;
    double rate = 0.0;
    if (fields.size() != 2) throw ParseError(line_no, "", "expected 2 fields");
    if (!detail::parse_double(fields[0].text, t)) throw ParseError(line_no, "t", "malformed number");
    if (!detail::parse_double(fields[1].text, rate)) {
      throw ParseError(line_no, "lambda", "malformed number");
    }
    if (rate < 0.0) throw ParseError(line_no, "lambda", "negative rate");
    times.push_back(t);
    rates.push_back(rate);
  }
  if (times.empty()) throw ParseError(line_no, "", "rate table has no rows");
  return RateTable(std::move(times), std::move(rates));
}

struct Quantile {
  double probability = 0.0;
  double value = 0.0;
};

struct FleetSummary {
  std::size_t n_units = 0;
  double observation_window_days = 0.0;
  std::size_t n_events = 0;
  double lambda_hat = 0.0;  // events per unit-year
  double mean_cost = 0.0;
  std::vector<Quantile> cost_quantiles;
  bool no_events = false;  // warning: estimate rests on an empty record list
};

/// Linear-interpolation quantile of sorted data (R type 7).
inline double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) return 0.0;
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline FleetSummary estimate_failure_rate(std::span<const CostRecord> records, std::size_t n_units,
                                          double window_days) {
  detail::require(n_units >= 1, "failure rate: n_units must be >= 1");
  detail::require(std::isfinite(window_days) && window_days > 0.0,
                  "failure rate: window must be > 0 days");
  FleetSummary s;
  s.n_units = n_units;
  s.observation_window_days = window_days;
  s.n_events = records.size();
  const double unit_years = static_cast<double>(n_units) * window_days / kDaysPerYear;
  s.lambda_hat = static_cast<double>(s.n_events) / unit_years;
  s.no_events = records.empty();

  std::vector<double> costs;
  costs.reserve(records.size());
  for (const auto& r : records) costs.push_back(r.cost_eur);
  if (!costs.empty()) s.mean_cost = kahan_total(costs) / static_cast<double>(costs.size());
  std::sort(costs.begin(), costs.end());
  for (double p : {0.05, 0.25, 0.5, 0.75, 0.95}) {
    s.cost_quantiles.push_back({p, quantile_sorted(costs, p)});
  }
  return s;
}

/*!
 * Synthetic fleet: each unit fails as a Poisson process with `lambda_per_year`
 * over `window_days`, costs drawn from `dist`. Unit u uses
 * RandomStream(master_seed, u); records are ordered by unit, then time.
 *
 * A cost draw below 1 EUR is an error, since such a record could not be read
 * back or fitted.
 */
inline std::vector<CostRecord> generate_synthetic_fleet(double lambda_per_year,
                                                        const JumpDistribution& dist,
                                                        std::size_t n_units, double window_days,
                                                        std::uint64_t master_seed) {
  detail::require(std::isfinite(lambda_per_year) && lambda_per_year >= 0.0,
                  "synthetic fleet: lambda must be >= 0");
  detail::require(n_units >= 1, "synthetic fleet: n_units must be >= 1");
  detail::require(std::isfinite(window_days) && window_days > 0.0,
                  "synthetic fleet: window must be > 0 days");
  std::vector<CostRecord> records;
  const double per_day = lambda_per_year / kDaysPerYear;
  const auto width = std::to_string(n_units).size();
  for (std::size_t u = 0; u < n_units; ++u) {
    RandomStream stream(master_seed, u);
    std::string id = std::to_string(u + 1);
    id = "U" + std::string(width - std::min(width, id.size()), '0') + id;
    for (double t : sample_jump_times(per_day, window_days, stream)) {
      const double cost = sample(dist, stream);
      if (!(cost >= kMinCostEur)) {
        throw PreconditionError("synthetic fleet: drew cost " + format_double(cost) +
                                " EUR below the 1 EUR floor; choose a law supported above 1 EUR");
      }
      records.push_back({id, t, cost});
    }
  }
  return records;
}

}  // namespace pbc

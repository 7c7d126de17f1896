// Synthetic fleet round trip: generate service records, write and re-read the
// CSV, estimate the failure rate, fit the cost law and price the next year.

#include <filesystem>
#include <iostream>

#include "pbc/pbc.hpp"

int main(int argc, char** argv) {
  const std::filesystem::path csv =
      argc > 1 ? argv[1] : std::filesystem::temp_directory_path() / "pbc_fleet.csv";

  constexpr std::size_t units = 2000;
  constexpr double window_days = 730.0;
  const auto records =
      pbc::generate_synthetic_fleet(1.2, pbc::JumpDistribution::weibull_log(2.0, 2.2), units,
                                    window_days, 11);
  pbc::write_cost_csv(records, csv);

  const auto loaded = pbc::parse_cost_csv(csv);
  const auto summary = pbc::estimate_failure_rate(loaded, units, window_days);
  const auto fit = pbc::fit_weibull_log(std::span<const pbc::CostRecord>(loaded));
  std::cout << loaded.size() << " records from " << csv << '\n'
            << "lambda hat " << summary.lambda_hat << " per unit-year\n"
            << "fit shape " << fit.shape << ", scale " << fit.scale << ", KS " << fit.ks_statistic
            << '\n';

  pbc::ProcessParams params;
  params.rate = pbc::ConstantRate{summary.lambda_hat};
  params.horizon = 1.0;
  pbc::PricingOptions options;
  options.monte_carlo.n_paths = 100000;
  const auto priced = pbc::price_contract(params, fit.distribution(), options);
  std::cout << "per-unit price for one year: P = " << priced.total_price_P
            << " EUR (C = " << priced.premium_C << ", E[X] = " << priced.expected_cost << ")\n";
}

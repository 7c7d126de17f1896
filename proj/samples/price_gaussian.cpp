// Prices a one-year contract with Gaussian repair costs and checks the Monte
// Carlo premium against the series oracle.

#include <iostream>

#include "pbc/pbc.hpp"

int main() {
  pbc::ProcessParams params;
  params.rate = pbc::ConstantRate{2.0};
  params.horizon = 1.0;
  const auto dist = pbc::JumpDistribution::gaussian(10.0, 3.0);

  pbc::PricingOptions options;
  options.monte_carlo.n_paths = 200000;
  options.monte_carlo.master_seed = 7;
  const auto result = pbc::price_contract(params, dist, options);

  const double series = pbc::series_premium(dist, 2.0, 1.0, result.strike_K);
  std::cout << "expected cost E[X] " << result.expected_cost << '\n'
            << "risk premium C     " << result.premium_C << " (se " << result.std_error << ")\n"
            << "series premium     " << series << '\n'
            << "total price P      " << result.total_price_P << '\n';
}

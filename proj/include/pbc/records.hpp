#pragma once

#include <string>

namespace pbc {

/// One field-service event of a fleet unit.
struct CostRecord {
  std::string unit_id;
  double event_time_days = 0.0;  // since fleet start
  double cost_eur = 0.0;

  friend bool operator==(const CostRecord&, const CostRecord&) = default;
};

}  // namespace pbc

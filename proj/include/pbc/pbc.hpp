#pragma once

#include "pbc/data_io.hpp"
#include "pbc/distributions.hpp"
#include "pbc/error.hpp"
#include "pbc/oracle.hpp"
#include "pbc/pricing.hpp"
#include "pbc/process.hpp"
#include "pbc/random.hpp"
#include "pbc/records.hpp"
#include "pbc/table.hpp"

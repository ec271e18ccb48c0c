#pragma once

#include <cstddef>

namespace ddrgs {

/// Worker threads used by the tile-parallel passes. Results never depend on
/// this value: every reduction runs in a fixed order.
void set_num_threads(int n);
int num_threads();

}  // namespace ddrgs

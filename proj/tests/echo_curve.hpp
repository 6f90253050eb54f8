#pragma once

#include <cmath>
#include <cstdint>

namespace seqft::testing {

/// Values chosen to stress decimal round-tripping: thirds, subnormal-adjacent
/// magnitudes and one-ulp offsets.
inline double echo_value(std::int64_t step, std::size_t index) {
  const double base = 1.0 / (3.0 + static_cast<double>(index)) + 0.1 * static_cast<double>(step % 7);
  return index % 3 == 0 ? std::nextafter(base, 2.0) : index % 3 == 1 ? base * 1e-3 + 1e-300 : base;
}

}  // namespace seqft::testing

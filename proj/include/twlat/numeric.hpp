#pragma once

#include <cmath>
#include <string>

#include "twlat/errors.hpp"
#include "twlat/lattice.hpp"

namespace twlat {

/// pow with fast paths for the exponents that dominate this workload.
inline double pow_ext(double x, double e) {
  if (e == 1.0) return x;
  if (e == 2.0) return x * x;
  if (e == 0.0) return 1.0;
  return std::pow(x, e);
}

/// Compensated accumulator; keeps long leaf sums accurate to a few ulp.
struct KahanSum {
  double sum = 0.0;
  double carry = 0.0;
  void add(double x) {
    const double y = x - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
  double value() const { return sum; }
};

inline void ensure_finite(double x, const char* what, CellId cell = -1) {
  if (!std::isfinite(x)) {
    std::string msg = std::string("non-finite value in ") + what;
    if (cell >= 0) msg += " at cell " + std::to_string(cell);
    throw NonFinite(msg);
  }
}

}  // namespace twlat

#pragma once

#include <map>
#include <vector>

#include "twlat/lattice.hpp"

namespace twlat::operators {

/// A norm together with the space it was taken in.
struct NormValue {
  enum class Kind { Lp, MixedLpLq };
  double value = 0.0;
  Kind kind = Kind::Lp;
};

/// Indexed family {g_I}, each entry supported on its cell. Materializes one
/// function per cell; meant for small instances and comparison notes.
struct FunctionFamily {
  std::map<CellId, SimpleFunction> entries;
};

/// Per-cell mu-integrals and mu-averages of f. Cells with mu(I) = 0 get
/// average 0 (and are skipped wherever averages are aggregated).
struct CellAverages {
  std::vector<double> integral;
  std::vector<double> average;
};
CellAverages mu_averages(const Instance& instance, const SimpleFunction& f);

/// (mu(I)^{-1} \int_I f dmu) 1_I; the zero function when mu(I) = 0.
SimpleFunction average(const Instance& instance, const SimpleFunction& f, CellId I);

/// Scalar operator: sum over all cells of alpha_I E_I f, evaluated leafwise.
SimpleFunction apply_scalar(const Instance& instance, const SimpleFunction& f);

/// One entry of the vector operator: alpha_I E_I f.
SimpleFunction vector_entry(const Instance& instance, const SimpleFunction& f, CellId I);

/// The full indexed family {alpha_I E_I f}.
FunctionFamily vector_family(const Instance& instance, const SimpleFunction& f);

/// Martingale maximal function: leafwise sup of |E_I f| over containing cells.
SimpleFunction maximal(const Instance& instance, const SimpleFunction& f);

/// (sum over leaves of |f|^exponent mass)^{1/exponent}; exponent >= 1.
NormValue lp_norm(const Instance& instance, const SimpleFunction& f, double exponent,
                  WeightSelector weight);

/// Leafwise l^q aggregation of the vector operator raised to q:
/// S(l) = sum over cells I containing l of alpha_I^q |E_I f(l)|^q.
std::vector<double> talpha_lq_powers(const Instance& instance, const SimpleFunction& f);

/// p-th root of the left side of the mixed-norm inequality:
/// ( \int [S(l)]^{p/q} dnu )^{1/p}.
NormValue mixed_norm_of_talpha(const Instance& instance, const SimpleFunction& f);

/// Scalar operator with coefficients alpha_I^q applied to h >= 0; the
/// reduction target for q < p. Throws on negative input.
SimpleFunction reduced_scalar_value(const Instance& instance, const SimpleFunction& h);

}  // namespace twlat::operators

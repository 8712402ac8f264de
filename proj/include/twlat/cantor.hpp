#pragma once

#include <optional>
#include <string>
#include <vector>

#include "twlat/lattice.hpp"

namespace twlat::cantor {

/// Parameters of the tri-adic counterexample construction on [0,1):
/// Lebesgue mu, Cantor measure nu, alpha = (2/3)^{n/p} on the components of
/// C_n, and the gap function with decay exponent r.
struct CantorConfig {
  int depth = 4;  // N: number of subdivision generations
  double p = 2.0;
  double q = 1.0;
  double r = 0.7;

  /// Validated construction window: q < p and 1/p < r < 1/q.
  static CantorConfig make(int depth, double p, double q, double r);

  /// Boundary studies may place r at or beyond 1/q (still q < p, r > 1/p);
  /// there the divergence of the lower bound is expected to die out.
  static CantorConfig make_boundary(int depth, double p, double q, double r);
};

/// Materialized instance together with the gap function f.
struct CantorInstance {
  Instance instance;
  SimpleFunction gap_function;
};

/// Materializes the depth-N tri-adic instance (3^N leaves). Depths above 13
/// are refused; use the closed-form operations instead.
CantorInstance build_cantor_instance(const CantorConfig& config);

/// Exact truncated testing value at a component of C_n:
/// ( [sum_{k=n}^{N} (2/3)^{qk/p}]^{p/q} 2^{-n} / 3^{-n} )^{1/p}.
double closed_form_c1(const CantorConfig& config, int n);

/// Max over generations; attained at n = 0.
double closed_form_c1_max(const CantorConfig& config);

/// ||f||_{L^p(mu)} of the gap function, by exact gap counting: the scale-3^{-n}
/// maximal gaps number 2^{n-1}, one per component of C_{n-1}.
double closed_form_f_norm(const CantorConfig& config);

/// Upper bound on the ||f||_p^p mass beyond depth N (integral tail of the
/// p r series); certifies how converged the truncated norm is.
double closed_form_f_norm_tail(const CantorConfig& config);

/// Explicit lower bound for the mixed-norm left side with all constants
/// tracked: [ sum_{k=0}^{N-1} ((1/3)(3/2)^{1/p} (k+1)^{-r})^q ]^{p/q}.
double closed_form_lhs_lower(const CantorConfig& config);

struct CantorRow {
  int depth = 0;
  double c1 = 0.0;
  double f_norm = 0.0;
  double lhs_lower = 0.0;
  std::optional<double> lhs_exact;  // mixed_norm(f)^p when materialized
  double ratio_to_prev = 0.0;       // lhs_lower ratio to the previous row; 0 on the first
};

/// Closed-form sweep over depths; instances are materialized (filling
/// lhs_exact) up to materialize_cap leaves-wise feasible depths.
std::vector<CantorRow> divergence_sweep(double p, double q, double r,
                                        const std::vector<int>& depths,
                                        int materialize_cap = 10, bool boundary = false);

/// CSV with columns depth, c1, f_norm, lhs_lower, lhs_exact, ratio_to_prev.
std::string sweep_csv(const std::vector<CantorRow>& rows);

/// Least-squares slope of log(lhs_lower) against log(depth) over the last
/// four rows; the observed growth exponent.
double fit_growth_exponent(const std::vector<CantorRow>& rows);

}  // namespace twlat::cantor

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "twlat/lattice.hpp"

namespace twlat::testing {

/// Per-cell and global testing constants.
///
/// Conventions, matching the operator's mu(I)=0 convention:
///  - the C1 integrand sums alpha_I^q over mu-positive cells only, so that
///    necessity against mixed_norm_of_talpha(1_J) is exact; cells silenced
///    this way while carrying alpha_I > 0 are listed in zero_mu_alpha_cells;
///  - a cell J with mu(J) = 0 whose raw integrand (all cells counted) is
///    positive on a nu-positive leaf gets value +infinity ("testing fails
///    at J") and is listed in infinite_at; with zero raw integrand it gets 0;
///  - C2 is reported in the scale where the right side of its defining
///    inequality reads (C2^q)^{(p/q)'} nu(J), so C1 and C2 both scale
///    linearly in alpha; the raw integrals and the printed-exponent reading
///    (c2_paper_reading, exponent p') are kept alongside.
struct TestingReport {
  std::map<CellId, double> c1_per_cell;
  std::map<CellId, double> c2_per_cell;      // empty when p <= q
  std::map<CellId, double> c2_raw_integral;  // raw per-cell integrals (p > q)

  double c1 = 0.0;          // max of c1_per_cell (may be +infinity)
  double c1_finite = 0.0;   // max over cells with a finite value
  CellId c1_witness = -1;
  double c2 = 0.0;
  double c2_finite = 0.0;
  CellId c2_witness = -1;
  double c2_paper_reading = 0.0;

  // Theorem-1 constants of the reduced scalar problem (coefficients alpha^q,
  // exponent p/q); populated only when q < p.
  bool has_scalar = false;
  double scalar_c1 = 0.0;
  double scalar_c2 = 0.0;

  std::vector<CellId> infinite_at;
  std::vector<CellId> zero_mu_alpha_cells;
};

/// Smallest constant making the C1 testing inequality hold at J.
double testing_c1(const Instance& instance, CellId J);

/// Smallest constant (linear-in-alpha scale) for the C2 inequality at J.
/// Requires p > q.
double testing_c2(const Instance& instance, CellId J);

/// All testing constants in one sweep over the lattice.
TestingReport testing_report(const Instance& instance);

/// Theorem-1 constants for the reduced scalar problem. Requires q < p.
std::pair<double, double> scalar_testing(const Instance& instance);

/// Result of a norm computation; `value` is always the ratio achieved by
/// `witness`, recomputable from the public operations.
struct NormEstimate {
  enum class Method { ExactQuadratic, Ascent };
  double value = 0.0;
  Method method = Method::Ascent;
  SimpleFunction witness;
  int restarts = 0;
  bool converged = true;
};

/// Exact operator norm at p = q = 2 via the generalized eigenproblem of the
/// quadratic form sum_I alpha_I^2 nu(I) (E_I f)^2 against the mu inner
/// product, restricted to mu-positive leaves.
NormEstimate norm_exact_p2q2(const Instance& instance);

struct AscentOptions {
  int random_restarts = 32;
  double tol = 1e-10;
  int max_iterations = 10000;
  std::uint64_t seed = 0x5eed2a11u;
};

/// Projected-gradient ascent of mixed_norm(f)/||f||_{L^p(mu)} over f >= 0.
/// The restart set always contains the indicator of every mu-positive cell
/// (so the result dominates max_J testing_c1(J)) plus seeded random starts.
/// Always a lower bound on the true norm.
NormEstimate norm_ascent(const Instance& instance, const AscentOptions& options = {});
NormEstimate norm_ascent(const Instance& instance, int random_restarts, double tol);

/// Structured comparison of a norm estimate against the testing constants.
struct Verdict {
  double ratio = 0.0;  // estimate / (C1 + C2), 0 when the denominator is 0
  std::optional<double> certified_upper;  // K(p)^{1/p} C1 for p <= q
  bool counterexample_flag = false;       // C1 finite but estimate/C1 > threshold
  double threshold = 0.0;
  std::string label;  // "bounded" or "C1 alone insufficient"
  bool zero_mu_alpha_flag = false;
};

Verdict verdict(const Instance& instance, const TestingReport& report,
                const NormEstimate& estimate, double threshold = 4.0);

/// Constant K(p) = 2^{2p} (p')^p / (2^p - 1) certifying
/// mixed_norm(f)^p <= K(p) C1^p ||f||_p^p for p <= q.
double chain_constant(double p);

}  // namespace twlat::testing

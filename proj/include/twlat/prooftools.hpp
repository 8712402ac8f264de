#pragma once

#include <map>
#include <string>
#include <vector>

#include "twlat/lattice.hpp"

namespace twlat::prooftools {

/// Dyadic level sets E_k = { maximal(f) > 2^k } together with the maximal
/// cells decomposing them.
///
/// Thresholds are recorded for k in [k_lo, k_hi]: k_hi is the largest k with
/// E_k nonempty and k_lo the point below which E_k has stabilized to
/// { maximal(f) > 0 }; E_k = E_{k_lo} for every k < k_lo and empty above k_hi.
/// A cell belongs to E_k when every one of its leaves does.
struct LevelSetDecomposition {
  int k_lo = 0;
  int k_hi = -1;  // k_hi < k_lo encodes the empty decomposition
  std::vector<int> thresholds;
  std::vector<std::vector<int>> level_leaves;      // E_k as leaf positions, per threshold
  std::vector<std::vector<CellId>> maximal_cells;  // E*_k, per threshold
  std::map<CellId, int> cell_class;                // I -> k with I in E_k \ E_{k+1}

  bool empty() const { return k_hi < k_lo; }
  /// E_k for arbitrary k, applying the stabilization rule.
  std::vector<int> leaves_at(int k) const;
};

LevelSetDecomposition level_sets(const Instance& instance, const SimpleFunction& f);

/// One inequality of the stopping-time chain, recorded with both sides.
struct ChainStep {
  std::string label;
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

/// Numerical certificate of the five-step chain bounding mixed_norm(f)^p by
/// K(p) C1^p ||f||_p^p for 1 < p <= q. Every sum is finite and exact; no
/// truncated tails enter the recorded inequalities.
struct ChainCertificate {
  std::vector<ChainStep> steps;
  double final_constant = 0.0;  // 2^{2p} (p')^p / (2^p - 1)
  double c1 = 0.0;              // testing constant used in the fourth step
  double step1_alt = 0.0;       // first step's rhs integrated over E_k \ E_{k+1}
  double maximal_norm = 0.0;    // ||maximal(f)||_p, the Doob intermediate
  double lhs_total = 0.0;       // mixed_norm(f)^p
  double rhs_total = 0.0;       // final_constant * c1^p * ||f||_p^p
  bool holds = false;
};

ChainCertificate chain_certificate(const Instance& instance, const SimpleFunction& f);

struct DoobCheck {
  double lhs = 0.0;  // ||maximal(f)||_{L^p(mu)}
  double rhs = 0.0;  // p' ||f||_{L^p(mu)}
  bool holds = false;
};

DoobCheck doob_check(const Instance& instance, const SimpleFunction& f);

/// Majorant produced by the Rubio de Francia iteration
/// F = [ sum_k (2 (p/q)')^{-k} M^{(k)}(f^q) ]^{1/q}, truncated when the next
/// term's L^{p/q}(mu) norm drops below tol * ||f^q||_{L^{p/q}(mu)}.
struct MajorantResult {
  SimpleFunction F;
  int truncation_k = 0;       // last series index included
  double norm_ratio = 0.0;    // ||F||_p / ||f||_p, at most 2^{1/q} up to rounding
  double a1_constant = 0.0;   // max_I E_I(F^q) / (min_I F^q + tail_bound); <= 2 (p/q)'
  double a1_raw = 0.0;        // same ratio without the truncation slack
  double tail_bound = 0.0;    // pointwise bound on the dropped series tail
  double measured_m_ratio = 0.0;  // ||M(f^q)||_{p/q} / ||f^q||_{p/q}, logged vs the Doob bound
};

MajorantResult rubio_majorant(const Instance& instance, const SimpleFunction& f,
                              double tol = 1e-12);

/// Both directions of the reduction to the scalar problem:
///   A = int [sum alpha^q (E_I f)^q] g dnu <= B = int [sum alpha^q E_I(f^q)] g dnu
/// and B <= 2 (p/q)' A(F) + slack with the Rubio majorant F.
struct ReductionCheck {
  double holder_lhs = 0.0;   // A
  double holder_rhs = 0.0;   // B
  double rubio_bound = 0.0;  // 2 (p/q)' A(F)
  double slack = 0.0;        // certified truncation slack added to the bound
  bool holds_pair = false;
};

ReductionCheck reduction_compare(const Instance& instance, const SimpleFunction& f,
                                 const SimpleFunction& g);

}  // namespace twlat::prooftools

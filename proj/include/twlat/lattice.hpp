#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "twlat/errors.hpp"

namespace twlat {

/// Public, serialization-stable cell identifier (a nonnegative integer).
using CellId = std::int64_t;

/// Exponent pair (p, q) with p > 1 and q >= 1.
struct ExponentPair {
  double p = 2.0;
  double q = 2.0;

  ExponentPair() = default;
  ExponentPair(double p_, double q_);

  /// Hoelder conjugate p' = p/(p-1).
  double p_conj() const { return p / (p - 1.0); }
  /// Reduction exponent s = p/q.
  double s() const { return p / q; }
  /// Conjugate (p/q)'. Only defined when p > q.
  double s_conj() const;
};

/// A finite tree of measurable cells organized in generations.
///
/// Generation 0 holds the roots; the final generation holds the leaves
/// (the atoms every computation is expressed in). A cell may have a
/// single child occupying the same set in the next generation; such
/// generation copies are distinct nodes and are counted separately in
/// lattice-indexed sums.
///
/// Immutable after construction; all queries are const and safe to call
/// concurrently.
class Lattice {
 public:
  /// Builds the tree from generation lists and a parent map (child -> parent).
  /// Structure that parses but breaks the lattice axioms is accepted here and
  /// reported by validate().
  Lattice(std::vector<std::vector<CellId>> generations,
          const std::map<CellId, CellId>& parent);

  /// Full b-ary tree: generations 0..depth, ids assigned generation-major.
  static Lattice full_tree(int branching, int depth);

  int cell_count() const { return static_cast<int>(id_.size()); }
  int leaf_count() const { return static_cast<int>(leaf_cell_.size()); }
  int generation_count() const { return static_cast<int>(generations_.size()); }

  const std::vector<std::vector<CellId>>& generations() const { return generations_; }

  CellId id_of(int cell) const { return id_[cell]; }
  /// Dense index of a public id; throws InvalidInput("no such cell") if unknown.
  int index_of(CellId id) const;
  bool has_id(CellId id) const;

  int generation_of(int cell) const { return gen_[cell]; }
  int parent_of(int cell) const { return parent_[cell]; }  // -1 for roots
  const std::vector<int>& children_of(int cell) const { return children_[cell]; }

  /// Leaves in depth-first order; each leaf is a final-generation cell.
  int leaf_cell(int pos) const { return leaf_cell_[pos]; }
  /// Position of a final-generation cell in leaf order, -1 otherwise.
  int leaf_pos(int cell) const { return leaf_pos_[cell]; }

  /// Half-open range of leaf positions covered by a cell.
  int leaf_begin(int cell) const { return leaf_begin_[cell]; }
  int leaf_end(int cell) const { return leaf_end_[cell]; }
  int leaf_span(int cell) const { return leaf_end_[cell] - leaf_begin_[cell]; }
  bool contains_leaf(int cell, int pos) const {
    return leaf_begin_[cell] <= pos && pos < leaf_end_[cell];
  }

  /// Highest ancestor-or-self with an identical leaf set (top of a
  /// single-child chain; self when there is none).
  int chain_top(int cell) const { return chain_top_[cell]; }

  /// Walks cell, parent(cell), ... up to the root.
  template <typename Fn>
  void for_each_ancestor(int cell, Fn&& fn) const {
    for (int c = cell; c != -1; c = parent_[c]) fn(c);
  }

 private:
  Lattice() = default;
  void build_dense(const std::map<CellId, CellId>& parent);

  std::vector<std::vector<CellId>> generations_;
  std::vector<CellId> id_;
  std::map<CellId, int> index_;
  std::vector<int> gen_;
  std::vector<int> parent_;
  std::vector<std::vector<int>> children_;
  std::vector<int> leaf_cell_;
  std::vector<int> leaf_pos_;
  std::vector<int> leaf_begin_, leaf_end_;
  std::vector<int> chain_top_;
};

/// Report-style validation result.
struct ValidationReport {
  struct Violation {
    std::string code;  // "unique-ids", "parent-missing", "parent-generation",
                       // "refinement", "unreachable", "acyclic"
    CellId cell;
    std::string detail;
  };
  std::vector<Violation> violations;
  bool valid() const { return violations.empty(); }
};

/// Checks the lattice axioms: per-generation partition of the leaf set and
/// child refinement of every non-final cell. Returns the violations found.
ValidationReport validate(const Lattice& lattice);

/// Nonnegative mass on each leaf cell. Cell masses are always derived by
/// summation, never stored separately.
class Weight {
 public:
  Weight() = default;
  /// Dense leaf-order masses; must match the lattice's leaf count.
  explicit Weight(std::vector<double> leaf_mass);
  /// From a CellId-keyed map; missing leaves get mass 0.
  Weight(const Lattice& lattice, const std::map<CellId, double>& leaf_mass);

  double leaf(int pos) const { return mass_[pos]; }
  int size() const { return static_cast<int>(mass_.size()); }
  const std::vector<double>& values() const { return mass_; }

 private:
  std::vector<double> mass_;
};

/// Function constant on each leaf cell, stored in leaf order.
struct SimpleFunction {
  std::vector<double> values;

  SimpleFunction() = default;
  explicit SimpleFunction(std::vector<double> v) : values(std::move(v)) {}
  static SimpleFunction zeros(int n) { return SimpleFunction(std::vector<double>(n, 0.0)); }
  static SimpleFunction constant(int n, double c) {
    return SimpleFunction(std::vector<double>(n, c));
  }

  double operator[](int pos) const { return values[pos]; }
  double& operator[](int pos) { return values[pos]; }
  int size() const { return static_cast<int>(values.size()); }
};

enum class WeightSelector { Mu, Nu };

/// The complete problem datum: lattice, two weights, coefficients, exponents.
///
/// Cell masses for both weights are precomputed bottom-up at construction
/// (children first), so additivity over the refinement holds exactly as
/// computed. Immutable afterwards; queries are pure.
class Instance {
 public:
  Instance(Lattice lattice, Weight mu, Weight nu, std::vector<double> alpha_cells,
           ExponentPair exponents);

  /// alpha given as a CellId-keyed map; absent cells get 0.
  Instance(Lattice lattice, Weight mu, Weight nu,
           const std::map<CellId, double>& alpha, ExponentPair exponents);

  const Lattice& lattice() const { return lattice_; }
  const ExponentPair& exponents() const { return pq_; }

  double mu_leaf(int pos) const { return mu_.leaf(pos); }
  double nu_leaf(int pos) const { return nu_.leaf(pos); }
  double leaf_mass(WeightSelector w, int pos) const {
    return w == WeightSelector::Mu ? mu_.leaf(pos) : nu_.leaf(pos);
  }

  double mu_cell(int cell) const { return mu_cell_[cell]; }
  double nu_cell(int cell) const { return nu_cell_[cell]; }
  double cell_mass(WeightSelector w, int cell) const {
    return w == WeightSelector::Mu ? mu_cell_[cell] : nu_cell_[cell];
  }

  double alpha(int cell) const { return alpha_[cell]; }
  const std::vector<double>& alpha_values() const { return alpha_; }

  int n_leaves() const { return lattice_.leaf_count(); }
  int n_cells() const { return lattice_.cell_count(); }

  /// True when some cell has mu(I) = 0 but alpha_I > 0; reports flag these
  /// because the zero-average convention silences such cells.
  bool has_alpha_on_zero_mu() const { return has_alpha_on_zero_mu_; }
  const std::vector<CellId>& alpha_on_zero_mu_cells() const { return alpha_on_zero_mu_; }

 private:
  void finish();

  Lattice lattice_;
  Weight mu_, nu_;
  std::vector<double> alpha_;
  ExponentPair pq_;
  std::vector<double> mu_cell_, nu_cell_;
  bool has_alpha_on_zero_mu_ = false;
  std::vector<CellId> alpha_on_zero_mu_;
};

/// mu(I) or nu(I) by public id. Throws InvalidInput for unknown cells.
double cell_mass(const Instance& instance, WeightSelector w, CellId cell);

/// All cells whose leaf set is contained in J's, J included. Single-child
/// generation copies above J with the same leaf set are listed too, one entry
/// per generation occupied; below J the subtree is emitted in preorder.
std::vector<CellId> cells_within(const Lattice& lattice, CellId J);

/// Parameters for random_instance.
struct RandomParams {
  int branching = 2;
  int depth = 3;
  double p = 2.0;
  double q = 2.0;
  double mu_zero_fraction = 0.1;
  double nu_zero_fraction = 0.1;
  double alpha_zero_fraction = 0.25;
};

/// Reproducible random instance on a full branching^depth tree. Masses are
/// uniform on [0,1] with an exact-zero fraction; alpha likewise.
Instance random_instance(std::uint64_t seed, const RandomParams& params);

/// Instance document (JSON text) round-trip. Masses are written as decimal
/// strings that parse back to the identical binary64 value.
std::string serialize(const Instance& instance);
Instance deserialize(const std::string& document);

/// SimpleFunction document: { "<leaf-id>": "<decimal>", ... }, omitted = 0.
std::string serialize_function(const Instance& instance, const SimpleFunction& f);
SimpleFunction deserialize_function(const Instance& instance, const std::string& document);

/// Shortest decimal string that parses back to exactly x.
std::string format_decimal(double x);

}  // namespace twlat

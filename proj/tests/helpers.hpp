#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include "twlat/lattice.hpp"

namespace helpers {

using namespace twlat;

/// Uniform full tree: every leaf gets the same mu and nu mass, every cell the
/// same alpha.
inline Instance uniform_instance(int branching, int depth, double mu_leaf, double nu_leaf,
                                 double alpha, double p, double q) {
  Lattice lat = Lattice::full_tree(branching, depth);
  std::vector<double> mu(lat.leaf_count(), mu_leaf);
  std::vector<double> nu(lat.leaf_count(), nu_leaf);
  std::vector<double> a(lat.cell_count(), alpha);
  return Instance(std::move(lat), Weight(std::move(mu)), Weight(std::move(nu)), std::move(a),
                  ExponentPair(p, q));
}

/// One generation containing a single cell that is both root and leaf.
inline Instance single_cell_instance(double mu, double nu, double alpha, double p, double q) {
  Lattice lat({{0}}, {});
  return Instance(std::move(lat), Weight({mu}), Weight({nu}), {alpha}, ExponentPair(p, q));
}

inline SimpleFunction random_function(const Instance& inst, std::uint64_t seed,
                                      double zero_fraction = 0.0) {
  std::mt19937_64 rng(seed);
  auto u01 = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  SimpleFunction f = SimpleFunction::zeros(inst.n_leaves());
  for (int pos = 0; pos < inst.n_leaves(); ++pos) {
    const bool zero = u01() < zero_fraction;
    const double v = u01();
    f[pos] = zero ? 0.0 : v;
  }
  return f;
}

inline SimpleFunction indicator(const Instance& inst, CellId J) {
  const Lattice& lat = inst.lattice();
  const int c = lat.index_of(J);
  SimpleFunction f = SimpleFunction::zeros(inst.n_leaves());
  for (int pos = lat.leaf_begin(c); pos < lat.leaf_end(c); ++pos) f[pos] = 1.0;
  return f;
}

}  // namespace helpers

#pragma once

// Brute-force oracles for cross-checking the engine. Everything here works by
// explicit leaf-set enumeration and containment tests, independently of the
// leaf-range and ancestor-walk machinery in the library.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include "twlat/lattice.hpp"

namespace oracle {

using twlat::CellId;
using twlat::Instance;
using twlat::Lattice;
using twlat::SimpleFunction;
using twlat::WeightSelector;

inline void collect_leaves(const Lattice& lat, int c, std::vector<int>& out) {
  if (lat.leaf_pos(c) >= 0) {
    out.push_back(lat.leaf_pos(c));
    return;
  }
  for (int ch : lat.children_of(c)) collect_leaves(lat, ch, out);
}

/// Sorted leaf positions of every cell, by recursive descent.
inline std::vector<std::vector<int>> leafsets(const Instance& inst) {
  const Lattice& lat = inst.lattice();
  std::vector<std::vector<int>> sets(lat.cell_count());
  for (int c = 0; c < lat.cell_count(); ++c) {
    collect_leaves(lat, c, sets[c]);
    std::sort(sets[c].begin(), sets[c].end());
  }
  return sets;
}

inline bool contains(const std::vector<int>& set, int pos) {
  return std::binary_search(set.begin(), set.end(), pos);
}

inline double mass(const Instance& inst, WeightSelector w, const std::vector<int>& set) {
  double m = 0.0;
  for (int pos : set) m += inst.leaf_mass(w, pos);
  return m;
}

inline double average(const Instance& inst, const SimpleFunction& f,
                      const std::vector<int>& set) {
  double m = 0.0, integral = 0.0;
  for (int pos : set) {
    m += inst.mu_leaf(pos);
    integral += f[pos] * inst.mu_leaf(pos);
  }
  return m > 0.0 ? integral / m : 0.0;
}

/// Maximal function by scanning every cell for membership.
inline SimpleFunction maximal(const Instance& inst, const SimpleFunction& f) {
  const auto sets = leafsets(inst);
  SimpleFunction out = SimpleFunction::zeros(inst.n_leaves());
  for (int pos = 0; pos < inst.n_leaves(); ++pos) {
    double best = 0.0;
    for (int c = 0; c < inst.n_cells(); ++c) {
      if (!contains(sets[c], pos)) continue;
      if (mass(inst, WeightSelector::Mu, sets[c]) > 0.0)
        best = std::max(best, std::fabs(average(inst, f, sets[c])));
    }
    out[pos] = best;
  }
  return out;
}

/// Mixed norm by the naive double loop over (leaf, cell).
inline double mixed_norm(const Instance& inst, const SimpleFunction& f) {
  const auto sets = leafsets(inst);
  const double p = inst.exponents().p;
  const double q = inst.exponents().q;
  double total = 0.0;
  for (int pos = 0; pos < inst.n_leaves(); ++pos) {
    const double w = inst.nu_leaf(pos);
    if (w == 0.0) continue;
    double s = 0.0;
    for (int c = 0; c < inst.n_cells(); ++c) {
      if (inst.alpha(c) == 0.0 || !contains(sets[c], pos)) continue;
      if (mass(inst, WeightSelector::Mu, sets[c]) == 0.0) continue;
      s += std::pow(inst.alpha(c), q) * std::pow(std::fabs(average(inst, f, sets[c])), q);
    }
    if (s > 0.0) total += std::pow(s, p / q) * w;
  }
  return std::pow(total, 1.0 / p);
}

/// Testing constant at J by subset enumeration, with the same mu(I) = 0
/// conventions as the engine.
inline double testing_c1(const Instance& inst, CellId J) {
  const Lattice& lat = inst.lattice();
  const auto sets = leafsets(inst);
  const int j = lat.index_of(J);
  const double p = inst.exponents().p;
  const double q = inst.exponents().q;

  std::vector<int> within;  // cells whose leaf set is contained in J's
  for (int c = 0; c < inst.n_cells(); ++c)
    if (std::includes(sets[j].begin(), sets[j].end(), sets[c].begin(), sets[c].end()) &&
        !sets[c].empty())
      within.push_back(c);

  const double mu_j = mass(inst, WeightSelector::Mu, sets[j]);
  if (mu_j > 0.0) {
    double integral = 0.0;
    for (int pos : sets[j]) {
      const double w = inst.nu_leaf(pos);
      if (w == 0.0) continue;
      double s = 0.0;
      for (int c : within)
        if (contains(sets[c], pos) && mass(inst, WeightSelector::Mu, sets[c]) > 0.0)
          s += std::pow(inst.alpha(c), q);
      if (s > 0.0) integral += std::pow(s, p / q) * w;
    }
    return std::pow(integral / mu_j, 1.0 / p);
  }
  for (int pos : sets[j]) {
    if (inst.nu_leaf(pos) == 0.0) continue;
    for (int c : within)
      if (contains(sets[c], pos) && inst.alpha(c) > 0.0)
        return std::numeric_limits<double>::infinity();
  }
  return 0.0;
}

inline double testing_c2(const Instance& inst, CellId J) {
  const Lattice& lat = inst.lattice();
  const auto sets = leafsets(inst);
  const int j = lat.index_of(J);
  const double q = inst.exponents().q;
  const double sc = inst.exponents().s_conj();

  std::vector<int> within;
  for (int c = 0; c < inst.n_cells(); ++c)
    if (std::includes(sets[j].begin(), sets[j].end(), sets[c].begin(), sets[c].end()) &&
        !sets[c].empty())
      within.push_back(c);

  for (int c : within) {
    if (mass(inst, WeightSelector::Mu, sets[c]) == 0.0 &&
        mass(inst, WeightSelector::Nu, sets[c]) > 0.0 && inst.alpha(c) > 0.0)
      return std::numeric_limits<double>::infinity();
  }
  double integral = 0.0;
  bool positive = false;
  for (int pos : sets[j]) {
    const double m = inst.mu_leaf(pos);
    if (m == 0.0) continue;
    double t = 0.0;
    for (int c : within) {
      if (!contains(sets[c], pos)) continue;
      const double mc = mass(inst, WeightSelector::Mu, sets[c]);
      if (mc > 0.0)
        t += std::pow(inst.alpha(c), q) * mass(inst, WeightSelector::Nu, sets[c]) / mc;
    }
    if (t > 0.0) {
      positive = true;
      integral += std::pow(t, sc) * m;
    }
  }
  const double nu_j = mass(inst, WeightSelector::Nu, sets[j]);
  if (nu_j > 0.0) {
    const double r = integral / nu_j;
    return r > 0.0 ? std::pow(r, 1.0 / (q * sc)) : 0.0;
  }
  return positive ? std::numeric_limits<double>::infinity() : 0.0;
}

/// E_k = { maximal f > 2^k } by direct thresholding.
inline std::vector<int> level_set(const Instance& inst, const SimpleFunction& f, int k) {
  const SimpleFunction mf = maximal(inst, f);
  std::vector<int> out;
  for (int pos = 0; pos < inst.n_leaves(); ++pos)
    if (mf[pos] > std::ldexp(1.0, k)) out.push_back(pos);
  return out;
}

}  // namespace oracle

#include "twlat/operators.hpp"

#include <cmath>

#include "twlat/numeric.hpp"

namespace twlat::operators {

CellAverages mu_averages(const Instance& inst, const SimpleFunction& f) {
  const Lattice& lat = inst.lattice();
  const int n = lat.cell_count();
  if (f.size() != lat.leaf_count()) throw InvalidInput("function size does not match leaf count");
  CellAverages out;
  out.integral.assign(n, 0.0);
  out.average.assign(n, 0.0);
  const int last_gen = lat.generation_count() - 1;
  for (int c = n - 1; c >= 0; --c) {
    if (lat.generation_of(c) == last_gen) {
      const int pos = lat.leaf_pos(c);
      out.integral[c] = f[pos] * inst.mu_leaf(pos);
    } else {
      double s = 0.0;
      for (int ch : lat.children_of(c)) s += out.integral[ch];
      out.integral[c] = s;
    }
    const double m = inst.mu_cell(c);
    out.average[c] = (m > 0.0) ? out.integral[c] / m : 0.0;
    ensure_finite(out.average[c], "cell average", lat.id_of(c));
  }
  return out;
}

SimpleFunction average(const Instance& inst, const SimpleFunction& f, CellId I) {
  const Lattice& lat = inst.lattice();
  const int c = lat.index_of(I);
  const CellAverages avg = mu_averages(inst, f);
  SimpleFunction out = SimpleFunction::zeros(lat.leaf_count());
  for (int pos = lat.leaf_begin(c); pos < lat.leaf_end(c); ++pos) out[pos] = avg.average[c];
  return out;
}

SimpleFunction apply_scalar(const Instance& inst, const SimpleFunction& f) {
  const Lattice& lat = inst.lattice();
  const CellAverages avg = mu_averages(inst, f);
  SimpleFunction out = SimpleFunction::zeros(lat.leaf_count());
  for (int pos = 0; pos < lat.leaf_count(); ++pos) {
    double s = 0.0;
    lat.for_each_ancestor(lat.leaf_cell(pos), [&](int c) { s += inst.alpha(c) * avg.average[c]; });
    ensure_finite(s, "scalar operator", lat.id_of(lat.leaf_cell(pos)));
    out[pos] = s;
  }
  return out;
}

SimpleFunction vector_entry(const Instance& inst, const SimpleFunction& f, CellId I) {
  const Lattice& lat = inst.lattice();
  const int c = lat.index_of(I);
  SimpleFunction out = average(inst, f, I);
  for (int pos = lat.leaf_begin(c); pos < lat.leaf_end(c); ++pos) out[pos] *= inst.alpha(c);
  return out;
}

FunctionFamily vector_family(const Instance& inst, const SimpleFunction& f) {
  const Lattice& lat = inst.lattice();
  const CellAverages avg = mu_averages(inst, f);
  FunctionFamily fam;
  for (int c = 0; c < lat.cell_count(); ++c) {
    SimpleFunction entry = SimpleFunction::zeros(lat.leaf_count());
    const double v = inst.alpha(c) * avg.average[c];
    for (int pos = lat.leaf_begin(c); pos < lat.leaf_end(c); ++pos) entry[pos] = v;
    fam.entries.emplace(lat.id_of(c), std::move(entry));
  }
  return fam;
}

SimpleFunction maximal(const Instance& inst, const SimpleFunction& f) {
  const Lattice& lat = inst.lattice();
  const CellAverages avg = mu_averages(inst, f);
  SimpleFunction out = SimpleFunction::zeros(lat.leaf_count());
  for (int pos = 0; pos < lat.leaf_count(); ++pos) {
    double best = 0.0;
    lat.for_each_ancestor(lat.leaf_cell(pos), [&](int c) {
      if (inst.mu_cell(c) > 0.0) best = std::max(best, std::fabs(avg.average[c]));
    });
    out[pos] = best;
  }
  return out;
}

NormValue lp_norm(const Instance& inst, const SimpleFunction& f, double exponent,
                  WeightSelector weight) {
  if (!(exponent >= 1.0)) throw InvalidInput("norm exponent must be >= 1");
  if (f.size() != inst.n_leaves()) throw InvalidInput("function size does not match leaf count");
  KahanSum acc;
  for (int pos = 0; pos < inst.n_leaves(); ++pos) {
    const double m = inst.leaf_mass(weight, pos);
    if (m == 0.0) continue;
    acc.add(pow_ext(std::fabs(f[pos]), exponent) * m);
  }
  ensure_finite(acc.value(), "Lp norm");
  const double v = (exponent == 1.0) ? acc.value() : std::pow(acc.value(), 1.0 / exponent);
  return {v, NormValue::Kind::Lp};
}

std::vector<double> talpha_lq_powers(const Instance& inst, const SimpleFunction& f) {
  const Lattice& lat = inst.lattice();
  const double q = inst.exponents().q;
  const CellAverages avg = mu_averages(inst, f);
  std::vector<double> s(lat.leaf_count(), 0.0);
  for (int pos = 0; pos < lat.leaf_count(); ++pos) {
    double acc = 0.0;
    lat.for_each_ancestor(lat.leaf_cell(pos), [&](int c) {
      const double a = inst.alpha(c);
      if (a > 0.0 && inst.mu_cell(c) > 0.0)
        acc += pow_ext(a, q) * pow_ext(std::fabs(avg.average[c]), q);
    });
    ensure_finite(acc, "l^q aggregation", lat.id_of(lat.leaf_cell(pos)));
    s[pos] = acc;
  }
  return s;
}

NormValue mixed_norm_of_talpha(const Instance& inst, const SimpleFunction& f) {
  const double p = inst.exponents().p;
  const double q = inst.exponents().q;
  const std::vector<double> s = talpha_lq_powers(inst, f);
  KahanSum acc;
  for (int pos = 0; pos < inst.n_leaves(); ++pos) {
    const double w = inst.nu_leaf(pos);
    if (w == 0.0 || s[pos] == 0.0) continue;
    acc.add(pow_ext(s[pos], p / q) * w);
  }
  ensure_finite(acc.value(), "mixed norm");
  return {std::pow(acc.value(), 1.0 / p), NormValue::Kind::MixedLpLq};
}

SimpleFunction reduced_scalar_value(const Instance& inst, const SimpleFunction& h) {
  for (int pos = 0; pos < h.size(); ++pos)
    if (h[pos] < 0.0) throw InvalidInput("reduction requires nonnegative input");
  const Lattice& lat = inst.lattice();
  const double q = inst.exponents().q;
  const CellAverages avg = mu_averages(inst, h);
  SimpleFunction out = SimpleFunction::zeros(lat.leaf_count());
  for (int pos = 0; pos < lat.leaf_count(); ++pos) {
    double s = 0.0;
    lat.for_each_ancestor(lat.leaf_cell(pos), [&](int c) {
      const double a = inst.alpha(c);
      if (a > 0.0) s += pow_ext(a, q) * avg.average[c];
    });
    out[pos] = s;
  }
  return out;
}

}  // namespace twlat::operators

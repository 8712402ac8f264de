#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "oracles.hpp"
#include "twlat/operators.hpp"

using namespace twlat;
namespace ops = twlat::operators;

namespace {

Instance binary_pair(double m0, double m1, double p = 2.0, double q = 2.0) {
  Lattice lat = Lattice::full_tree(2, 1);
  return Instance(std::move(lat), Weight({m0, m1}), Weight({1.0, 1.0}),
                  std::vector<double>(3, 1.0), ExponentPair(p, q));
}

}  // namespace

TEST_CASE("average fixes constants and handles the weighted pair") {
  const Instance inst = binary_pair(0.5, 0.5);
  const SimpleFunction f({1.0, 3.0});
  const SimpleFunction a = ops::average(inst, f, 0);
  CHECK(a[0] == 2.0);
  CHECK(a[1] == 2.0);

  const SimpleFunction c = SimpleFunction::constant(2, 7.5);
  const SimpleFunction ac = ops::average(inst, c, 1);
  CHECK(ac[0] == 7.5);
  CHECK(ac[1] == 0.0);  // supported on the cell only

  CHECK_THROWS_AS(ops::average(inst, f, 42), InvalidInput);
}

TEST_CASE("average of a zero-mass cell is the zero function") {
  Lattice lat = Lattice::full_tree(2, 1);
  Instance inst(std::move(lat), Weight({0.0, 1.0}), Weight({1.0, 1.0}),
                std::vector<double>(3, 1.0), ExponentPair(2.0, 2.0));
  const SimpleFunction f({5.0, 5.0});
  const SimpleFunction a = ops::average(inst, f, 1);  // leaf cell with mu = 0
  CHECK(a[0] == 0.0);
  CHECK(a[1] == 0.0);
}

TEST_CASE("apply_scalar on the depth-2 binary lattice, hand enumeration") {
  const Instance inst = helpers::uniform_instance(2, 2, 0.25, 0.25, 1.0, 2.0, 2.0);
  SimpleFunction f = SimpleFunction::zeros(4);
  f[0] = 1.0;  // leftmost leaf
  const SimpleFunction out = ops::apply_scalar(inst, f);
  CHECK(out[0] == doctest::Approx(1.75).epsilon(1e-15));
  CHECK(out[1] == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(out[2] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(out[3] == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("apply_scalar trivia: zero coefficients and the single cell") {
  Instance zero = helpers::uniform_instance(2, 2, 0.25, 0.25, 0.0, 2.0, 2.0);
  const SimpleFunction f = helpers::random_function(zero, 4);
  for (double v : ops::apply_scalar(zero, f).values) CHECK(v == 0.0);

  const Instance one = helpers::single_cell_instance(0.7, 0.3, 2.5, 2.0, 2.0);
  const SimpleFunction g({3.0});
  CHECK(ops::apply_scalar(one, g)[0] == doctest::Approx(2.5 * 3.0).epsilon(1e-15));
}

TEST_CASE("vector_entry basics") {
  const Instance inst = helpers::uniform_instance(2, 2, 0.25, 0.25, 0.5, 2.0, 2.0);
  const SimpleFunction ind = helpers::indicator(inst, 1);
  const SimpleFunction e = ops::vector_entry(inst, ind, 1);
  CHECK(e[0] == 0.5);  // alpha_I * E_I 1_I = alpha_I on I
  CHECK(e[1] == 0.5);
  CHECK(e[2] == 0.0);

  Instance zero_alpha = helpers::uniform_instance(2, 2, 0.25, 0.25, 0.0, 2.0, 2.0);
  for (double v : ops::vector_entry(zero_alpha, ind, 1).values) CHECK(v == 0.0);
}

TEST_CASE("vector_family entries vanish off their cells") {
  const Instance inst = random_instance(31, {2, 3, 2.0, 2.0, 0.1, 0.1, 0.2});
  const SimpleFunction f = helpers::random_function(inst, 8);
  const ops::FunctionFamily fam = ops::vector_family(inst, f);
  const Lattice& lat = inst.lattice();
  for (const auto& [id, entry] : fam.entries) {
    const int c = lat.index_of(id);
    for (int pos = 0; pos < inst.n_leaves(); ++pos)
      if (!lat.contains_leaf(c, pos)) CHECK(entry[pos] == 0.0);
  }
}

TEST_CASE("maximal function basics") {
  const Instance inst = helpers::uniform_instance(2, 3, 0.125, 0.125, 1.0, 2.0, 2.0);
  const SimpleFunction c = SimpleFunction::constant(8, 3.25);
  for (double v : ops::maximal(inst, c).values) CHECK(v == doctest::Approx(3.25).epsilon(1e-15));

  const SimpleFunction ind = helpers::indicator(inst, 1);
  const SimpleFunction m = ops::maximal(inst, ind);
  for (int pos = 0; pos < 4; ++pos) CHECK(m[pos] == 1.0);  // the cell itself attains the sup
}

TEST_CASE("maximal matches the ancestor-enumeration oracle") {
  for (std::uint64_t seed : {3u, 13u, 23u}) {
    const Instance inst = random_instance(seed, {2, 4, 2.0, 2.0, 0.15, 0.15, 0.25});
    const SimpleFunction f = helpers::random_function(inst, seed + 100, 0.2);
    const SimpleFunction got = ops::maximal(inst, f);
    const SimpleFunction want = oracle::maximal(inst, f);
    for (int pos = 0; pos < inst.n_leaves(); ++pos)
      CHECK(got[pos] == doctest::Approx(want[pos]).epsilon(1e-13));
  }
}

TEST_CASE("lp_norm examples") {
  const Instance unit = helpers::uniform_instance(2, 2, 0.25, 0.25, 1.0, 2.0, 2.0);
  const SimpleFunction one = SimpleFunction::constant(4, 1.0);
  for (double p : {1.0, 1.5, 2.0, 3.0})
    CHECK(ops::lp_norm(unit, one, p, WeightSelector::Mu).value ==
          doctest::Approx(1.0).epsilon(1e-14));

  Lattice lat = Lattice::full_tree(2, 1);
  Instance pair(std::move(lat), Weight({1.0, 1.0}), Weight({1.0, 1.0}),
                std::vector<double>(3, 0.0), ExponentPair(2.0, 2.0));
  CHECK(ops::lp_norm(pair, SimpleFunction({3.0, 4.0}), 2.0, WeightSelector::Mu).value == 5.0);

  CHECK_THROWS_AS(ops::lp_norm(pair, one, 0.5, WeightSelector::Mu), InvalidInput);
}

TEST_CASE("mixed norm: trivial cases and the naive oracle") {
  Instance zero = helpers::uniform_instance(2, 2, 0.25, 0.25, 0.0, 2.0, 1.0);
  CHECK(ops::mixed_norm_of_talpha(zero, helpers::random_function(zero, 5)).value == 0.0);

  const double a = 1.7, v = 2.5, m = 0.4, w = 0.9, p = 2.5, q = 1.5;
  const Instance one = helpers::single_cell_instance(m, w, a, p, q);
  CHECK(ops::mixed_norm_of_talpha(one, SimpleFunction({v})).value ==
        doctest::Approx(a * v * std::pow(w, 1.0 / p)).epsilon(1e-14));

  for (std::uint64_t seed : {11u, 12u}) {
    const Instance inst = random_instance(seed, {3, 3, 2.5, 1.5, 0.15, 0.15, 0.25});
    const SimpleFunction f = helpers::random_function(inst, seed + 1, 0.1);
    CHECK(ops::mixed_norm_of_talpha(inst, f).value ==
          doctest::Approx(oracle::mixed_norm(inst, f)).epsilon(1e-12));
  }
}

TEST_CASE("mixed norm at p = q matches the aggregated Lp norm") {
  const Instance inst = random_instance(11, {2, 4, 2.0, 2.0, 0.1, 0.1, 0.2});
  const SimpleFunction f = helpers::random_function(inst, 6);
  const std::vector<double> s = ops::talpha_lq_powers(inst, f);
  SimpleFunction agg = SimpleFunction::zeros(inst.n_leaves());
  for (int pos = 0; pos < inst.n_leaves(); ++pos) agg[pos] = std::pow(s[pos], 1.0 / 2.0);
  CHECK(ops::mixed_norm_of_talpha(inst, f).value ==
        doctest::Approx(ops::lp_norm(inst, agg, 2.0, WeightSelector::Nu).value).epsilon(1e-12));
}

TEST_CASE("reduced scalar value") {
  const Instance q1 = random_instance(5, {2, 3, 2.0, 1.0, 0.1, 0.1, 0.2});
  const SimpleFunction h = helpers::random_function(q1, 9);
  const SimpleFunction red = ops::reduced_scalar_value(q1, h);
  const SimpleFunction app = ops::apply_scalar(q1, h);
  for (int pos = 0; pos < q1.n_leaves(); ++pos) CHECK(red[pos] == app[pos]);  // q = 1

  for (double v : ops::reduced_scalar_value(q1, SimpleFunction::zeros(q1.n_leaves())).values)
    CHECK(v == 0.0);

  SimpleFunction neg = SimpleFunction::zeros(q1.n_leaves());
  neg[0] = -0.5;
  CHECK_THROWS_AS(ops::reduced_scalar_value(q1, neg), InvalidInput);
}

TEST_CASE("reduced scalar value with q = 2 equals the alpha^2 instance") {
  const Instance inst = random_instance(5, {2, 3, 3.0, 2.0, 0.1, 0.1, 0.2});
  std::vector<double> alpha_sq(inst.n_cells());
  for (int c = 0; c < inst.n_cells(); ++c) alpha_sq[c] = inst.alpha(c) * inst.alpha(c);
  std::vector<double> mu(inst.n_leaves()), nu(inst.n_leaves());
  for (int pos = 0; pos < inst.n_leaves(); ++pos) {
    mu[pos] = inst.mu_leaf(pos);
    nu[pos] = inst.nu_leaf(pos);
  }
  const Instance modified(Lattice::full_tree(2, 3), Weight(std::move(mu)), Weight(std::move(nu)),
                          std::move(alpha_sq), ExponentPair(3.0, 2.0));
  const SimpleFunction h = helpers::random_function(inst, 10);
  const SimpleFunction red = ops::reduced_scalar_value(inst, h);
  const SimpleFunction app = ops::apply_scalar(modified, h);
  for (int pos = 0; pos < inst.n_leaves(); ++pos)
    CHECK(red[pos] == doctest::Approx(app[pos]).epsilon(1e-13));
}

TEST_CASE("linearity and positivity of the scalar operator") {
  const Instance inst = random_instance(41, {3, 3, 2.0, 2.0, 0.1, 0.1, 0.2});
  const SimpleFunction f = helpers::random_function(inst, 1);
  const SimpleFunction g = helpers::random_function(inst, 2);
  const double a = 1.3, b = -0.4;
  SimpleFunction combo = SimpleFunction::zeros(inst.n_leaves());
  for (int pos = 0; pos < inst.n_leaves(); ++pos) combo[pos] = a * f[pos] + b * g[pos];
  const SimpleFunction lhs = ops::apply_scalar(inst, combo);
  const SimpleFunction tf = ops::apply_scalar(inst, f);
  const SimpleFunction tg = ops::apply_scalar(inst, g);
  for (int pos = 0; pos < inst.n_leaves(); ++pos) {
    const double want = a * tf[pos] + b * tg[pos];
    CHECK(lhs[pos] == doctest::Approx(want).epsilon(1e-12));
  }
  for (int pos = 0; pos < inst.n_leaves(); ++pos) {
    CHECK(tf[pos] >= 0.0);
    CHECK(ops::maximal(inst, f)[pos] >= 0.0);
  }
}

TEST_CASE("Jensen direction holds leafwise") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Instance inst = random_instance(seed, {2, 4, 3.0, 2.0, 0.15, 0.15, 0.25});
    const SimpleFunction f = helpers::random_function(inst, seed + 50, 0.2);
    const std::vector<double> lhs = ops::talpha_lq_powers(inst, f);
    SimpleFunction fq = f;
    for (double& x : fq.values) x = x * x;
    const SimpleFunction rhs = ops::reduced_scalar_value(inst, fq);
    for (int pos = 0; pos < inst.n_leaves(); ++pos)
      CHECK(lhs[pos] <= rhs[pos] + 1e-12 * std::max(lhs[pos], rhs[pos]) + 1e-300);
  }
}

TEST_CASE("maximal dominates every cell average") {
  const Instance inst = random_instance(8, {3, 3, 2.0, 2.0, 0.2, 0.1, 0.2});
  const SimpleFunction f = helpers::random_function(inst, 3, 0.1);
  const SimpleFunction mf = ops::maximal(inst, f);
  const ops::CellAverages avg = ops::mu_averages(inst, f);
  const Lattice& lat = inst.lattice();
  for (int c = 0; c < inst.n_cells(); ++c) {
    if (inst.mu_cell(c) == 0.0) continue;
    for (int pos = lat.leaf_begin(c); pos < lat.leaf_end(c); ++pos)
      CHECK(mf[pos] >= std::fabs(avg.average[c]) * (1.0 - 1e-13));
  }
}

TEST_CASE("non-finite inputs abort with a diagnostic") {
  const Instance inst = helpers::uniform_instance(2, 2, 0.25, 0.25, 1.0, 2.0, 2.0);
  SimpleFunction f = SimpleFunction::constant(4, 1.0);
  f[2] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(ops::apply_scalar(inst, f), NonFinite);
}

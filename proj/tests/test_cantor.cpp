#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "twlat/cantor.hpp"
#include "twlat/operators.hpp"
#include "twlat/testing.hpp"

using namespace twlat;
namespace ops = twlat::operators;
namespace tst = twlat::testing;
using cantor::CantorConfig;

TEST_CASE("depth-1 construction matches the hand description") {
  const auto built = cantor::build_cantor_instance(CantorConfig::make(1, 2.0, 1.0, 0.7));
  const Instance& inst = built.instance;
  REQUIRE(inst.n_leaves() == 3);
  CHECK(inst.nu_leaf(0) == 0.5);
  CHECK(inst.nu_leaf(1) == 0.0);
  CHECK(inst.nu_leaf(2) == 0.5);
  CHECK(inst.mu_leaf(0) == doctest::Approx(1.0 / 3.0).epsilon(1e-16));

  const double a1 = std::pow(2.0 / 3.0, 0.5);
  CHECK(inst.alpha(0) == 1.0);  // the root is the single component of C_0
  CHECK(inst.alpha(1) == a1);
  CHECK(inst.alpha(2) == 0.0);  // middle-third gap
  CHECK(inst.alpha(3) == a1);

  CHECK(built.gap_function[0] == 0.0);
  CHECK(built.gap_function[1] == doctest::Approx(std::sqrt(1.5)).epsilon(1e-16));
  CHECK(built.gap_function[2] == 0.0);
}

TEST_CASE("Cantor measure totals one and halves per component") {
  for (int depth : {1, 4, 8}) {
    const auto built =
        cantor::build_cantor_instance(CantorConfig::make(depth, 2.0, 1.0, 0.7));
    CHECK(cell_mass(built.instance, WeightSelector::Nu, 0) == 1.0);
  }
  const auto built = cantor::build_cantor_instance(CantorConfig::make(4, 2.0, 1.0, 0.7));
  // Leftmost component of C_n sits at cell id (3^n - 1)/2 (generation offset).
  for (int n = 1; n <= 4; ++n) {
    const CellId leftmost = (static_cast<CellId>(std::pow(3, n)) - 1) / 2;
    CHECK(cell_mass(built.instance, WeightSelector::Nu, leftmost) == std::ldexp(1.0, -n));
    CHECK(cell_mass(built.instance, WeightSelector::Mu, leftmost) ==
          doctest::Approx(std::pow(3.0, -n)).epsilon(1e-13));
  }
}

TEST_CASE("gap averages obey the paper's lower bound") {
  const CantorConfig cfg = CantorConfig::make(6, 2.0, 1.0, 0.7);
  const auto built = cantor::build_cantor_instance(cfg);
  const Instance& inst = built.instance;
  const ops::CellAverages avg = ops::mu_averages(inst, built.gap_function);
  const Lattice& lat = inst.lattice();
  for (int c = 0; c < inst.n_cells(); ++c) {
    if (inst.alpha(c) == 0.0) continue;  // only components of some C_n
    const int n = lat.generation_of(c);
    if (n >= cfg.depth) continue;  // deepest components hold no materialized gap
    const double bound =
        (1.0 / 3.0) * std::pow(1.5, (n + 1) / cfg.p) * std::pow(n + 1.0, -cfg.r);
    CHECK(avg.average[c] >= bound * (1.0 - 1e-12));
    // And the vector entry is alpha_I times that average.
    CHECK(inst.alpha(c) * avg.average[c] >=
          std::pow(2.0 / 3.0, n / cfg.p) * bound * (1.0 - 1e-12));
  }
}

TEST_CASE("closed-form C1 matches the engine on materialized instances") {
  for (int depth : {3, 10}) {
    const CantorConfig cfg = CantorConfig::make(depth, 2.0, 1.0, 0.7);
    const auto built = cantor::build_cantor_instance(cfg);
    const Instance& inst = built.instance;
    const Lattice& lat = inst.lattice();
    const tst::TestingReport report = tst::testing_report(inst);

    CHECK(report.c1_finite ==
          doctest::Approx(cantor::closed_form_c1_max(cfg)).epsilon(1e-12));

    // Per-generation values at the leftmost component of each C_n.
    for (int n = 0; n <= depth; ++n) {
      const CellId leftmost = (static_cast<CellId>(std::pow(3, n)) - 1) / 2;
      CHECK(report.c1_per_cell.at(leftmost) ==
            doctest::Approx(cantor::closed_form_c1(cfg, n)).epsilon(1e-12));
    }
    // Gap cells test at zero.
    for (int c = 0; c < inst.n_cells(); ++c)
      if (inst.alpha(c) == 0.0 && lat.generation_of(c) == 1)
        CHECK(report.c1_per_cell.at(lat.id_of(c)) == 0.0);
  }
}

TEST_CASE("the deepest component tests at exactly one") {
  for (double p : {2.0, 3.0}) {
    const CantorConfig cfg = CantorConfig::make(7, p, 1.0, 0.6);
    CHECK(cantor::closed_form_c1(cfg, 7) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("closed-form C1 is uniformly bounded by the geometric series") {
  for (int depth : {4, 9, 13}) {
    const CantorConfig cfg = CantorConfig::make(depth, 2.0, 1.0, 0.7);
    const double t = std::pow(2.0 / 3.0, cfg.q / cfg.p);
    const double bound = std::pow(1.0 / (1.0 - t), 1.0 / cfg.q);
    for (int n = 0; n <= depth; ++n) CHECK(cantor::closed_form_c1(cfg, n) <= bound);
  }
}

TEST_CASE("gap-function norm: hand count at depth 1 and engine agreement") {
  const CantorConfig one = CantorConfig::make(1, 2.0, 1.0, 0.7);
  CHECK(cantor::closed_form_f_norm(one) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));

  for (int depth : {3, 10}) {
    const CantorConfig cfg = CantorConfig::make(depth, 2.0, 1.0, 0.7);
    const auto built = cantor::build_cantor_instance(cfg);
    const double engine =
        ops::lp_norm(built.instance, built.gap_function, cfg.p, WeightSelector::Mu).value;
    CHECK(engine == doctest::Approx(cantor::closed_form_f_norm(cfg)).epsilon(1e-12));
  }
}

TEST_CASE("gap-function norm is Cauchy with the integral tail bound") {
  for (int depth : {4, 8, 16, 32}) {
    const CantorConfig small = CantorConfig::make(depth, 2.0, 1.0, 0.7);
    const CantorConfig large = CantorConfig::make(2 * depth, 2.0, 1.0, 0.7);
    const double a = std::pow(cantor::closed_form_f_norm(small), 2.0);
    const double b = std::pow(cantor::closed_form_f_norm(large), 2.0);
    CHECK(b > a);
    CHECK(b - a <= cantor::closed_form_f_norm_tail(small));
  }
}

TEST_CASE("lower bound: depth-1 closed form and materialized domination") {
  const CantorConfig one = CantorConfig::make(1, 2.0, 1.0, 0.7);
  CHECK(cantor::closed_form_lhs_lower(one) == doctest::Approx(1.0 / 6.0).epsilon(1e-15));

  const CantorConfig cfg = CantorConfig::make(8, 2.0, 1.0, 0.7);
  const auto built = cantor::build_cantor_instance(cfg);
  const double mixed =
      ops::mixed_norm_of_talpha(built.instance, built.gap_function).value;
  CHECK(std::pow(mixed, cfg.p) >= cantor::closed_form_lhs_lower(cfg) * (1.0 - 1e-12));
}

TEST_CASE("divergence sweep: flat C1 band, growing lower bound") {
  const std::vector<int> depths{4, 8, 16, 32, 64};
  const auto rows = cantor::divergence_sweep(2.0, 1.0, 0.7, depths, 8);
  REQUIRE(rows.size() == 5);
  double c1_lo = rows[0].c1, c1_hi = rows[0].c1;
  for (const auto& row : rows) {
    c1_lo = std::min(c1_lo, row.c1);
    c1_hi = std::max(c1_hi, row.c1);
  }
  CHECK(c1_hi / c1_lo < 4.0);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(rows[i].lhs_lower > rows[i - 1].lhs_lower);
    CHECK(rows[i].f_norm > rows[i - 1].f_norm);
    CHECK(rows[i].ratio_to_prev ==
          doctest::Approx(rows[i].lhs_lower / rows[i - 1].lhs_lower).epsilon(1e-14));
  }
  CHECK(rows[0].lhs_exact.has_value());
  CHECK(rows[1].lhs_exact.has_value());
  CHECK(!rows[2].lhs_exact.has_value());  // beyond the materialization cap
  for (const auto& row : rows)
    if (row.lhs_exact) CHECK(*row.lhs_exact >= row.lhs_lower * (1.0 - 1e-12));

  const std::string csv = cantor::sweep_csv(rows);
  CHECK(csv.find("depth,c1,f_norm,lhs_lower,lhs_exact,ratio_to_prev") == 0);
}

TEST_CASE("doubling ratio approaches its limit from above") {
  // 2^{(1-qr)p/q} = 2^{0.6}; slow convergence means the ratio sits well above
  // the limit at desk depths and is within 10% only past depth ~256.
  const double limit = std::pow(2.0, 0.6);
  auto doubling = [&](int depth) {
    const CantorConfig a = CantorConfig::make(depth, 2.0, 1.0, 0.7);
    const CantorConfig b = CantorConfig::make(2 * depth, 2.0, 1.0, 0.7);
    return cantor::closed_form_lhs_lower(b) / cantor::closed_form_lhs_lower(a);
  };
  double prev = doubling(64);
  CHECK(prev > limit);
  for (int depth : {256, 1024, 4096}) {
    const double r = doubling(depth);
    CHECK(r < prev);
    CHECK(r > limit);
    prev = r;
  }
  CHECK(std::fabs(doubling(1024) / limit - 1.0) < 0.10);
}

TEST_CASE("growth exponent fit lands near the divergence exponent") {
  const auto desk = cantor::divergence_sweep(2.0, 1.0, 0.7, {8, 16, 32, 64}, 0);
  const double desk_slope = cantor::fit_growth_exponent(desk);
  CHECK(desk_slope > 0.6);
  CHECK(desk_slope < 1.0);
  const auto deep = cantor::divergence_sweep(2.0, 1.0, 0.7, {512, 1024, 2048, 4096}, 0);
  const double deep_slope = cantor::fit_growth_exponent(deep);
  CHECK(deep_slope > 0.58);
  CHECK(deep_slope < 0.72);
}

TEST_CASE("parameter window is enforced") {
  CHECK_THROWS_AS(CantorConfig::make(4, 2.0, 1.0, 0.4), InvalidInput);   // r <= 1/p
  CHECK_THROWS_AS(CantorConfig::make(4, 2.0, 1.0, 1.0), InvalidInput);   // r >= 1/q
  CHECK_THROWS_AS(CantorConfig::make(4, 2.0, 2.0, 0.6), InvalidInput);   // q = p
  CHECK_THROWS_AS(CantorConfig::make(0, 2.0, 1.0, 0.7), InvalidInput);   // depth
  CHECK_NOTHROW(CantorConfig::make_boundary(4, 2.0, 1.0, 1.05));
  CHECK_THROWS_AS(CantorConfig::make_boundary(4, 2.0, 1.0, 0.4), InvalidInput);
  CHECK_THROWS_AS(cantor::build_cantor_instance(CantorConfig::make(14, 2.0, 1.0, 0.7)),
                  InvalidInput);  // too deep to materialize
}

TEST_CASE("boundary r stalls the lower bound by depth 64") {
  std::vector<int> depths;
  for (int d = 4; d <= 64; ++d) depths.push_back(d);
  const auto rows = cantor::divergence_sweep(2.0, 1.0, 1.05, depths, 0, true);
  CHECK(std::fabs(rows.back().ratio_to_prev - 1.0) <= 0.02);
}

TEST_CASE("verdict flags the counterexample trend on materialized instances") {
  const CantorConfig cfg = CantorConfig::make(6, 2.0, 1.0, 0.7);
  const auto built = cantor::build_cantor_instance(cfg);
  const tst::TestingReport report = tst::testing_report(built.instance);
  tst::NormEstimate est;
  est.method = tst::NormEstimate::Method::Ascent;
  est.witness = built.gap_function;
  est.value =
      ops::mixed_norm_of_talpha(built.instance, built.gap_function).value /
      ops::lp_norm(built.instance, built.gap_function, cfg.p, WeightSelector::Mu).value;
  const tst::Verdict v = tst::verdict(built.instance, report, est, 0.25);
  CHECK(v.counterexample_flag);
  CHECK(v.label == "C1 alone insufficient");

  // The witness ratio against C1 grows along the closed-form sweep.
  auto witness_over_c1 = [](int depth) {
    const CantorConfig c = CantorConfig::make(depth, 2.0, 1.0, 0.7);
    return std::sqrt(cantor::closed_form_lhs_lower(c)) /
           (cantor::closed_form_f_norm(c) * cantor::closed_form_c1_max(c));
  };
  CHECK(witness_over_c1(32) > witness_over_c1(16));
  CHECK(witness_over_c1(64) > witness_over_c1(32));
}

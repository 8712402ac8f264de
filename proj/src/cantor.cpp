#include "twlat/cantor.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <sstream>

#include "twlat/numeric.hpp"
#include "twlat/operators.hpp"

namespace twlat::cantor {

namespace {

constexpr int kMaxDepth = 13;  // 3^13 leaves is the materialization ceiling

std::int64_t ipow3(int n) {
  std::int64_t v = 1;
  for (int i = 0; i < n; ++i) v *= 3;
  return v;
}

void check_common(int depth, double p, double q, double r) {
  if (depth < 1) throw InvalidInput("depth must be >= 1");
  const ExponentPair pq(p, q);  // validates p > 1, q >= 1
  if (!(q < p)) throw InvalidInput("the construction requires q < p");
  if (!(r > 1.0 / p))
    throw InvalidInput("r must satisfy r > 1/p (else the gap function leaves L^p)");
  (void)pq;
}

// Position (1-based generation) of the first base-3 digit equal to 1 in the
// n-digit expansion of i; 0 when every digit lies in {0, 2}.
int first_middle_digit(std::int64_t i, int n) {
  for (int j = 1; j <= n; ++j) {
    const int digit = static_cast<int>((i / ipow3(n - j)) % 3);
    if (digit == 1) return j;
  }
  return 0;
}

}  // namespace

CantorConfig CantorConfig::make(int depth, double p, double q, double r) {
  check_common(depth, p, q, r);
  if (!(r < 1.0 / q))
    throw InvalidInput("r must satisfy 1/p < r < 1/q");
  return CantorConfig{depth, p, q, r};
}

CantorConfig CantorConfig::make_boundary(int depth, double p, double q, double r) {
  check_common(depth, p, q, r);
  return CantorConfig{depth, p, q, r};
}

CantorInstance build_cantor_instance(const CantorConfig& cfg) {
  const int N = cfg.depth;
  if (N > kMaxDepth)
    throw InvalidInput("depth " + std::to_string(N) +
                       " too large to materialize; use the closed-form operations");
  Lattice lat = Lattice::full_tree(3, N);
  const std::int64_t leaves = ipow3(N);
  const double mu_mass = 1.0 / static_cast<double>(ipow3(N));
  const double nu_mass = std::ldexp(1.0, -N);  // 2^{-N}, exact

  std::vector<double> mu(leaves, mu_mass);
  std::vector<double> nu(leaves, 0.0);
  std::vector<double> f(leaves, 0.0);
  for (std::int64_t i = 0; i < leaves; ++i) {
    const int j = first_middle_digit(i, N);
    if (j == 0)
      nu[i] = nu_mass;
    else
      f[i] = std::pow(1.5, j / cfg.p) * std::pow(static_cast<double>(j), -cfg.r);
  }

  // alpha lives on the components of each C_n; gap cells carry 0.
  std::vector<double> alpha(lat.cell_count(), 0.0);
  int cell = 0;
  for (int n = 0; n <= N; ++n) {
    const double a = std::pow(2.0 / 3.0, n / cfg.p);
    const std::int64_t count = ipow3(n);
    for (std::int64_t i = 0; i < count; ++i, ++cell)
      if (first_middle_digit(i, n) == 0) alpha[cell] = a;
  }

  Instance inst(std::move(lat), Weight(std::move(mu)), Weight(std::move(nu)),
                std::move(alpha), ExponentPair(cfg.p, cfg.q));
  return CantorInstance{std::move(inst), SimpleFunction(std::move(f))};
}

double closed_form_c1(const CantorConfig& cfg, int n) {
  if (n < 0 || n > cfg.depth) throw InvalidInput("generation out of range");
  // Finite geometric sum of alpha^q down the Cantor chain, matching the
  // engine's term-by-term arithmetic.
  double sum = 0.0;
  for (int k = cfg.depth; k >= n; --k)
    sum += pow_ext(std::pow(2.0 / 3.0, k / cfg.p), cfg.q);
  const double integral = std::pow(sum, cfg.p / cfg.q) * std::ldexp(1.0, -n);
  return std::pow(integral / std::pow(3.0, -n), 1.0 / cfg.p);
}

double closed_form_c1_max(const CantorConfig& cfg) { return closed_form_c1(cfg, 0); }

double closed_form_f_norm(const CantorConfig& cfg) {
  // g_n = 2^{n-1} maximal gaps of scale 3^{-n}, each of mass 3^{-n}.
  KahanSum sum;
  for (int n = 1; n <= cfg.depth; ++n) {
    const double f_n = std::pow(1.5, n / cfg.p) * std::pow(static_cast<double>(n), -cfg.r);
    sum.add(std::ldexp(1.0, n - 1) * std::pow(3.0, -n) * pow_ext(f_n, cfg.p));
  }
  return std::pow(sum.value(), 1.0 / cfg.p);
}

double closed_form_f_norm_tail(const CantorConfig& cfg) {
  // sum_{n > N} (1/2) n^{-pr} < (1/2) int_N^inf x^{-pr} dx.
  const double pr = cfg.p * cfg.r;
  return 0.5 * std::pow(static_cast<double>(cfg.depth), 1.0 - pr) / (pr - 1.0);
}

double closed_form_lhs_lower(const CantorConfig& cfg) {
  const double b = (1.0 / 3.0) * std::pow(1.5, 1.0 / cfg.p);
  KahanSum sum;
  for (int k = 0; k < cfg.depth; ++k)
    sum.add(pow_ext(b * std::pow(static_cast<double>(k + 1), -cfg.r), cfg.q));
  return std::pow(sum.value(), cfg.p / cfg.q);  // times nu(C_N) = 1
}

std::vector<CantorRow> divergence_sweep(double p, double q, double r,
                                        const std::vector<int>& depths, int materialize_cap,
                                        bool boundary) {
  std::vector<CantorRow> rows;
  double prev_lhs = 0.0;
  for (int depth : depths) {
    const CantorConfig cfg = boundary ? CantorConfig::make_boundary(depth, p, q, r)
                                      : CantorConfig::make(depth, p, q, r);
    CantorRow row;
    row.depth = depth;
    row.c1 = closed_form_c1_max(cfg);
    row.f_norm = closed_form_f_norm(cfg);
    row.lhs_lower = closed_form_lhs_lower(cfg);
    if (depth <= materialize_cap && depth <= kMaxDepth) {
      const CantorInstance built = build_cantor_instance(cfg);
      const double mixed =
          operators::mixed_norm_of_talpha(built.instance, built.gap_function).value;
      row.lhs_exact = pow_ext(mixed, p);
    }
    row.ratio_to_prev = prev_lhs > 0.0 ? row.lhs_lower / prev_lhs : 0.0;
    prev_lhs = row.lhs_lower;
    rows.push_back(row);
  }
  return rows;
}

std::string sweep_csv(const std::vector<CantorRow>& rows) {
  std::ostringstream out;
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  out << "depth,c1,f_norm,lhs_lower,lhs_exact,ratio_to_prev\n";
  for (const CantorRow& row : rows) {
    out << row.depth << ',' << num(row.c1) << ',' << num(row.f_norm) << ','
        << num(row.lhs_lower) << ',';
    if (row.lhs_exact) out << num(*row.lhs_exact);
    out << ',';
    if (row.ratio_to_prev > 0.0) out << num(row.ratio_to_prev);
    out << '\n';
  }
  return out.str();
}

double fit_growth_exponent(const std::vector<CantorRow>& rows) {
  const int n = static_cast<int>(rows.size());
  const int use = std::min(4, n);
  if (use < 2) throw InvalidInput("growth fit needs at least two rows");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = n - use; i < n; ++i) {
    const double x = std::log(static_cast<double>(rows[i].depth));
    const double y = std::log(rows[i].lhs_lower);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (use * sxy - sx * sy) / (use * sxx - sx * sx);
}

}  // namespace twlat::cantor

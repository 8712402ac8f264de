// twlat: two-weight testing on finite lattices.
//
// Subcommands: gen, verify, norm, cantor, rubio.
// Exit codes: 0 success / all checks hold, 1 computational failure,
//             2 invalid input, 3 invariant violation.

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "twlat/cantor.hpp"
#include "twlat/lattice.hpp"
#include "twlat/operators.hpp"
#include "twlat/prooftools.hpp"
#include "twlat/testing.hpp"

using namespace twlat;
namespace ops = twlat::operators;
namespace tst = twlat::testing;
namespace pt = twlat::prooftools;
using ordered_json = nlohmann::ordered_json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write '" + path + "'");
  out << content;
}

void emit(const ordered_json& doc, const std::string& out_path) {
  if (out_path.empty())
    std::cout << doc.dump(2) << "\n";
  else
    write_file(out_path, doc.dump(2) + "\n");
}

ordered_json estimate_json(const Instance& inst, const tst::NormEstimate& est) {
  ordered_json doc;
  doc["value"] = est.value;
  doc["method"] =
      est.method == tst::NormEstimate::Method::ExactQuadratic ? "exact-quadratic" : "ascent";
  doc["restarts"] = est.restarts;
  doc["converged"] = est.converged;
  doc["witness"] = ordered_json::parse(serialize_function(inst, est.witness));
  return doc;
}

SimpleFunction seeded_function(const Instance& inst, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  SimpleFunction f = SimpleFunction::zeros(inst.n_leaves());
  for (int pos = 0; pos < inst.n_leaves(); ++pos) {
    const bool zero = (static_cast<double>(rng() >> 11) * 0x1.0p-53) < 0.2;
    const double v = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    f[pos] = zero ? 0.0 : v;
  }
  return f;
}

// ---------------------------------------------------------------------------
// verify

struct CheckState {
  bool holds = true;
  double worst_slack = 0.0;
  long count = 0;
  ordered_json witness;

  void record(double slack, double tolerance, const ordered_json& info) {
    ++count;
    if (slack > worst_slack) worst_slack = slack;
    if (slack > tolerance && holds) {
      holds = false;
      witness = info;
    }
  }
};

double rel_excess(double lhs, double rhs) {
  // How far lhs pokes above rhs, relative; <= 0 means the inequality holds.
  const double scale = std::max({std::fabs(lhs), std::fabs(rhs), 1e-300});
  return (lhs - rhs) / scale;
}

struct VerifyOptions {
  int num_f = 8;
  int pairs = 8;
  int restarts = 32;
  double tol = 1e-12;
};

void verify_instance(const Instance& inst, std::uint64_t seed, const VerifyOptions& opt,
                     std::map<std::string, CheckState>& checks) {
  const ExponentPair& pq = inst.exponents();
  const Lattice& lat = inst.lattice();
  const tst::TestingReport report = tst::testing_report(inst);

  // Necessity: the mixed norm of an indicator dominates the per-cell C1 value.
  for (int c = 0; c < inst.n_cells(); ++c) {
    if (inst.mu_cell(c) == 0.0 || lat.chain_top(c) != c) continue;
    SimpleFunction ind = SimpleFunction::zeros(inst.n_leaves());
    for (int pos = lat.leaf_begin(c); pos < lat.leaf_end(c); ++pos) ind[pos] = 1.0;
    const double lhs = std::pow(ops::mixed_norm_of_talpha(inst, ind).value, pq.p);
    const double rhs = std::pow(report.c1_per_cell.at(lat.id_of(c)), pq.p) * inst.mu_cell(c);
    checks["necessity"].record(rel_excess(rhs, lhs), 1e-12,
                               {{"seed", seed}, {"cell", lat.id_of(c)}});
  }

  for (int i = 0; i < opt.num_f; ++i) {
    const SimpleFunction f = seeded_function(inst, seed * 1000 + i);
    ordered_json info{{"seed", seed}, {"f_index", i}};

    // Jensen direction, leafwise.
    const std::vector<double> lq = ops::talpha_lq_powers(inst, f);
    SimpleFunction fq = f;
    for (double& x : fq.values) x = std::pow(x, pq.q);
    const SimpleFunction red = ops::reduced_scalar_value(inst, fq);
    double jensen = -1.0;
    for (int pos = 0; pos < inst.n_leaves(); ++pos)
      jensen = std::max(jensen, rel_excess(lq[pos], red[pos]));
    checks["jensen"].record(jensen, 1e-12, info);

    const pt::DoobCheck doob = pt::doob_check(inst, f);
    checks["doob"].record(rel_excess(doob.lhs, doob.rhs), 1e-12, info);

    // The maximal function dominates every cell average.
    const SimpleFunction mf = ops::maximal(inst, f);
    const ops::CellAverages avg = ops::mu_averages(inst, f);
    double dom = -1.0;
    for (int c = 0; c < inst.n_cells(); ++c) {
      if (inst.mu_cell(c) == 0.0) continue;
      for (int pos = lat.leaf_begin(c); pos < lat.leaf_end(c); ++pos)
        dom = std::max(dom, rel_excess(std::fabs(avg.average[c]), mf[pos]));
    }
    checks["maximal-domination"].record(dom, 1e-12, info);

    if (pq.p <= pq.q) {
      const pt::ChainCertificate cert = pt::chain_certificate(inst, f);
      double worst = -1.0;
      for (const pt::ChainStep& step : cert.steps)
        worst = std::max(worst, rel_excess(step.lhs, step.rhs));
      checks["chain"].record(worst, 1e-10, info);
    } else {
      const pt::MajorantResult maj = pt::rubio_majorant(inst, f);
      double worst = -1.0;
      for (int pos = 0; pos < inst.n_leaves(); ++pos)
        worst = std::max(worst, rel_excess(f[pos], maj.F[pos]));
      worst = std::max(worst, rel_excess(std::pow(maj.norm_ratio, pq.q), 2.0));
      worst = std::max(worst, rel_excess(maj.a1_constant, 2.0 * pq.s_conj()));
      checks["rubio"].record(worst, 1e-10, info);
    }
  }

  if (pq.q < pq.p) {
    for (int i = 0; i < opt.pairs; ++i) {
      const SimpleFunction f = seeded_function(inst, seed * 2000 + i);
      const SimpleFunction g = seeded_function(inst, seed * 3000 + i);
      const pt::ReductionCheck rc = pt::reduction_compare(inst, f, g);
      const double slack =
          std::max(rel_excess(rc.holder_lhs, rc.holder_rhs),
                   rel_excess(rc.holder_rhs, rc.rubio_bound + rc.slack));
      checks["reduction"].record(slack, 1e-10, {{"seed", seed}, {"pair", i}});
    }
  }

  if (pq.p == 2.0 && pq.q == 2.0) {
    const tst::NormEstimate exact = tst::norm_exact_p2q2(inst);
    tst::AscentOptions aopt;
    aopt.random_restarts = opt.restarts;
    aopt.tol = 1e-12;
    const tst::NormEstimate ascent = tst::norm_ascent(inst, aopt);
    const double rel = exact.value > 0.0
                           ? std::fabs(ascent.value - exact.value) / exact.value
                           : std::fabs(ascent.value);
    checks["p2q2-oracle"].record(rel, 1e-6, {{"seed", seed}});
  }
}

int cmd_verify_run(const std::vector<std::pair<std::uint64_t, Instance>>& instances,
                   const VerifyOptions& opt, const std::string& out_path) {
  std::map<std::string, CheckState> checks;
  for (const auto& [seed, inst] : instances) {
    const ValidationReport vr = validate(inst.lattice());
    if (!vr.valid()) {
      ordered_json bad;
      for (const auto& v : vr.violations)
        bad.push_back({{"code", v.code}, {"cell", v.cell}, {"detail", v.detail}});
      emit({{"check", "validation"}, {"holds", false}, {"violations", bad}}, out_path);
      return 2;
    }
    verify_instance(inst, seed, opt, checks);
  }

  ordered_json doc;
  doc["instances"] = instances.size();
  bool all_hold = true;
  ordered_json arr = ordered_json::array();
  for (const auto& [name, state] : checks) {
    ordered_json c{{"name", name},
                   {"holds", state.holds},
                   {"worst_slack", state.worst_slack},
                   {"count", state.count}};
    if (!state.holds) c["witness"] = state.witness;
    all_hold = all_hold && state.holds;
    arr.push_back(c);
  }
  doc["checks"] = arr;
  doc["all_hold"] = all_hold;
  emit(doc, out_path);
  return all_hold ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-weight testing on finite lattices"};
  app.require_subcommand(1);

  // --- gen -----------------------------------------------------------------
  auto* gen = app.add_subcommand("gen", "generate a random instance file");
  std::uint64_t gen_seed = 1;
  RandomParams params;
  std::string gen_out;
  gen->add_option("--seed", gen_seed, "RNG seed")->required();
  gen->add_option("--branching", params.branching, "children per cell (>= 2)");
  gen->add_option("--depth", params.depth, "generations below the root (>= 1)");
  gen->add_option("--p", params.p, "exponent p > 1");
  gen->add_option("--q", params.q, "exponent q >= 1");
  gen->add_option("--mu-zero", params.mu_zero_fraction, "fraction of exact-zero mu masses");
  gen->add_option("--nu-zero", params.nu_zero_fraction, "fraction of exact-zero nu masses");
  gen->add_option("--alpha-zero", params.alpha_zero_fraction, "fraction of zero coefficients");
  gen->add_option("--out", gen_out, "output path")->required();

  // --- verify ----------------------------------------------------------------
  auto* verify = app.add_subcommand("verify", "run the invariant suite");
  std::string verify_in, verify_out, seed_range;
  VerifyOptions vopt;
  RandomParams vparams;
  verify->add_option("--in", verify_in, "instance file to verify");
  verify->add_option("--seeds", seed_range, "batch seed range A-B over random instances");
  verify->add_option("--branching", vparams.branching, "batch: branching");
  verify->add_option("--depth", vparams.depth, "batch: depth");
  verify->add_option("--p", vparams.p, "batch: exponent p");
  verify->add_option("--q", vparams.q, "batch: exponent q");
  verify->add_option("--num-f", vopt.num_f, "random test functions per instance");
  verify->add_option("--pairs", vopt.pairs, "random (f,g) pairs for the reduction");
  verify->add_option("--restarts", vopt.restarts, "ascent restarts for the p=q=2 oracle");
  verify->add_option("--out", verify_out, "report path (default: stdout)");

  // --- norm ------------------------------------------------------------------
  auto* norm = app.add_subcommand("norm", "estimate the operator norm");
  std::string norm_in, norm_method = "ascent", norm_out;
  int norm_restarts = 32;
  double norm_tol = 1e-10;
  norm->add_option("--in", norm_in, "instance file")->required();
  norm->add_option("--method", norm_method, "exact | ascent")
      ->check(CLI::IsMember({"exact", "ascent"}));
  norm->add_option("--restarts", norm_restarts, "random restarts (ascent)");
  norm->add_option("--tol", norm_tol, "relative improvement stop (ascent)");
  norm->add_option("--out", norm_out, "report path (default: stdout)");

  // --- cantor ----------------------------------------------------------------
  auto* cant = app.add_subcommand("cantor", "run the counterexample sweep");
  double cp = 2.0, cq = 1.0, cr = 0.7;
  std::string depths_str = "4,8,16,32,64", cantor_out;
  int materialize_cap = 10;
  bool boundary = false;
  cant->add_option("--p", cp, "exponent p");
  cant->add_option("--q", cq, "exponent q");
  cant->add_option("--r", cr, "gap decay exponent, 1/p < r < 1/q");
  cant->add_option("--depths", depths_str, "comma-separated depth list");
  cant->add_option("--materialize-cap", materialize_cap,
                   "materialize instances up to this depth");
  cant->add_flag("--boundary", boundary, "allow r >= 1/q for boundary studies");
  cant->add_option("--out", cantor_out, "CSV path (default: stdout)");

  // --- rubio -----------------------------------------------------------------
  auto* rubio = app.add_subcommand("rubio", "compute the Rubio de Francia majorant");
  std::string rubio_in, rubio_f, rubio_out;
  double rubio_tol = 1e-12;
  rubio->add_option("--in", rubio_in, "instance file")->required();
  rubio->add_option("--f", rubio_f, "function document")->required();
  rubio->add_option("--tol", rubio_tol, "series truncation tolerance");
  rubio->add_option("--out", rubio_out, "report path (default: stdout)");

  try {
    app.parse(argc, argv);

    if (gen->parsed()) {
      const Instance inst = random_instance(gen_seed, params);
      write_file(gen_out, serialize(inst) + "\n");
      std::cout << "cells=" << inst.n_cells() << " leaves=" << inst.n_leaves() << "\n";
      return 0;
    }

    if (verify->parsed()) {
      std::vector<std::pair<std::uint64_t, Instance>> instances;
      if (!verify_in.empty()) {
        instances.emplace_back(1, deserialize(read_file(verify_in)));
      } else if (!seed_range.empty()) {
        const auto dash = seed_range.find('-');
        const std::uint64_t a = std::stoull(seed_range.substr(0, dash));
        const std::uint64_t b =
            dash == std::string::npos ? a : std::stoull(seed_range.substr(dash + 1));
        if (b < a) throw InvalidInput("empty seed range");
        for (std::uint64_t s = a; s <= b; ++s) instances.emplace_back(s, random_instance(s, vparams));
      } else {
        throw InvalidInput("verify needs --in or --seeds");
      }
      return cmd_verify_run(instances, vopt, verify_out);
    }

    if (norm->parsed()) {
      const Instance inst = deserialize(read_file(norm_in));
      tst::NormEstimate est;
      if (norm_method == "exact") {
        est = tst::norm_exact_p2q2(inst);
      } else {
        tst::AscentOptions aopt;
        aopt.random_restarts = norm_restarts;
        aopt.tol = norm_tol;
        est = tst::norm_ascent(inst, aopt);
      }
      emit(estimate_json(inst, est), norm_out);
      return 0;
    }

    if (cant->parsed()) {
      std::vector<int> depths;
      std::stringstream ss(depths_str);
      for (std::string part; std::getline(ss, part, ',');)
        if (!part.empty()) depths.push_back(std::stoi(part));
      if (depths.empty()) throw InvalidInput("no depths given");
      const auto rows =
          cantor::divergence_sweep(cp, cq, cr, depths, materialize_cap, boundary);
      const std::string csv = cantor::sweep_csv(rows);
      if (cantor_out.empty())
        std::cout << csv;
      else
        write_file(cantor_out, csv);
      if (rows.size() >= 2)
        std::cout << "growth-exponent " << format_decimal(cantor::fit_growth_exponent(rows))
                  << "\n";
      return 0;
    }

    if (rubio->parsed()) {
      const Instance inst = deserialize(read_file(rubio_in));
      const SimpleFunction f = deserialize_function(inst, read_file(rubio_f));
      const pt::MajorantResult res = pt::rubio_majorant(inst, f, rubio_tol);
      ordered_json doc;
      doc["truncation_k"] = res.truncation_k;
      doc["norm_ratio"] = res.norm_ratio;
      doc["a1_constant"] = res.a1_constant;
      doc["a1_raw"] = std::isfinite(res.a1_raw) ? ordered_json(res.a1_raw) : ordered_json("infinity");
      doc["tail_bound"] = res.tail_bound;
      doc["measured_m_ratio"] = res.measured_m_ratio;
      doc["doob_m_bound"] = inst.exponents().s_conj();
      doc["F"] = ordered_json::parse(serialize_function(inst, res.F));
      emit(doc, rubio_out);
      return 0;
    }
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

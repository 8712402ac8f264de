#include "twlat/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <random>

#include <json.hpp>

namespace twlat {

using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// ExponentPair

ExponentPair::ExponentPair(double p_, double q_) : p(p_), q(q_) {
  if (!(p > 1.0) || !std::isfinite(p)) throw InvalidInput("exponent p must satisfy p > 1");
  if (!(q >= 1.0) || !std::isfinite(q)) throw InvalidInput("exponent q must satisfy q >= 1");
}

double ExponentPair::s_conj() const {
  if (!(p > q)) throw InvalidInput("(p/q)' undefined for p <= q");
  const double s = p / q;
  return s / (s - 1.0);
}

// ---------------------------------------------------------------------------
// Lattice

Lattice::Lattice(std::vector<std::vector<CellId>> generations,
                 const std::map<CellId, CellId>& parent)
    : generations_(std::move(generations)) {
  if (generations_.empty()) throw InvalidInput("lattice needs at least one generation");
  for (const auto& gen : generations_) {
    for (CellId id : gen) {
      if (id < 0) throw InvalidInput("negative cell id " + std::to_string(id));
      if (index_.count(id)) throw InvalidInput("duplicate cell id " + std::to_string(id));
      index_[id] = static_cast<int>(id_.size());
      id_.push_back(id);
    }
  }
  build_dense(parent);
}

void Lattice::build_dense(const std::map<CellId, CellId>& parent) {
  const int n = cell_count();
  gen_.assign(n, 0);
  parent_.assign(n, -1);
  children_.assign(n, {});
  for (int g = 0; g < generation_count(); ++g)
    for (CellId id : generations_[g]) gen_[index_.at(id)] = g;

  for (const auto& [child, par] : parent) {
    auto ci = index_.find(child);
    auto pi = index_.find(par);
    if (ci == index_.end())
      throw InvalidInput("parent map references unknown cell " + std::to_string(child));
    if (pi == index_.end())
      throw InvalidInput("parent map references unknown cell " + std::to_string(par));
    parent_[ci->second] = pi->second;
  }
  // Child order follows the generation listings, so leaf order is stable.
  for (int g = 1; g < generation_count(); ++g)
    for (CellId id : generations_[g]) {
      const int c = index_.at(id);
      if (parent_[c] != -1) children_[parent_[c]].push_back(c);
    }

  // Depth-first traversal from the roots assigns leaf positions and the
  // half-open leaf range of every reachable cell. Malformed structure
  // (cycles, orphans) is tolerated and surfaces in validate().
  leaf_pos_.assign(n, -1);
  leaf_begin_.assign(n, 0);
  leaf_end_.assign(n, 0);
  std::vector<char> visited(n, 0);
  const int last_gen = generation_count() - 1;

  struct Frame {
    int cell;
    std::size_t next_child;
  };
  std::vector<Frame> stack;
  for (CellId root_id : generations_[0]) {
    const int root = index_.at(root_id);
    if (parent_[root] != -1 || visited[root]) continue;
    stack.push_back({root, 0});
    visited[root] = 1;
    leaf_begin_[root] = static_cast<int>(leaf_cell_.size());
    while (!stack.empty()) {
      Frame& f = stack.back();
      if (f.next_child == 0 && gen_[f.cell] == last_gen) {
        leaf_pos_[f.cell] = static_cast<int>(leaf_cell_.size());
        leaf_cell_.push_back(f.cell);
      }
      if (f.next_child < children_[f.cell].size()) {
        const int ch = children_[f.cell][f.next_child++];
        if (!visited[ch]) {
          visited[ch] = 1;
          leaf_begin_[ch] = static_cast<int>(leaf_cell_.size());
          stack.push_back({ch, 0});
        }
      } else {
        leaf_end_[f.cell] = static_cast<int>(leaf_cell_.size());
        stack.pop_back();
      }
    }
  }
  // Final-generation cells the traversal never reached still need leaf slots.
  for (CellId id : generations_[last_gen]) {
    const int c = index_.at(id);
    if (leaf_pos_[c] == -1) {
      leaf_pos_[c] = static_cast<int>(leaf_cell_.size());
      leaf_begin_[c] = leaf_pos_[c];
      leaf_end_[c] = leaf_pos_[c] + 1;
      leaf_cell_.push_back(c);
    }
  }

  chain_top_.assign(n, -1);
  for (int c = 0; c < n; ++c) {
    const int par = parent_[c];
    if (par != -1 && par < c && leaf_begin_[par] == leaf_begin_[c] &&
        leaf_end_[par] == leaf_end_[c] && chain_top_[par] != -1) {
      chain_top_[c] = chain_top_[par];
    } else {
      chain_top_[c] = c;
    }
  }
}

Lattice Lattice::full_tree(int branching, int depth) {
  if (branching < 2) throw InvalidInput("branching must be >= 2");
  if (depth < 1) throw InvalidInput("depth must be >= 1");
  std::vector<std::vector<CellId>> gens(depth + 1);
  std::map<CellId, CellId> parent;
  CellId next = 0;
  std::vector<CellId> prev;
  for (int g = 0; g <= depth; ++g) {
    const std::size_t count = (g == 0) ? 1 : prev.size() * branching;
    std::vector<CellId> cur;
    cur.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      const CellId id = next++;
      cur.push_back(id);
      if (g > 0) parent[id] = prev[i / branching];
    }
    gens[g] = cur;
    prev = std::move(cur);
  }
  return Lattice(std::move(gens), parent);
}

int Lattice::index_of(CellId id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw InvalidInput("no such cell: " + std::to_string(id));
  return it->second;
}

bool Lattice::has_id(CellId id) const { return index_.count(id) != 0; }

// ---------------------------------------------------------------------------
// validate

ValidationReport validate(const Lattice& lat) {
  ValidationReport report;
  const int last_gen = lat.generation_count() - 1;

  for (int c = 0; c < lat.cell_count(); ++c) {
    const int g = lat.generation_of(c);
    const int par = lat.parent_of(c);
    if (g == 0) {
      if (par != -1)
        report.violations.push_back(
            {"parent-generation", lat.id_of(c), "generation-0 cell has a parent"});
      continue;
    }
    if (par == -1) {
      report.violations.push_back(
          {"parent-missing", lat.id_of(c), "non-root cell has no parent entry"});
    } else if (lat.generation_of(par) != g - 1) {
      report.violations.push_back(
          {"parent-generation", lat.id_of(c),
           "parent lies in generation " + std::to_string(lat.generation_of(par)) +
               ", expected " + std::to_string(g - 1)});
    }
  }

  for (int c = 0; c < lat.cell_count(); ++c) {
    if (lat.generation_of(c) == last_gen) continue;
    if (lat.children_of(c).empty()) {
      report.violations.push_back(
          {"refinement", lat.id_of(c), "cell has no children in the next generation"});
    } else if (lat.leaf_span(c) == 0) {
      report.violations.push_back(
          {"refinement", lat.id_of(c), "children cover no leaves of the cell"});
    }
  }

  // Partition: every leaf must see exactly one cell of each generation on its
  // ancestor chain.
  for (int pos = 0; pos < lat.leaf_count(); ++pos) {
    std::vector<int> seen(lat.generation_count(), 0);
    bool overrun = false;
    int steps = 0;
    lat.for_each_ancestor(lat.leaf_cell(pos), [&](int c) {
      if (++steps > lat.cell_count()) {
        overrun = true;  // parent chain loops
        return;
      }
      if (!overrun) seen[lat.generation_of(c)]++;
    });
    if (overrun) {
      report.violations.push_back(
          {"acyclic", lat.id_of(lat.leaf_cell(pos)), "ancestor chain does not terminate"});
      continue;
    }
    for (int g = 0; g < lat.generation_count(); ++g) {
      if (seen[g] != 1) {
        report.violations.push_back(
            {"partition", lat.id_of(lat.leaf_cell(pos)),
             "leaf has " + std::to_string(seen[g]) + " ancestors in generation " +
                 std::to_string(g)});
        break;
      }
    }
  }

  return report;
}

// ---------------------------------------------------------------------------
// Weight

Weight::Weight(std::vector<double> leaf_mass) : mass_(std::move(leaf_mass)) {
  for (double m : mass_)
    if (!(m >= 0.0) || !std::isfinite(m)) throw InvalidInput("leaf mass must be finite and >= 0");
}

Weight::Weight(const Lattice& lattice, const std::map<CellId, double>& leaf_mass)
    : mass_(lattice.leaf_count(), 0.0) {
  for (const auto& [id, m] : leaf_mass) {
    const int c = lattice.index_of(id);
    const int pos = lattice.leaf_pos(c);
    if (pos < 0)
      throw InvalidInput("mass assigned to non-leaf cell " + std::to_string(id));
    if (!(m >= 0.0) || !std::isfinite(m)) throw InvalidInput("leaf mass must be finite and >= 0");
    mass_[pos] = m;
  }
}

// ---------------------------------------------------------------------------
// Instance

Instance::Instance(Lattice lattice, Weight mu, Weight nu, std::vector<double> alpha_cells,
                   ExponentPair exponents)
    : lattice_(std::move(lattice)),
      mu_(std::move(mu)),
      nu_(std::move(nu)),
      alpha_(std::move(alpha_cells)),
      pq_(exponents) {
  finish();
}

Instance::Instance(Lattice lattice, Weight mu, Weight nu,
                   const std::map<CellId, double>& alpha, ExponentPair exponents)
    : lattice_(std::move(lattice)), mu_(std::move(mu)), nu_(std::move(nu)), pq_(exponents) {
  alpha_.assign(lattice_.cell_count(), 0.0);
  for (const auto& [id, a] : alpha) {
    if (!(a >= 0.0) || !std::isfinite(a)) throw InvalidInput("alpha must be finite and >= 0");
    alpha_[lattice_.index_of(id)] = a;
  }
  finish();
}

void Instance::finish() {
  const int n = lattice_.cell_count();
  if (mu_.size() != lattice_.leaf_count() || nu_.size() != lattice_.leaf_count())
    throw InvalidInput("weight size does not match leaf count");
  if (static_cast<int>(alpha_.size()) != n)
    throw InvalidInput("alpha size does not match cell count");
  for (double a : alpha_)
    if (!(a >= 0.0) || !std::isfinite(a)) throw InvalidInput("alpha must be finite and >= 0");

  // Bottom-up cell masses: dense indices are generation-major, so a reverse
  // scan sees children before parents.
  mu_cell_.assign(n, 0.0);
  nu_cell_.assign(n, 0.0);
  const int last_gen = lattice_.generation_count() - 1;
  for (int c = n - 1; c >= 0; --c) {
    if (lattice_.generation_of(c) == last_gen) {
      const int pos = lattice_.leaf_pos(c);
      mu_cell_[c] = mu_.leaf(pos);
      nu_cell_[c] = nu_.leaf(pos);
    } else {
      double sm = 0.0, sn = 0.0;
      for (int ch : lattice_.children_of(c)) {
        sm += mu_cell_[ch];
        sn += nu_cell_[ch];
      }
      mu_cell_[c] = sm;
      nu_cell_[c] = sn;
    }
  }

  for (int c = 0; c < n; ++c) {
    if (alpha_[c] > 0.0 && mu_cell_[c] == 0.0) {
      has_alpha_on_zero_mu_ = true;
      alpha_on_zero_mu_.push_back(lattice_.id_of(c));
    }
  }
}

double cell_mass(const Instance& instance, WeightSelector w, CellId cell) {
  return instance.cell_mass(w, instance.lattice().index_of(cell));
}

std::vector<CellId> cells_within(const Lattice& lat, CellId J) {
  const int j = lat.index_of(J);
  std::vector<CellId> out;

  // Generation copies above J carrying the identical leaf set.
  std::vector<int> above;
  for (int c = lat.parent_of(j); c != -1; c = lat.parent_of(c)) {
    if (lat.leaf_begin(c) == lat.leaf_begin(j) && lat.leaf_end(c) == lat.leaf_end(j))
      above.push_back(c);
    else
      break;
  }
  for (auto it = above.rbegin(); it != above.rend(); ++it) out.push_back(lat.id_of(*it));

  // Preorder subtree of J.
  std::vector<int> stack{j};
  while (!stack.empty()) {
    const int c = stack.back();
    stack.pop_back();
    out.push_back(lat.id_of(c));
    const auto& ch = lat.children_of(c);
    for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
  }
  return out;
}

// ---------------------------------------------------------------------------
// random_instance

namespace {

double uniform01(std::mt19937_64& rng) {
  // Fixed mapping, reproducible across platforms.
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

Instance random_instance(std::uint64_t seed, const RandomParams& params) {
  if (params.branching < 2) throw InvalidInput("branching must be >= 2");
  if (params.depth < 1) throw InvalidInput("depth must be >= 1");
  for (double z : {params.mu_zero_fraction, params.nu_zero_fraction, params.alpha_zero_fraction})
    if (!(z >= 0.0 && z <= 1.0)) throw InvalidInput("zero fraction must lie in [0, 1]");
  const ExponentPair pq(params.p, params.q);

  Lattice lat = Lattice::full_tree(params.branching, params.depth);
  std::mt19937_64 rng(seed);

  auto draw_masses = [&](double zero_fraction) {
    std::vector<double> m(lat.leaf_count());
    for (double& x : m) {
      const bool zero = uniform01(rng) < zero_fraction;
      const double v = uniform01(rng);
      x = zero ? 0.0 : v;
    }
    return m;
  };
  std::vector<double> mu = draw_masses(params.mu_zero_fraction);
  std::vector<double> nu = draw_masses(params.nu_zero_fraction);

  std::vector<double> alpha(lat.cell_count());
  for (double& a : alpha) {
    const bool zero = uniform01(rng) < params.alpha_zero_fraction;
    const double v = uniform01(rng);
    a = zero ? 0.0 : v;
  }

  return Instance(std::move(lat), Weight(std::move(mu)), Weight(std::move(nu)),
                  std::move(alpha), pq);
}

// ---------------------------------------------------------------------------
// serialization

std::string format_decimal(double x) {
  if (!std::isfinite(x)) throw NonFinite("cannot serialize non-finite value");
  char buf[64];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  std::string s(buf);
  if (s.find_first_of(".einf") == std::string::npos) s += ".0";
  return s;
}

namespace {

double parse_decimal(const ordered_json& v, const std::string& what) {
  double x;
  if (v.is_string()) {
    const std::string& s = v.get_ref<const std::string&>();
    char* end = nullptr;
    x = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0')
      throw InvalidInput("malformed decimal for " + what + ": '" + s + "'");
  } else if (v.is_number()) {
    x = v.get<double>();
  } else {
    throw InvalidInput("expected decimal string for " + what);
  }
  if (!std::isfinite(x)) throw InvalidInput("non-finite value for " + what);
  return x;
}

CellId parse_id(const std::string& key) {
  char* end = nullptr;
  const long long id = std::strtoll(key.c_str(), &end, 10);
  if (end == key.c_str() || *end != '\0' || id < 0)
    throw InvalidInput("malformed cell id '" + key + "'");
  return static_cast<CellId>(id);
}

ordered_json mass_object(const Lattice& lat, const std::vector<double>& leaf_mass) {
  ordered_json obj = ordered_json::object();
  for (int pos = 0; pos < lat.leaf_count(); ++pos) {
    if (leaf_mass[pos] != 0.0)
      obj[std::to_string(lat.id_of(lat.leaf_cell(pos)))] = format_decimal(leaf_mass[pos]);
  }
  return obj;
}

}  // namespace

std::string serialize(const Instance& inst) {
  const Lattice& lat = inst.lattice();
  ordered_json doc;
  doc["p"] = format_decimal(inst.exponents().p);
  doc["q"] = format_decimal(inst.exponents().q);
  ordered_json gens = ordered_json::array();
  for (const auto& g : lat.generations()) gens.push_back(g);
  doc["generations"] = std::move(gens);
  ordered_json parent = ordered_json::object();
  for (int g = 1; g < lat.generation_count(); ++g)
    for (CellId id : lat.generations()[g]) {
      const int c = lat.index_of(id);
      if (lat.parent_of(c) != -1)
        parent[std::to_string(id)] = lat.id_of(lat.parent_of(c));
    }
  doc["parent"] = std::move(parent);
  std::vector<double> mu(lat.leaf_count()), nu(lat.leaf_count());
  for (int pos = 0; pos < lat.leaf_count(); ++pos) {
    mu[pos] = inst.mu_leaf(pos);
    nu[pos] = inst.nu_leaf(pos);
  }
  doc["mu"] = mass_object(lat, mu);
  doc["nu"] = mass_object(lat, nu);
  ordered_json alpha = ordered_json::object();
  for (int c = 0; c < lat.cell_count(); ++c)
    if (inst.alpha(c) != 0.0) alpha[std::to_string(lat.id_of(c))] = format_decimal(inst.alpha(c));
  doc["alpha"] = std::move(alpha);
  return doc.dump();
}

Instance deserialize(const std::string& document) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(document);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidInput(std::string("parse error: ") + e.what());
  }
  if (!doc.is_object()) throw InvalidInput("instance document must be a JSON object");
  for (const char* field : {"p", "q", "generations", "parent", "mu", "nu"})
    if (!doc.contains(field))
      throw InvalidInput(std::string("instance document missing field '") + field + "'");

  const ExponentPair pq(parse_decimal(doc["p"], "p"), parse_decimal(doc["q"], "q"));

  if (!doc["generations"].is_array()) throw InvalidInput("'generations' must be an array");
  std::vector<std::vector<CellId>> gens;
  for (const auto& g : doc["generations"]) {
    if (!g.is_array()) throw InvalidInput("each generation must be an array of cell ids");
    std::vector<CellId> level;
    for (const auto& v : g) {
      if (!v.is_number_integer() || v.get<long long>() < 0)
        throw InvalidInput("cell ids must be nonnegative integers");
      level.push_back(v.get<CellId>());
    }
    gens.push_back(std::move(level));
  }

  if (!doc["parent"].is_object()) throw InvalidInput("'parent' must be an object");
  std::map<CellId, CellId> parent;
  for (const auto& [key, val] : doc["parent"].items()) {
    if (!val.is_number_integer() || val.get<long long>() < 0)
      throw InvalidInput("parent values must be nonnegative integer cell ids");
    parent[parse_id(key)] = val.get<CellId>();
  }

  Lattice lat(std::move(gens), parent);

  auto read_masses = [&](const char* field) {
    if (!doc[field].is_object())
      throw InvalidInput(std::string("'") + field + "' must be an object");
    std::map<CellId, double> m;
    for (const auto& [key, val] : doc[field].items())
      m[parse_id(key)] = parse_decimal(val, std::string(field) + " mass");
    return Weight(lat, m);
  };
  Weight mu = read_masses("mu");
  Weight nu = read_masses("nu");

  std::map<CellId, double> alpha;
  if (doc.contains("alpha")) {
    if (!doc["alpha"].is_object()) throw InvalidInput("'alpha' must be an object");
    for (const auto& [key, val] : doc["alpha"].items())
      alpha[parse_id(key)] = parse_decimal(val, "alpha");
  }

  return Instance(std::move(lat), std::move(mu), std::move(nu), alpha, pq);
}

std::string serialize_function(const Instance& inst, const SimpleFunction& f) {
  const Lattice& lat = inst.lattice();
  if (f.size() != lat.leaf_count()) throw InvalidInput("function size does not match leaf count");
  ordered_json obj = ordered_json::object();
  for (int pos = 0; pos < lat.leaf_count(); ++pos)
    if (f[pos] != 0.0) obj[std::to_string(lat.id_of(lat.leaf_cell(pos)))] = format_decimal(f[pos]);
  return obj.dump();
}

SimpleFunction deserialize_function(const Instance& inst, const std::string& document) {
  ordered_json obj;
  try {
    obj = ordered_json::parse(document);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidInput(std::string("parse error: ") + e.what());
  }
  if (!obj.is_object()) throw InvalidInput("function document must be a JSON object");
  SimpleFunction f = SimpleFunction::zeros(inst.n_leaves());
  const Lattice& lat = inst.lattice();
  for (const auto& [key, val] : obj.items()) {
    const int c = lat.index_of(parse_id(key));
    const int pos = lat.leaf_pos(c);
    if (pos < 0) throw InvalidInput("function value assigned to non-leaf cell " + key);
    f[pos] = parse_decimal(val, "function value");
  }
  return f;
}

}  // namespace twlat

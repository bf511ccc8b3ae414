#include "oscilab/config.hpp"

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

namespace oscilab {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, CheckKind, std::less<>>& check_table() {
  static const std::map<std::string, CheckKind, std::less<>> t{{"persistence", CheckKind::Persistence},
                                                               {"reduction", CheckKind::Reduction},
                                                               {"low-index", CheckKind::LowIndex},
                                                               {"count", CheckKind::Count},
                                                               {"convergence", CheckKind::Convergence}};
  return t;
}

bool is_power_of_two(double x) {
  int e = 0;
  return x > 0.0 && std::frexp(x, &e) == 0.5;
}

// Keys each section accepts; anything else is a typo we refuse to ignore.
const std::map<std::string, std::set<std::string>>& allowed_keys() {
  static const std::map<std::string, std::set<std::string>> k{
      {"coefficient", {"family", "lattice_b1", "lattice_b2", "params", "lambda", "random_modes"}},
      {"boundary", {"a", "b", "cos", "radius"}},
      {"sweep", {"epsilons", "cell_n", "mesh_ratio", "h_max", "max_triangles", "rungs", "seed"}},
      {"checks", {"run", "ell", "L", "delta_persistence", "delta_reduction", "radius", "chain"}},
      {"output", {"dir", "workers"}}};
  return k;
}

template <class T>
T get_int(const pt::ptree& s, const std::string& key, T fallback) {
  const auto v = s.get_optional<std::string>(key);
  if (!v) return fallback;
  const std::string t = boost::trim_copy(*v);
  T out{};
  const auto r = std::from_chars(t.data(), t.data() + t.size(), out);
  if (r.ec != std::errc() || r.ptr != t.data() + t.size()) throw ConfigError("key " + key + ": not an integer: " + t);
  return out;
}

double get_number(const pt::ptree& s, const std::string& key, double fallback) {
  const auto v = s.get_optional<std::string>(key);
  if (!v) return fallback;
  try {
    return parse_number(*v);
  } catch (const ConfigError& e) {
    throw ConfigError("key " + key + ": " + e.what());
  }
}

Vec2 get_vec2(const pt::ptree& s, const std::string& key, const Vec2& fallback) {
  const auto v = s.get_optional<std::string>(key);
  if (!v) return fallback;
  const auto xs = parse_number_list(*v);
  if (xs.size() != 2) throw ConfigError("key " + key + ": expected two numbers");
  return {xs[0], xs[1]};
}

}  // namespace

std::string_view check_name(CheckKind k) {
  for (const auto& [name, kind] : check_table()) {
    if (kind == k) return name;
  }
  return "unknown";
}

CheckKind parse_check(std::string_view name) {
  const auto it = check_table().find(name);
  if (it == check_table().end()) throw ConfigError("unknown check: " + std::string(name));
  return it->second;
}

bool ChecksConfig::wants(CheckKind k) const { return std::find(run.begin(), run.end(), k) != run.end(); }

double parse_number(std::string_view text) {
  std::string t = boost::trim_copy(std::string(text));
  if (t.empty()) throw ConfigError("empty number");
  const auto slash = t.find('/');
  auto parse = [](const std::string& s) {
    const std::string u = boost::trim_copy(s);
    double out = 0.0;
    const auto r = std::from_chars(u.data(), u.data() + u.size(), out);
    if (u.empty() || r.ec != std::errc() || r.ptr != u.data() + u.size()) {
      throw ConfigError("not a number: " + u);
    }
    return out;
  };
  double v = 0.0;
  if (slash == std::string::npos) {
    v = parse(t);
  } else {
    const double den = parse(t.substr(slash + 1));
    if (den == 0.0) throw ConfigError("zero denominator: " + t);
    v = parse(t.substr(0, slash)) / den;
  }
  if (!std::isfinite(v)) throw ConfigError("non-finite number: " + t);
  return v;
}

std::vector<double> parse_number_list(std::string_view text) {
  std::string t = boost::trim_copy(std::string(text));
  if (!t.empty() && t.front() == '[') {
    if (t.back() != ']') throw ConfigError("unterminated list: " + t);
    t = t.substr(1, t.size() - 2);
  }
  std::vector<std::string> parts;
  boost::split(parts, t, boost::is_any_of(", \t"), boost::token_compress_on);
  std::vector<double> out;
  for (const auto& p : parts) {
    if (boost::trim_copy(p).empty()) continue;
    out.push_back(parse_number(p));
  }
  return out;
}

std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

std::vector<double> random_fourier_params(std::uint64_t seed, int modes) {
  if (modes < 1 || modes > 8) throw ConfigError("random_modes must be in 1..8");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> k(-2, 2);
  std::uniform_real_distribution<double> c(-1.0, 1.0);
  const double amp = 0.3 / modes;
  std::vector<double> p{2.0, 0.0, 2.0};
  for (int i = 0; i < modes; ++i) {
    int k1 = 0, k2 = 0;
    while (k1 == 0 && k2 == 0) {
      k1 = k(rng);
      k2 = k(rng);
    }
    p.push_back(k1);
    p.push_back(k2);
    for (int j = 0; j < 6; ++j) p.push_back(amp * c(rng));
  }
  return p;
}

FamilySpec ExperimentConfig::resolved_coefficient() const {
  FamilySpec s = coefficient;
  if (random_modes > 0) s.params = random_fourier_params(sweep.seed, random_modes);
  return s;
}

double ExperimentConfig::mesh_h(double epsilon) const { return std::min(epsilon / sweep.mesh_ratio, sweep.h_max); }

void ExperimentConfig::validate_problem() const {
  if (random_modes < 0) throw ConfigError("random_modes must be >= 0");
  if (random_modes > 0) {
    if (coefficient.family != Family::FourierGeneral) throw ConfigError("random_modes needs family fourier-general");
    if (!coefficient.params.empty()) throw ConfigError("give either params or random_modes, not both");
    random_fourier_params(sweep.seed, random_modes);
  }
  // Rejects bad parameter layouts and non-elliptic input up front.
  build_family(resolved_coefficient());
  boundary.validate();
  const auto& e = sweep.epsilons;
  if (e.empty()) throw ConfigError("epsilons: empty ladder");
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (!is_power_of_two(e[i]) || e[i] > 1.0) throw ConfigError("epsilons: not a dyadic value <= 1");
    if (i > 0 && !(e[i] < e[i - 1])) throw ConfigError("epsilons: ladder must be strictly decreasing");
  }
  if (!(sweep.R > 0.0)) throw ConfigError("radius must be positive");
  if (sweep.cell_n < 8 || sweep.cell_n > 2048) throw ConfigError("cell_n must be in 8..2048");
  if (!(sweep.mesh_ratio >= 8.0)) throw ConfigError("mesh_ratio must be >= 8 (h <= epsilon / 8)");
  if (!(sweep.h_max > 0.0) || sweep.h_max > 1.0 / 64) throw ConfigError("h_max must be in (0, 1/64]");
  if (!(sweep.max_triangles > 0.0)) throw ConfigError("max_triangles must be positive");
  if (sweep.rungs < 1 || sweep.rungs > 12) throw ConfigError("rungs must be in 1..12");
  for (double eps : e) {
    const double h = mesh_h(eps);
    const int m = ring_count_for(sweep.R, h);
    if (6.0 * m * m > sweep.max_triangles) {
      throw BudgetError("epsilon " + std::to_string(eps) + " needs " + std::to_string(6.0 * m * m) +
                        " triangles, above max_triangles");
    }
  }
}

void ExperimentConfig::validate() const {
  validate_problem();
  const auto& e = sweep.epsilons;
  if (checks.run.empty()) throw ConfigError("checks: nothing to run");
  std::set<CheckKind> seen(checks.run.begin(), checks.run.end());
  if (seen.size() != checks.run.size()) throw ConfigError("checks: duplicate entry");
  ReductionParams{checks.ell, checks.delta_persistence, checks.L}.validate();
  ReductionParams{checks.ell, checks.delta_reduction, checks.L}.validate();
  if (!(checks.radius > 0.0) || 2.0 * checks.radius > sweep.R) {
    throw ConfigError("checks radius must be positive with 2 r <= R");
  }
  if (checks.chain < 1 || checks.chain > 10) throw ConfigError("chain must be in 1..10");
  if (checks.wants(CheckKind::Count) || checks.wants(CheckKind::LowIndex)) {
    if (sweep.R < 2.0) throw ConfigError("count and low-index checks need R >= 2");
  }
  if (checks.wants(CheckKind::Convergence) && e.size() < 2) {
    throw ConfigError("convergence check needs at least two epsilons");
  }
}

Json ExperimentConfig::semantic_json() const {
  const FamilySpec s = coefficient;
  // The run list is a set: its order does not change the experiment.
  auto kinds = checks.run;
  std::sort(kinds.begin(), kinds.end());
  Json checks_run = Json::array();
  for (auto k : kinds) checks_run.push_back(std::string(check_name(k)));
  return Json{{"coefficient",
               {{"family", std::string(family_name(s.family))},
                {"lattice_b1", to_json(s.lattice.b1)},
                {"lattice_b2", to_json(s.lattice.b2)},
                {"params", s.params},
                {"lambda", s.lambda_target},
                {"random_modes", random_modes}}},
              {"boundary", to_json(boundary)},
              {"sweep",
               {{"epsilons", sweep.epsilons},
                {"radius", sweep.R},
                {"cell_n", sweep.cell_n},
                {"mesh_ratio", sweep.mesh_ratio},
                {"h_max", sweep.h_max},
                {"max_triangles", sweep.max_triangles},
                {"rungs", sweep.rungs},
                {"seed", sweep.seed}}},
              {"checks",
               {{"run", checks_run},
                {"ell", checks.ell},
                {"L", checks.L},
                {"delta_persistence", checks.delta_persistence},
                {"delta_reduction", checks.delta_reduction},
                {"radius", checks.radius},
                {"chain", checks.chain}}}};
}

std::string ExperimentConfig::hash() const { return sha256_hex(semantic_json().dump()); }

ExperimentConfig parse_config(const std::string& text, bool require_coefficient) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }
  for (const auto& [section, body] : tree) {
    const auto it = allowed_keys().find(section);
    if (it == allowed_keys().end()) throw ConfigError("unknown section [" + section + "]");
    if (body.empty() && !body.data().empty()) throw ConfigError("key outside a section: " + section);
    for (const auto& [key, value] : body) {
      if (!it->second.count(key)) throw ConfigError("unknown key " + key + " in [" + section + "]");
    }
  }

  ExperimentConfig c;
  const pt::ptree empty;
  const auto& co = tree.get_child("coefficient", empty);
  if (const auto f = co.get_optional<std::string>("family")) {
    try {
      c.coefficient.family = parse_family(boost::trim_copy(*f));
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("key family: ") + e.what());
    }
  } else if (require_coefficient) {
    throw ConfigError("[coefficient] family is required");
  } else {
    c.coefficient = builtin_families()[1];
  }
  if (const auto p = co.get_optional<std::string>("params")) {
    c.coefficient.params = parse_number_list(*p);
  } else if (!co.count("random_modes")) {
    // Without params the family takes its built-in parameters.
    for (const auto& b : builtin_families()) {
      if (b.family == c.coefficient.family) c.coefficient.params = b.params;
    }
  }
  c.coefficient.lattice.b1 = get_vec2(co, "lattice_b1", c.coefficient.lattice.b1);
  c.coefficient.lattice.b2 = get_vec2(co, "lattice_b2", c.coefficient.lattice.b2);
  c.coefficient.lambda_target = get_number(co, "lambda", c.coefficient.lambda_target);
  c.random_modes = get_int(co, "random_modes", 0);

  const auto& bd = tree.get_child("boundary", empty);
  if (const auto k = bd.get_optional<std::string>("cos")) {
    if (bd.count("a") || bd.count("b")) throw ConfigError("[boundary] give either cos or a/b");
    c.boundary = BoundaryData::cosine(get_int(bd, "cos", 0));
  } else if (bd.count("a") || bd.count("b")) {
    c.boundary = BoundaryData{};
    if (const auto a = bd.get_optional<std::string>("a")) c.boundary.a = parse_number_list(*a);
    if (const auto b = bd.get_optional<std::string>("b")) c.boundary.b = parse_number_list(*b);
  }
  c.sweep.R = get_number(bd, "radius", c.sweep.R);

  const auto& sw = tree.get_child("sweep", empty);
  if (const auto e = sw.get_optional<std::string>("epsilons")) c.sweep.epsilons = parse_number_list(*e);
  c.sweep.cell_n = get_int(sw, "cell_n", c.sweep.cell_n);
  c.sweep.mesh_ratio = get_number(sw, "mesh_ratio", c.sweep.mesh_ratio);
  c.sweep.h_max = get_number(sw, "h_max", c.sweep.h_max);
  c.sweep.max_triangles = get_number(sw, "max_triangles", c.sweep.max_triangles);
  c.sweep.rungs = get_int(sw, "rungs", c.sweep.rungs);
  c.sweep.seed = get_int<std::uint64_t>(sw, "seed", c.sweep.seed);

  const auto& ch = tree.get_child("checks", empty);
  if (const auto r = ch.get_optional<std::string>("run")) {
    std::string t = boost::trim_copy(*r);
    if (!t.empty() && t.front() == '[' && t.back() == ']') t = t.substr(1, t.size() - 2);
    std::vector<std::string> names;
    boost::split(names, t, boost::is_any_of(", \t"), boost::token_compress_on);
    c.checks.run.clear();
    for (const auto& n : names) {
      if (!boost::trim_copy(n).empty()) c.checks.run.push_back(parse_check(boost::trim_copy(n)));
    }
  }
  c.checks.ell = get_int(ch, "ell", c.checks.ell);
  c.checks.L = get_int(ch, "L", c.checks.L);
  c.checks.delta_persistence = get_number(ch, "delta_persistence", c.checks.delta_persistence);
  c.checks.delta_reduction = get_number(ch, "delta_reduction", c.checks.delta_reduction);
  c.checks.radius = get_number(ch, "radius", c.checks.radius);
  c.checks.chain = get_int(ch, "chain", c.checks.chain);

  const auto& out = tree.get_child("output", empty);
  if (const auto d = out.get_optional<std::string>("dir")) c.output_dir = boost::trim_copy(*d);
  c.workers = get_int(out, "workers", 0u);

  c.validate();
  return c;
}

ExperimentConfig load_config(const fs::path& path, bool require_coefficient) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), require_coefficient);
}

}  // namespace oscilab

#include "oscilab/harness.hpp"

#include <atomic>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fcntl.h>
#include <mutex>
#include <sstream>
#include <thread>
#include <unistd.h>

namespace oscilab {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string num(double x) {
  if (!std::isfinite(x)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string eps_key(double eps) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "eps=%g", eps);
  return buf;
}

// cos<l> for a single unit cosine mode, otherwise "fourier".
std::string boundary_label(const BoundaryData& g) {
  for (int l = 1; l <= BoundaryData::kMaxDegree; ++l) {
    if (g == BoundaryData::cosine(l)) return "cos" + std::to_string(l);
  }
  return "fourier";
}

// Degree l when g is a single mode r^l (a cos + b sin) and the coefficients
// are constant, so the solution is a harmonic polynomial; otherwise 0.
int harmonic_oracle_degree(const ExperimentConfig& c) {
  if (c.coefficient.family != Family::Constant) return 0;
  int found = 0;
  for (int l = 0; l <= BoundaryData::kMaxDegree; ++l) {
    const double a = l < static_cast<int>(c.boundary.a.size()) ? c.boundary.a[static_cast<std::size_t>(l)] : 0.0;
    const double b = l < static_cast<int>(c.boundary.b.size()) ? c.boundary.b[static_cast<std::size_t>(l)] : 0.0;
    if (a == 0.0 && b == 0.0) continue;
    if (found != 0 || l == 0) return 0;
    found = l;
  }
  return found;
}

CheckReport unresolved(std::string check, std::string note) {
  CheckReport r;
  r.check = std::move(check);
  r.verdict = Verdict::Unresolvable;
  r.note = std::move(note);
  return r;
}

CheckReport count_check(const std::optional<CriticalReport>& crit, const std::string& error, int oracle_degree,
                        double h) {
  if (!crit) return unresolved("count", "critical detection failed: " + error);
  CheckReport r;
  r.check = "count";
  Measured closure;
  closure.name = "degree sum == boundary winding";
  closure.radius = crit->radius;
  closure.value = crit->degree_sum;
  closure.bound = crit->boundary_winding;
  closure.holds = crit->consistent;
  r.hypotheses.push_back(closure);
  if (!crit->consistent) {
    r.verdict = Verdict::Unresolvable;
    r.note = "argument-principle closure failed after " + std::to_string(crit->attempts) + " attempts";
    return r;
  }
  r.verdict = Verdict::Satisfied;
  if (oracle_degree > 0) {
    const OracleRecord oracle = harmonic_poly_critical(oracle_degree);
    Measured c;
    c.name = "count == harmonic oracle count";
    c.radius = crit->radius;
    c.value = crit->count;
    c.bound = static_cast<double>(oracle.points.size());
    c.holds = crit->count == static_cast<int>(oracle.points.size());
    for (std::size_t k = 0; c.holds && k < oracle.points.size(); ++k) {
      c.holds = crit->points[k].winding == oracle.windings[k] &&
                (crit->points[k].location - oracle.points[k]).norm() <= 2.0 * h;
    }
    r.conclusions.push_back(c);
    r.slack = c.holds ? 0.0 : -std::abs(c.value - c.bound);
    if (!c.holds) {
      r.verdict = Verdict::Violated;
      r.note = "detected critical set differs from the harmonic oracle";
    }
  }
  return r;
}

void run_pool(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& fn) {
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(count)));
  std::atomic<std::size_t> next{0};
  auto body = [&] {
    for (std::size_t i = next++; i < count; i = next++) fn(i);
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(body);
  body();
  for (auto& t : pool) t.join();
}

unsigned resolve_workers(unsigned w) { return w ? w : std::max(1u, std::thread::hardware_concurrency()); }

Json row_json(const EpsilonRow& row, const std::string& hash) {
  Json j{{"config_hash", hash}, {"epsilon", row.epsilon}, {"h", row.h}};
  j["mesh"] = row.mesh ? to_json(*row.mesh) : Json(nullptr);
  if (row.mesh) {
    j["solve"] = Json{{"residual", row.solve.residual},
                      {"iterations", row.solve.iterations},
                      {"energy", row.solve.energy},
                      {"max_principle_excess", row.solve.max_principle_excess}};
  } else {
    j["solve"] = nullptr;
  }
  j["ball_doubling"] = row.ball_doubling ? Json(*row.ball_doubling) : Json(nullptr);
  j["profile"] = row.profile ? to_json(*row.profile) : Json(nullptr);
  j["critical"] = row.critical ? to_json(*row.critical) : Json(nullptr);
  Json checks = Json::array();
  for (const auto& c : row.checks) checks.push_back(to_json(c));
  j["checks"] = checks;
  j["errors"] = row.errors;
  return j;
}

}  // namespace

std::string_view report_scope_note() {
  return "The suprema over all admissible coefficients and solutions are not computable. This report covers one "
         "coefficient configuration; the family sweep and the scaling-invariance suite stand in for them.";
}

CellStage compute_cell_stage(const FamilySpec& spec, int n) {
  const auto t0 = Clock::now();
  CellStage s;
  s.raw_field = build_family(spec);
  s.raw = solve_cell_problem(s.raw_field, n);
  s.margin = invertibility_margin(s.raw, &s.raw_field);
  auto [t, f] = normalize(s.raw, s.raw_field);
  s.transform = t;
  s.field = std::move(f);
  s.normalized = solve_cell_problem(s.field, n);
  s.seconds = seconds_since(t0);
  return s;
}

ExperimentResult run_pipeline(const ExperimentConfig& config, unsigned workers, const CellStage* cached) {
  config.validate();
  workers = resolve_workers(workers);
  ExperimentResult res;
  res.config_hash = config.hash();
  res.config = config.semantic_json();
  const FamilySpec spec = config.resolved_coefficient();
  res.label = std::string(family_name(spec.family)) + "/" + boundary_label(config.boundary);

  std::optional<CellStage> own;
  const CellStage* cell = cached;
  if (cell) {
    if (cell->raw_field.fingerprint() != build_family(spec).fingerprint() || cell->raw.grid.n != config.sweep.cell_n) {
      throw ConfigError("precomputed cell stage does not match the configuration");
    }
  } else {
    own = compute_cell_stage(spec, config.sweep.cell_n);
    cell = &*own;
    res.timings["cell"] = own->seconds;
  }
  static const char* margin_names[] = {"positive", "resolved-at-refinement", "violation"};
  res.cell = Json{{"raw", corrector_json(cell->raw)},
                  {"normalized", corrector_json(cell->normalized)},
                  {"margin", Json{{"mu_min", cell->margin.mu_min},
                                  {"n", cell->margin.n},
                                  {"status", margin_names[static_cast<int>(cell->margin.status)]}}},
                  {"P", to_json(cell->transform.P)},
                  {"field", cell->field.fingerprint()}};

  const auto& eps = config.sweep.epsilons;
  const std::size_t n = eps.size();
  const auto& checks = config.checks;
  const bool want_critical = checks.wants(CheckKind::Count) || checks.wants(CheckKind::LowIndex);
  const int oracle_degree = harmonic_oracle_degree(config);
  const double r_top = std::min(1.0, 0.5 * config.sweep.R);

  res.rows.resize(n);
  std::vector<std::unique_ptr<SolutionField>> solutions(n);
  std::vector<std::map<std::string, double>> times(n);
  const unsigned outer = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  const unsigned inner = std::max(1u, workers / outer);

  run_pool(n, outer, [&](std::size_t i) {
    EpsilonRow& row = res.rows[i];
    auto& tm = times[i];
    const std::string key = eps_key(eps[i]);
    row.epsilon = eps[i];
    row.h = config.mesh_h(eps[i]);
    auto stage = [&](const std::string& name, auto&& fn) {
      const auto t0 = Clock::now();
      try {
        fn();
      } catch (const std::exception& e) {
        row.errors[name] = e.what();
      }
      tm[key + "/" + name] = seconds_since(t0);
    };

    stage("solve", [&] {
      SolveOptions o;
      o.h = row.h;
      o.max_triangles = config.sweep.max_triangles;
      o.workers = inner;
      solutions[i] = std::make_unique<SolutionField>(
          assemble_solve(EpsProblem{cell->field, eps[i], config.sweep.R, config.boundary}, o));
      row.mesh = mesh_stats(solutions[i]->mesh());
      row.solve = solutions[i]->info();
      row.solve.residual_history.clear();
    });
    const SolutionField* u = solutions[i].get();
    if (!u) {
      for (auto k : checks.run) {
        if (k == CheckKind::Convergence) continue;
        row.checks.push_back(unresolved(std::string(check_name(k)), "solve failed: " + row.errors["solve"]));
      }
      return;
    }
    stage("profile", [&] { row.profile = doubling_profile(*u, Vec2::Zero(), r_top, config.sweep.rungs); });
    if (u->contains_disk(Vec2::Zero(), 2.0)) {
      stage("ball_doubling", [&] { row.ball_doubling = ball_doubling(*u, Vec2::Zero(), 1.0); });
    }
    if (want_critical) {
      stage("critical", [&] { row.critical = detect_critical_points(*u, Vec2::Zero(), 0.5); });
    }
    for (auto k : checks.run) {
      const std::string name(check_name(k));
      if (k == CheckKind::Convergence) continue;
      const auto t0 = Clock::now();
      try {
        switch (k) {
          case CheckKind::Persistence:
            row.checks.push_back(check_persistence(
                *u, Vec2::Zero(), checks.radius, {checks.ell, checks.delta_persistence, checks.L}, checks.chain));
            break;
          case CheckKind::Reduction:
            row.checks.push_back(
                check_reduction(*u, Vec2::Zero(), checks.radius, {checks.ell, checks.delta_reduction, checks.L}));
            break;
          case CheckKind::LowIndex:
            row.checks.push_back(
                check_low_index_noncritical(*u, Vec2::Zero(), {}, row.critical ? &*row.critical : nullptr));
            break;
          case CheckKind::Count: {
            const auto it = row.errors.find("critical");
            row.checks.push_back(count_check(row.critical, it == row.errors.end() ? "" : it->second, oracle_degree,
                                             u->mesh_size()));
            break;
          }
          case CheckKind::Convergence:
            break;
        }
      } catch (const std::exception& e) {
        row.checks.push_back(unresolved(name, e.what()));
      }
      tm[key + "/check/" + name] = seconds_since(t0);
    }
  });
  for (const auto& tm : times) res.timings.insert(tm.begin(), tm.end());

  for (const auto& row : res.rows) {
    for (const auto& c : row.checks) {
      VerdictRow v{c.check, row.epsilon, c.verdict, std::nullopt, c.note};
      if (!c.conclusions.empty()) v.slack = c.slack;
      res.verdicts.push_back(v);
    }
  }

  if (checks.wants(CheckKind::Count)) {
    VerdictRow v{"count", std::nullopt, Verdict::Satisfied, std::nullopt, ""};
    std::ostringstream counts;
    bool complete = true, constant = true;
    const EpsilonRow* first = nullptr;
    for (const auto& row : res.rows) {
      if (!row.critical || !row.critical->consistent) {
        complete = false;
        continue;
      }
      counts << (first ? ", " : "") << row.critical->count << " (degree " << row.critical->degree_sum << ")";
      if (!first) {
        first = &row;
      } else if (row.critical->count != first->critical->count ||
                 row.critical->degree_sum != first->critical->degree_sum) {
        constant = false;
      }
    }
    if (!complete) {
      v.verdict = Verdict::Unresolvable;
      v.note = "some rung has no closed critical report; counts so far: " + counts.str();
    } else {
      v.verdict = constant ? Verdict::Satisfied : Verdict::Violated;
      v.note = "counts along the ladder: " + counts.str();
    }
    res.verdicts.push_back(v);
  }

  if (checks.wants(CheckKind::Convergence)) {
    VerdictRow v{"convergence", std::nullopt, Verdict::Unresolvable, std::nullopt, ""};
    std::vector<const SolutionField*> ladder;
    for (const auto& s : solutions) {
      if (s) ladder.push_back(s.get());
    }
    const auto t0 = Clock::now();
    if (ladder.size() < 2) {
      v.note = "fewer than two solved rungs";
    } else {
      try {
        res.convergence = convergence_report(ladder, cell->normalized);
        const auto& c = *res.convergence;
        v.verdict = c.degradation_flag ? Verdict::Violated : Verdict::Satisfied;
        v.note = std::string("value column ") + (c.value_strictly_decreasing ? "" : "not ") +
                 "strictly decreasing; gradient column " + (c.gradient_strictly_decreasing ? "" : "not ") +
                 "strictly decreasing" + (c.degradation_flag ? "; growth above 10% between rungs" : "");
        if (ladder.size() < n) v.note += "; some rungs failed to solve";
      } catch (const std::exception& e) {
        v.note = e.what();
      }
    }
    res.timings["convergence"] = seconds_since(t0);
    res.verdicts.push_back(v);
  }
  return res;
}

Json ExperimentResult::to_json() const {
  Json rows_json = Json::array();
  for (const auto& r : rows) rows_json.push_back(row_json(r, config_hash));
  Json verdicts_json = Json::array();
  for (const auto& v : verdicts) {
    verdicts_json.push_back(Json{{"check", v.check},
                                 {"epsilon", v.epsilon ? Json(*v.epsilon) : Json(nullptr)},
                                 {"verdict", std::string(verdict_name(v.verdict))},
                                 {"slack", v.slack ? Json(*v.slack) : Json(nullptr)},
                                 {"note", v.note}});
  }
  Json conv = nullptr;
  if (convergence) {
    Json crow = Json::array();
    for (const auto& r : convergence->rows) {
      crow.push_back(Json{{"epsilon", r.epsilon},
                          {"h", r.h},
                          {"sup_value_error", r.sup_value_error},
                          {"sup_gradient_error", r.sup_gradient_error}});
    }
    conv = Json{{"rows", crow},
                {"value_strictly_decreasing", convergence->value_strictly_decreasing},
                {"gradient_strictly_decreasing", convergence->gradient_strictly_decreasing},
                {"degradation_flag", convergence->degradation_flag}};
  }
  return Json{{"header",
               {{"tool", "oscilab"},
                {"format", 1},
                {"label", label},
                {"config_hash", config_hash},
                {"scope", std::string(report_scope_note())}}},
              {"config", config},
              {"cell", cell},
              {"rows", rows_json},
              {"convergence", conv},
              {"verdicts", verdicts_json}};
}

std::string ExperimentResult::to_csv() const {
  std::ostringstream os;
  std::vector<std::string> check_cols;
  for (const auto& c : config.at("checks").at("run")) {
    if (c.get<std::string>() != "convergence") check_cols.push_back(c.get<std::string>());
  }
  os << "config_hash,label,epsilon,h,nodes,triangles,residual,iterations,ball_doubling,nstar_top,critical_count,"
        "degree_sum,boundary_winding,closure,sup_value_error,sup_gradient_error,mu_min";
  for (const auto& c : check_cols) os << ',' << c;
  os << ",errors\n";
  for (const auto& r : rows) {
    os << config_hash << ',' << label << ',' << num(r.epsilon) << ',' << num(r.h) << ',';
    if (r.mesh) {
      os << r.mesh->nodes << ',' << r.mesh->triangles << ',' << num(r.solve.residual) << ',' << r.solve.iterations;
    } else {
      os << ",,,";
    }
    os << ',' << (r.ball_doubling ? num(*r.ball_doubling) : "") << ',';
    if (r.profile && !r.profile->values.empty() && r.profile->errors[0].empty()) os << num(r.profile->values[0]);
    os << ',';
    if (r.critical) {
      os << r.critical->count << ',' << r.critical->degree_sum << ',' << r.critical->boundary_winding << ','
         << (r.critical->consistent ? "closed" : "open");
    } else {
      os << ",,,";
    }
    os << ',';
    const ConvergenceRow* cr = nullptr;
    if (convergence) {
      for (const auto& c : convergence->rows) {
        if (c.epsilon == r.epsilon) cr = &c;
      }
    }
    if (cr) {
      os << num(cr->sup_value_error) << ',' << num(cr->sup_gradient_error);
    } else {
      os << ',';
    }
    os << ',' << num(cell.at("raw").at("mu_min").get<double>());
    for (const auto& name : check_cols) {
      os << ',';
      for (const auto& c : r.checks) {
        if (c.check == name) os << verdict_name(c.verdict);
      }
    }
    os << ',';
    bool first = true;
    for (const auto& [stage, _] : r.errors) {
      os << (first ? "" : ";") << stage;
      first = false;
    }
    os << '\n';
  }
  return os.str();
}

int ExperimentResult::exit_code() const {
  bool unresolvable = false;
  for (const auto& v : verdicts) {
    if (v.verdict == Verdict::Violated) return 2;
    if (v.verdict == Verdict::Unresolvable) unresolvable = true;
  }
  return unresolvable ? 4 : 0;
}

DirectoryLock::DirectoryLock(const fs::path& dir) : path_(dir / ".oscilab.lock") {
  fs::create_directories(dir);
  const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    if (errno == EEXIST) {
      throw LockError("output directory " + dir.string() + " is in use (remove " + path_.string() +
                      " if no run owns it)");
    }
    throw LockError("cannot create " + path_.string() + ": " + std::strerror(errno));
  }
  const std::string pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] const auto w = ::write(fd, pid.data(), pid.size());
  ::close(fd);
}

DirectoryLock::~DirectoryLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

ExperimentResult run_experiment(const ExperimentConfig& config, const fs::path& out_dir, unsigned workers) {
  config.validate();
  DirectoryLock lock(out_dir);
  ExperimentResult res = run_pipeline(config, workers);
  write_json(out_dir / "results.json", res.to_json());
  write_text(out_dir / "results.csv", res.to_csv());
  write_json(out_dir / "timings.json", Json{{"config_hash", res.config_hash}, {"seconds", res.timings}});
  return res;
}

std::vector<ExperimentResult> run_family_sweep(const ExperimentConfig& base, unsigned workers) {
  std::vector<ExperimentResult> out;
  for (const auto& spec : builtin_families()) {
    ExperimentConfig c = base;
    c.coefficient = spec;
    c.random_modes = 0;
    const CellStage cell = compute_cell_stage(spec, c.sweep.cell_n);
    for (int l = 1; l <= 3; ++l) {
      c.boundary = BoundaryData::cosine(l);
      out.push_back(run_pipeline(c, workers, &cell));
      out.back().timings["cell"] = cell.seconds;
    }
  }
  return out;
}

Json ScalingComparison::to_json() const {
  return Json{{"theta", theta},
              {"epsilon", epsilon},
              {"radii", radii},
              {"nstar_base", nstar_base},
              {"nstar_scaled", nstar_scaled},
              {"max_difference", max_difference},
              {"count_base", count_base},
              {"count_scaled", count_scaled},
              {"verdict", std::string(verdict_name(verdict))},
              {"note", note}};
}

ScalingComparison compare_scaled(const PlanarField& u, const PlanarField& v, double theta, double r_top, int rungs,
                                 double count_radius, double tolerance) {
  ScalingComparison c;
  c.theta = theta;
  c.epsilon = u.oscillation_scale();
  std::vector<std::string> problems;
  for (int j = 0; j < rungs; ++j) {
    const double r = std::ldexp(r_top, -j);
    try {
      const double a = doubling_index(u, Vec2::Zero(), r);
      const double b = doubling_index(v, Vec2::Zero(), r / theta);
      c.radii.push_back(r);
      c.nstar_base.push_back(a);
      c.nstar_scaled.push_back(b);
      c.max_difference = std::max(c.max_difference, std::abs(a - b));
    } catch (const DegenerateError& e) {
      problems.push_back("rung r=" + num(r) + ": " + e.what());
    }
  }
  try {
    const auto a = detect_critical_points(u, Vec2::Zero(), count_radius);
    const auto b = detect_critical_points(v, Vec2::Zero(), count_radius / theta);
    c.count_base = a.count;
    c.count_scaled = b.count;
    if (!a.consistent || !b.consistent) problems.push_back("critical report without closure");
  } catch (const Error& e) {
    problems.push_back(std::string("detection: ") + e.what());
  }
  std::ostringstream note;
  note << "counts " << c.count_base << " / " << c.count_scaled << ", max |N* difference| " << c.max_difference;
  for (const auto& p : problems) note << "; " << p;
  c.note = note.str();
  if (!problems.empty()) {
    c.verdict = Verdict::Unresolvable;
  } else if (c.count_base == c.count_scaled && c.max_difference <= tolerance) {
    c.verdict = Verdict::Satisfied;
  } else {
    c.verdict = Verdict::Violated;
  }
  return c;
}

Json ScalingReport::to_json() const {
  Json pairs_json = Json::array();
  for (const auto& p : pairs) pairs_json.push_back(p.to_json());
  return Json{{"label", label}, {"theta", theta}, {"verdict", std::string(verdict_name(verdict))}, {"pairs", pairs_json}};
}

ScalingReport scaling_invariance_suite(const ExperimentConfig& config, double theta, unsigned workers,
                                       const CellStage* cached) {
  if (theta != 2.0 && theta != 4.0) throw ConfigError("theta must be 2 or 4 (dyadic scalings only)");
  {
    // The suite runs its own comparison; only the problem setup must validate.
    ExperimentConfig c = config;
    c.checks.run = {CheckKind::Count};
    c.validate();
  }
  workers = resolve_workers(workers);
  const FamilySpec spec = config.resolved_coefficient();
  std::optional<CellStage> own;
  const CellStage* cell = cached;
  if (!cell) {
    own = compute_cell_stage(spec, config.sweep.cell_n);
    cell = &*own;
  }
  ScalingReport rep;
  rep.label = std::string(family_name(spec.family)) + "/" + boundary_label(config.boundary);
  rep.theta = theta;
  const double R = config.sweep.R;
  const double r_top = std::min(1.0, 0.5 * R);
  for (double eps : config.sweep.epsilons) {
    const double h = config.mesh_h(eps);
    const int m = ring_count_for(R, h);
    if (6.0 * m * m > config.sweep.max_triangles) throw BudgetError("scaled problem exceeds max_triangles");
    SolveOptions o;
    o.h = h;
    o.max_triangles = config.sweep.max_triangles;
    o.workers = workers;
    const auto base = assemble_solve(EpsProblem{cell->field, eps, R, config.boundary}, o);
    o.h = h / theta;
    const auto scaled = assemble_solve(EpsProblem{cell->field, eps / theta, R / theta, config.boundary}, o);
    rep.pairs.push_back(compare_scaled(base, scaled, theta, r_top, config.sweep.rungs, 0.5, 1e-3));
    rep.pairs.back().epsilon = eps;
  }
  bool unresolved = false, violated = false;
  for (const auto& p : rep.pairs) {
    violated |= p.verdict == Verdict::Violated;
    unresolved |= p.verdict == Verdict::Unresolvable;
  }
  rep.verdict = violated ? Verdict::Violated : unresolved ? Verdict::Unresolvable : Verdict::Satisfied;
  return rep;
}

std::string_view figure_file(Figure f) {
  switch (f) {
    case Figure::CountVsEpsilon:
      return "count_vs_epsilon.csv";
    case Figure::NstarVsRadius:
      return "nstar_vs_radius.csv";
    case Figure::ErrorVsEpsilon:
      return "error_vs_epsilon.csv";
  }
  return "unknown.csv";
}

std::vector<fs::path> emit_plot_data(const std::vector<ExperimentResult>& records, const fs::path& dir,
                                     const std::vector<Figure>& figures) {
  if (records.empty()) throw ConfigError("empty input: no records to plot");
  if (figures.empty()) throw ConfigError("empty input: no figures requested");
  auto requested = [](const ExperimentResult& r, const char* check) {
    for (const auto& c : r.config.at("checks").at("run")) {
      if (c.get<std::string>() == check) return true;
    }
    return false;
  };
  std::vector<std::string> absent;
  for (auto f : figures) {
    for (const auto& r : records) {
      if (f == Figure::CountVsEpsilon && !requested(r, "count")) absent.push_back(r.label + ": count");
      if (f == Figure::ErrorVsEpsilon && !requested(r, "convergence")) absent.push_back(r.label + ": convergence");
    }
  }
  if (!absent.empty()) {
    std::string msg = "absent checks for the requested figures:";
    for (const auto& a : absent) msg += " [" + a + "]";
    throw ConfigError(msg);
  }
  fs::create_directories(dir);
  std::vector<fs::path> written;
  for (auto f : figures) {
    std::ostringstream os;
    switch (f) {
      case Figure::CountVsEpsilon:
        os << "label,config_hash,epsilon,h,count,degree_sum,boundary_winding,closure\n";
        for (const auto& r : records) {
          for (const auto& row : r.rows) {
            os << r.label << ',' << r.config_hash << ',' << num(row.epsilon) << ',' << num(row.h) << ',';
            if (row.critical) {
              os << row.critical->count << ',' << row.critical->degree_sum << ',' << row.critical->boundary_winding
                 << ',' << (row.critical->consistent ? "closed" : "open");
            } else {
              os << ",,,failed";
            }
            os << '\n';
          }
        }
        break;
      case Figure::NstarVsRadius:
        os << "label,config_hash,epsilon,r,nstar,reliable\n";
        for (const auto& r : records) {
          for (const auto& row : r.rows) {
            if (!row.profile) continue;
            const auto& p = *row.profile;
            for (std::size_t k = 0; k < p.radii.size(); ++k) {
              os << r.label << ',' << r.config_hash << ',' << num(row.epsilon) << ',' << num(p.radii[k]) << ','
                 << (p.errors[k].empty() ? num(p.values[k]) : "") << ',' << (p.reliable[k] ? 1 : 0) << '\n';
            }
          }
        }
        break;
      case Figure::ErrorVsEpsilon:
        os << "label,config_hash,epsilon,h,sup_value_error,sup_gradient_error\n";
        for (const auto& r : records) {
          if (!r.convergence) continue;
          for (const auto& c : r.convergence->rows) {
            os << r.label << ',' << r.config_hash << ',' << num(c.epsilon) << ',' << num(c.h) << ','
               << num(c.sup_value_error) << ',' << num(c.sup_gradient_error) << '\n';
          }
        }
        break;
    }
    const fs::path p = dir / std::string(figure_file(f));
    write_text(p, os.str());
    written.push_back(p);
  }
  return written;
}

}  // namespace oscilab

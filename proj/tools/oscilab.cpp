// oscilab command line: cell | solve | doubling | critical | experiment | check.
//
// Exit codes: 0 all verdicts satisfied or not-applicable, 2 some verdict
// violated, 3 configuration (or budget) error, 4 no violation but some verdict
// unresolvable, 1 any other failure.

#include "oscilab/harness.hpp"
#include "oscilab/io.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

using namespace oscilab;

namespace {

void print_verdicts(const std::string& label, const std::vector<VerdictRow>& rows) {
  for (const auto& v : rows) {
    std::printf("%-28s %-12s %-9s %-15s %s\n", label.c_str(), v.check.c_str(),
                v.epsilon ? std::to_string(*v.epsilon).substr(0, 8).c_str() : "ladder",
                std::string(verdict_name(v.verdict)).c_str(), v.note.c_str());
  }
}

int verdict_exit(Verdict v) {
  switch (v) {
    case Verdict::Violated:
      return 2;
    case Verdict::Unresolvable:
      return 4;
    default:
      return 0;
  }
}

// Violations dominate unresolvable outcomes, which dominate success.
int combine_exit(int a, int b) {
  if (a == 2 || b == 2) return 2;
  return std::max(a, b);
}

void emit(const Json& j, const std::string& out) {
  if (out.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    write_json(out, j);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"oscilab: numerical homogenization lab for critical points of oscillating elliptic solutions"};
  app.require_subcommand(1);
  unsigned workers = 0;
  app.add_option("--workers", workers, "Worker threads (0 = all cores)");

  std::string config_path, out;

  auto* cell = app.add_subcommand("cell", "Cell problem, homogenized matrix and invertibility margin");
  int cell_n = 0;
  bool raw_fields = false;
  cell->add_option("--config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  cell->add_option("--n", cell_n, "Cell grid size (default: [sweep] cell_n)");
  cell->add_option("--out", out, "Output directory")->required();
  cell->add_flag("--raw", raw_fields, "Also write chi_1, chi_2 as flat arrays");

  auto* solve = app.add_subcommand("solve", "Solve the epsilon problem on the disk");
  std::string epsilon_text;
  double h = 0.0;
  bool reference = false;
  solve->add_option("--config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  solve->add_option("--epsilon", epsilon_text, "Oscillation scale, a power of two such as 1/16")->required();
  solve->add_option("--spacing", h, "Mesh spacing h (default: the config's mesh rule)");
  solve->add_option("--out", out, "Output directory")->required();
  solve->add_flag("--reference", reference, "Also write the harmonic reference on the same mesh");

  auto* doubling = app.add_subcommand("doubling", "Doubling profile and persistence / reduction checks");
  std::string solution_dir, check_kind;
  std::vector<double> center{0.0, 0.0};
  double radius = 1.0, delta = -1.0;
  int rungs = 5, ell = 2;
  doubling->add_option("--solution", solution_dir, "Solution directory")->required()->check(CLI::ExistingDirectory);
  doubling->add_option("--center", center, "Center X Y")->expected(2);
  doubling->add_option("--r", radius, "Top radius");
  doubling->add_option("--rungs", rungs, "Number of dyadic rungs");
  doubling->add_option("--check", check_kind, "persistence | reduction")
      ->check(CLI::IsMember({"persistence", "reduction"}));
  doubling->add_option("--ell", ell, "Index ell of the check");
  doubling->add_option("--delta", delta, "delta of the check (default 1/4 persistence, 1/2 reduction)");
  doubling->add_option("--out", out, "Output file (default stdout)");

  auto* critical = app.add_subcommand("critical", "Critical points of a saved solution in a disk");
  std::vector<double> region{0.0, 0.0, 0.5};
  critical->add_option("--solution", solution_dir, "Solution directory")->required()->check(CLI::ExistingDirectory);
  critical->add_option("--region", region, "cx cy r")->expected(3);
  critical->add_option("--out", out, "Output file (default stdout)");

  auto* experiment = app.add_subcommand("experiment", "Run one configuration through the full pipeline");
  bool plots = false;
  experiment->add_option("--config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  experiment->add_option("--out", out, "Output directory (default: [output] dir)");
  experiment->add_flag("--plots", plots, "Also write per-figure CSV files under <out>/plots");

  auto* check = app.add_subcommand("check", "All checks over the built-in family sweep, then the scaling suite");
  double theta = 2.0;
  check->add_option("--config", config_path, "Config file ([sweep] and [checks] are used)")
      ->check(CLI::ExistingFile);
  check->add_option("--out", out, "Output directory (default: [output] dir)");
  check->add_option("--theta", theta, "Scaling suite factor, 2 or 4; 0 skips the suite");

  for (auto* sub : {cell, solve, doubling, critical, experiment, check}) {
    sub->add_option("--workers", workers, "Worker threads (0 = all cores)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 3;
  }

  try {
    if (*cell) {
      const auto cfg = load_config(config_path);
      const auto stage = compute_cell_stage(cfg.resolved_coefficient(), cell_n > 0 ? cell_n : cfg.sweep.cell_n);
      save_corrector(out, stage.raw, raw_fields);
      Json j = corrector_json(stage.raw);
      j["config_hash"] = cfg.hash();
      j["normalization"] = Json{{"P", to_json(stage.transform.P)},
                                {"A_hat_normalized", to_json(stage.normalized.A_hat)},
                                {"mu_min_normalized", stage.normalized.mu_min}};
      write_json(fs::path(out) / "corrector.json", j);
      std::printf("A_hat = [[%.10g, %.10g], [%.10g, %.10g]]  mu_min = %.10g  residual = %.3g\n", stage.raw.A_hat(0, 0),
                  stage.raw.A_hat(0, 1), stage.raw.A_hat(1, 0), stage.raw.A_hat(1, 1), stage.raw.mu_min,
                  stage.raw.residual);
      return 0;
    }
    if (*solve) {
      auto cfg = load_config(config_path);
      const double epsilon = parse_number(epsilon_text);
      cfg.sweep.epsilons = {epsilon};
      cfg.validate_problem();
      const auto stage = compute_cell_stage(cfg.resolved_coefficient(), cfg.sweep.cell_n);
      SolveOptions o;
      o.h = h > 0.0 ? h : cfg.mesh_h(epsilon);
      o.max_triangles = cfg.sweep.max_triangles;
      o.workers = workers;
      const auto u = assemble_solve(EpsProblem{stage.field, epsilon, cfg.sweep.R, cfg.boundary}, o);
      const auto u0 = harmonic_reference(cfg.boundary, cfg.sweep.R);
      save_solution(out, u, Json{{"config_hash", cfg.hash()}}, reference ? &u0 : nullptr);
      std::printf("epsilon = %g  h = %.6g  triangles = %zu  residual = %.3g  iterations = %d\n", epsilon,
                  u.mesh_size(), u.mesh().triangle_count(), u.info().residual, u.info().iterations);
      return 0;
    }
    if (*doubling) {
      const auto u = load_solution(solution_dir);
      const Vec2 x0(center[0], center[1]);
      Json j{{"profile", to_json(doubling_profile(u, x0, radius, rungs))}};
      int code = 0;
      if (!check_kind.empty()) {
        ReductionParams p;
        p.ell = ell;
        if (check_kind == "persistence") {
          p.delta = delta > 0.0 ? delta : 0.25;
          const auto r = check_persistence(u, x0, radius, p);
          j["check"] = to_json(r);
          code = verdict_exit(r.verdict);
        } else {
          p.delta = delta > 0.0 ? delta : 0.5;
          const auto r = check_reduction(u, x0, radius, p);
          j["check"] = to_json(r);
          code = verdict_exit(r.verdict);
        }
      }
      emit(j, out);
      return code;
    }
    if (*critical) {
      const auto u = load_solution(solution_dir);
      const auto rep = detect_critical_points(u, Vec2(region[0], region[1]), region[2]);
      emit(to_json(rep), out);
      return rep.consistent ? 0 : 4;
    }
    if (*experiment) {
      const auto cfg = load_config(config_path);
      const fs::path dir = out.empty() ? fs::path(cfg.output_dir) : fs::path(out);
      const auto res = run_experiment(cfg, dir, workers ? workers : cfg.workers);
      if (plots) emit_plot_data({res}, dir / "plots");
      print_verdicts(res.label, res.verdicts);
      std::printf("results written to %s (config %s)\n", dir.c_str(), res.config_hash.substr(0, 12).c_str());
      return res.exit_code();
    }
    if (*check) {
      ExperimentConfig cfg;
      if (!config_path.empty()) {
        cfg = load_config(config_path, false);
      } else {
        cfg.coefficient = builtin_families()[1];
      }
      const fs::path dir = out.empty() ? fs::path(cfg.output_dir) : fs::path(out);
      if (theta != 0.0 && theta != 2.0 && theta != 4.0) throw ConfigError("theta must be 0, 2 or 4");
      const unsigned w = workers ? workers : cfg.workers;
      DirectoryLock lock(dir);
      const auto results = run_family_sweep(cfg, w);
      Json sweep = Json::array();
      std::string csv = "label,config_hash,check,epsilon,verdict,slack,note\n";
      int code = 0;
      for (const auto& r : results) {
        sweep.push_back(r.to_json());
        print_verdicts(r.label, r.verdicts);
        for (const auto& v : r.verdicts) {
          std::string note = v.note;
          for (auto& c : note) {
            if (c == ',' || c == '\n') c = ';';
          }
          csv += r.label + "," + r.config_hash + "," + v.check + "," + (v.epsilon ? std::to_string(*v.epsilon) : "") +
                 "," + std::string(verdict_name(v.verdict)) + "," + (v.slack ? std::to_string(*v.slack) : "") + "," +
                 note + "\n";
        }
        code = combine_exit(code, r.exit_code());
      }
      Json scaling = Json::array();
      if (theta != 0.0) {
        for (const auto& spec : builtin_families()) {
          ExperimentConfig c = cfg;
          c.coefficient = spec;
          c.random_modes = 0;
          c.boundary = BoundaryData::cosine(2);
          c.sweep.epsilons = {cfg.sweep.epsilons.front()};
          const auto rep = scaling_invariance_suite(c, theta, w);
          scaling.push_back(rep.to_json());
          VerdictRow v{"scaling", c.sweep.epsilons.front(), rep.verdict, std::nullopt,
                       rep.pairs.empty() ? "" : rep.pairs.front().note};
          print_verdicts(rep.label, {v});
          csv += rep.label + ",," + "scaling," + std::to_string(v.epsilon.value()) + "," +
                 std::string(verdict_name(rep.verdict)) + ",,\n";
          code = combine_exit(code, verdict_exit(rep.verdict));
        }
      }
      write_json(dir / "sweep.json", Json{{"header", {{"tool", "oscilab"}, {"scope", std::string(report_scope_note())}}},
                                          {"experiments", sweep},
                                          {"scaling", scaling}});
      write_text(dir / "verdicts.csv", csv);
      emit_plot_data(results, dir / "plots");
      std::printf("sweep written to %s\n", dir.c_str());
      return code;
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 3;
  } catch (const BudgetError& e) {
    std::fprintf(stderr, "budget refused: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

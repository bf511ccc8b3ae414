#pragma once

#include "oscilab/config.hpp"
#include "oscilab/critical.hpp"
#include "oscilab/doubling.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace oscilab {

/// Cell solve of the raw field, its normalization, and the corrector of the
/// normalized field (the one the expansion checks use).
struct CellStage {
  CoefficientField raw_field;
  CorrectorSolution raw;
  MarginReport margin;
  NormalizingTransform transform;
  CoefficientField field;
  CorrectorSolution normalized;
  double seconds = 0.0;
};

CellStage compute_cell_stage(const FamilySpec& spec, int n);

struct EpsilonRow {
  double epsilon = 0.0;
  double h = 0.0;
  std::optional<MeshStats> mesh;
  SolveInfo solve;
  /// N of mean_{B(0,2)} u^2 <= 4^N mean_{B(0,1)} u^2.
  std::optional<double> ball_doubling;
  std::optional<DoublingProfile> profile;
  std::optional<CriticalReport> critical;
  std::vector<CheckReport> checks;
  /// stage -> message, for every stage that threw.
  std::map<std::string, std::string> errors;
};

struct VerdictRow {
  std::string check;
  /// Empty for ladder-level verdicts.
  std::optional<double> epsilon;
  Verdict verdict = Verdict::NotApplicable;
  std::optional<double> slack;
  std::string note;
};

struct ExperimentResult {
  std::string config_hash;
  Json config;
  std::string label;
  Json cell;
  std::vector<EpsilonRow> rows;
  std::optional<ConvergenceReport> convergence;
  std::vector<VerdictRow> verdicts;
  /// Kept out of to_json() so results stay byte-identical across runs.
  std::map<std::string, double> timings;

  Json to_json() const;
  std::string to_csv() const;
  /// 0: only satisfied / not-applicable; 2: some violated; 4: otherwise unresolvable.
  int exit_code() const;
};

/// Text placed in every report header.
std::string_view report_scope_note();

/// The pipeline without file output. `cell` may carry a precomputed stage for
/// the same coefficient spec and cell resolution.
ExperimentResult run_pipeline(const ExperimentConfig& config, unsigned workers = 0,
                              const CellStage* cell = nullptr);

/// run_pipeline, then results.json, results.csv and timings.json under
/// `out_dir`, holding `out_dir/.oscilab.lock` for the duration.
ExperimentResult run_experiment(const ExperimentConfig& config, const fs::path& out_dir, unsigned workers = 0);

/// Exclusive ownership of an output directory.
class DirectoryLock {
 public:
  explicit DirectoryLock(const fs::path& dir);
  ~DirectoryLock();
  DirectoryLock(const DirectoryLock&) = delete;
  DirectoryLock& operator=(const DirectoryLock&) = delete;

 private:
  fs::path path_;
};

class LockError : public Error {
 public:
  using Error::Error;
};

/// Every built-in family against g = cos t, cos 2t, cos 3t, with the sweep and
/// checks settings of `base`. One cell solve per family.
std::vector<ExperimentResult> run_family_sweep(const ExperimentConfig& base, unsigned workers = 0);

struct ScalingComparison {
  double theta = 0.0;
  double epsilon = 0.0;
  std::vector<double> radii;
  std::vector<double> nstar_base;
  std::vector<double> nstar_scaled;
  double max_difference = 0.0;
  int count_base = -1;
  int count_scaled = -1;
  Verdict verdict = Verdict::Unresolvable;
  std::string note;

  Json to_json() const;
};

/// Compares u with v(x) = u(theta x) measured on the scaled geometry:
/// N*(u, 0, r_j) against N*(v, 0, r_j / theta) for r_j = r_top / 2^j, and the
/// critical count of u in B(0, count_radius) against v in B(0, count_radius / theta).
ScalingComparison compare_scaled(const PlanarField& u, const PlanarField& v, double theta, double r_top, int rungs,
                                 double count_radius, double tolerance);

struct ScalingReport {
  std::string label;
  double theta = 0.0;
  std::vector<ScalingComparison> pairs;
  Verdict verdict = Verdict::Unresolvable;

  Json to_json() const;
};

/// For each epsilon of the ladder: solve at (epsilon, R) and at
/// (epsilon / theta, R / theta) with spacing h / theta, then compare_scaled
/// with tolerance 1e-3. pre: theta in {2, 4}.
ScalingReport scaling_invariance_suite(const ExperimentConfig& config, double theta, unsigned workers = 0,
                                       const CellStage* cell = nullptr);

enum class Figure { CountVsEpsilon, NstarVsRadius, ErrorVsEpsilon };

std::string_view figure_file(Figure f);

/// One CSV per figure under `dir`; returns the written paths. Throws
/// ConfigError for an empty record set or when a figure's source check is
/// absent from the records.
std::vector<fs::path> emit_plot_data(const std::vector<ExperimentResult>& records, const fs::path& dir,
                                     const std::vector<Figure>& figures = {Figure::CountVsEpsilon,
                                                                           Figure::NstarVsRadius,
                                                                           Figure::ErrorVsEpsilon});

}  // namespace oscilab

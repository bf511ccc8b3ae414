#pragma once

#include "oscilab/coeff.hpp"
#include "oscilab/doubling.hpp"
#include "oscilab/io.hpp"
#include "oscilab/pde.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace oscilab {

enum class CheckKind { Persistence, Reduction, LowIndex, Count, Convergence };

std::string_view check_name(CheckKind k);
CheckKind parse_check(std::string_view name);

struct ChecksConfig {
  std::vector<CheckKind> run{CheckKind::Persistence, CheckKind::Reduction, CheckKind::LowIndex, CheckKind::Count,
                             CheckKind::Convergence};
  int ell = 2;
  int L = 8;
  double delta_persistence = 0.25;
  double delta_reduction = 0.5;
  /// Radius r of the persistence and reduction checks (centered at the origin).
  double radius = 1.0;
  int chain = 4;

  bool wants(CheckKind k) const;
};

struct SweepConfig {
  /// Strictly decreasing powers of two.
  std::vector<double> epsilons{0.125, 0.0625, 0.03125};
  double R = 2.0;
  int cell_n = 256;
  /// h = min(epsilon / mesh_ratio, h_max); ratio >= 8.
  double mesh_ratio = 8.0;
  double h_max = 1.0 / 64;
  double max_triangles = 2e7;
  /// Rungs of the logged doubling profile at the origin, from r = 1 down.
  int rungs = 5;
  std::uint64_t seed = 0;
};

struct ExperimentConfig {
  FamilySpec coefficient;
  /// Fourier-general only: draw this many modes from `seed` instead of `params`.
  int random_modes = 0;
  BoundaryData boundary = BoundaryData::cosine(2);
  SweepConfig sweep;
  ChecksConfig checks;
  std::string output_dir = "results";
  unsigned workers = 0;

  /// Throws ConfigError with the offending key (BudgetError for a ladder
  /// above max_triangles).
  void validate() const;
  /// Coefficient, boundary data and sweep only, for single solves.
  void validate_problem() const;
  /// Coefficient spec after resolving random modes.
  FamilySpec resolved_coefficient() const;
  double mesh_h(double epsilon) const;
  /// Semantic fields only (no output directory or worker count); keys sorted.
  Json semantic_json() const;
  /// SHA-256 of the compact dump of semantic_json().
  std::string hash() const;
};

/// INI text with sections [coefficient] [boundary] [sweep] [checks] [output].
/// Lists are written `[a, b, c]`; numbers may be fractions such as 1/16.
/// Without `require_coefficient` a missing [coefficient] family falls back to
/// the laminate (the family sweep replaces it anyway).
ExperimentConfig parse_config(const std::string& text, bool require_coefficient = true);
ExperimentConfig load_config(const fs::path& path, bool require_coefficient = true);

/// "0.25", "1/8", "-3e-2".
double parse_number(std::string_view text);
std::vector<double> parse_number_list(std::string_view text);

std::string sha256_hex(std::string_view data);

/// Parameters of a fourier-general family with `modes` random modes; the
/// constant part is 2 I and every amplitude is at most 0.3 / modes.
std::vector<double> random_fourier_params(std::uint64_t seed, int modes);

}  // namespace oscilab

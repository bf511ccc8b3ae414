#pragma once

#include "oscilab/cellsolve.hpp"
#include "oscilab/critical.hpp"
#include "oscilab/doubling.hpp"
#include "oscilab/pde.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace oscilab {

using Json = nlohmann::json;
namespace fs = std::filesystem;

/// Raw arrays are stored as `<stem>.bin` (float64, little-endian, row-major)
/// next to a `<stem>.json` header holding shape, dtype, endianness and any
/// caller metadata under "meta".
void write_array(const fs::path& stem, const std::vector<double>& data, const std::vector<std::size_t>& shape,
                 const Json& meta = Json::object());
std::vector<double> read_array(const fs::path& stem, std::vector<std::size_t>* shape = nullptr,
                               Json* meta = nullptr);

/// Pretty-printed with a trailing newline, written to a temporary and renamed.
void write_json(const fs::path& path, const Json& value);
Json read_json(const fs::path& path);
void write_text(const fs::path& path, const std::string& text);

Json to_json(const Vec2& v);
Json to_json(const Mat2& m);
Json to_json(const BoundaryData& g);
Json to_json(const MeshStats& s);
BoundaryData boundary_from_json(const Json& j);
Json to_json(const DoublingProfile& p);
Json to_json(const CheckReport& r);
Json to_json(const CriticalReport& r);

/// Â, mu_min, residual, n and lattice.
Json corrector_json(const CorrectorSolution& corrector);
/// corrector.json, plus chi1/chi2 arrays when `raw_fields` is set.
void save_corrector(const fs::path& dir, const CorrectorSolution& corrector, bool raw_fields);

/// solution.meta.json and the nodal array `u`. With a reference field the
/// same mesh also gets `reference` (its nodal values) for diffing.
void save_solution(const fs::path& dir, const SolutionField& solution, const Json& extra_meta = Json::object(),
                   const PlanarField* reference = nullptr);
/// The mesh is regenerated from (R, m); the nodal count must match.
SolutionField load_solution(const fs::path& dir);

}  // namespace oscilab

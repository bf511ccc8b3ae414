#include "oscilab/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace oscilab {

namespace {

std::uint64_t to_little(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    v = ((v & 0x00000000ffffffffULL) << 32) | ((v & 0xffffffff00000000ULL) >> 32);
    v = ((v & 0x0000ffff0000ffffULL) << 16) | ((v & 0xffff0000ffff0000ULL) >> 16);
    v = ((v & 0x00ff00ff00ff00ffULL) << 8) | ((v & 0xff00ff00ff00ff00ULL) >> 8);
  }
  return v;
}

fs::path with_suffix(const fs::path& stem, const char* ext) {
  fs::path p = stem;
  p += ext;
  return p;
}

void commit(const fs::path& tmp, const fs::path& path) {
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error("cannot write " + path.string() + ": " + ec.message());
}

}  // namespace

void write_array(const fs::path& stem, const std::vector<double>& data, const std::vector<std::size_t>& shape,
                 const Json& meta) {
  std::size_t n = 1;
  for (auto s : shape) n *= s;
  if (n != data.size()) throw InconsistencyError("array shape does not match its data");
  const fs::path bin = with_suffix(stem, ".bin");
  const fs::path tmp = with_suffix(stem, ".bin.tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string());
    std::vector<std::uint64_t> words(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) words[i] = to_little(std::bit_cast<std::uint64_t>(data[i]));
    out.write(reinterpret_cast<const char*>(words.data()), static_cast<std::streamsize>(words.size() * 8));
    if (!out) throw Error("short write on " + tmp.string());
  }
  commit(tmp, bin);
  Json header{{"dtype", "float64"},
              {"endianness", "little"},
              {"order", "row-major"},
              {"shape", shape},
              {"data", bin.filename().string()},
              {"meta", meta}};
  write_json(with_suffix(stem, ".json"), header);
}

std::vector<double> read_array(const fs::path& stem, std::vector<std::size_t>* shape, Json* meta) {
  const Json header = read_json(with_suffix(stem, ".json"));
  if (header.value("dtype", "") != "float64" || header.value("endianness", "") != "little") {
    throw ConfigError("unsupported array header in " + stem.string());
  }
  const auto dims = header.at("shape").get<std::vector<std::size_t>>();
  std::size_t n = 1;
  for (auto s : dims) n *= s;
  const fs::path bin = with_suffix(stem, ".bin");
  std::ifstream in(bin, std::ios::binary);
  if (!in) throw ConfigError("missing array data " + bin.string());
  std::vector<std::uint64_t> words(n);
  in.read(reinterpret_cast<char*>(words.data()), static_cast<std::streamsize>(n * 8));
  if (static_cast<std::size_t>(in.gcount()) != n * 8 || in.peek() != std::char_traits<char>::eof()) {
    throw InconsistencyError("array data size does not match header shape in " + bin.string());
  }
  std::vector<double> data(n);
  for (std::size_t i = 0; i < n; ++i) data[i] = std::bit_cast<double>(to_little(words[i]));
  if (shape) *shape = dims;
  if (meta) *meta = header.value("meta", Json::object());
  return data;
}

void write_text(const fs::path& path, const std::string& text) {
  const fs::path tmp = with_suffix(path, ".tmp");
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string());
    out << text;
    if (!out) throw Error("short write on " + tmp.string());
  }
  commit(tmp, path);
}

void write_json(const fs::path& path, const Json& value) { write_text(path, value.dump(2) + "\n"); }

Json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

Json to_json(const Vec2& v) { return Json::array({v.x(), v.y()}); }

Json to_json(const Mat2& m) {
  return Json::array({Json::array({m(0, 0), m(0, 1)}), Json::array({m(1, 0), m(1, 1)})});
}

Json to_json(const BoundaryData& g) { return Json{{"a", g.a}, {"b", g.b}}; }

Json to_json(const MeshStats& s) {
  return Json{{"nodes", s.nodes},
              {"triangles", s.triangles},
              {"boundary_nodes", s.boundary_nodes},
              {"h", s.h},
              {"min_area", s.min_area},
              {"min_diameter", s.min_diameter},
              {"max_diameter", s.max_diameter},
              {"boundary_radius_error", s.boundary_radius_error}};
}

BoundaryData boundary_from_json(const Json& j) {
  BoundaryData g;
  g.a = j.value("a", std::vector<double>{});
  g.b = j.value("b", std::vector<double>{});
  g.validate();
  return g;
}

Json to_json(const DoublingProfile& p) {
  Json rungs = Json::array();
  for (std::size_t k = 0; k < p.radii.size(); ++k) {
    Json r{{"r", p.radii[k]}, {"reliable", static_cast<bool>(p.reliable[k])}};
    if (p.errors[k].empty()) {
      r["nstar"] = p.values[k];
      r["outer"] = p.outer[k];
      r["inner"] = p.inner[k];
    } else {
      r["nstar"] = nullptr;
      r["error"] = p.errors[k];
    }
    rungs.push_back(r);
  }
  return Json{{"center", to_json(p.x0)}, {"floor_radius", p.floor_radius}, {"rungs", rungs}};
}

namespace {

Json measured_json(const std::vector<Measured>& ms) {
  Json out = Json::array();
  for (const auto& m : ms) {
    Json j{{"name", m.name}, {"radius", m.radius}, {"value", m.value}, {"bound", m.bound},
           {"holds", m.holds}, {"reliable", m.reliable}};
    if (!m.note.empty()) j["note"] = m.note;
    out.push_back(j);
  }
  return out;
}

}  // namespace

Json to_json(const CheckReport& r) {
  Json j{{"check", r.check},
         {"verdict", std::string(verdict_name(r.verdict))},
         {"hypotheses", measured_json(r.hypotheses)},
         {"conclusions", measured_json(r.conclusions)},
         {"floor_radius", r.floor_radius}};
  j["slack"] = r.conclusions.empty() ? Json(nullptr) : Json(r.slack);
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

Json to_json(const CriticalReport& r) {
  Json pts = Json::array();
  for (const auto& p : r.points) {
    pts.push_back(Json{{"location", to_json(p.location)},
                       {"winding", p.winding},
                       {"refine_residual", p.refine_residual},
                       {"cell_size", p.cell_size},
                       {"newton_converged", p.newton_converged},
                       {"boundary_uncertain", p.boundary_uncertain}});
  }
  Json j{{"center", to_json(r.center)},
         {"radius", r.radius},
         {"loop_radius", r.loop_radius},
         {"boundary_winding", r.boundary_winding},
         {"count", r.count},
         {"degree_sum", r.degree_sum},
         {"consistent", r.consistent},
         {"attempts", r.attempts},
         {"h", r.h},
         {"leaf_size", r.leaf_size},
         {"points", pts}};
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

Json corrector_json(const CorrectorSolution& c) {
  return Json{{"A_hat", to_json(c.A_hat)},
              {"mu_min", c.mu_min},
              {"residual", c.residual},
              {"iterations", c.iterations},
              {"n", c.grid.n},
              {"quadratic_form_discrepancy", c.quadratic_form_discrepancy},
              {"lattice", Json{{"b1", to_json(c.grid.lattice.b1)}, {"b2", to_json(c.grid.lattice.b2)}}}};
}

void save_corrector(const fs::path& dir, const CorrectorSolution& c, bool raw_fields) {
  fs::create_directories(dir);
  write_json(dir / "corrector.json", corrector_json(c));
  if (!raw_fields) return;
  const auto n = static_cast<std::size_t>(c.grid.n);
  const Json meta{{"lattice", Json{{"b1", to_json(c.grid.lattice.b1)}, {"b2", to_json(c.grid.lattice.b2)}}},
                  {"indexing", "value[j][i] at lattice point (i / n, j / n)"}};
  for (int k = 0; k < 2; ++k) {
    const Vector& chi = c.chi[static_cast<std::size_t>(k)];
    write_array(dir / ("chi" + std::to_string(k + 1)), std::vector<double>(chi.data(), chi.data() + chi.size()),
                {n, n}, meta);
  }
}

void save_solution(const fs::path& dir, const SolutionField& s, const Json& extra_meta,
                   const PlanarField* reference) {
  fs::create_directories(dir);
  const DiskMesh& mesh = s.mesh();
  Json meta{{"epsilon", s.epsilon()},
            {"R", mesh.R},
            {"m", mesh.m},
            {"boundary", to_json(s.boundary())},
            {"problem_key", s.problem_key()},
            {"oscillates", s.oscillates()},
            {"residual", s.info().residual},
            {"iterations", s.info().iterations},
            {"energy", s.info().energy},
            {"max_principle_excess", s.info().max_principle_excess},
            {"mesh", to_json(mesh_stats(mesh))},
            {"arrays", Json::array({"u"})}};
  for (const auto& [k, v] : extra_meta.items()) meta[k] = v;
  const Vector& u = s.nodal_values();
  const Json node_meta{{"nodes", "ring mesh order: center, then rings k = 1..m with 6k nodes each"}};
  write_array(dir / "u", std::vector<double>(u.data(), u.data() + u.size()), {mesh.node_count()}, node_meta);
  if (reference) {
    std::vector<double> ref(mesh.node_count());
    for (std::size_t v = 0; v < ref.size(); ++v) ref[v] = reference->value(mesh.nodes[v]);
    write_array(dir / "reference", ref, {ref.size()}, node_meta);
    meta["arrays"].push_back("reference");
  }
  write_json(dir / "solution.meta.json", meta);
}

SolutionField load_solution(const fs::path& dir) {
  const Json meta = read_json(dir / "solution.meta.json");
  const double R = meta.at("R").get<double>();
  const int m = meta.at("m").get<int>();
  if (!(R > 0.0) || m < 1) throw ConfigError("invalid mesh parameters in " + dir.string());
  auto mesh = std::make_shared<const DiskMesh>(ring_mesh(R, m));
  std::vector<std::size_t> shape;
  const auto u = read_array(dir / "u", &shape);
  if (shape.size() != 1 || shape[0] != mesh->node_count()) {
    throw InconsistencyError("saved nodal array does not match the regenerated mesh");
  }
  SolveInfo info;
  info.residual = meta.value("residual", 0.0);
  info.iterations = meta.value("iterations", 0);
  info.energy = meta.value("energy", 0.0);
  info.max_principle_excess = meta.value("max_principle_excess", 0.0);
  return SolutionField(mesh, Eigen::Map<const Vector>(u.data(), static_cast<Eigen::Index>(u.size())),
                       meta.at("epsilon").get<double>(), boundary_from_json(meta.at("boundary")),
                       meta.value("problem_key", ""), info, meta.value("oscillates", true));
}

}  // namespace oscilab

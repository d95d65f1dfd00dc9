#include "nlmd/config.hpp"

#include <fstream>
#include <optional>
#include <sstream>

#include "json.hpp"
#include "nlmd/errors.hpp"

namespace nlmd {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& where, const std::string& why) {
  throw config_error("config field '" + where + "': " + why);
}

const json* find(const json& parent, const char* key) {
  const auto it = parent.find(key);
  return it == parent.end() ? nullptr : &*it;
}

const json& need(const json& parent, const char* key,
                 const std::string& where) {
  const json* child = find(parent, key);
  if (!child) bad(where + "." + key, "missing");
  return *child;
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) bad(where, "expected a number");
  return j.get<double>();
}

double number_or(const json& parent, const char* key, double fallback,
                 const std::string& where) {
  const json* child = find(parent, key);
  return child ? number(*child, where + "." + key) : fallback;
}

std::size_t count_of(const json& j, const std::string& where) {
  if (!j.is_number_unsigned()) bad(where, "expected a non-negative integer");
  return j.get<std::size_t>();
}

bool flag_or(const json& parent, const char* key, bool fallback,
             const std::string& where) {
  const json* child = find(parent, key);
  if (!child) return fallback;
  if (!child->is_boolean()) bad(where + "." + key, "expected a boolean");
  return child->get<bool>();
}

std::string text_or(const json& parent, const char* key,
                    const std::string& fallback, const std::string& where) {
  const json* child = find(parent, key);
  if (!child) return fallback;
  if (!child->is_string()) bad(where + "." + key, "expected a string");
  return child->get<std::string>();
}

FrequencyRule rule_of(const json& parent, const std::string& where) {
  const std::string name = text_or(parent, "rule", "midpoint", where);
  if (name == "midpoint") return FrequencyRule::UniformMidpoint;
  if (name == "legendre") return FrequencyRule::GaussLegendre;
  bad(where + ".rule", "expected \"midpoint\" or \"legendre\"");
}

FrequencyGrid frequency_grid_of(const json& j, const std::string& where) {
  if (!j.is_object()) bad(where, "expected an object");
  const double max = number(need(j, "max", where), where + ".max");
  const std::size_t count =
      count_of(need(j, "count", where), where + ".count");
  return build_frequency_grid(max, count, rule_of(j, where));
}

KGrid kgrid_of(const json& j, const std::string& where) {
  if (!j.is_object()) bad(where, "expected an object");
  const json& ext = need(j, "extents", where);
  const json& cnt = need(j, "counts", where);
  if (!ext.is_array() || ext.size() != 3) {
    bad(where + ".extents", "expected 3 numbers");
  }
  if (!cnt.is_array() || cnt.size() != 3) {
    bad(where + ".counts", "expected 3 integers");
  }
  Eigen::Vector3d extents;
  std::array<std::size_t, 3> counts{};
  for (int a = 0; a < 3; ++a) {
    extents[a] = number(ext[a], where + ".extents");
    counts[a] = count_of(cnt[a], where + ".counts");
  }
  return KGrid::build(extents, counts);
}

LorentzianLine line_of(const json& j, const std::string& where) {
  if (!j.is_object()) bad(where, "expected an object");
  LorentzianLine line;
  line.strength = number(need(j, "strength", where), where + ".strength");
  line.center = number(need(j, "center", where), where + ".center");
  line.width = number(need(j, "width", where), where + ".width");
  line.validate();
  return line;
}

Coupling1 coupling1_of(const json* j, FieldKind kind,
                       const FrequencyGrid& bath, const std::string& where) {
  if (!j) return Coupling1::zero(kind, bath);
  if (!j->is_object()) bad(where, "expected an object");
  const std::string form = text_or(*j, "form", "zero", where);
  if (form == "zero") return Coupling1::zero(kind, bath);
  if (form == "isotropic") {
    return Coupling1::isotropic_lorentzian(
        kind, bath, line_of(need(*j, "line", where), where + ".line"));
  }
  if (form == "diagonal") {
    const json& lines = need(*j, "lines", where);
    if (!lines.is_array() || lines.size() != 3) {
      bad(where + ".lines", "expected 3 lines");
    }
    std::array<LorentzianLine, 3> parsed;
    for (int a = 0; a < 3; ++a) {
      parsed[a] = line_of(lines[a], where + ".lines");
    }
    return Coupling1::anisotropic_diagonal(kind, bath, parsed);
  }
  if (form == "dense") {
    const json& mats = need(*j, "matrices", where);
    if (!mats.is_array() || mats.size() != bath.size()) {
      bad(where + ".matrices", "expected one matrix per bath bin");
    }
    std::vector<Eigen::Matrix3d> values(bath.size());
    for (std::size_t q = 0; q < bath.size(); ++q) {
      const json& m = mats[q];
      if (!m.is_array() || m.size() != 9) {
        bad(where + ".matrices", "expected 9 reals row-major");
      }
      for (int i = 0; i < 3; ++i) {
        for (int k = 0; k < 3; ++k) {
          values[q](i, k) =
              number(m[3 * i + k], where + ".matrices");
        }
      }
    }
    return Coupling1::homogeneous_dense(kind, bath, std::move(values));
  }
  bad(where + ".form", "unknown rank-2 coupling form '" + form + "'");
}

std::optional<Coupling2> coupling2_of(const json* j, FieldKind kind,
                                      const FrequencyGrid& bath,
                                      const std::string& where) {
  if (!j) return std::nullopt;
  if (!j->is_object()) bad(where, "expected an object");
  const std::string form = text_or(*j, "form", "zero", where);
  if (form == "zero") return Coupling2::zero(kind, bath);
  if (form == "separable") {
    const json& t = need(*j, "tensor", where);
    if (!t.is_array() || t.size() != 27) {
      bad(where + ".tensor", "expected 27 reals row-major");
    }
    Tensor3 tensor;
    for (int i = 0; i < 3; ++i) {
      for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
          tensor(i, a, b) =
              number(t[(3 * i + a) * 3 + b], where + ".tensor");
        }
      }
    }
    const LorentzianLine line =
        line_of(need(*j, "line", where), where + ".line");
    if (flag_or(*j, "symmetrize", true, where)) {
      return Coupling2::separable_lorentzian(kind, bath, tensor, line);
    }
    // Symmetrization disabled: build the bin-pair blocks directly so the
    // raw (possibly asymmetric) tensor survives into the coupling, where
    // the pair-swap check can see it.
    const std::size_t nq = bath.size();
    std::vector<Tensor3> blocks(nq * nq);
    for (std::size_t q1 = 0; q1 < nq; ++q1) {
      for (std::size_t q2 = 0; q2 < nq; ++q2) {
        blocks[q1 * nq + q2] =
            tensor * cplx(line.eval(bath.nodes[q1]) * line.eval(bath.nodes[q2]),
                          0.0);
      }
    }
    return Coupling2::homogeneous_separable(kind, bath, std::move(blocks),
                                            /*symmetrize=*/false);
  }
  bad(where + ".form", "unknown rank-3 coupling form '" + form + "'");
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (const char c : bytes) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 0x100000001b3ull;
  }
  return hash;
}

RunConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw config_error(std::string("config parse: ") + e.what());
  }
  if (!doc.is_object()) bad("(root)", "expected an object");

  const json* version = find(doc, "version");
  if (!version || !version->is_number_unsigned() ||
      version->get<std::size_t>() != 1) {
    bad("version", "expected 1");
  }

  Units units;
  if (const json* u = find(doc, "units")) {
    units.eps0 = number_or(*u, "eps0", 1.0, "units");
    units.mu0 = number_or(*u, "mu0", 1.0, "units");
    units.c = number_or(*u, "c", 1.0, "units");
    units.hbar = number_or(*u, "hbar", 1.0, "units");
  }
  units.validate();

  const json& grids = need(doc, "grids", "(root)");
  FrequencyGrid field_grid =
      frequency_grid_of(need(grids, "omega", "grids"), "grids.omega");
  KGrid kgrid = kgrid_of(need(grids, "k", "grids"), "grids.k");
  FrequencyGrid bath_grid =
      frequency_grid_of(need(grids, "bath", "grids"), "grids.bath");

  const json* medium = find(doc, "medium");
  const json* e1 = medium ? find(*medium, "electric1") : nullptr;
  const json* m1 = medium ? find(*medium, "magnetic1") : nullptr;
  const json* e2 = medium ? find(*medium, "electric2") : nullptr;
  const json* m2 = medium ? find(*medium, "magnetic2") : nullptr;

  bool noise_enabled = true;
  std::uint64_t seed = 0;
  if (const json* n = find(doc, "noise")) {
    noise_enabled = flag_or(*n, "enabled", true, "noise");
    if (const json* s = find(*n, "seed")) {
      if (!s->is_number_unsigned()) bad("noise.seed", "expected an integer");
      seed = s->get<std::uint64_t>();
    }
  }

  SolverConfig solver;
  solver.eta = 0.01 * field_grid.omega_max;
  if (const json* s = find(doc, "solver")) {
    if (const json* mo = find(*s, "max_order")) {
      solver.max_order = count_of(*mo, "solver.max_order");
    }
    solver.tolerance =
        number_or(*s, "tolerance", solver.tolerance, "solver");
    if (const json* eta = find(*s, "eta")) {
      if (eta->is_string()) {
        if (eta->get<std::string>() != "auto") {
          bad("solver.eta", "expected a number or \"auto\"");
        }
      } else {
        solver.eta = number(*eta, "solver.eta");
      }
    }
    solver.damping = number_or(*s, "damping", solver.damping, "solver");
    if (const json* w = find(*s, "window")) {
      solver.window = count_of(*w, "solver.window");
    }
  }
  solver.validate();

  std::string out_field = "field.nlmd";
  std::string out_convergence = "convergence.txt";
  std::string out_manifest = "manifest.json";
  bool write_kernels = false;
  if (const json* o = find(doc, "outputs")) {
    out_field = text_or(*o, "field", out_field, "outputs");
    out_convergence = text_or(*o, "convergence", out_convergence, "outputs");
    out_manifest = text_or(*o, "manifest", out_manifest, "outputs");
    write_kernels = flag_or(*o, "kernels", write_kernels, "outputs");
  }

  const std::string canonical = doc.dump();
  RunConfig cfg{
      units,
      std::move(field_grid),
      std::move(kgrid),
      bath_grid,
      Medium{coupling1_of(e1, FieldKind::Electric, bath_grid,
                          "medium.electric1"),
             coupling1_of(m1, FieldKind::Magnetic, bath_grid,
                          "medium.magnetic1"),
             coupling2_of(e2, FieldKind::Electric, bath_grid,
                          "medium.electric2"),
             coupling2_of(m2, FieldKind::Magnetic, bath_grid,
                          "medium.magnetic2")},
      noise_enabled,
      seed,
      solver,
      out_field,
      out_convergence,
      out_manifest,
      write_kernels,
      fnv1a64(canonical),
      canonical};
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("config " + path + ": cannot open");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw io_error("config " + path + ": read failed");
  return parse_config(buf.str());
}

}  // namespace nlmd

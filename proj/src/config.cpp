#include "mbions/config.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "mbions/diagnostics.hpp"

namespace mbions {
namespace {

std::string join_problems(const std::vector<std::string>& problems) {
  std::string msg = "invalid config:";
  for (const auto& p : problems) msg += "\n  - " + p;
  return msg;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& text, double& out) {
  const char* first = text.data();
  const char* last = first + text.size();
  if (first != last && *first == '+') ++first;
  const auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last && !text.empty();
}

bool parse_int(const std::string& text, int& out) {
  const auto res = std::from_chars(text.data(), text.data() + text.size(), out);
  return res.ec == std::errc() && res.ptr == text.data() + text.size() && !text.empty();
}

// One config key: how to print it and how to read it back.
struct Key {
  std::string section;
  std::string name;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;  // throws std::string on bad value
};

template <class Ref>
Key real(std::string section, std::string name, Ref ref) {
  return {section, name, [ref](const RunConfig& c) { return format_number(ref(c)); },
          [ref](RunConfig& c, const std::string& v) {
            double x;
            if (!parse_double(v, x)) throw std::string("not a number: '" + v + "'");
            ref(c) = x;
          }};
}

template <class Ref>
Key integer(std::string section, std::string name, Ref ref) {
  return {section, name, [ref](const RunConfig& c) { return std::to_string(ref(c)); },
          [ref](RunConfig& c, const std::string& v) {
            int x;
            if (!parse_int(v, x)) throw std::string("not an integer: '" + v + "'");
            ref(c) = x;
          }};
}

template <class Ref>
Key boolean(std::string section, std::string name, Ref ref) {
  return {section, name, [ref](const RunConfig& c) { return ref(c) ? "true" : "false"; },
          [ref](RunConfig& c, const std::string& v) {
            if (v == "true") ref(c) = true;
            else if (v == "false") ref(c) = false;
            else throw std::string("expected true or false, got '" + v + "'");
          }};
}

template <class Ref>
Key text(std::string section, std::string name, Ref ref) {
  return {section, name, [ref](const RunConfig& c) { return ref(c); },
          [ref](RunConfig& c, const std::string& v) { ref(c) = v; }};
}

template <class Ref>
Key real_list(std::string section, std::string name, Ref ref) {
  return {section, name,
          [ref](const RunConfig& c) {
            std::string out;
            for (double x : ref(c)) out += (out.empty() ? "" : ", ") + format_number(x);
            return out;
          },
          [ref](RunConfig& c, const std::string& v) {
            std::vector<double> xs;
            if (!v.empty()) {
              std::stringstream ss(v);
              std::string item;
              while (std::getline(ss, item, ',')) {
                double x;
                if (!parse_double(trim(item), x)) throw std::string("not a number list: '" + v + "'");
                xs.push_back(x);
              }
            }
            ref(c) = xs;
          }};
}

const std::vector<Key>& keys() {
  static const std::vector<Key> table = [] {
    std::vector<Key> k;
    k.push_back(integer("domain", "spatial_dim", [](auto& c) -> auto& { return c.domain.spatial_dim; }));
    k.push_back({"domain", "geometry", [](const RunConfig& c) { return std::string(to_string(c.domain.geometry)); },
                 [](RunConfig& c, const std::string& v) {
                   try {
                     c.domain.geometry = geometry_from_string(v);
                   } catch (const std::exception& e) {
                     throw std::string(e.what());
                   }
                 }});
    k.push_back(real("domain", "length_x", [](auto& c) -> auto& { return c.domain.lengths[0]; }));
    k.push_back(real("domain", "length_y", [](auto& c) -> auto& { return c.domain.lengths[1]; }));
    k.push_back(integer("domain", "n_x", [](auto& c) -> auto& { return c.domain.n_x; }));
    k.push_back(integer("domain", "velocity_dim", [](auto& c) -> auto& { return c.domain.velocity_dim; }));
    k.push_back(real("domain", "v_max", [](auto& c) -> auto& { return c.domain.v_max; }));
    k.push_back(integer("domain", "n_v", [](auto& c) -> auto& { return c.domain.n_v; }));
    k.push_back(real("domain", "lambda_D", [](auto& c) -> auto& { return c.domain.lambda_D; }));

    k.push_back({"model", "kind", [](const RunConfig& c) { return std::string(to_string(c.model)); },
                 [](RunConfig& c, const std::string& v) {
                   try {
                     c.model = model_from_string(v);
                   } catch (const std::exception& e) {
                     throw std::string(e.what());
                   }
                 }});
    k.push_back(real("model", "E0", [](auto& c) -> auto& { return c.E0; }));
    k.push_back(real("model", "E1", [](auto& c) -> auto& { return c.E1; }));
    k.push_back(real("model", "compatibility", [](auto& c) -> auto& { return c.compatibility; }));
    k.push_back(real("model", "epsilon", [](auto& c) -> auto& { return c.epsilon; }));
    k.push_back(real("model", "eta", [](auto& c) -> auto& { return c.eta; }));
    k.push_back(real("model", "eta_coefficient", [](auto& c) -> auto& { return c.eta_rule.coefficient; }));
    k.push_back(real("model", "eta_exponent", [](auto& c) -> auto& { return c.eta_rule.exponent; }));
    k.push_back(real("model", "sigma", [](auto& c) -> auto& { return c.sigma; }));
    k.push_back(boolean("model", "freeze_ions", [](auto& c) -> auto& { return c.freeze_ions; }));
    k.push_back(boolean("model", "electron_collisions", [](auto& c) -> auto& { return c.electron_collisions; }));
    k.push_back(real_list("model", "epsilons", [](auto& c) -> auto& { return c.epsilons; }));

    k.push_back(real("numerics", "t_end", [](auto& c) -> auto& { return c.t_end; }));
    k.push_back(real("numerics", "cfl", [](auto& c) -> auto& { return c.cfl; }));
    k.push_back(real("numerics", "dt", [](auto& c) -> auto& { return c.dt; }));
    k.push_back(real("numerics", "electron_cfl", [](auto& c) -> auto& { return c.electron_cfl; }));
    k.push_back(integer("numerics", "max_substeps", [](auto& c) -> auto& { return c.max_substeps; }));
    k.push_back(boolean("numerics", "resolve_per_substep",
                        [](auto& c) -> auto& { return c.resolve_per_substep; }));
    k.push_back(real("numerics", "max_mass_loss", [](auto& c) -> auto& { return c.max_mass_loss; }));
    k.push_back({"numerics", "interpolation", [](const RunConfig& c) { return std::string(to_string(c.interpolation)); },
                 [](RunConfig& c, const std::string& v) {
                   try {
                     c.interpolation = interpolation_from_string(v);
                   } catch (const std::exception& e) {
                     throw std::string(e.what());
                   }
                 }});
    k.push_back(integer("numerics", "gradient_order", [](auto& c) -> auto& { return c.field.gradient_order; }));
    k.push_back(real("numerics", "tol_pde", [](auto& c) -> auto& { return c.field.tol_pde; }));
    k.push_back(real("numerics", "tol_energy", [](auto& c) -> auto& { return c.field.tol_energy; }));
    k.push_back(real("numerics", "tol_mass", [](auto& c) -> auto& { return c.field.tol_mass; }));
    k.push_back(integer("numerics", "max_newton", [](auto& c) -> auto& { return c.field.max_newton; }));
    k.push_back(integer("numerics", "max_halvings", [](auto& c) -> auto& { return c.field.max_halvings; }));
    k.push_back(integer("numerics", "max_doublings", [](auto& c) -> auto& { return c.field.max_doublings; }));
    k.push_back(integer("numerics", "max_beta_iterations",
                        [](auto& c) -> auto& { return c.field.max_beta_iterations; }));
    k.push_back(boolean("numerics", "parallel", [](auto& c) -> auto& { return c.parallel; }));

    k.push_back(real("initial", "ion_mean", [](auto& c) -> auto& { return c.initial.ion.mean; }));
    k.push_back(real("initial", "ion_amplitude", [](auto& c) -> auto& { return c.initial.ion.amplitude; }));
    k.push_back(integer("initial", "ion_mode", [](auto& c) -> auto& { return c.initial.ion.mode; }));
    k.push_back(real("initial", "ion_temperature",
                     [](auto& c) -> auto& { return c.initial.ion.temperature; }));
    k.push_back(real("initial", "ion_drift", [](auto& c) -> auto& { return c.initial.ion.drift; }));
    k.push_back(text("initial", "ion_snapshot", [](auto& c) -> auto& { return c.initial.ion.snapshot; }));
    k.push_back(text("initial", "electron_profile",
                     [](auto& c) -> auto& { return c.initial.electron_profile; }));
    k.push_back(real("initial", "electron_amplitude",
                     [](auto& c) -> auto& { return c.initial.electron.amplitude; }));
    k.push_back(integer("initial", "electron_mode", [](auto& c) -> auto& { return c.initial.electron.mode; }));
    k.push_back(real("initial", "electron_temperature",
                     [](auto& c) -> auto& { return c.initial.electron.temperature; }));
    k.push_back(real("initial", "electron_drift",
                     [](auto& c) -> auto& { return c.initial.electron.drift; }));
    k.push_back(text("initial", "electron_snapshot",
                     [](auto& c) -> auto& { return c.initial.electron.snapshot; }));
    k.push_back(text("initial", "density_file", [](auto& c) -> auto& { return c.initial.density_file; }));

    k.push_back(text("output", "directory", [](auto& c) -> auto& { return c.output.directory; }));
    k.push_back(integer("output", "every", [](auto& c) -> auto& { return c.output.every; }));
    k.push_back(real_list("output", "snapshot_times",
                          [](auto& c) -> auto& { return c.output.snapshot_times; }));
    return k;
  }();
  return table;
}

bool finite(double x) { return std::isfinite(x); }

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : ValidationError(join_problems(problems)), problems_(std::move(problems)) {}

const char* to_string(ModelKind m) {
  switch (m) {
    case ModelKind::reduced_ions: return "reduced_ions";
    case ModelKind::two_species: return "two_species";
    case ModelKind::equilibrium: return "equilibrium";
    case ModelKind::solve_pb: return "solve_pb";
    case ModelKind::limit_sweep: return "limit_sweep";
    case ModelKind::arnold: return "arnold";
  }
  return "?";
}

ModelKind model_from_string(const std::string& s) {
  for (ModelKind m : {ModelKind::reduced_ions, ModelKind::two_species, ModelKind::equilibrium, ModelKind::solve_pb,
                      ModelKind::limit_sweep, ModelKind::arnold})
    if (s == to_string(m)) return m;
  throw ValidationError("unknown model '" + s +
                        "' (expected reduced_ions, two_species, equilibrium, solve_pb, limit_sweep or arnold)");
}

std::vector<std::string> config_violations(const RunConfig& c) {
  std::vector<std::string> out;
  try {
    c.domain.validate();
  } catch (const ValidationError& e) {
    std::string msg = e.what();
    std::stringstream ss(msg);
    std::string line;
    while (std::getline(ss, line))
      if (line.rfind("  - ", 0) == 0) out.push_back("domain: " + line.substr(4));
  }
  auto need = [&](bool ok, const std::string& msg) {
    if (!ok) out.push_back(msg);
  };
  const double numbers[] = {c.E0, c.E1, c.compatibility, c.epsilon, c.eta, c.eta_rule.coefficient,
                            c.eta_rule.exponent, c.sigma, c.t_end, c.cfl, c.dt, c.electron_cfl, c.max_mass_loss,
                            c.field.tol_pde, c.field.tol_energy, c.field.tol_mass};
  for (double x : numbers)
    if (!finite(x)) {
      out.push_back("numeric values must be finite");
      break;
    }

  const bool reduced = c.model == ModelKind::reduced_ions;
  const bool two = c.model == ModelKind::two_species || c.model == ModelKind::limit_sweep || c.model == ModelKind::arnold;
  const bool stationary = c.model == ModelKind::solve_pb || c.model == ModelKind::equilibrium;

  need(c.compatibility > 0.0 && c.compatibility < 1.0,
       "model.compatibility must satisfy 0 < a < 1 (compatibility condition, a < 1 strictly)");
  if (reduced) need(c.E0 > 0.0, "model.E0 must be > 0 for reduced_ions");
  if (stationary) need(c.E1 > 0.0, "model.E1 must be > 0 for " + std::string(to_string(c.model)));
  if (two && c.initial.electron_profile == "equilibrium")
    need(c.E1 > 0.0, "model.E1 must be > 0 when initial.electron_profile = equilibrium");
  need(c.epsilon > 0.0 && c.epsilon <= 1.0, "model.epsilon must lie in (0, 1]");
  need(c.eta >= 0.0, "model.eta must be >= 0 (0 selects the eta rule)");
  if (c.eta == 0.0 || c.model == ModelKind::limit_sweep) {
    need(c.eta_rule.coefficient > 0.0, "model.eta_coefficient must be > 0");
    need(c.eta_rule.exponent >= 0.0,
         "model.eta_exponent must be >= 0: the scaling assumption needs eta bounded as epsilon -> 0");
    need(c.eta_rule.exponent < 1.0,
         "model.eta_exponent must be < 1: the scaling assumption needs eta/epsilon -> infinity");
  }
  need(c.sigma >= 0.0, "model.sigma must be >= 0");
  if (c.model == ModelKind::limit_sweep) {
    need(!c.epsilons.empty(), "model.epsilons must list at least one value");
    for (double e : c.epsilons) need(e > 0.0 && e < 1.0, "model.epsilons entries must lie in (0, 1)");
  }
  need(c.t_end > 0.0, "numerics.t_end must be > 0");
  need(c.cfl > 0.0, "numerics.cfl must be > 0");
  need(c.dt >= 0.0, "numerics.dt must be >= 0 (0 selects the CFL step)");
  need(c.electron_cfl > 0.0, "numerics.electron_cfl must be > 0");
  need(c.max_substeps >= 1, "numerics.max_substeps must be >= 1");
  need(c.max_mass_loss >= 0.0, "numerics.max_mass_loss must be >= 0");
  need(c.field.gradient_order == 2 || c.field.gradient_order == 4, "numerics.gradient_order must be 2 or 4");
  need(c.field.tol_pde > 0.0 && c.field.tol_energy > 0.0 && c.field.tol_mass > 0.0,
       "numerics tolerances must be > 0");
  need(c.field.max_newton >= 1 && c.field.max_halvings >= 0 && c.field.max_doublings >= 1 &&
           c.field.max_beta_iterations >= 1,
       "numerics iteration limits must be positive");

  need(c.initial.ion.mean > 0.0, "initial.ion_mean must be > 0");
  need(c.initial.ion.amplitude > -1.0 && c.initial.ion.amplitude < 1.0,
       "initial.ion_amplitude must lie in (-1, 1) to keep the density positive");
  need(c.initial.electron.amplitude > -1.0 && c.initial.electron.amplitude < 1.0,
       "initial.electron_amplitude must lie in (-1, 1) to keep the density positive");
  need(c.initial.ion.mode >= 0 && c.initial.electron.mode >= 0, "initial modes must be >= 0");
  need(c.initial.ion.temperature > 0.0 && c.initial.electron.temperature > 0.0,
       "initial temperatures must be > 0");
  need(c.initial.electron_profile == "maxwellian" || c.initial.electron_profile == "equilibrium",
       "initial.electron_profile must be maxwellian or equilibrium");
  for (const std::string* s : {&c.initial.ion.snapshot, &c.initial.electron.snapshot, &c.initial.density_file,
                               &c.output.directory, &c.initial.electron_profile})
    need(s->find_first_of("#\n\r") == std::string::npos && trim(*s) == *s,
         "string values must not contain '#', line breaks or surrounding blanks");
  need(!c.output.directory.empty(), "output.directory must not be empty");
  need(c.output.every >= 1, "output.every must be >= 1");
  for (double t : c.output.snapshot_times) need(t >= 0.0, "output.snapshot_times must be >= 0");
  return out;
}

RunConfig parse_config(const std::string& input) {
  RunConfig c;
  std::vector<std::string> problems;
  std::map<std::string, const Key*> lookup;
  for (const Key& k : keys()) lookup[k.section + "." + k.name] = &k;
  std::set<std::string> seen;

  std::stringstream ss(input);
  std::string raw, section;
  int line_no = 0;
  while (std::getline(ss, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        problems.push_back(where + "malformed section header '" + line + "'");
        continue;
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      problems.push_back(where + "expected 'key = value', got '" + line + "'");
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty()) {
      problems.push_back(where + "key '" + key + "' appears before any [section]");
      continue;
    }
    const std::string full = section + "." + key;
    const auto it = lookup.find(full);
    if (it == lookup.end()) {
      problems.push_back(where + "unknown key '" + full + "'");
      continue;
    }
    if (!seen.insert(full).second) {
      problems.push_back(where + "duplicate key '" + full + "'");
      continue;
    }
    try {
      it->second->set(c, value);
    } catch (const std::string& why) {
      problems.push_back(where + full + ": " + why);
    }
  }
  for (auto& v : config_violations(c)) problems.push_back(std::move(v));
  if (!problems.empty()) throw ConfigError(std::move(problems));
  return c;
}

std::string dump_config(const RunConfig& c) {
  std::string out, section;
  for (const Key& k : keys()) {
    if (k.section != section) {
      if (!section.empty()) out += "\n";
      section = k.section;
      out += "[" + section + "]\n";
    }
    const std::string value = k.get(c);
    out += k.name + " =" + (value.empty() ? "" : " " + value) + "\n";
  }
  return out;
}

ReducedIonsConfig reduced_ions_config(const RunConfig& c) {
  ReducedIonsConfig r;
  r.E0 = c.E0;
  r.compatibility = c.compatibility;
  r.cfl = c.cfl;
  r.dt = c.dt;
  r.freeze_ions = c.freeze_ions;
  r.max_mass_loss = c.max_mass_loss;
  r.field = c.field;
  r.transport.interpolation = c.interpolation;
  return r;
}

TwoSpeciesConfig two_species_config(const RunConfig& c) {
  TwoSpeciesConfig t;
  t.epsilon = c.epsilon;
  t.eta = c.eta;
  t.eta_rule = c.eta_rule;
  t.sigma = c.sigma;
  t.cfl = c.cfl;
  t.dt = c.dt;
  t.electron_cfl = c.electron_cfl;
  t.max_substeps = c.max_substeps;
  t.freeze_ions = c.freeze_ions || c.model == ModelKind::arnold;
  t.electron_collisions = c.electron_collisions;
  t.resolve_per_substep = c.resolve_per_substep;
  t.max_mass_loss = c.max_mass_loss;
  t.field = c.field;
  t.transport.interpolation = c.interpolation;
  return t;
}

}  // namespace mbions

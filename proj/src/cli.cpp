#include "mbions/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <ostream>

#include <json.hpp>

#include "mbions/diagnostics.hpp"
#include "mbions/equilibrium.hpp"
#include "mbions/io.hpp"
#include "mbions/reduced_ions.hpp"
#include "mbions/two_species.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace mbions {
namespace {

Eigen::VectorXd profile_density(const ProfileSpec& p, const SpatialGrid& g, bool sine) {
  const Eigen::ArrayXd x = g.coordinate(0);
  const Eigen::ArrayXd arg = 2.0 * std::numbers::pi * p.mode * x / g.length[0];
  const Eigen::ArrayXd wave = sine ? Eigen::ArrayXd(arg.sin()) : Eigen::ArrayXd(arg.cos());
  return (p.mean * (1.0 + p.amplitude * wave)).matrix();
}

PhaseDistribution profile_distribution(const ProfileSpec& p, const DomainPtr& dom, Species species) {
  if (!p.snapshot.empty()) return read_snapshot(p.snapshot, dom, species).f;
  Eigen::VectorXd drift = Eigen::VectorXd::Zero(dom->v.dim);
  drift[0] = p.drift;
  return local_maxwellian(SpatialField(dom, profile_density(p, dom->x, false)), p.temperature, drift, species);
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << j.dump(2) << '\n';
}

void write_csv(const fs::path& path, const std::vector<DiagnosticsRecord>& records) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  write_diagnostics_csv(os, records);
}

json field_json(const SpatialField& f) { return std::vector<double>(f.values.data(), f.values.data() + f.size()); }

json record_json(const DiagnosticsRecord& r) {
  const auto cols = diagnostics_columns();
  const double values[] = {double(r.step), r.t, r.mass_ion, r.mass_electron, r.kinetic_ion, r.kinetic_electron,
                           r.field_energy, r.total_energy, r.beta, r.beta_invariant, r.entropy_ion,
                           r.entropy_electron, r.relative_entropy, r.arnold_functional, r.dissipation,
                           r.cumulative_mass_loss, r.max_speed_bound, r.tail_fraction, r.max_density,
                           r.density_bound, r.mb_deviation};
  json j = json::object();
  for (std::size_t i = 0; i < cols.size(); ++i) j[cols[i]] = std::isnan(values[i]) ? json(nullptr) : json(values[i]);
  return j;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool command_accepts(Command c, ModelKind m) {
  switch (c) {
    case Command::run: return m == ModelKind::reduced_ions || m == ModelKind::two_species || m == ModelKind::arnold;
    case Command::solve_pb: return m == ModelKind::solve_pb;
    case Command::equilibrium: return m == ModelKind::equilibrium;
    case Command::limit_sweep: return m == ModelKind::limit_sweep;
  }
  return false;
}

std::string snapshot_name(std::size_t index, const char* species) {
  return "snapshot_" + std::to_string(index) + "_" + species + ".bin";
}

json run_reduced(const RunConfig& config, const InitialData& init, const fs::path& out, std::ostream& log,
                 bool verbose) {
  const ReducedIonsConfig rc = reduced_ions_config(config);
  RunControl control;
  control.t_end = config.t_end;
  control.output_every = config.output.every;
  control.snapshot_times = config.output.snapshot_times;
  std::size_t snap = 0;
  control.on_snapshot = [&](const SimState& s) { write_snapshot((out / snapshot_name(snap++, "ions")).string(), s.f_plus, s.t); };
  if (verbose)
    control.on_record = [&](const DiagnosticsRecord& r) {
      log << "step " << r.step << " t=" << format_number(r.t) << " beta=" << format_number(r.beta) << '\n';
    };
  const RunResult res = run(rc, init.f_plus, control);
  write_csv(out / "diagnostics.csv", res.records);
  write_snapshot((out / "final_ions.bin").string(), res.final_state.f_plus, res.final_state.t);

  const auto& first = res.records.front();
  const auto& last = res.records.back();
  double max_energy = 0.0, max_mass = 0.0, max_inv = 0.0;
  for (const auto& r : res.records) {
    max_energy = std::max(max_energy, std::abs(r.total_energy - first.total_energy));
    max_mass = std::max(max_mass, std::abs(r.mass_ion - first.mass_ion));
    max_inv = std::max(max_inv, std::abs(r.beta_invariant - first.beta_invariant));
  }
  const auto bounds = beta_bounds(res.final_state);
  json j;
  j["steps"] = res.final_state.step;
  j["m0"] = res.final_state.m0;
  j["E0"] = res.final_state.E0;
  j["C0"] = res.final_state.C0;
  j["beta_bounds"] = {bounds.first, bounds.second};
  j["max_mass_drift"] = max_mass;
  j["max_energy_drift"] = max_energy;
  j["max_beta_invariant_drift"] = max_inv;
  j["final"] = record_json(last);
  return j;
}

json two_species_summary(const TwoSpeciesState& s, const std::vector<DiagnosticsRecord>& records) {
  const auto& first = records.front();
  double max_energy = 0.0, max_mass = 0.0;
  for (const auto& r : records) {
    max_energy = std::max(max_energy, std::abs(r.total_energy - first.total_energy));
    max_mass = std::max({max_mass, std::abs(r.mass_ion - first.mass_ion),
                         std::abs(r.mass_electron - first.mass_electron)});
  }
  json j;
  j["steps"] = s.step;
  j["epsilon"] = s.epsilon;
  j["eta"] = s.eta;
  j["max_mass_drift"] = max_mass;
  j["max_energy_drift"] = max_energy;
  j["collision_substeps"] = s.collision_substeps;
  j["entropy_increases"] = s.entropy_increases;
  j["bgk_fallbacks"] = s.bgk_stats.fallback;
  j["final"] = record_json(records.back());
  return j;
}

json run_two(const RunConfig& config, const InitialData& init, const fs::path& out, std::ostream& log, bool verbose) {
  const TwoSpeciesConfig tc = two_species_config(config);
  TwoSpeciesState s = init_two_species(tc, init.f_plus, init.f_minus);
  std::vector<DiagnosticsRecord> records{diagnose(s)};
  std::vector<double> snaps = config.output.snapshot_times;
  std::sort(snaps.begin(), snaps.end());
  std::size_t next = 0;
  const double eps_t = 1e-12 * std::max(1.0, config.t_end);
  auto take_snapshots = [&] {
    while (next < snaps.size() && snaps[next] <= s.t + eps_t) {
      write_snapshot((out / snapshot_name(next, "ions")).string(), s.f_plus, s.t);
      write_snapshot((out / snapshot_name(next, "electrons")).string(), s.f_minus, s.t);
      ++next;
    }
  };
  take_snapshots();
  bool last_recorded = true;
  while (s.t < config.t_end - eps_t) {
    double dt = stable_time_step(s, tc);
    double target = config.t_end;
    if (next < snaps.size()) target = std::min(target, snaps[next]);
    if (s.t + dt > target - eps_t) dt = target - s.t;
    try {
      s = two_species_step(s, dt, tc);
    } catch (const std::exception& e) {
      throw StepError(s.t, e.what());
    }
    last_recorded = false;
    if (s.step % config.output.every == 0) {
      records.push_back(diagnose(s));
      last_recorded = true;
      if (verbose)
        log << "step " << s.step << " t=" << format_number(s.t) << " substeps=" << s.last_substeps << '\n';
    }
    take_snapshots();
  }
  if (!last_recorded) records.push_back(diagnose(s));
  write_csv(out / "diagnostics.csv", records);
  write_snapshot((out / "final_ions.bin").string(), s.f_plus, s.t);
  write_snapshot((out / "final_electrons.bin").string(), s.f_minus, s.t);
  return two_species_summary(s, records);
}

json run_arnold(const RunConfig& config, const InitialData& init, const fs::path& out) {
  const ArnoldRun res = arnold_experiment(two_species_config(config), init.f_plus, init.f_minus, config.t_end,
                                          config.output.every);
  write_csv(out / "diagnostics.csv", res.records);
  double max_increase = 0.0;
  for (std::size_t i = 1; i < res.records.size(); ++i)
    max_increase = std::max(max_increase, res.records[i].arnold_functional - res.records[i - 1].arnold_functional);
  json j = two_species_summary(res.final_state, res.records);
  j["reference_beta"] = res.reference.beta;
  j["reference_residual"] = res.reference.residual;
  j["arnold_initial"] = res.records.front().arnold_functional;
  j["arnold_final"] = res.records.back().arnold_functional;
  j["arnold_max_increase"] = max_increase;
  return j;
}

json run_sweep(const RunConfig& config, const InitialData& init, const fs::path& out) {
  const auto rows = limit_experiment(two_species_config(config), init.f_plus, init.f_minus, config.t_end,
                                     config.epsilons, config.eta_rule, config.output.every, config.parallel);
  std::ofstream table(out / "sweep.csv", std::ios::binary);
  table << "#schema=1\r\nepsilon,eta,deviation,final_entropy,status\r\n";
  json j;
  j["rows"] = json::array();
  bool all_ok = true;
  for (const auto& r : rows) {
    const fs::path dir = out / ("eps_" + format_number(r.epsilon));
    fs::create_directories(dir);
    write_csv(dir / "diagnostics.csv", r.records);
    table << format_number(r.epsilon) << ',' << format_number(r.eta) << ',' << format_number(r.deviation) << ','
          << format_number(r.final_entropy) << ',' << (r.ok() ? "ok" : "failed") << "\r\n";
    json row;
    row["epsilon"] = r.epsilon;
    row["eta"] = r.eta;
    row["deviation"] = std::isnan(r.deviation) ? json(nullptr) : json(r.deviation);
    row["final_entropy"] = std::isnan(r.final_entropy) ? json(nullptr) : json(r.final_entropy);
    row["collision_substeps"] = r.collision_substeps;
    row["entropy_increases"] = r.entropy_increases;
    row["error"] = r.error;
    j["rows"].push_back(row);
    all_ok = all_ok && r.ok();
  }
  j["all_ok"] = all_ok;
  return j;
}

}  // namespace

const char* to_string(Command c) {
  switch (c) {
    case Command::run: return "run";
    case Command::solve_pb: return "solve-pb";
    case Command::equilibrium: return "equilibrium";
    case Command::limit_sweep: return "limit-sweep";
  }
  return "?";
}

SpatialField initial_ion_density(const RunConfig& config, const DomainPtr& domain) {
  if (!config.initial.density_file.empty()) return read_density_file(config.initial.density_file, domain);
  if (!config.initial.ion.snapshot.empty())
    return density(read_snapshot(config.initial.ion.snapshot, domain, Species::ion).f);
  return SpatialField(domain, profile_density(config.initial.ion, domain->x, false));
}

InitialData build_initial_data(const RunConfig& config) {
  InitialData d;
  d.domain = build_domain(config.domain);
  d.f_plus = profile_distribution(config.initial.ion, d.domain, Species::ion);
  const bool two = config.model == ModelKind::two_species || config.model == ModelKind::limit_sweep ||
                   config.model == ModelKind::arnold;
  if (!two) return d;
  const double m0 = total_mass(d.f_plus);
  const ProfileSpec& e = config.initial.electron;
  if (!e.snapshot.empty()) {
    d.f_minus = read_snapshot(e.snapshot, d.domain, Species::electron).f;
    return d;
  }
  if (config.initial.electron_profile == "equilibrium") {
    const Equilibrium eq = self_consistent_equilibrium(density(d.f_plus), m0, config.E1, config.domain.lambda_D,
                                                       config.field);
    d.f_minus = eq.f;
    const Eigen::VectorXd bump = profile_density(e, d.domain->x, true);
    for (Eigen::Index c = 0; c < d.f_minus.values.rows(); ++c) d.f_minus.values.row(c) *= bump[c];
  } else {
    d.f_minus = profile_distribution(e, d.domain, Species::electron);
  }
  d.f_minus.values *= m0 / total_mass(d.f_minus);
  return d;
}

int dispatch(Command command, const RunConfig& config, const DispatchOptions& options, std::ostream& log) {
  if (!command_accepts(command, config.model))
    throw ValidationError(std::string("command '") + to_string(command) + "' cannot run model '" +
                          to_string(config.model) + "'");
  if (options.dry_run) {
    if (options.verbose) log << dump_config(config);
    log << "config valid: " << to_string(command) << " / " << to_string(config.model) << '\n';
    return 0;
  }
  const fs::path out = options.out_dir.empty() ? fs::path(config.output.directory) : fs::path(options.out_dir);
  fs::create_directories(out);
  {
    std::ofstream echo(out / "config.txt");
    echo << dump_config(config);
  }

  const auto t0 = std::chrono::steady_clock::now();
  json summary;
  summary["command"] = to_string(command);
  summary["model"] = to_string(config.model);
  const InitialData init = build_initial_data(config);
  json result;
  switch (command) {
    case Command::run:
      if (config.model == ModelKind::reduced_ions) result = run_reduced(config, init, out, log, options.verbose);
      else if (config.model == ModelKind::arnold) result = run_arnold(config, init, out);
      else result = run_two(config, init, out, log, options.verbose);
      break;
    case Command::solve_pb: {
      const SpatialField n = initial_ion_density(config, init.domain);
      const BetaSolution sol = find_beta(n, integrate_spatial(n), config.E1, config.domain.lambda_D, config.field);
      result["beta"] = sol.beta;
      result["pde_residual"] = sol.pde_residual;
      result["energy_residual"] = sol.energy_residual;
      result["mass_residual"] = sol.mass_residual;
      result["newton_iterations"] = sol.newton_iters;
      result["bisection_iterations"] = sol.bisect_iters;
      result["elliptic_iterations"] = sol.elliptic_iters;
      result["beta_bracket"] = {sol.beta_lower, sol.beta_upper};
      result["phi"] = field_json(sol.phi);
      break;
    }
    case Command::equilibrium: {
      const SpatialField n = initial_ion_density(config, init.domain);
      const Equilibrium eq =
          self_consistent_equilibrium(n, integrate_spatial(n), config.E1, config.domain.lambda_D, config.field);
      result["beta"] = eq.beta;
      result["pde_residual"] = eq.pde_residual;
      result["distribution_residual"] = eq.report.distribution_residual;
      result["density_residual"] = eq.report.density_residual;
      result["kinetic_residual"] = eq.report.kinetic_residual;
      result["phi"] = field_json(eq.phi);
      write_snapshot((out / "equilibrium_electrons.bin").string(), eq.f, 0.0);
      break;
    }
    case Command::limit_sweep:
      result = run_sweep(config, init, out);
      break;
  }
  summary["result"] = result;
  summary["wall_seconds"] = seconds_since(t0);
  write_json(out / "summary.json", summary);
  if (options.verbose) log << "wrote " << (out / "summary.json").string() << '\n';
  if (command == Command::limit_sweep && !result["all_ok"].get<bool>()) return 3;
  return 0;
}

}  // namespace mbions

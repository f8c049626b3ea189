#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "mbions/reduced_ions.hpp"
#include "mbions/two_species.hpp"

using namespace mbions;
using std::numbers::pi;

namespace {

DomainPtr make_domain(int nx, int nv, double vmax = 8.0, double lambda_D = 1.0) {
  DomainSpec spec;
  spec.n_x = nx;
  spec.n_v = nv;
  spec.v_max = vmax;
  spec.lambda_D = lambda_D;
  return build_domain(spec);
}

PhaseDistribution maxwellian_profile(const DomainPtr& dom, double amplitude, double theta, Species s) {
  const Eigen::ArrayXd x = dom->x.coordinate(0);
  const SpatialField n(dom, (1.0 + amplitude * x.cos()).matrix());
  return local_maxwellian(n, theta, Eigen::VectorXd::Zero(1), s);
}

// First Fourier coefficient of the density; its phase locates a bump.
std::complex<double> first_mode(const PhaseDistribution& f) {
  const Eigen::VectorXd n = density(f).values;
  const Eigen::ArrayXd x = f.domain->x.coordinate(0);
  std::complex<double> z = 0.0;
  for (Eigen::Index i = 0; i < n.size(); ++i) z += n[i] * std::exp(std::complex<double>(0.0, x[i]));
  return z;
}

double shift_between(const PhaseDistribution& a, const PhaseDistribution& b) {
  return std::arg(first_mode(b) * std::conj(first_mode(a)));
}

}  // namespace

TEST_CASE("linear Poisson examples") {
  auto dom = make_domain(64, 8);
  const PhaseDistribution f = maxwellian_profile(dom, 0.2, 1.0, Species::ion);
  PhaseDistribution g = f;
  g.species = Species::electron;
  CHECK(solve_poisson_linear(f, g, 1.0).values.cwiseAbs().maxCoeff() < 1e-13);

  double previous = 0.0;
  for (int n : {32, 64, 128}) {
    auto d = make_domain(n, 8);
    const Eigen::ArrayXd x = d->x.coordinate(0);
    const SpatialField phi = solve_poisson_linear(SpatialField(d, x.cos().matrix()), 1.0);
    const double err = (phi.values.array() - x.cos()).abs().maxCoeff();
    CHECK(err < 4e-3 * (32.0 / n) * (32.0 / n));
    if (previous > 0.0) CHECK(previous / err == doctest::Approx(4.0).epsilon(0.05));
    previous = err;
    CHECK(std::abs(phi.values.sum()) < 1e-12);
  }

  auto d = make_domain(32, 8, 8.0, 0.5);
  const Eigen::ArrayXd x = d->x.coordinate(0);
  const SpatialField shifted = solve_poisson_linear(SpatialField(d, (3.0 + x.sin()).matrix()), 0.5);
  CHECK(std::abs(shifted.values.mean()) < 1e-14);
  CHECK((shifted.values.array() - 4.0 * x.sin()).abs().maxCoeff() < 2e-2);
}

TEST_CASE("neutrality is required") {
  auto dom = make_domain(16, 16);
  const PhaseDistribution f = maxwellian_profile(dom, 0.1, 1.0, Species::ion);
  PhaseDistribution g = maxwellian_profile(dom, 0.0, 1.0, Species::electron);
  g.values *= 1.01;
  CHECK_THROWS_AS(solve_poisson_linear(f, g, 1.0), ChargeError);
  CHECK_THROWS_AS(init_two_species({}, f, g), ChargeError);
}

TEST_CASE("eta rules must satisfy the collisional scaling") {
  CHECK(EtaRule{}(0.04) == doctest::Approx(0.2));
  CHECK_NOTHROW(EtaRule(2.0, 0.0).validate());
  CHECK_THROWS_AS(EtaRule(1.0, 1.0).validate(), ValidationError);
  CHECK_THROWS_AS(EtaRule(1.0, 1.5).validate(), ValidationError);
  CHECK_THROWS_AS(EtaRule(1.0, -0.5).validate(), ValidationError);
  CHECK_THROWS_AS(EtaRule(0.0, 0.5).validate(), ValidationError);
  TwoSpeciesConfig cfg;
  cfg.eta_rule.exponent = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg.eta = 0.7;  // an explicit eta bypasses the rule
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.effective_eta() == 0.7);
  cfg.epsilon = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
}

TEST_CASE("global Maxwellian equilibrium is stationary") {
  auto dom = make_domain(16, 32);
  const PhaseDistribution ions = maxwellian_profile(dom, 0.0, 1.0, Species::ion);
  const PhaseDistribution electrons = maxwellian_profile(dom, 0.0, 1.0, Species::electron);
  TwoSpeciesConfig cfg;
  cfg.epsilon = 0.2;
  cfg.dt = 0.05;
  TwoSpeciesState s = init_two_species(cfg, ions, electrons);
  for (int i = 0; i < 50; ++i) s = two_species_step(s, cfg.dt, cfg);
  CHECK((s.f_plus.values - ions.values).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK((s.f_minus.values - electrons.values).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK(s.phi.values.cwiseAbs().maxCoeff() <= 1e-8);
  CHECK(s.entropy_increases == 0);
  CHECK(mb_deviation(s) < 1e-12);
}

TEST_CASE("collisionless electrons stream 1/epsilon faster than ions") {
  auto dom = make_domain(128, 16, 4.0, 1e4);  // huge Debye length: negligible field
  const Eigen::ArrayXd x = dom->x.coordinate(0);
  const int column = 10;  // v = 1.25
  const double v = dom->v.node(column);
  PhaseDistribution f = PhaseDistribution::zeros(dom, Species::ion);
  f.values.col(column) = (-(x - pi).square() / 0.3).exp().matrix();
  TwoSpeciesConfig cfg;
  cfg.epsilon = 0.5;
  cfg.dt = 0.05;
  cfg.electron_collisions = false;
  TwoSpeciesState s = init_two_species(cfg, f, f);
  const TwoSpeciesRun r = run_two_species(cfg, s, 0.5, 100);
  const double ion_shift = shift_between(f, r.final_state.f_plus);
  const double electron_shift = shift_between(f, r.final_state.f_minus);
  CHECK(ion_shift == doctest::Approx(v * 0.5).epsilon(1e-3));
  CHECK(electron_shift == doctest::Approx(v * 0.5 / cfg.epsilon).epsilon(1e-3));
  CHECK(r.final_state.collision_substeps == 0);
}

TEST_CASE("perturbed run: masses, energy and the entropy guard") {
  auto dom = make_domain(32, 32);
  const PhaseDistribution ions = maxwellian_profile(dom, 0.1, 1.0, Species::ion);
  const PhaseDistribution electrons = maxwellian_profile(dom, 0.0, 1.0, Species::electron);
  TwoSpeciesConfig cfg;
  cfg.epsilon = 0.2;
  cfg.dt = 0.02;
  cfg.electron_cfl = 1.0;
  cfg.resolve_per_substep = true;
  const TwoSpeciesRun r = run_two_species(cfg, init_two_species(cfg, ions, electrons), 2.0, 10);
  REQUIRE(r.final_state.step == 100);
  const DiagnosticsRecord& first = r.records.front();
  for (const auto& rec : r.records) {
    CHECK(std::abs(rec.mass_ion - first.mass_ion) <= 1e-10 * first.mass_ion);
    CHECK(std::abs(rec.mass_electron + rec.cumulative_mass_loss - first.mass_electron) <= 1e-10 * first.mass_ion);
    CHECK(std::abs(rec.total_energy - first.total_energy) <= 1e-3 * first.total_energy);
  }
  CHECK(r.final_state.cumulative_mass_loss <= 1e-10 * first.mass_ion);
  CHECK(r.final_state.collision_substeps > 0);
  CHECK(r.final_state.entropy_increases == 0);
  CHECK(r.final_state.bgk_stats.fallback == 0);
  CHECK(r.records.back().dissipation <= 0.0);
}

TEST_CASE("ion collisions conserve ion mass") {
  auto dom = make_domain(16, 32);
  PhaseDistribution ions = maxwellian_profile(dom, 0.1, 1.0, Species::ion);
  ions.values.col(20) *= 2.0;
  ions.values *= total_mass(maxwellian_profile(dom, 0.1, 1.0, Species::ion)) / total_mass(ions);
  const PhaseDistribution electrons = maxwellian_profile(dom, 0.0, 1.0, Species::electron);
  TwoSpeciesConfig cfg;
  cfg.sigma = 1.0;
  cfg.dt = 0.05;
  const TwoSpeciesRun r = run_two_species(cfg, init_two_species(cfg, ions, electrons), 0.5, 10);
  CHECK(r.records.back().mass_ion == doctest::Approx(r.records.front().mass_ion).epsilon(1e-12));
  CHECK(r.records.back().entropy_ion < r.records.front().entropy_ion);
}

TEST_CASE("subcycling limit") {
  auto dom = make_domain(16, 16);
  const PhaseDistribution ions = maxwellian_profile(dom, 0.1, 1.0, Species::ion);
  const PhaseDistribution electrons = maxwellian_profile(dom, 0.0, 1.0, Species::electron);
  TwoSpeciesConfig cfg;
  cfg.epsilon = 0.01;
  cfg.max_substeps = 10;
  cfg.dt = 0.1;
  const TwoSpeciesState s = init_two_species(cfg, ions, electrons);
  CHECK_THROWS_AS(two_species_step(s, cfg.dt, cfg), SubstepLimitError);
  CHECK_THROWS_AS(run_two_species(cfg, s, 1.0), StepError);
}

TEST_CASE("Maxwell-Boltzmann deviation") {
  auto dom = make_domain(32, 64);
  const Eigen::ArrayXd x = dom->x.coordinate(0);
  const SpatialField phi(dom, (0.3 * x.cos()).matrix());
  const PhaseDistribution M = maxwellian(1.5, phi);
  CHECK(mb_deviation(M, phi) < 1e-12);
  SpatialField shifted = phi;
  shifted.values.array() += 7.0;
  CHECK(mb_deviation(M, shifted) == doctest::Approx(mb_deviation(M, phi)).epsilon(1e-9));
  const PhaseDistribution uniform = maxwellian_profile(dom, 0.0, 1.0, Species::electron);
  CHECK(mb_deviation(uniform, phi) > 0.05);
  SpatialField other = phi;
  other.values.array() += 0.1 * x.sin();
  CHECK(mb_deviation(uniform, other) == doctest::Approx(mb_deviation(uniform, SpatialField(dom, other.values.array() - 3.0))));
  CHECK_THROWS(mb_deviation(PhaseDistribution::zeros(dom, Species::electron), phi));
}

TEST_CASE("limit experiment bookkeeping") {
  auto dom = make_domain(16, 32);
  const PhaseDistribution ions = maxwellian_profile(dom, 0.0, 1.0, Species::ion);
  const PhaseDistribution electrons = maxwellian_profile(dom, 0.0, 1.0, Species::electron);
  TwoSpeciesConfig cfg;
  cfg.dt = 0.1;
  const auto rows = limit_experiment(cfg, ions, electrons, 0.5, {0.3}, EtaRule{}, 1);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].ok());
  CHECK(rows[0].eta == doctest::Approx(std::sqrt(0.3)));
  CHECK(rows[0].records.size() == 6);
  for (const auto& r : rows[0].records) CHECK(r.mb_deviation < 1e-12);
  CHECK(rows[0].deviation < 1e-12);
  CHECK_THROWS_AS(limit_experiment(cfg, ions, electrons, 0.5, {1.0}, EtaRule{}), ValidationError);
  CHECK_THROWS_AS(limit_experiment(cfg, ions, electrons, 0.5, {0.1}, EtaRule(1.0, 1.0)), ValidationError);

  cfg.max_substeps = 20;
  const auto failed = limit_experiment(cfg, maxwellian_profile(dom, 0.1, 1.0, Species::ion), electrons, 0.5,
                                       {0.5, 0.01}, EtaRule{}, 1, true);
  REQUIRE(failed.size() == 2);
  CHECK(failed[0].ok());
  CHECK_FALSE(failed[1].ok());
  CHECK(failed[1].records.size() == 1);
  CHECK(failed[1].error.find("substeps") != std::string::npos);
}

TEST_CASE("perturbed electrons approach the Boltzmann relation as epsilon shrinks") {
  auto dom = make_domain(32, 32);
  const PhaseDistribution ions = maxwellian_profile(dom, 0.1, 1.0, Species::ion);
  const PhaseDistribution electrons = maxwellian_profile(dom, 0.0, 1.0, Species::electron);
  TwoSpeciesConfig cfg;
  cfg.dt = 0.05;
  cfg.electron_cfl = 1.0;
  cfg.resolve_per_substep = true;
  const auto rows = limit_experiment(cfg, ions, electrons, 0.5, {0.2, 0.1}, EtaRule{}, 100, true);
  REQUIRE(rows.size() == 2);
  REQUIRE(rows[0].ok());
  REQUIRE(rows[1].ok());
  CHECK(rows[1].deviation < rows[0].deviation);
}

TEST_CASE("Arnold functional decays along a short frozen-ion run") {
  auto dom = make_domain(32, 32);
  const PhaseDistribution ions = maxwellian_profile(dom, 0.2, 1.0, Species::ion);
  const StationaryReference ref = stationary_reference(density(ions), total_mass(ions), 3.0);
  PhaseDistribution electrons = ref.F;
  const Eigen::ArrayXd x = dom->x.coordinate(0);
  for (Eigen::Index c = 0; c < x.size(); ++c) electrons.values.row(c) *= 1.0 + 0.05 * std::sin(x[c]);
  electrons.values *= total_mass(ions) / total_mass(electrons);
  TwoSpeciesConfig cfg;
  cfg.epsilon = 0.1;
  cfg.eta = 1.0;
  cfg.dt = 0.05;
  cfg.resolve_per_substep = true;
  const ArnoldRun run = arnold_experiment(cfg, ions, electrons, 0.5, 1);
  REQUIRE(run.records.size() == 11);
  for (std::size_t i = 1; i < run.records.size(); ++i)
    CHECK(run.records[i].arnold_functional <= run.records[i - 1].arnold_functional + 1e-8);
  CHECK(run.records.back().arnold_functional < 0.5 * run.records.front().arnold_functional);
  CHECK((run.final_state.f_plus.values - ions.values).cwiseAbs().maxCoeff() == 0.0);
  CHECK(run.final_state.entropy_increases == 0);
}

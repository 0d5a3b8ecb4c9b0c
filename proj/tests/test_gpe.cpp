#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "modelens/errors.hpp"
#include "modelens/fit.hpp"
#include "modelens/gpe.hpp"

using namespace modelens;

namespace {

ComplexField oscillator_ground(const Grid2D& g, double x0 = 0.0, double y0 = 0.0) {
  std::vector<Complex> v(g.size());
  for (int iy = 0; iy < g.ny(); ++iy)
    for (int ix = 0; ix < g.nx(); ++ix) {
      const double x = g.x(ix) - x0, y = g.y(iy) - y0;
      v[g.index(ix, iy)] = std::exp(-(x * x + y * y) / 2) / std::sqrt(std::numbers::pi);
    }
  return ComplexField(g, std::move(v));
}

const TrapParams kIsotropic{1.0, 1.0, 0.0, 0.0, 0.0};

}  // namespace

TEST(CouplingConstant, Examples) {
  EXPECT_EQ(coupling_constant(0.0), 0.0);
  EXPECT_NEAR(coupling_constant(1.0), 5.0132565492620005, 1e-14);  // sqrt(8 pi)
  EXPECT_DOUBLE_EQ(coupling_constant(0.6), 2 * coupling_constant(0.3));
  EXPECT_THROW(coupling_constant(-1e-3), ValidationError);
}

TEST(Potential, ReferenceTrapValues) {
  const auto fin = TrapParams::reference_final();
  const auto ini = TrapParams::reference_initial();
  EXPECT_DOUBLE_EQ(fin.value(1.0, 0.0), 0.5);
  EXPECT_NEAR(ini.value(0.5, 0.25), 0.0, 1e-15);
  EXPECT_NEAR(ini.value(1.5, 0.25), 0.48473964174307577, 1e-14);  // numpy oracle
}

TEST(Potential, GridSamplingAndMinimum) {
  const Grid2D g(32, 32, 15, 15);
  const auto ini = TrapParams::reference_initial();
  const auto V = potential(ini, g);
  for (int iy = 0; iy < g.ny(); iy += 5)
    for (int ix = 0; ix < g.nx(); ix += 3) EXPECT_DOUBLE_EQ(V(ix, iy), ini.value(g.x(ix), g.y(iy)));
  const auto vals = V.values();
  EXPECT_GE(*std::min_element(vals.begin(), vals.end()), 0.0);
  EXPECT_THROW(potential(TrapParams{0.0, 1.0, 0, 0, 0}, g), ValidationError);
  EXPECT_THROW(potential(TrapParams{1.0, -1.0, 0, 0, 0}, g), ValidationError);
}

TEST(SimParams, DefaultSamplingIsThreeHundredFrames) {
  const SimParams sim;
  const auto steps = sim.sample_steps();
  ASSERT_EQ(steps.size(), 300u);
  EXPECT_EQ(steps.front(), 0);
  EXPECT_EQ(steps[1], 126);
  EXPECT_EQ(steps.back(), 299 * 126);
  SimParams alt;
  alt.frame_count = 152;
  const auto s152 = alt.sample_steps();
  EXPECT_EQ(s152.size(), 152u);
  EXPECT_EQ(s152.back(), 37700);
}

TEST(SimParams, Validation) {
  SimParams s;
  s.dt = 0.2;  // > sample_interval
  EXPECT_THROW(s.validate(), ValidationError);
  s = SimParams{};
  s.g2dN = -1;
  EXPECT_THROW(s.validate(), ValidationError);
}

TEST(GroundState, IsotropicOscillatorIsGaussian) {
  const Grid2D g(64, 64, 14, 14);
  const auto V = potential(kIsotropic, g);
  const auto gs = ground_state(V, 0.0);
  EXPECT_NEAR(gs.mu, 1.0, 1e-9);
  EXPECT_NEAR(gs.energy, 1.0, 1e-9);
  const auto ref = oscillator_ground(g);
  double err = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) {
    err = std::max(err, std::abs(gs.psi[j] - ref[j]));
    EXPECT_EQ(gs.psi[j].imag(), 0.0);
    EXPECT_GE(gs.psi[j].real(), -1e-12);  // rounding in the far tail
  }
  EXPECT_LT(err, 1e-7);
  EXPECT_NEAR(inner_product(gs.psi, gs.psi).real(), 1.0, 1e-10);
}

TEST(GroundState, ThomasFermiChemicalPotential) {
  const Grid2D g(64, 64, 15, 15);
  const auto gs = ground_state(potential(TrapParams::reference_final(), g), 1000.0);
  EXPECT_NEAR(gs.mu, 20.607725662368527, 0.05 * 20.607725662368527);  // sqrt(g sqrt(eps)/pi)
  EXPECT_NEAR(inner_product(gs.psi, gs.psi).real(), 1.0, 1e-10);
  EXPECT_NEAR(chemical_potential(gs.psi, potential(TrapParams::reference_final(), g), 1000.0), gs.mu, 1e-9 * gs.mu);
}

TEST(GroundState, ImaginaryTimeEnergyIsNonIncreasing) {
  const Grid2D g(32, 32, 15, 15);
  GroundStateOptions opts;
  opts.polish = false;
  const auto gs = ground_state(potential(TrapParams::reference_initial(), g), 200.0, 1e-10, opts);
  ASSERT_GT(gs.energy_trace.size(), 3u);
  for (std::size_t i = 1; i < gs.energy_trace.size(); ++i) {
    EXPECT_LE(gs.energy_trace[i], gs.energy_trace[i - 1] * (1 + 1e-13));
  }
}

TEST(GroundState, ErrorsAndIterationCap) {
  const Grid2D g(16, 16, 10, 10);
  const auto V = potential(kIsotropic, g);
  EXPECT_THROW(ground_state(V, 0.0, 0.0), ValidationError);
  EXPECT_THROW(ground_state(V, -1.0), ValidationError);
  GroundStateOptions opts;
  opts.max_steps = 20;
  EXPECT_THROW(ground_state(V, 100.0, 1e-14, opts), NumericalError);
}

TEST(Energy, OscillatorGroundStateAndMuEqualsE) {
  const Grid2D g(64, 64, 14, 14);
  const auto psi = oscillator_ground(g);
  const auto V = potential(kIsotropic, g);
  EXPECT_NEAR(energy(psi, V, 0.0), 1.0, 1e-10);
  EXPECT_NEAR(chemical_potential(psi, V, 0.0), energy(psi, V, 0.0), 1e-12);
}

TEST(CenterOfMass, Examples) {
  const Grid2D g(64, 64, 12, 12);
  auto density = [&](const ComplexField& psi) {
    std::vector<double> d(psi.size());
    for (std::size_t j = 0; j < d.size(); ++j) d[j] = std::norm(psi[j]);
    return d;
  };
  auto [x, y] = center_of_mass(density(oscillator_ground(g)), g);
  EXPECT_NEAR(x, 0.0, 1e-12);
  EXPECT_NEAR(y, 0.0, 1e-12);
  std::tie(x, y) = center_of_mass(density(oscillator_ground(g, 0.5, 0.25)), g);
  EXPECT_NEAR(x, 0.5, g.dx() / 10);
  EXPECT_NEAR(y, 0.25, g.dy() / 10);
  EXPECT_THROW(center_of_mass(std::vector<double>(g.size(), 0.0), g), ValidationError);
}

TEST(Evolve, KohnOscillationOfDisplacedIdealGas) {
  const Grid2D g(64, 64, 16, 16);
  SimParams sim;
  sim.g2dN = 0.0;
  sim.t_total = 4 * std::numbers::pi;
  sim.sample_interval = 0.1;
  const auto stack = evolve(oscillator_ground(g, 0.5, 0.0), potential(kIsotropic, g), sim);
  std::vector<double> xs;
  for (int n = 0; n < stack.n_frames(); ++n) {
    const Eigen::RowVectorXd row = stack.frames.row(n);
    xs.push_back(center_of_mass(std::span<const double>(row.data(), row.size()), g).first);
  }
  EXPECT_NEAR(xs.front(), 0.5, 1e-10);
  for (std::size_t n = 0; n < xs.size(); ++n) EXPECT_NEAR(xs[n], 0.5 * std::cos(stack.times[n]), 1e-6);
  const auto fit = fit_sinusoids(stack.times, xs, 1);
  EXPECT_NEAR(fit.frequencies[0], 1.0, 1e-3);
}

TEST(Evolve, NormConservedOverTenThousandFreeSteps) {
  const Grid2D g(32, 32, 20, 20);
  std::vector<double> zero(g.size(), 0.0);
  SplitStepPropagator p(oscillator_ground(g), ScalarField(g, zero), 0.0, 1e-3);
  p.step(10000);
  EXPECT_LE(std::abs(p.norm() - 1.0), 1e-10);
}

TEST(Evolve, EnergyDriftBoundedAndSecondOrder) {
  const Grid2D g(64, 64, 15, 15);
  const auto V0 = potential(TrapParams::reference_initial(), g);
  const auto V = potential(TrapParams::reference_final(), g);
  const auto gs = ground_state(V0, 1000.0);
  const double E0 = energy(gs.psi, V, 1000.0);
  auto drift = [&](double dt, double T) {
    SplitStepPropagator p(gs.psi, V, 1000.0, dt);
    double worst = 0.0;
    const long chunk = std::lround(0.5 / dt), total = std::lround(T / dt);
    for (long s = 0; s < total; s += chunk) {
      p.step(std::min(chunk, total - s));
      worst = std::max(worst, std::abs(energy(p.psi(), V, 1000.0) - E0) / E0);
    }
    return worst;
  };
  const double d1 = drift(1e-3, 37.7);
  EXPECT_LE(d1, 1e-8);
  const double d2 = drift(2e-3, 10.0), d3 = drift(1e-3, 10.0);
  EXPECT_NEAR(d2 / d3, 4.0, 0.6);
}

TEST(Evolve, InputChecks) {
  const Grid2D g(16, 16, 10, 10);
  const auto V = potential(kIsotropic, g);
  std::vector<Complex> twice(g.size(), 0.0);
  for (std::size_t j = 0; j < twice.size(); ++j) twice[j] = 2.0 * oscillator_ground(g)[j];
  SimParams sim;
  sim.t_total = 1.0;
  EXPECT_THROW(evolve(ComplexField(g, twice), V, sim), ValidationError);
  EXPECT_THROW(evolve(oscillator_ground(g), potential(kIsotropic, Grid2D(16, 16, 11, 10)), sim), ValidationError);
}

TEST(Evolve, NanAbortsWithDiagnostic) {
  const Grid2D g(16, 16, 10, 10);
  const ScalarField V(g, std::vector<double>(g.size(), 1e300));
  SimParams sim;
  sim.g2dN = 0.0;
  sim.dt = 1e10;
  sim.sample_interval = 1e10;
  sim.t_total = 2e10;
  try {
    evolve(oscillator_ground(g), V, sim);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("step"), std::string::npos);
  }
}

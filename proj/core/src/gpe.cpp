#include "modelens/gpe.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "modelens/linalg.hpp"
#include "real_hamiltonian.hpp"

namespace modelens {

void TrapParams::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ValidationError("TrapParams: alpha must be > 0");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ValidationError("TrapParams: epsilon must be > 0");
  if (!std::isfinite(x0) || !std::isfinite(y0) || !std::isfinite(theta)) {
    throw ValidationError("TrapParams: non-finite displacement or angle");
  }
}

double TrapParams::omega_x() const { return std::sqrt(alpha); }
double TrapParams::omega_y() const { return std::sqrt(alpha * epsilon); }

TrapParams TrapParams::reference_initial() {
  return {0.95, 1.68, 0.5, 0.25, 10.0 * std::numbers::pi / 180.0};
}

TrapParams TrapParams::reference_final() { return {1.0, 1.78, 0.0, 0.0, 0.0}; }

void SimParams::validate() const {
  if (!(g2dN >= 0.0) || !std::isfinite(g2dN)) throw ValidationError("SimParams: g2dN must be >= 0");
  if (!(dt > 0.0)) throw ValidationError("SimParams: dt must be > 0");
  if (!(sample_interval >= dt)) throw ValidationError("SimParams: sample_interval must be >= dt");
  if (!(t_total >= sample_interval)) throw ValidationError("SimParams: t_total must be >= sample_interval");
  if (frame_count && *frame_count < 2) throw ValidationError("SimParams: frame_count must be >= 2");
}

std::vector<long> SimParams::sample_steps() const {
  validate();
  const long last = std::lround(std::floor(t_total / dt + 1e-9));
  std::vector<long> steps;
  auto push = [&](double t) {
    const long s = std::min(std::lround(t / dt), last);
    if (steps.empty() || s > steps.back()) steps.push_back(s);
  };
  if (frame_count) {
    for (int j = 0; j < *frame_count; ++j) push(t_total * j / (*frame_count - 1));
    if (static_cast<int>(steps.size()) != *frame_count) {
      throw ValidationError("SimParams: frame_count too large for dt (duplicate sample steps)");
    }
  } else {
    const long count = std::lround(std::floor(t_total / sample_interval + 1e-9)) + 1;
    for (long j = 0; j < count; ++j) push(j * sample_interval);
  }
  return steps;
}

double coupling_constant(double a_over_az) {
  if (!(a_over_az >= 0.0)) throw ValidationError("coupling_constant: ratio must be >= 0");
  return std::sqrt(8.0 * std::numbers::pi) * a_over_az;
}

double TrapParams::value(double x, double y) const {
  const double du = x - x0, dv = y - y0;
  const double a = du * std::cos(theta) + dv * std::sin(theta);
  const double b = du * std::sin(theta) - dv * std::cos(theta);
  return 0.5 * alpha * (a * a + epsilon * b * b);
}

ScalarField potential(const TrapParams& trap, const Grid2D& grid) {
  trap.validate();
  std::vector<double> v(grid.size());
  for (int iy = 0; iy < grid.ny(); ++iy) {
    for (int ix = 0; ix < grid.nx(); ++ix) v[grid.index(ix, iy)] = trap.value(grid.x(ix), grid.y(iy));
  }
  return ScalarField(grid, std::move(v));
}

namespace {

struct EnergyParts {
  double kinetic = 0.0;
  double trap = 0.0;
  double interaction = 0.0;  // int g |psi|^4 (without the 1/2)
  double norm = 0.0;
};

EnergyParts energy_parts(const Fft2D& fft, std::span<const Complex> psi, std::span<const double> V,
                         double g) {
  const Grid2D& grid = fft.grid();
  std::vector<Complex> spectrum(psi.begin(), psi.end());
  fft.forward(spectrum);
  const auto mk2 = fft.minus_k_squared();
  EnergyParts e;
  for (std::size_t i = 0; i < spectrum.size(); ++i) e.kinetic += -0.5 * mk2[i] * std::norm(spectrum[i]);
  e.kinetic *= grid.cell_area() / static_cast<double>(grid.size());
  for (std::size_t i = 0; i < psi.size(); ++i) {
    const double rho = std::norm(psi[i]);
    e.trap += V[i] * rho;
    e.interaction += g * rho * rho;
    e.norm += rho;
  }
  e.trap *= grid.cell_area();
  e.interaction *= grid.cell_area();
  e.norm *= grid.cell_area();
  return e;
}

void check_same_grid(const ComplexField& psi, const ScalarField& V) {
  if (!(psi.grid() == V.grid())) throw ValidationError("wavefunction and potential grids differ");
}

void normalize(std::span<Complex> psi, double cell_area) {
  double n = 0.0;
  for (const auto& v : psi) n += std::norm(v);
  const double scale = 1.0 / std::sqrt(n * cell_area);
  for (auto& v : psi) v *= scale;
}

// Thomas-Fermi profile plus a Gaussian floor so the start is positive everywhere.
std::vector<Complex> initial_guess(const ScalarField& V, double g) {
  const auto v = V.values();
  const double area = V.grid().cell_area();
  std::vector<Complex> psi(v.size());
  double mu_tf = 0.0;
  if (g > 0.0) {
    double lo = 0.0, hi = *std::max_element(v.begin(), v.end());
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      double mass = 0.0;
      for (double x : v) mass += std::max(mid - x, 0.0);
      (mass * area > g ? hi : lo) = mid;
    }
    mu_tf = 0.5 * (lo + hi);
  }
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double tf = g > 0.0 ? std::sqrt(std::max(mu_tf - v[i], 0.0) / g) : 0.0;
    psi[i] = tf + std::exp(-v[i]);
  }
  normalize(psi, area);
  return psi;
}

// Newton iterations on (H0 + g psi^2 - mu) psi = 0 restricted to psi-orthogonal
// corrections. Returns the final relative residual.
double newton_polish(std::vector<Complex>& psi_c, const ScalarField& V, double g,
                     const GroundStateOptions& opt, double& mu_out) {
  const Grid2D& grid = V.grid();
  detail::RealHamiltonian h(grid, V.values());
  const auto n = static_cast<Eigen::Index>(grid.size());
  linalg::Vector psi(n), hpsi(n), diag(n), f(n), delta(n);
  for (Eigen::Index i = 0; i < n; ++i) psi(i) = std::abs(psi_c[i]);
  const double area = grid.cell_area();
  auto renorm = [&] { psi /= std::sqrt(psi.squaredNorm() * area); };
  renorm();

  double residual = 0.0;
  for (int it = 0; it <= opt.polish_max_steps; ++it) {
    diag = g * psi.array().square();
    h.apply(psi, diag, hpsi);
    const double mu = psi.dot(hpsi) / psi.squaredNorm();
    f = hpsi - mu * psi;
    residual = f.norm() / psi.norm();
    mu_out = mu;
    if (residual <= opt.polish_tol * std::max(1.0, std::abs(mu)) || it == opt.polish_max_steps) break;

    const linalg::Vector unit = psi.normalized();
    const linalg::Vector jdiag = 3.0 * g * psi.array().square() - mu;
    const double shift = 1.0 + 0.5 * std::abs(mu);
    auto op = [&](const linalg::Vector& x, linalg::Vector& y) { h.apply(x, jdiag, y); };
    auto pre = [&](const linalg::Vector& x, linalg::Vector& y) { h.inverse_kinetic(x, shift, y); };
    delta.setZero();
    const auto cg = linalg::pcg(op, pre, f, delta, 1e-13, 5000, &unit);
    if (!cg.converged && cg.relative_residual > 1e-6) break;
    psi -= delta;
    renorm();
  }
  // Keep the signs: on a coarse grid the spectral ground state rings slightly
  // negative in the tail, and |psi| would no longer be stationary.
  if (psi.sum() < 0.0) psi = -psi;
  for (Eigen::Index i = 0; i < n; ++i) psi_c[i] = psi(i);
  return residual;
}

}  // namespace

double energy(const ComplexField& psi, const ScalarField& V, double g2dN) {
  check_same_grid(psi, V);
  const Fft2D fft(psi.grid());
  const auto e = energy_parts(fft, psi.values(), V.values(), g2dN);
  return e.kinetic + e.trap + 0.5 * e.interaction;
}

double chemical_potential(const ComplexField& psi, const ScalarField& V, double g2dN) {
  check_same_grid(psi, V);
  const Fft2D fft(psi.grid());
  const auto e = energy_parts(fft, psi.values(), V.values(), g2dN);
  return (e.kinetic + e.trap + e.interaction) / e.norm;
}

GroundState ground_state(const ScalarField& V, double g2dN, double tol,
                         const GroundStateOptions& options) {
  V.grid().require_spectral();
  if (!(tol > 0.0)) throw ValidationError("ground_state: tol must be > 0");
  if (!(g2dN >= 0.0)) throw ValidationError("ground_state: g2dN must be >= 0");
  if (!(options.dtau > 0.0) || options.check_every < 1) throw ValidationError("ground_state: bad options");

  const Grid2D& grid = V.grid();
  const Fft2D fft(grid);
  const auto v = V.values();
  std::vector<Complex> psi = initial_guess(V, g2dN);

  std::vector<double> damping(grid.size());
  const auto mk2 = fft.minus_k_squared();
  for (std::size_t i = 0; i < damping.size(); ++i) damping[i] = std::exp(0.5 * options.dtau * mk2[i]);

  auto local = [&] {
    for (std::size_t i = 0; i < psi.size(); ++i) {
      psi[i] *= std::exp(-0.5 * options.dtau * (v[i] + g2dN * std::norm(psi[i])));
    }
  };

  GroundState result{ComplexField(grid), 0.0, 0.0, 0, {}, 0.0};
  auto parts = energy_parts(fft, psi, v, g2dN);
  double e_prev = parts.kinetic + parts.trap + 0.5 * parts.interaction;
  result.energy_trace.push_back(e_prev);
  bool converged = false;
  long step = 0;
  while (step < options.max_steps) {
    local();
    fft.forward(psi);
    for (std::size_t i = 0; i < psi.size(); ++i) psi[i] *= damping[i];
    fft.backward(psi);
    local();
    normalize(psi, grid.cell_area());
    ++step;
    if (step % options.check_every == 0) {
      parts = energy_parts(fft, psi, v, g2dN);
      const double e = parts.kinetic + parts.trap + 0.5 * parts.interaction;
      if (!std::isfinite(e)) throw NumericalError("ground_state: energy became non-finite");
      result.energy_trace.push_back(e);
      if (std::abs(e_prev - e) / options.check_every < tol) {
        converged = true;
        break;
      }
      e_prev = e;
    }
  }
  if (!converged) {
    throw NumericalError("ground_state: no convergence after " + std::to_string(step) + " steps");
  }
  result.steps = step;

  for (auto& x : psi) x = std::abs(x);
  normalize(psi, grid.cell_area());
  double mu = 0.0;
  if (options.polish) {
    result.residual = newton_polish(psi, V, g2dN, options, mu);
  }
  result.psi = ComplexField(grid, std::move(psi));
  parts = energy_parts(fft, result.psi.values(), v, g2dN);
  result.energy = parts.kinetic + parts.trap + 0.5 * parts.interaction;
  result.mu = (parts.kinetic + parts.trap + parts.interaction) / parts.norm;
  if (!options.polish) {
    // Residual of the stationary equation, for diagnostics only.
    detail::RealHamiltonian h(grid, v);
    const auto n = static_cast<Eigen::Index>(grid.size());
    linalg::Vector p(n), hp(n);
    for (Eigen::Index i = 0; i < n; ++i) p(i) = result.psi[i].real();
    h.apply(p, (g2dN * p.array().square()).matrix(), hp);
    result.residual = (hp - result.mu * p).norm() / p.norm();
  }
  return result;
}

SplitStepPropagator::SplitStepPropagator(const ComplexField& psi0, const ScalarField& V, double g2dN,
                                         double dt)
    : fft_(psi0.grid()),
      psi_(psi0.values().begin(), psi0.values().end()),
      V_(V.values().begin(), V.values().end()),
      g_(g2dN),
      dt_(dt) {
  check_same_grid(psi0, V);
  if (!(dt > 0.0)) throw ValidationError("SplitStepPropagator: dt must be > 0");
  const auto mk2 = fft_.minus_k_squared();
  kinetic_phase_.resize(mk2.size());
  for (std::size_t i = 0; i < mk2.size(); ++i) kinetic_phase_[i] = std::polar(1.0, 0.5 * dt * mk2[i]);
}

void SplitStepPropagator::local_phase(double fraction) {
  const double h = fraction * dt_;
  for (std::size_t i = 0; i < psi_.size(); ++i) {
    psi_[i] *= std::polar(1.0, -h * (V_[i] + g_ * std::norm(psi_[i])));
  }
}

void SplitStepPropagator::kinetic() {
  fft_.forward(psi_);
  for (std::size_t i = 0; i < psi_.size(); ++i) psi_[i] *= kinetic_phase_[i];
  fft_.backward(psi_);
}

void SplitStepPropagator::step(long n) {
  if (n <= 0) return;
  // Adjacent half local steps fuse exactly: the local step leaves |psi|^2 unchanged.
  local_phase(0.5);
  for (long i = 0; i < n; ++i) {
    kinetic();
    local_phase(i + 1 < n ? 1.0 : 0.5);
  }
  steps_ += n;
}

double SplitStepPropagator::norm() const {
  double n = 0.0;
  for (const auto& v : psi_) n += std::norm(v);
  return n * grid().cell_area();
}

void SplitStepPropagator::density(std::span<double> out) const {
  if (out.size() != psi_.size()) throw ValidationError("density: output size mismatch");
  for (std::size_t i = 0; i < psi_.size(); ++i) out[i] = std::norm(psi_[i]);
}

ImageStack evolve(const ComplexField& psi0, const ScalarField& V, const SimParams& sim) {
  check_same_grid(psi0, V);
  psi0.grid().require_spectral();
  const auto steps = sim.sample_steps();
  {
    double n = 0.0;
    for (const auto& v : psi0.values()) n += std::norm(v);
    n *= psi0.grid().cell_area();
    if (std::abs(n - 1.0) > 1e-6) throw ValidationError("evolve: psi0 must be normalised");
  }

  SplitStepPropagator prop(psi0, V, sim.g2dN, sim.dt);
  const Grid2D& grid = psi0.grid();
  FrameMatrix frames(static_cast<Eigen::Index>(steps.size()), static_cast<Eigen::Index>(grid.size()));
  std::vector<double> times;
  times.reserve(steps.size());
  for (std::size_t k = 0; k < steps.size(); ++k) {
    prop.step(steps[k] - prop.steps_taken());
    const double n = prop.norm();
    if (!std::isfinite(n)) {
      std::ostringstream msg;
      msg << "evolve: non-finite wavefunction at step " << prop.steps_taken() << " (norm " << n << ")";
      throw NumericalError(msg.str());
    }
    prop.density({frames.row(static_cast<Eigen::Index>(k)).data(), grid.size()});
    times.push_back(steps[k] * sim.dt);
  }
  return ImageStack(grid.nx(), grid.ny(), std::move(frames), std::move(times));
}

std::pair<double, double> center_of_mass(std::span<const double> frame, const Grid2D& grid) {
  if (frame.size() != grid.size()) throw ValidationError("center_of_mass: frame size mismatch");
  double m = 0.0, mx = 0.0, my = 0.0;
  for (int iy = 0; iy < grid.ny(); ++iy) {
    for (int ix = 0; ix < grid.nx(); ++ix) {
      const double rho = frame[grid.index(ix, iy)];
      m += rho;
      mx += rho * grid.x(ix);
      my += rho * grid.y(iy);
    }
  }
  if (!(m > 0.0)) throw ValidationError("center_of_mass: zero total mass");
  return {mx / m, my / m};
}

}  // namespace modelens

// Acceptance gate: one PASS/FAIL line per criterion, detail lines indented
// below it. Exit status is non-zero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "modelens/bdg.hpp"
#include "modelens/errors.hpp"
#include "modelens/fit.hpp"
#include "modelens/fourier.hpp"
#include "modelens/gpe.hpp"
#include "modelens/modes.hpp"
#include "modelens/pca.hpp"
#include "modelens/pipeline.hpp"
#include "modelens/synth.hpp"

using namespace modelens;

namespace {

class Criterion {
 public:
  Criterion(int number, std::string title) : number_(number), title_(std::move(title)) {}

  bool check(bool ok, const char* fmt, auto... args) {
    std::string line(256, '\0');
    line.resize(std::snprintf(line.data(), line.size(), fmt, args...));
    details_.push_back((ok ? "    ok   " : "    MISS ") + line);
    ok_ = ok_ && ok;
    return ok;
  }

  bool finish() const {
    std::printf("criterion %d: %s  %s\n", number_, ok_ ? "PASS" : "FAIL", title_.c_str());
    for (const auto& d : details_) std::printf("%s\n", d.c_str());
    std::fflush(stdout);
    return ok_;
  }

 private:
  int number_;
  std::string title_;
  std::vector<std::string> details_;
  bool ok_ = true;
};

const char* kLabels[] = {"dipole-x", "dipole-y", "quadrupole", "scissors", "monopole"};
// Published reference frequencies (omega_diag, omega_pca) per mode.
const std::map<std::string, std::pair<double, double>> kReference = {
    {"dipole-x", {0.998, 0.999}}, {"dipole-y", {1.332, 1.332}}, {"quadrupole", {1.552, 1.547}},
    {"scissors", {1.674, 1.674}}, {"monopole", {2.438, 2.441}},
};
const std::map<std::string, double> kMinOverlap = {
    {"dipole-x", 0.99}, {"dipole-y", 0.99}, {"scissors", 0.98}, {"monopole", 0.98}, {"quadrupole", 0.85},
};

const ModeMatch* find_label(const ModeReport& rep, const std::string& label) {
  for (const auto& m : rep.matches)
    if (m.label == label) return &m;
  return nullptr;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool criterion_frequencies(const PipelineResult& r) {
  Criterion c(1, "reference mode frequencies (default config)");
  for (const char* label : kLabels) {
    const auto* m = find_label(r.identify.report, label);
    if (!c.check(m && m->omega_pca && m->omega_diag, "%-10s identified among the leading PCs", label)) continue;
    const auto [diag_ref, pca_ref] = kReference.at(label);
    c.check(std::abs(*m->omega_diag - diag_ref) <= 0.01, "%-10s omega_diag %.4f vs %.3f (+-0.01)", label, *m->omega_diag,
            diag_ref);
    c.check(std::abs(*m->omega_pca - pca_ref) <= 0.01, "%-10s omega_pca  %.4f vs %.3f (+-0.01)", label, *m->omega_pca,
            pca_ref);
    c.check(std::abs(*m->omega_pca - *m->omega_diag) <= 5e-3, "%-10s |omega_pca - omega_diag| = %.2e (<= 5e-3)", label,
            std::abs(*m->omega_pca - *m->omega_diag));
  }
  const double exact[] = {1.0, std::sqrt(1.78)};
  for (int i = 0; i < 2; ++i) {
    const auto* m = find_label(r.identify.report, kLabels[i]);
    if (m && m->omega_diag)
      c.check(std::abs(*m->omega_diag - exact[i]) <= 2e-3, "%-10s omega_diag %.5f vs exact %.5f (+-2e-3)", kLabels[i],
              *m->omega_diag, exact[i]);
  }
  return c.finish();
}

bool criterion_overlaps(const PipelineResult& r) {
  Criterion c(2, "overlaps of the five leading identified PCs");
  int seen = 0;
  for (const auto& m : r.identify.report.matches) {
    if (!m.mode_index || !kMinOverlap.count(m.label)) continue;
    if (++seen > 5) break;
    c.check(m.overlap >= kMinOverlap.at(m.label), "PC%-2d %-10s overlap %.4f (>= %.2f)", m.pc_index, m.label.c_str(),
            m.overlap, kMinOverlap.at(m.label));
  }
  for (const auto& [label, min] : kMinOverlap) c.check(find_label(r.identify.report, label) != nullptr, "%s present", label.c_str());
  return c.finish();
}

bool criterion_subsampling(const PipelineConfig& cfg, const PipelineResult& r, const IdentifyStage& sub) {
  Criterion c(3, "keep-every-10 subsampling");
  c.check(subsample(r.stack, 10).n_frames() == 30, "%d frames after subsampling", subsample(r.stack, 10).n_frames());
  for (const char* label : {"dipole-x", "dipole-y", "scissors", "monopole"}) {
    const auto* m = find_label(sub.report, label);
    c.check(m && m->overlap >= 0.95, "%-10s identified, overlap %.4f (>= 0.95)", label, m ? m->overlap : 0.0);
  }
  const auto* q = find_label(sub.report, "quadrupole");
  c.check(q == nullptr, "quadrupole absent from identified PCs (threshold %.2f; best: PC%d overlap %.4f)",
          cfg.match_threshold, q ? q->pc_index : -1, q ? q->overlap : 0.0);
  return c.finish();
}

bool criterion_oracle() {
  Criterion c(4, "synthetic small-oscillation oracle");
  const auto g = Grid2D::raster(64, 64);
  const std::vector<std::string> names{"dipole-x", "dipole-y", "scissors"};
  const auto f = shape_profiles(g, names, 8.0);
  const auto rho0 = gaussian_cloud(g, 8.0);
  const double amp[] = {0.12, 0.08, 0.05}, omega[] = {1.0, 1.334, 1.675}, phase[] = {0.3, -0.7, 1.1};
  std::vector<SynthMode> modes;
  for (int k = 0; k < 3; ++k) modes.push_back({amp[k], omega[k], phase[k], f[k]});
  auto times = [](int N, double T) {
    std::vector<double> t(N);
    for (int n = 0; n < N; ++n) t[n] = T * n / N;
    return t;
  };
  auto as_vec = [](const ScalarField& s) { return Eigen::Map<const Eigen::VectorXd>(s.values().data(), s.size()); };

  // T = 37.7 covers two beat periods of the closest pair (2 pi / 0.334 = 18.8).
  const int N = 300;
  const auto pca = principal_components(center(synthesize_dataset(rho0, modes, times(N, 37.7), 0.0, 1)), 3);
  for (int k = 0; k < 3; ++k) {
    const double ov = std::abs(pca.components[k].image.dot(as_vec(f[k])));
    const double expect = N * amp[k] * amp[k] / (2.0 * (N - 1));
    c.check(ov >= 0.999, "%-9s PC%d overlap %.6f (>= 0.999)", names[k].c_str(), k, ov);
    c.check(std::abs(pca.components[k].eigenvalue / expect - 1) <= 0.05, "%-9s eigenvalue %.4e vs N c^2/(2(N-1)) = %.4e (5%%)",
            names[k].c_str(), pca.components[k].eigenvalue, expect);
  }

  // Exactly one beat period of the two leading modes.
  const std::vector<SynthMode> pair{modes[0], modes[1]};
  const double beat = 2 * std::numbers::pi / (omega[1] - omega[0]);
  const auto one = principal_components(center(synthesize_dataset(rho0, pair, times(150, beat), 0.0, 2)), 2);
  const double ov = std::abs(one.components[0].image.dot(as_vec(f[0])));
  c.check(ov >= 0.999, "T = one beat period (%.2f): dominant PC overlap %.6f (>= 0.999)", beat, ov);
  return c.finish();
}

bool criterion_solvers(const PipelineResult& r) {
  Criterion c(5, "solver properties");
  const Grid2D g128(128, 128, 15, 15);
  const auto V = potential(TrapParams::reference_final(), g128);

  {
    SplitStepPropagator p(r.ground_initial.psi, V, 1000.0, 1e-3);
    p.step(10000);
    const double err = std::abs(p.norm() - 1.0);
    c.check(err <= 1e-10, "norm error after 1e4 real-time steps %.2e (<= 1e-10)", err);
  }

  {
    const Grid2D g(64, 64, 15, 15);
    const auto V64 = potential(TrapParams::reference_final(), g);
    const auto gs = ground_state(potential(TrapParams::reference_initial(), g), 1000.0);
    const double E0 = energy(gs.psi, V64, 1000.0);
    auto drift = [&](double dt) {
      SplitStepPropagator p(gs.psi, V64, 1000.0, dt);
      double worst = 0.0;
      const long chunk = std::lround(0.5 / dt);
      for (int i = 0; i < 20; ++i) {
        p.step(chunk);
        worst = std::max(worst, std::abs(energy(p.psi(), V64, 1000.0) - E0) / E0);
      }
      return worst;
    };
    const double d2 = drift(2e-3), d1 = drift(1e-3), d05 = drift(5e-4);
    c.check(std::abs(d2 / d1 - 4) <= 1.0 && std::abs(d1 / d05 - 4) <= 1.0,
            "energy drift %.2e / %.2e / %.2e at dt = 2e-3 / 1e-3 / 5e-4: ratios %.2f, %.2f (4 +- 1)", d2, d1, d05,
            d2 / d1, d1 / d05);
  }

  // Kohn modes on a wider box with the same spacing, so the frequency error
  // measures the propagator rather than the periodic images.
  const Grid2D gk(160, 160, 18.75, 18.75);
  const auto Vk = potential(TrapParams::reference_final(), gk);
  TrapParams shifted = TrapParams::reference_final();
  shifted.x0 = 0.5;
  shifted.y0 = 0.25;
  for (const double gN : {0.0, 1000.0}) {
    const auto gs = ground_state(potential(shifted, gk), gN);
    SimParams sim;
    sim.g2dN = gN;
    sim.t_total = 20.0;
    sim.sample_interval = 0.1;
    const auto stack = evolve(gs.psi, Vk, sim);
    std::vector<double> xs, ys;
    for (int n = 0; n < stack.n_frames(); ++n) {
      const Eigen::RowVectorXd row = stack.frames.row(n);
      const auto [x, y] = center_of_mass(std::span<const double>(row.data(), row.size()), gk);
      xs.push_back(x);
      ys.push_back(y);
    }
    const double wx = fit_sinusoids(stack.times, xs, 1).frequencies[0];
    const double wy = fit_sinusoids(stack.times, ys, 1).frequencies[0];
    c.check(std::abs(wx - 1.0) <= 1e-3, "Kohn x, g2dN = %4.0f: omega %.6f (rel. error <= 1e-3)", gN, wx);
    c.check(std::abs(wy / std::sqrt(1.78) - 1.0) <= 1e-3, "Kohn y, g2dN = %4.0f: omega %.6f vs %.6f (rel. error <= 1e-3)",
            gN, wy, std::sqrt(1.78));
  }

  {
    const Grid2D g(48, 48, 14, 14);
    auto V0 = potential(TrapParams::reference_final(), g);
    const auto gs = ground_state(V0, 0.0, 1e-12);
    const auto modes = bdg_spectrum(Condensate{gs.psi, gs.mu, std::move(V0), 0.0}, 6);
    const double wy = std::sqrt(1.78), ladder[] = {1.0, wy, 2.0, 1.0 + wy, 2 * wy, 3.0};
    double worst = 0.0;
    for (int i = 0; i < 6; ++i) worst = std::max(worst, std::abs(modes[i].omega - ladder[i]));
    c.check(worst <= 1e-3, "ideal-gas BdG ladder, max deviation %.2e over 6 modes (<= 1e-3)", worst);
  }
  return c.finish();
}

bool criterion_pca() {
  Criterion c(6, "PCA unit properties");
  double eig = 0.0, ortho = 0.0, recon = 0.0;
  for (unsigned seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d;
    FrameMatrix M(10, 16);
    for (int i = 0; i < 10; ++i)
      for (int j = 0; j < 16; ++j) M(i, j) = d(rng);
    const ImageStack stack(4, 4, M, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
    const auto data = center(stack);
    const auto pca = principal_components(data, 10);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(data.B.transpose() * data.B / 9.0));
    for (std::size_t k = 0; k < pca.components.size(); ++k) {
      eig = std::max(eig, std::abs(pca.components[k].eigenvalue - es.eigenvalues()(15 - k)));
      for (std::size_t j = 0; j <= k; ++j)
        ortho = std::max(ortho, std::abs(pca.components[k].image.dot(pca.components[j].image) - (j == k ? 1.0 : 0.0)));
    }
    const auto rec = reconstruct(data, pca.components, weights(data, pca.components));
    recon = std::max(recon, (rec.frames - stack.frames).cwiseAbs().maxCoeff());
  }
  c.check(eig <= 1e-10, "Gram vs direct covariance eigenvalues, max difference %.2e (<= 1e-10, 20 instances)", eig);
  c.check(ortho <= 1e-10, "PC orthonormality, max deviation %.2e (<= 1e-10)", ortho);
  c.check(recon <= 1e-10, "full reconstruction, max error %.2e (<= 1e-10)", recon);
  return c.finish();
}

bool criterion_fourier(const PipelineResult& r, const IdentifyStage& sub, const PipelineConfig& cfg) {
  Criterion c(7, "Fourier baseline contrast");
  // White noise on the reference geometry, same frame count and sampling.
  const int N = r.stack.n_frames(), P = r.stack.n_pixels();
  const double sigma = 1e-3;
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> d(0.0, sigma);
  FrameMatrix frames(N, P);
  for (int n = 0; n < N; ++n)
    for (int j = 0; j < P; ++j) frames(n, j) = d(rng);
  const ImageStack noise(r.stack.nx, r.stack.ny, std::move(frames), r.stack.times);
  const double dt = noise.times[1] - noise.times[0];
  double lo = 1e300, hi = 0.0;
  for (int m = 1; 2 * m < N; ++m) {
    const double a = fourier_response(noise, 2 * std::numbers::pi * m / (N * dt)).amplitude / (sigma / std::sqrt(N));
    lo = std::min(lo, a);
    hi = std::max(hi, a);
  }
  c.check(lo >= 0.9 && hi <= 1.1, "Fourier amplitude / (sigma/sqrt N) over all %d bins in [%.3f, %.3f] (within 10%%)",
          (N - 1) / 2, lo, hi);

  const auto data = center(noise);
  const auto pca = principal_components(data, 11);
  // Largest eigenvalue of pure noise sits at the Marchenko-Pastur edge.
  const double bulk = sigma * sigma * P / (N - 1), edge = bulk * std::pow(1 + std::sqrt(double(N) / P), 2);
  c.check(pca.components[0].eigenvalue <= 1.05 * edge && pca.components[10].eigenvalue >= 0.9 * pca.components[0].eigenvalue,
          "PCA spectrum flat: lambda_1 / lambda_11 = %.3f, lambda_1 / noise edge = %.3f", pca.components[0].eigenvalue /
          pca.components[10].eigenvalue, pca.components[0].eigenvalue / edge);
  const auto rep = match_modes(pca.components, r.bdg.profiles, {cfg.match_threshold, 1e-3});
  int identified = 0;
  double best = 0.0;
  for (const auto& m : rep) {
    identified += m.mode_index.has_value();
    best = std::max(best, m.overlap);
  }
  c.check(identified == 0, "no identified mode on the noise stack (best overlap %.3f)", best);

  const auto decimated = subsample(r.stack, 10);
  const auto* mono = find_label(sub.report, "monopole");
  bool threw = false;
  try {
    fourier_response(decimated, mono && mono->omega_pca ? *mono->omega_pca : 2.44);
  } catch (const ValidationError&) {
    threw = true;
  }
  c.check(threw, "%s", "Fourier response at the monopole frequency rejected on the 1-in-10 stack");
  c.check(mono && mono->overlap >= 0.95, "PCA identifies the monopole on the same stack (overlap %.4f)",
          mono ? mono->overlap : 0.0);
  return c.finish();
}

}  // namespace

int main() {
  try {
    const auto t0 = std::chrono::steady_clock::now();
    const PipelineConfig cfg;  // defaults are the reference simulation
    const auto result = run_pipeline(cfg, std::nullopt);
    std::printf("reference pipeline: %d frames, %.1f s\n", result.stack.n_frames(), seconds_since(t0));

    PipelineConfig sub_cfg = cfg;
    sub_cfg.keep_every = 10;
    const auto sub_pca = run_pca(sub_cfg, result.stack);
    const auto sub = run_identify(sub_cfg, sub_pca.pca.components, sub_pca.weights, result.bdg.profiles);

    bool ok = true;
    ok &= criterion_frequencies(result);
    ok &= criterion_overlaps(result);
    ok &= criterion_subsampling(sub_cfg, result, sub);
    ok &= criterion_oracle();
    ok &= criterion_solvers(result);
    ok &= criterion_pca();
    ok &= criterion_fourier(result, sub, cfg);
    std::printf("acceptance: %s (%.1f s)\n", ok ? "all criteria pass" : "some criteria fail", seconds_since(t0));
    return ok ? 0 : 1;
  } catch (const std::exception& e) {
    std::printf("acceptance: aborted: %s\n", e.what());
    return 2;
  }
}

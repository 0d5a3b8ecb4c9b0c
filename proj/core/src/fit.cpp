#include "modelens/fit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <Eigen/Dense>

#include "modelens/errors.hpp"

namespace modelens {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_phase(double phi) {
  phi = std::remainder(phi, kTwoPi);
  if (phi <= -std::numbers::pi) phi += kTwoPi;
  return phi;
}

// Parameters: [c0, a_1, b_1, w_1, ..., a_n, b_n, w_n] in centred time s = t - tm,
// model c0 + sum a cos(w s) + b sin(w s).
struct Model {
  Eigen::VectorXd s;
  Eigen::VectorXd y;

  int n_sin(const Eigen::VectorXd& p) const { return static_cast<int>((p.size() - 1) / 3); }

  Eigen::VectorXd residual(const Eigen::VectorXd& p) const {
    Eigen::VectorXd r = y.array() - p(0);
    for (int j = 0; j < n_sin(p); ++j) {
      const double a = p(1 + 3 * j), b = p(2 + 3 * j), w = p(3 + 3 * j);
      r.array() -= a * (w * s.array()).cos() + b * (w * s.array()).sin();
    }
    return r;
  }

  Eigen::MatrixXd jacobian(const Eigen::VectorXd& p) const {
    Eigen::MatrixXd J(s.size(), p.size());
    J.col(0).setOnes();
    for (int j = 0; j < n_sin(p); ++j) {
      const double a = p(1 + 3 * j), b = p(2 + 3 * j), w = p(3 + 3 * j);
      const Eigen::ArrayXd c = (w * s.array()).cos(), sn = (w * s.array()).sin();
      J.col(1 + 3 * j) = c;
      J.col(2 + 3 * j) = sn;
      J.col(3 + 3 * j) = s.array() * (-a * sn + b * c);
    }
    return J;
  }

  // Linear least squares for offset and (a, b) pairs at fixed frequencies.
  Eigen::VectorXd linear_solve(const std::vector<double>& omegas) const {
    const int n = static_cast<int>(omegas.size());
    Eigen::MatrixXd X(s.size(), 1 + 2 * n);
    X.col(0).setOnes();
    for (int j = 0; j < n; ++j) {
      X.col(1 + 2 * j) = (omegas[j] * s.array()).cos();
      X.col(2 + 2 * j) = (omegas[j] * s.array()).sin();
    }
    const Eigen::VectorXd beta = X.colPivHouseholderQr().solve(y);
    Eigen::VectorXd p(1 + 3 * n);
    p(0) = beta(0);
    for (int j = 0; j < n; ++j) {
      p(1 + 3 * j) = beta(1 + 2 * j);
      p(2 + 3 * j) = beta(2 + 2 * j);
      p(3 + 3 * j) = omegas[j];
    }
    return p;
  }
};

struct LmResult {
  Eigen::VectorXd p;
  int iterations = 0;
  bool converged = false;
};

// Trial steps that push a frequency below w_min are rejected: there the
// sinusoid degenerates into a trend that trades off against the offset.
LmResult levenberg_marquardt(const Model& model, Eigen::VectorXd p, double w_min, int max_iter,
                             std::vector<double>& history) {
  double ssr = model.residual(p).squaredNorm();
  const double scale = model.y.squaredNorm();
  history.push_back(ssr);
  double lambda = 1e-3;
  LmResult out;
  for (int it = 0; it < max_iter; ++it) {
    out.iterations = it + 1;
    const Eigen::MatrixXd J = model.jacobian(p);
    const Eigen::VectorXd r = model.residual(p);
    const Eigen::MatrixXd JtJ = J.transpose() * J;
    const Eigen::VectorXd Jtr = J.transpose() * r;
    bool accepted = false;
    while (lambda < 1e20) {
      Eigen::MatrixXd Aug = JtJ;
      Aug.diagonal() += lambda * JtJ.diagonal().cwiseMax(1e-300);
      const Eigen::VectorXd step = Aug.ldlt().solve(Jtr);
      const Eigen::VectorXd trial = p + step;
      bool in_band = true;
      for (int j = 0; j < model.n_sin(trial); ++j) in_band = in_band && std::abs(trial(3 + 3 * j)) >= w_min;
      const double ssr_trial = in_band ? model.residual(trial).squaredNorm() : INFINITY;
      if (std::isfinite(ssr_trial) && ssr_trial < ssr) {
        const double gain = (ssr - ssr_trial) / std::max(ssr, 1e-300);
        p = trial;
        ssr = ssr_trial;
        history.push_back(ssr);
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        const bool small_step = step.norm() <= 1e-10 * (p.norm() + 1e-10);
        if (gain < 1e-12 || small_step || ssr <= 1e-30 * scale) {
          out.converged = true;
          out.p = p;
          return out;
        }
        break;
      }
      lambda *= 4.0;
    }
    if (!accepted) {
      // No descent direction left: stationary point.
      out.converged = true;
      break;
    }
  }
  out.p = p;
  return out;
}

}  // namespace

double SinusoidFit::evaluate(double t) const {
  double v = offset;
  const double factor = cyclic ? kTwoPi : 1.0;
  for (int j = 0; j < n_components; ++j) {
    v += amplitudes[j] * std::cos(factor * frequencies[j] * t + phases[j]);
  }
  return v;
}

std::vector<double> lomb_scargle(std::span<const double> times, std::span<const double> values,
                                 std::span<const double> omegas) {
  if (times.size() != values.size()) throw ValidationError("lomb_scargle: size mismatch");
  const auto n = times.size();
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= std::max<std::size_t>(n - 1, 1);
  std::vector<double> power(omegas.size(), 0.0);
  if (!(var > 0.0)) return power;
  for (std::size_t k = 0; k < omegas.size(); ++k) {
    const double w = omegas[k];
    double s2 = 0.0, c2 = 0.0;
    for (double t : times) {
      s2 += std::sin(2.0 * w * t);
      c2 += std::cos(2.0 * w * t);
    }
    const double tau = std::atan2(s2, c2) / (2.0 * w);
    double yc = 0.0, ys = 0.0, cc = 0.0, ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double arg = w * (times[i] - tau);
      const double c = std::cos(arg), s = std::sin(arg);
      const double y = values[i] - mean;
      yc += y * c;
      ys += y * s;
      cc += c * c;
      ss += s * s;
    }
    power[k] = 0.5 * ((cc > 0 ? yc * yc / cc : 0.0) + (ss > 0 ? ys * ys / ss : 0.0)) / var;
  }
  return power;
}

SinusoidFit fit_sinusoids(std::span<const double> times, std::span<const double> values, int n,
                          const FitOptions& options) {
  if (times.size() != values.size()) throw ValidationError("fit_sinusoids: size mismatch");
  if (n < 1) throw ValidationError("fit_sinusoids: need at least one component");
  const auto N = static_cast<Eigen::Index>(times.size());
  if (N < 4 * n) throw ValidationError("fit_sinusoids: need at least 4 samples per component");
  for (Eigen::Index i = 1; i < N; ++i) {
    if (!(times[i] > times[i - 1])) throw ValidationError("fit_sinusoids: times must be increasing");
  }

  Model model;
  const double tm = 0.5 * (times.front() + times.back());
  model.s = Eigen::Map<const Eigen::VectorXd>(times.data(), N).array() - tm;
  model.y = Eigen::Map<const Eigen::VectorXd>(values.data(), N);
  const double mean = model.y.mean();
  const double spread = (model.y.array() - mean).abs().maxCoeff();
  if (!(spread > 1e-14 * std::max(1.0, std::abs(mean)))) {
    throw ValidationError("fit_sinusoids: degenerate (constant) series");
  }

  const double span = times.back() - times.front();
  const double resolution = kTwoPi / span;
  const double to_angular = options.cyclic ? kTwoPi : 1.0;
  double w_max = options.max_frequency > 0.0 ? options.max_frequency * to_angular
                                             : std::numbers::pi * (N - 1) / span;
  const double w_min = 0.5 * resolution;
  if (!(w_max > w_min)) throw ValidationError("fit_sinusoids: empty frequency search band");
  const double dw = resolution / std::max(options.oversample, 1.0);
  std::vector<double> grid;
  for (double w = w_min; w <= w_max; w += dw) grid.push_back(w);

  SinusoidFit fit;
  std::vector<double> omegas;
  Eigen::VectorXd p(1);
  p(0) = mean;
  int iterations = 0;
  for (int j = 0; j < n; ++j) {
    const Eigen::VectorXd r = model.residual(p);
    const auto power = lomb_scargle(std::span<const double>(model.s.data(), N), std::span<const double>(r.data(), N), grid);
    const auto peak = static_cast<std::size_t>(std::max_element(power.begin(), power.end()) - power.begin());
    double w = grid[peak];
    if (peak > 0 && peak + 1 < grid.size()) {
      const double a = power[peak - 1], b = power[peak], c = power[peak + 1];
      const double den = a - 2.0 * b + c;
      if (den < 0.0) w += 0.5 * dw * (a - c) / den;
    }
    omegas.clear();
    for (int i = 0; i < j; ++i) omegas.push_back(p(3 + 3 * i));
    omegas.push_back(w);
    p = model.linear_solve(omegas);
    std::vector<double> scratch;
    auto lm = levenberg_marquardt(model, p, w_min, options.max_iter, j + 1 == n ? fit.ssr_history : scratch);
    iterations += lm.iterations;
    if (!lm.converged) throw NumericalError("fit_sinusoids: Levenberg-Marquardt did not converge");
    p = lm.p;
  }

  struct Component {
    double amplitude, omega, phase;
  };
  std::vector<Component> comps;
  for (int j = 0; j < n; ++j) {
    const double a = p(1 + 3 * j), b = p(2 + 3 * j);
    double w = p(3 + 3 * j);
    double phase = std::atan2(-b, a);
    if (w < 0.0) {
      // cos(-w s + phi) = cos(w s - phi)
      w = -w;
      phase = -phase;
    }
    comps.push_back({std::hypot(a, b), w, wrap_phase(phase - w * tm)});
  }
  std::sort(comps.begin(), comps.end(), [](const Component& x, const Component& y) { return x.amplitude > y.amplitude; });

  fit.n_components = n;
  fit.cyclic = options.cyclic;
  fit.offset = p(0);
  for (const auto& c : comps) {
    if (!(c.omega > 0.0)) throw NumericalError("fit_sinusoids: collapsed to zero frequency");
    fit.amplitudes.push_back(c.amplitude);
    fit.frequencies.push_back(c.omega / to_angular);
    fit.phases.push_back(c.phase);
  }
  fit.rms_residual = std::sqrt(model.residual(p).squaredNorm() / static_cast<double>(N));
  fit.iterations = iterations;
  return fit;
}

SinusoidFit fit_sinusoids(const WeightSeries& series, int n, const FitOptions& options) {
  return fit_sinusoids(series.times, series.values, n, options);
}

}  // namespace modelens

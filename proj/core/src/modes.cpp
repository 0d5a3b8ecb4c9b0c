#include "modelens/modes.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <Eigen/Dense>
#include <json.hpp>

#include "modelens/errors.hpp"

namespace modelens {

namespace {

constexpr std::array kLabelNames{"dipole-x", "dipole-y", "scissors", "quadrupole", "monopole", "other"};

// Fraction of the (masked) norm of f captured by the span of the templates.
double template_score(const Eigen::VectorXd& f, const Eigen::MatrixXd& templates) {
  const double norm = f.norm();
  if (!(norm > 0.0)) return 0.0;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(templates);
  const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(templates.rows(), templates.cols());
  return (Q.transpose() * f).norm() / norm;
}

// Orthonormal basis of the columns, dropping numerically dependent ones.
Eigen::MatrixXd orthonormal_basis(const Eigen::MatrixXd& cols) {
  Eigen::MatrixXd Q(cols.rows(), 0);
  for (Eigen::Index c = 0; c < cols.cols(); ++c) {
    Eigen::VectorXd v = cols.col(c);
    const double n0 = v.norm();
    for (int pass = 0; pass < 2; ++pass) v -= Q * (Q.transpose() * v);
    if (v.norm() > 1e-8 * n0) {
      Q.conservativeResize(Eigen::NoChange, Q.cols() + 1);
      Q.col(Q.cols() - 1) = v.normalized();
    }
  }
  return Q;
}

std::optional<double> opt_number(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

nlohmann::json to_json_value(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

}  // namespace

std::string_view to_string(ModeLabel label) { return kLabelNames[static_cast<std::size_t>(label)]; }

ModeLabel parse_mode_label(std::string_view name) {
  for (std::size_t i = 0; i < kLabelNames.size(); ++i) {
    if (name == kLabelNames[i]) return static_cast<ModeLabel>(i);
  }
  throw ValidationError("unknown mode label: " + std::string(name));
}

std::optional<double> hydrodynamic_frequency(const HydroFrequencies& hydro, ModeLabel label) {
  switch (label) {
    case ModeLabel::dipole_x: return hydro.dipole_x;
    case ModeLabel::dipole_y: return hydro.dipole_y;
    case ModeLabel::scissors: return hydro.scissors;
    case ModeLabel::quadrupole: return hydro.quadrupole;
    case ModeLabel::monopole: return hydro.monopole;
    case ModeLabel::other: break;
  }
  return std::nullopt;
}

std::vector<ModeLabel> classify_modes(std::span<const BdGMode> modes, const Condensate& ground,
                                      const TrapParams& trap) {
  const Grid2D& grid = ground.psi.grid();
  const auto psi = ground.psi.values();
  double rho_max = 0.0;
  for (const auto& p : psi) rho_max = std::max(rho_max, std::norm(p));

  // Bulk of the cloud, where density fluctuations follow the hydrodynamic shapes.
  std::vector<std::size_t> mask;
  for (std::size_t j = 0; j < psi.size(); ++j) {
    if (std::norm(psi[j]) > 0.1 * rho_max) mask.push_back(j);
  }
  const auto M = static_cast<Eigen::Index>(mask.size());
  Eigen::VectorXd xp(M), yp(M);
  const double c = std::cos(trap.theta), s = std::sin(trap.theta);
  for (Eigen::Index m = 0; m < M; ++m) {
    const int ix = static_cast<int>(mask[m] % grid.nx()), iy = static_cast<int>(mask[m] / grid.nx());
    const double u = grid.x(ix) - trap.x0, v = grid.y(iy) - trap.y0;
    xp(m) = u * c + v * s;
    yp(m) = u * s - v * c;
  }
  const double r = std::sqrt((xp.squaredNorm() + yp.squaredNorm()) / std::max<Eigen::Index>(M, 1));
  xp /= r;
  yp /= r;
  Eigen::MatrixXd t_x = xp, t_y = yp, t_xy = xp.cwiseProduct(yp);
  Eigen::MatrixXd t_radial(M, 3);
  t_radial << Eigen::VectorXd::Ones(M), xp.cwiseProduct(xp), yp.cwiseProduct(yp);

  const auto n = modes.size();
  std::vector<std::array<double, 4>> score(n);
  for (std::size_t k = 0; k < n; ++k) {
    const ScalarField f = mode_density(modes[k], ground);
    Eigen::VectorXd fm(M);
    for (Eigen::Index m = 0; m < M; ++m) fm(m) = f[mask[m]];
    score[k] = {template_score(fm, t_x), template_score(fm, t_y), template_score(fm, t_xy),
                template_score(fm, t_radial)};
  }

  constexpr double kMinScore = 0.5;
  std::vector<ModeLabel> labels(n, ModeLabel::other);
  auto claim = [&](int which, ModeLabel label) {
    std::optional<std::size_t> best;
    for (std::size_t k = 0; k < n; ++k) {
      if (labels[k] != ModeLabel::other || score[k][which] < kMinScore) continue;
      if (!best || score[k][which] > score[*best][which]) best = k;
    }
    if (best) labels[*best] = label;
  };
  claim(0, ModeLabel::dipole_x);
  claim(1, ModeLabel::dipole_y);
  claim(2, ModeLabel::scissors);

  std::vector<std::size_t> radial;
  for (std::size_t k = 0; k < n; ++k) {
    if (labels[k] == ModeLabel::other && score[k][3] >= kMinScore) radial.push_back(k);
  }
  std::sort(radial.begin(), radial.end(), [&](auto a, auto b) { return score[a][3] > score[b][3]; });
  if (radial.size() > 2) radial.resize(2);
  if (radial.size() == 2) {
    if (modes[radial[0]].omega > modes[radial[1]].omega) std::swap(radial[0], radial[1]);
    labels[radial[0]] = ModeLabel::quadrupole;
    labels[radial[1]] = ModeLabel::monopole;
  } else if (radial.size() == 1) {
    const auto hydro = hydrodynamic_frequencies(trap.omega_x(), trap.omega_y());
    const double w = modes[radial[0]].omega;
    labels[radial[0]] = std::abs(w - hydro.quadrupole) < std::abs(w - hydro.monopole) ? ModeLabel::quadrupole
                                                                                       : ModeLabel::monopole;
  }
  return labels;
}

std::vector<ModeProfile> mode_profiles(std::span<const BdGMode> modes, const Condensate& ground,
                                       const TrapParams& trap) {
  const auto labels = classify_modes(modes, ground, trap);
  std::vector<ModeProfile> out;
  out.reserve(modes.size());
  for (std::size_t k = 0; k < modes.size(); ++k) {
    const ScalarField f = mode_density(modes[k], ground);
    out.push_back({Eigen::Map<const Eigen::VectorXd>(f.values().data(), static_cast<Eigen::Index>(f.size())),
                   modes[k].omega, labels[k]});
  }
  return out;
}

std::vector<ModeMatch> match_modes(std::span<const PrincipalComponent> pcs, std::span<const ModeProfile> modes,
                                   const MatchOptions& options) {
  for (const auto& pc : pcs) {
    for (const auto& m : modes) {
      if (pc.image.size() != m.profile.size()) throw ValidationError("match_modes: pixel geometry mismatch");
    }
  }

  // Degenerate groups: consecutive modes (by frequency) with a small relative gap.
  std::vector<std::size_t> order(modes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return modes[a].omega < modes[b].omega; });
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto k = order[i];
    if (!groups.empty()) {
      const double prev = modes[groups.back().back()].omega;
      if (std::abs(modes[k].omega - prev) <= options.degeneracy_tol * std::abs(prev)) {
        groups.back().push_back(k);
        continue;
      }
    }
    groups.push_back({k});
  }
  std::vector<Eigen::MatrixXd> bases;
  for (const auto& g : groups) {
    if (g.size() == 1) {
      bases.emplace_back();
      continue;
    }
    Eigen::MatrixXd cols(modes[g[0]].profile.size(), static_cast<Eigen::Index>(g.size()));
    for (std::size_t i = 0; i < g.size(); ++i) cols.col(static_cast<Eigen::Index>(i)) = modes[g[i]].profile;
    bases.push_back(orthonormal_basis(cols));
  }

  std::vector<ModeMatch> out;
  for (std::size_t p = 0; p < pcs.size(); ++p) {
    ModeMatch match;
    match.pc_index = static_cast<int>(p);
    const double pn = pcs[p].image.norm();
    double best = 0.0;
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
      double lead_overlap = -1.0;
      std::size_t lead = groups[gi][0];
      for (auto k : groups[gi]) {
        const double fn = modes[k].profile.norm();
        const double ov = (pn > 0 && fn > 0) ? std::abs(pcs[p].image.dot(modes[k].profile)) / (pn * fn) : 0.0;
        if (ov > lead_overlap) {
          lead_overlap = ov;
          lead = k;
        }
      }
      double ov = lead_overlap;
      if (groups[gi].size() > 1 && pn > 0) ov = (bases[gi].transpose() * pcs[p].image).norm() / pn;
      ov = std::min(ov, 1.0);
      if (ov > best) {
        best = ov;
        match.mode_index = static_cast<int>(lead);
      }
    }
    match.overlap = best;
    if (best < options.threshold) {
      match.mode_index.reset();
    } else {
      match.label = std::string(to_string(modes[*match.mode_index].label));
      match.omega_diag = modes[*match.mode_index].omega;
    }
    out.push_back(std::move(match));
  }
  return out;
}

ModeReport report(std::span<const PrincipalComponent> pcs, std::span<const WeightSeries> weights,
                  std::span<const ModeProfile> modes, const HydroFrequencies& hydro,
                  std::span<const std::optional<SinusoidFit>> fits, const MatchOptions& options) {
  ModeReport rep;
  rep.matches = match_modes(pcs, modes, options);
  for (const auto& pc : pcs) {
    rep.fractions.push_back(pc.fraction);
    rep.eigenvalues.push_back(pc.eigenvalue);
    if (pc.fraction > 0) rep.total_variance = pc.eigenvalue / pc.fraction;
  }
  for (std::size_t k = 0; k < rep.matches.size(); ++k) {
    auto& m = rep.matches[k];
    if (k < fits.size()) {
      if (fits[k]) m.omega_pca = fits[k]->frequencies.front();
    } else if (fits.empty() && k < weights.size()) {
      try {
        m.omega_pca = fit_sinusoids(weights[k], 1).frequencies.front();
      } catch (const Error&) {
        // Constant or too short weight series: no frequency to report.
      }
    }
    if (m.mode_index) m.omega_th = hydrodynamic_frequency(hydro, modes[*m.mode_index].label);
  }
  return rep;
}

std::string report_to_json(const ModeReport& rep) {
  nlohmann::json j;
  j["schema_version"] = ModeReport::schema_version;
  j["frequency_unit"] = rep.frequency_unit;
  j["total_variance"] = rep.total_variance;
  j["metadata"] = rep.metadata;
  auto& rows = j["components"] = nlohmann::json::array();
  for (std::size_t k = 0; k < rep.matches.size(); ++k) {
    const auto& m = rep.matches[k];
    rows.push_back({
        {"pc_index", m.pc_index},
        {"fraction", k < rep.fractions.size() ? rep.fractions[k] : 0.0},
        {"eigenvalue", k < rep.eigenvalues.size() ? rep.eigenvalues[k] : 0.0},
        {"label", m.label},
        {"mode_index", m.mode_index ? nlohmann::json(*m.mode_index) : nlohmann::json()},
        {"overlap", m.overlap},
        {"omega_pca", to_json_value(m.omega_pca)},
        {"omega_diag", to_json_value(m.omega_diag)},
        {"omega_th", to_json_value(m.omega_th)},
    });
  }
  return j.dump(2) + "\n";
}

ModeReport report_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("schema_version").get<int>() != ModeReport::schema_version) {
      throw FormatError("report: unsupported schema_version " + j.at("schema_version").dump());
    }
    ModeReport rep;
    rep.frequency_unit = j.at("frequency_unit").get<std::string>();
    rep.total_variance = j.at("total_variance").get<double>();
    rep.metadata = j.value("metadata", std::map<std::string, std::string>{});
    for (const auto& row : j.at("components")) {
      ModeMatch m;
      m.pc_index = row.at("pc_index").get<int>();
      if (!row.at("mode_index").is_null()) m.mode_index = row.at("mode_index").get<int>();
      m.overlap = row.at("overlap").get<double>();
      m.label = row.at("label").get<std::string>();
      m.omega_pca = opt_number(row, "omega_pca");
      m.omega_diag = opt_number(row, "omega_diag");
      m.omega_th = opt_number(row, "omega_th");
      rep.fractions.push_back(row.at("fraction").get<double>());
      rep.eigenvalues.push_back(row.at("eigenvalue").get<double>());
      rep.matches.push_back(std::move(m));
    }
    return rep;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("report: ") + e.what());
  }
}

std::string format_report(const ModeReport& rep) {
  auto num = [](const std::optional<double>& v) {
    if (!v) return std::string("-");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", *v);
    return std::string(buf);
  };
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "%-4s %10s  %-12s %8s %9s %9s %9s\n", "pc", "fraction", "label", "overlap",
                "w_pca", "w_diag", "w_th");
  os << line;
  for (std::size_t k = 0; k < rep.matches.size(); ++k) {
    const auto& m = rep.matches[k];
    std::snprintf(line, sizeof line, "%-4d %10s  %-12s %8s %9s %9s %9s\n", m.pc_index,
                  num(k < rep.fractions.size() ? std::optional(rep.fractions[k]) : std::nullopt).c_str(),
                  m.label.c_str(), num(m.overlap).c_str(), num(m.omega_pca).c_str(), num(m.omega_diag).c_str(),
                  num(m.omega_th).c_str());
    os << line;
  }
  return os.str();
}

}  // namespace modelens

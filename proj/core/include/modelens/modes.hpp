#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "modelens/bdg.hpp"
#include "modelens/fit.hpp"
#include "modelens/gpe.hpp"
#include "modelens/pca.hpp"

namespace modelens {

enum class ModeLabel { dipole_x, dipole_y, scissors, quadrupole, monopole, other };

std::string_view to_string(ModeLabel label);
/// Throws ValidationError on an unknown name.
ModeLabel parse_mode_label(std::string_view name);
std::optional<double> hydrodynamic_frequency(const HydroFrequencies& hydro, ModeLabel label);

/// A mode density profile ready for matching against principal components.
struct ModeProfile {
  Eigen::VectorXd profile;
  double omega = 0.0;
  ModeLabel label = ModeLabel::other;
};

/// Labels BdG modes by the low-order polynomial content of their density
/// profile in trap-aligned coordinates inside the bulk of the cloud: x' for
/// dipole-x, y' for dipole-y, x'y' for scissors, and {1, x'^2, y'^2} for the
/// two breathing-type modes, of which the lower is the quadrupole and the upper
/// the monopole. Each label goes to at most one mode; the rest are `other`.
std::vector<ModeLabel> classify_modes(std::span<const BdGMode> modes, const Condensate& ground,
                                      const TrapParams& trap);

/// mode_density + classify_modes.
std::vector<ModeProfile> mode_profiles(std::span<const BdGMode> modes, const Condensate& ground,
                                       const TrapParams& trap);

struct MatchOptions {
  double threshold = 0.5;        ///< below this a PC is unidentified
  double degeneracy_tol = 1e-3;  ///< relative frequency gap that makes modes one subspace
};

struct ModeMatch {
  int pc_index = 0;
  std::optional<int> mode_index;
  double overlap = 0.0;  ///< best |<PC, f>|, or projection norm on a degenerate subspace
  std::optional<double> omega_pca;
  std::optional<double> omega_diag;
  std::optional<double> omega_th;
  std::string label = "unidentified";
};

/// Best-overlap match of every PC against the mode profiles.
std::vector<ModeMatch> match_modes(std::span<const PrincipalComponent> pcs, std::span<const ModeProfile> modes,
                                   const MatchOptions& options = {});

struct ModeReport {
  static constexpr int schema_version = 1;
  std::vector<ModeMatch> matches;
  std::vector<double> fractions;
  std::vector<double> eigenvalues;
  double total_variance = 0.0;
  std::string frequency_unit = "omega_x";
  std::map<std::string, std::string> metadata;
};

/// Table-style report. omega_pca is the dominant frequency of fits[k]; with
/// `fits` empty each weight series gets a single-sinusoid fit (components whose
/// fit fails carry no omega_pca).
ModeReport report(std::span<const PrincipalComponent> pcs, std::span<const WeightSeries> weights,
                  std::span<const ModeProfile> modes, const HydroFrequencies& hydro,
                  std::span<const std::optional<SinusoidFit>> fits = {}, const MatchOptions& options = {});

std::string report_to_json(const ModeReport& report);
/// Throws FormatError on malformed input or an unsupported schema version.
ModeReport report_from_json(std::string_view json);

/// Fixed-width console table with frequencies to 4 significant digits.
std::string format_report(const ModeReport& report);

}  // namespace modelens

#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "modelens/pipeline.hpp"

/// On-disk layout of stage outputs. Arrays are NDA (full double precision),
/// tables CSV with %.17g numbers, metadata JSON; loading a saved artifact
/// reproduces the in-memory values bit for bit.
namespace modelens::artifacts {

namespace fs = std::filesystem;

/// stack.nda [N, ny, nx], times.nda [N], stack.json (time unit).
void save_stack(const fs::path& dir, const ImageStack& stack);
/// Accepts a stack.nda file, a directory holding one, or a directory of
/// .pgm frames (sorted by name, times 0..N-1 in "frame" units).
ImageStack load_stack(const fs::path& path);
ImageStack load_pgm_stack(const fs::path& dir);
/// Frames scaled by the stack maximum into 16-bit PGMs frame_0000.pgm, ...
void save_pgm_stack(const fs::path& dir, const ImageStack& stack);

/// <name>.nda (complex psi [ny, nx]) and <name>.json (mu, energy, steps, residual, grid).
void save_ground(const fs::path& dir, const std::string& name, const GroundState& ground);
GroundState load_ground(const fs::path& dir, const std::string& name);

/// pcs.nda [K, ny, nx], mean.nda [ny, nx], eigenvalues.nda, pca.json, weights.csv.
void save_pca(const fs::path& dir, const PcaStage& stage);

struct LoadedPca {
  int nx = 0;
  int ny = 0;
  std::vector<PrincipalComponent> components;
  std::vector<WeightSeries> weights;
};
LoadedPca load_pca(const fs::path& dir);

/// Long format: time,component,weight.
void save_weights_csv(const fs::path& path, std::span<const WeightSeries> weights);
std::vector<WeightSeries> load_weights_csv(const fs::path& path);

/// modes.nda [K, ny, nx] density profiles, modes_u.nda / modes_v.nda, modes.json,
/// plus the final-trap ground state as ground_final.*.
void save_bdg(const fs::path& dir, const BdgStage& stage);
std::vector<ModeProfile> load_modes(const fs::path& dir);

/// component,term,amplitude,frequency,phase,offset,rms_residual
void save_fits_csv(const fs::path& path, std::span<const std::optional<SinusoidFit>> fits);

void write_text(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);

}  // namespace modelens::artifacts

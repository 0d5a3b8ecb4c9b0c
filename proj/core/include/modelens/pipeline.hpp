#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "modelens/bdg.hpp"
#include "modelens/fit.hpp"
#include "modelens/gpe.hpp"
#include "modelens/modes.hpp"
#include "modelens/pca.hpp"
#include "modelens/synth.hpp"

namespace modelens {

struct GridConfig {
  int nx = 128;
  int ny = 128;
  double lx = 15.0;
  double ly = 15.0;

  Grid2D make() const { return Grid2D(nx, ny, lx, ly); }
};

struct SynthShape {
  std::string shape;
  double amplitude = 0.0;
  double omega = 0.0;
  double phase = 0.0;
};

/// Settings of the `synth` stage: either the small-oscillation model ("modes")
/// or the camera nuisance model ("noise").
struct SynthConfig {
  std::string kind = "modes";
  int nx = 64;
  int ny = 64;
  int n_frames = 300;
  double dt = 0.126;
  double width = 8.0;  ///< Gaussian cloud width, pixels
  double noise_sigma = 0.0;
  std::vector<SynthShape> modes;
  NoiseSpec noise;
  bool write_pgm = false;
};

/// Input artifact locations for stage-wise runs; empty means "the stage's
/// default file in the output directory".
struct InputPaths {
  std::string ground;
  std::string stack;  ///< stack.nda, or a directory of .pgm frames
  std::string pcs;    ///< directory holding pcs.nda, pca.json, weights.csv
  std::string modes;  ///< directory holding modes.nda, modes.json
};

struct PipelineConfig {
  static constexpr int schema_version = 1;
  GridConfig grid;
  TrapParams trap_initial = TrapParams::reference_initial();
  TrapParams trap_final = TrapParams::reference_final();
  SimParams sim;
  double ground_tol = 1e-10;
  int pca_K = 11;
  int keep_every = 1;
  int bdg_K = 11;
  double bdg_tol = 1e-8;
  double match_threshold = 0.5;
  int fit_components = 1;
  std::uint64_t seed = 12345;
  std::string output_dir = "modelens-out";
  InputPaths inputs;
  SynthConfig synth;

  /// Throws ValidationError.
  void validate() const;
};

/// Missing keys take the defaults above; unknown keys are rejected.
PipelineConfig parse_config(std::string_view json);
PipelineConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const PipelineConfig& config);

/// Frames 0, k, 2k, ... with their timestamps.
ImageStack subsample(const ImageStack& stack, int keep_every);

struct PcaStage {
  CenteredData data;
  PcaResult pca;
  std::vector<WeightSeries> weights;
};

struct BdgStage {
  GroundState ground;  ///< ground state of the final trap
  std::vector<BdGMode> modes;
  std::vector<ModeProfile> profiles;
};

struct IdentifyStage {
  std::vector<std::optional<SinusoidFit>> fits;
  ModeReport report;
};

GroundState run_groundstate(const PipelineConfig& config);
ImageStack run_evolve(const PipelineConfig& config, const ComplexField& psi0);
/// Subsamples by keep_every, centres, diagonalises and projects.
PcaStage run_pca(const PipelineConfig& config, const ImageStack& stack);
BdgStage run_bdg(const PipelineConfig& config);
/// Weight-series fits (run on up to `threads` workers) and the report.
IdentifyStage run_identify(const PipelineConfig& config, std::span<const PrincipalComponent> pcs,
                           std::span<const WeightSeries> weights, std::span<const ModeProfile> profiles,
                           int threads = 1);
ImageStack run_synth(const PipelineConfig& config);

struct PipelineResult {
  GroundState ground_initial;
  ImageStack stack;
  PcaStage pca;
  BdgStage bdg;
  IdentifyStage identify;
};

/// ground state (initial trap) -> evolve (final trap) -> PCA -> BdG (final
/// trap) -> match / fit / report. With `out_dir` every stage's artifacts are
/// written as soon as they exist; on failure a FAILED marker is left next to
/// them and the exception propagates.
PipelineResult run_pipeline(const PipelineConfig& config, const std::optional<std::filesystem::path>& out_dir,
                            int threads = 1);

}  // namespace modelens

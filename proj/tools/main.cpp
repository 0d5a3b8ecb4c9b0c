// modelens: command-line driver for the simulation / PCA / BdG pipeline.
//
//   modelens <subcommand> [--config <path>] [--out <dir>] [--seed <u64>] [--keep-every <k>]
//
// Exit status: 0 success, 2 invalid input or configuration, 3 numerical failure.
// MODELENS_THREADS sets the worker count for the parallel stages.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "modelens/artifacts.hpp"
#include "modelens/errors.hpp"
#include "modelens/pipeline.hpp"

namespace fs = std::filesystem;
using namespace modelens;

namespace {

int thread_count() {
  const char* env = std::getenv("MODELENS_THREADS");
  if (!env || !*env) return 1;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 1 || n > 1024) throw ValidationError("MODELENS_THREADS must be an integer in [1, 1024]");
  return static_cast<int>(n);
}

class Timer {
 public:
  explicit Timer(std::string what) : what_(std::move(what)), start_(std::chrono::steady_clock::now()) {}
  ~Timer() {
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    std::fprintf(stderr, "[I] %s: %.2f s\n", what_.c_str(), s);
  }

 private:
  std::string what_;
  std::chrono::steady_clock::time_point start_;
};

fs::path input_or(const std::string& configured, const fs::path& fallback) {
  return configured.empty() ? fallback : fs::path(configured);
}

void print_fractions(const PcaResult& pca) {
  if (pca.zero_variance) {
    std::printf("zero-variance stack: no principal components\n");
    return;
  }
  std::printf("%-4s %12s %10s\n", "pc", "eigenvalue", "fraction");
  for (std::size_t k = 0; k < pca.components.size(); ++k) {
    std::printf("%-4zu %12.4g %10.4g\n", k, pca.components[k].eigenvalue, pca.components[k].fraction);
  }
  if (pca.truncated) std::printf("(fewer components than requested: numerical rank reached)\n");
}

struct Options {
  std::string config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<int> keep_every;
};

PipelineConfig resolve(const Options& opt) {
  PipelineConfig cfg = opt.config.empty() ? PipelineConfig{} : load_config(opt.config);
  if (opt.out) cfg.output_dir = *opt.out;
  if (opt.seed) cfg.seed = *opt.seed;
  if (opt.keep_every) cfg.keep_every = *opt.keep_every;
  cfg.validate();
  return cfg;
}

int run(const std::string& command, const Options& opt) {
  const PipelineConfig cfg = resolve(opt);
  const int threads = thread_count();
  const fs::path out = cfg.output_dir;
  fs::create_directories(out);

  if (command == "pipeline") {
    const auto result = [&] {
      Timer t("pipeline");
      return run_pipeline(cfg, out, threads);
    }();
    std::cout << format_report(result.identify.report);
  } else if (command == "groundstate") {
    Timer t("groundstate");
    const auto gs = run_groundstate(cfg);
    artifacts::save_ground(out, "ground_initial", gs);
    std::printf("mu = %.10g  energy = %.10g  steps = %ld  residual = %.3g\n", gs.mu, gs.energy, gs.steps, gs.residual);
  } else if (command == "evolve") {
    Timer t("evolve");
    const fs::path dir = input_or(cfg.inputs.ground, out);
    const auto gs = artifacts::load_ground(dir, "ground_initial");
    const auto stack = run_evolve(cfg, gs.psi);
    artifacts::save_stack(out, stack);
    std::printf("%d frames, t = %.6g .. %.6g\n", stack.n_frames(), stack.times.front(), stack.times.back());
  } else if (command == "subsample") {
    const auto stack = artifacts::load_stack(input_or(cfg.inputs.stack, out));
    const auto sub = subsample(stack, cfg.keep_every);
    const fs::path dir = out / ("subsample_k" + std::to_string(cfg.keep_every));
    artifacts::save_stack(dir, sub);
    std::printf("%d of %d frames -> %s\n", sub.n_frames(), stack.n_frames(), dir.string().c_str());
  } else if (command == "pca") {
    Timer t("pca");
    const auto stack = artifacts::load_stack(input_or(cfg.inputs.stack, out));
    const auto stage = run_pca(cfg, stack);
    artifacts::save_pca(out, stage);
    print_fractions(stage.pca);
  } else if (command == "bdg") {
    Timer t("bdg");
    const auto stage = run_bdg(cfg);
    artifacts::save_bdg(out, stage);
    std::printf("%-4s %10s %-12s %10s\n", "mode", "omega", "label", "residual");
    for (std::size_t k = 0; k < stage.modes.size(); ++k) {
      std::printf("%-4zu %10.4g %-12s %10.2g\n", k, stage.modes[k].omega,
                  std::string(to_string(stage.profiles[k].label)).c_str(), stage.modes[k].residual);
    }
  } else if (command == "synth") {
    const auto stack = run_synth(cfg);
    artifacts::save_stack(out, stack);
    if (cfg.synth.write_pgm) artifacts::save_pgm_stack(out / "frames", stack);
    std::printf("%d frames of %dx%d -> %s\n", stack.n_frames(), stack.nx, stack.ny, out.string().c_str());
  } else if (command == "identify") {
    const auto pca = artifacts::load_pca(input_or(cfg.inputs.pcs, out));
    const auto modes = artifacts::load_modes(input_or(cfg.inputs.modes, out));
    const auto stage = run_identify(cfg, pca.components, pca.weights, modes, threads);
    artifacts::save_fits_csv(out / "fits.csv", stage.fits);
    artifacts::write_text(out / "report.json", report_to_json(stage.report));
    std::cout << format_report(stage.report);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"modelens: collective-mode identification by PCA of condensate density images"};
  app.require_subcommand(1, 1);
  Options opt;
  const char* commands[][2] = {
      {"pipeline", "ground state -> evolution -> PCA -> BdG -> report"},
      {"groundstate", "ground state of the initial trap"},
      {"evolve", "real-time evolution of the saved ground state in the final trap"},
      {"subsample", "keep one frame in k of a saved stack"},
      {"pca", "principal components of a saved stack (NDA or a directory of PGM frames)"},
      {"bdg", "Bogoliubov-de Gennes modes of the final trap"},
      {"synth", "synthetic image stack"},
      {"identify", "match saved principal components to saved modes"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opt.config, "JSON configuration (defaults reproduce the reference run)")
        ->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out, "output directory (overrides output_dir)");
    sub->add_option("--seed", opt.seed, "random seed (overrides seed)");
    sub->add_option("--keep-every", opt.keep_every, "frame subsampling factor before PCA")->check(CLI::PositiveNumber);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return run(command, opt);
  } catch (const NumericalError& e) {
    std::cerr << "modelens " << command << ": numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const ValidationError& e) {
    std::cerr << "modelens " << command << ": " << e.what() << "\n";
    return 2;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "modelens " << command << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "modelens " << command << ": internal error: " << e.what() << "\n";
    return 1;
  }
}

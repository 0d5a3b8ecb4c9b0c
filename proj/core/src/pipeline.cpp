#include "modelens/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <numbers>
#include <set>
#include <thread>

#include <json.hpp>

#include "modelens/artifacts.hpp"
#include "modelens/errors.hpp"

namespace modelens {

using nlohmann::json;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// Rejects keys outside `allowed` so that typos do not silently fall back to defaults.
void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ValidationError("config: '" + where + "' must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!ok.count(key)) throw ValidationError("config: unknown key '" + where + "." + key + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

TrapParams parse_trap(const json& j, const std::string& where, TrapParams trap) {
  check_keys(j, where, {"alpha", "epsilon", "x0", "y0", "theta_deg"});
  read(j, "alpha", trap.alpha);
  read(j, "epsilon", trap.epsilon);
  read(j, "x0", trap.x0);
  read(j, "y0", trap.y0);
  if (j.contains("theta_deg")) trap.theta = j.at("theta_deg").get<double>() * kDeg;
  return trap;
}

json trap_json(const TrapParams& t) {
  return {{"alpha", t.alpha}, {"epsilon", t.epsilon}, {"x0", t.x0}, {"y0", t.y0}, {"theta_deg", t.theta / kDeg}};
}

}  // namespace

void PipelineConfig::validate() const {
  grid.make();
  trap_initial.validate();
  trap_final.validate();
  sim.validate();
  if (!(ground_tol > 0.0)) throw ValidationError("config: ground_state.tol must be > 0");
  if (pca_K < 1) throw ValidationError("config: pca.K must be >= 1");
  if (keep_every < 1) throw ValidationError("config: pca.keep_every must be >= 1");
  if (bdg_K < 1) throw ValidationError("config: bdg.K must be >= 1");
  if (!(bdg_tol > 0.0)) throw ValidationError("config: bdg.tol must be > 0");
  if (!(match_threshold >= 0.0 && match_threshold <= 1.0)) throw ValidationError("config: match.threshold must be in [0, 1]");
  if (fit_components < 1) throw ValidationError("config: fit.n_components must be >= 1");
  if (synth.kind != "modes" && synth.kind != "noise") throw ValidationError("config: synth.kind must be 'modes' or 'noise'");
  if (synth.nx < 1 || synth.ny < 1 || synth.n_frames < 1) throw ValidationError("config: synth sizes must be >= 1");
  if (!(synth.dt > 0.0) || !(synth.width > 0.0) || !(synth.noise_sigma >= 0.0)) {
    throw ValidationError("config: synth.dt and synth.width must be > 0, synth.noise_sigma >= 0");
  }
}

PipelineConfig parse_config(std::string_view text) {
  PipelineConfig c;
  try {
    const json j = json::parse(text);
    check_keys(j, "", {"schema_version", "grid", "trap_initial", "trap_final", "sim", "ground_state", "pca", "bdg",
                       "match", "fit", "seed", "output_dir", "inputs", "synth"});
    if (!j.contains("schema_version")) throw ValidationError("config: missing schema_version");
    if (j.at("schema_version").get<int>() != PipelineConfig::schema_version) {
      throw ValidationError("config: unsupported schema_version " + j.at("schema_version").dump());
    }
    if (j.contains("grid")) {
      const auto& g = j.at("grid");
      check_keys(g, "grid", {"nx", "ny", "lx", "ly"});
      read(g, "nx", c.grid.nx);
      read(g, "ny", c.grid.ny);
      read(g, "lx", c.grid.lx);
      read(g, "ly", c.grid.ly);
    }
    if (j.contains("trap_initial")) c.trap_initial = parse_trap(j.at("trap_initial"), "trap_initial", c.trap_initial);
    if (j.contains("trap_final")) c.trap_final = parse_trap(j.at("trap_final"), "trap_final", c.trap_final);
    if (j.contains("sim")) {
      const auto& s = j.at("sim");
      check_keys(s, "sim", {"g2dN", "dt", "t_total", "sample_interval", "frame_count"});
      read(s, "g2dN", c.sim.g2dN);
      read(s, "dt", c.sim.dt);
      read(s, "t_total", c.sim.t_total);
      read(s, "sample_interval", c.sim.sample_interval);
      if (s.contains("frame_count") && !s.at("frame_count").is_null()) c.sim.frame_count = s.at("frame_count").get<int>();
    }
    if (j.contains("ground_state")) {
      check_keys(j.at("ground_state"), "ground_state", {"tol"});
      read(j.at("ground_state"), "tol", c.ground_tol);
    }
    if (j.contains("pca")) {
      check_keys(j.at("pca"), "pca", {"K", "keep_every"});
      read(j.at("pca"), "K", c.pca_K);
      read(j.at("pca"), "keep_every", c.keep_every);
    }
    if (j.contains("bdg")) {
      check_keys(j.at("bdg"), "bdg", {"K", "tol"});
      read(j.at("bdg"), "K", c.bdg_K);
      read(j.at("bdg"), "tol", c.bdg_tol);
    }
    if (j.contains("match")) {
      check_keys(j.at("match"), "match", {"threshold"});
      read(j.at("match"), "threshold", c.match_threshold);
    }
    if (j.contains("fit")) {
      check_keys(j.at("fit"), "fit", {"n_components"});
      read(j.at("fit"), "n_components", c.fit_components);
    }
    read(j, "seed", c.seed);
    read(j, "output_dir", c.output_dir);
    if (j.contains("inputs")) {
      const auto& in = j.at("inputs");
      check_keys(in, "inputs", {"ground", "stack", "pcs", "modes"});
      read(in, "ground", c.inputs.ground);
      read(in, "stack", c.inputs.stack);
      read(in, "pcs", c.inputs.pcs);
      read(in, "modes", c.inputs.modes);
    }
    if (j.contains("synth")) {
      const auto& s = j.at("synth");
      check_keys(s, "synth", {"kind", "nx", "ny", "n_frames", "dt", "width", "noise_sigma", "modes", "jitter_px",
                              "intensity_frac", "fringe", "write_pgm"});
      auto& y = c.synth;
      read(s, "kind", y.kind);
      read(s, "nx", y.nx);
      read(s, "ny", y.ny);
      read(s, "n_frames", y.n_frames);
      read(s, "dt", y.dt);
      read(s, "width", y.width);
      read(s, "noise_sigma", y.noise_sigma);
      read(s, "jitter_px", y.noise.jitter_px);
      read(s, "intensity_frac", y.noise.intensity_frac);
      read(s, "write_pgm", y.write_pgm);
      if (s.contains("fringe")) {
        const auto& f = s.at("fringe");
        check_keys(f, "synth.fringe", {"amplitude", "kx", "ky"});
        read(f, "amplitude", y.noise.fringe.amplitude);
        read(f, "kx", y.noise.fringe.kx);
        read(f, "ky", y.noise.fringe.ky);
      }
      if (s.contains("modes")) {
        for (const auto& m : s.at("modes")) {
          check_keys(m, "synth.modes[]", {"shape", "amplitude", "omega", "phase"});
          SynthShape shape;
          shape.shape = m.at("shape").get<std::string>();
          read(m, "amplitude", shape.amplitude);
          read(m, "omega", shape.omega);
          read(m, "phase", shape.phase);
          y.modes.push_back(shape);
        }
      }
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) { return parse_config(artifacts::read_text(path)); }

std::string config_to_json(const PipelineConfig& c) {
  json modes = json::array();
  for (const auto& m : c.synth.modes) {
    modes.push_back({{"shape", m.shape}, {"amplitude", m.amplitude}, {"omega", m.omega}, {"phase", m.phase}});
  }
  json j = {
      {"schema_version", PipelineConfig::schema_version},
      {"grid", {{"nx", c.grid.nx}, {"ny", c.grid.ny}, {"lx", c.grid.lx}, {"ly", c.grid.ly}}},
      {"trap_initial", trap_json(c.trap_initial)},
      {"trap_final", trap_json(c.trap_final)},
      {"sim",
       {{"g2dN", c.sim.g2dN},
        {"dt", c.sim.dt},
        {"t_total", c.sim.t_total},
        {"sample_interval", c.sim.sample_interval},
        {"frame_count", c.sim.frame_count ? json(*c.sim.frame_count) : json()}}},
      {"ground_state", {{"tol", c.ground_tol}}},
      {"pca", {{"K", c.pca_K}, {"keep_every", c.keep_every}}},
      {"bdg", {{"K", c.bdg_K}, {"tol", c.bdg_tol}}},
      {"match", {{"threshold", c.match_threshold}}},
      {"fit", {{"n_components", c.fit_components}}},
      {"seed", c.seed},
      {"output_dir", c.output_dir},
      {"inputs", {{"ground", c.inputs.ground}, {"stack", c.inputs.stack}, {"pcs", c.inputs.pcs}, {"modes", c.inputs.modes}}},
      {"synth",
       {{"kind", c.synth.kind},
        {"nx", c.synth.nx},
        {"ny", c.synth.ny},
        {"n_frames", c.synth.n_frames},
        {"dt", c.synth.dt},
        {"width", c.synth.width},
        {"noise_sigma", c.synth.noise_sigma},
        {"modes", modes},
        {"jitter_px", c.synth.noise.jitter_px},
        {"intensity_frac", c.synth.noise.intensity_frac},
        {"fringe",
         {{"amplitude", c.synth.noise.fringe.amplitude}, {"kx", c.synth.noise.fringe.kx}, {"ky", c.synth.noise.fringe.ky}}},
        {"write_pgm", c.synth.write_pgm}}},
  };
  return j.dump(2) + "\n";
}

ImageStack subsample(const ImageStack& stack, int keep_every) {
  stack.validate();
  if (keep_every < 1) throw ValidationError("subsample: keep_every must be >= 1");
  const int N = stack.n_frames();
  if (keep_every > N) throw ValidationError("subsample: keep_every exceeds the number of frames");
  const int M = (N + keep_every - 1) / keep_every;
  FrameMatrix frames(M, stack.n_pixels());
  std::vector<double> times;
  for (int r = 0; r < M; ++r) {
    frames.row(r) = stack.frames.row(static_cast<Eigen::Index>(r) * keep_every);
    times.push_back(stack.times[static_cast<std::size_t>(r) * keep_every]);
  }
  return ImageStack(stack.nx, stack.ny, std::move(frames), std::move(times), stack.time_unit);
}

GroundState run_groundstate(const PipelineConfig& config) {
  return ground_state(potential(config.trap_initial, config.grid.make()), config.sim.g2dN, config.ground_tol);
}

ImageStack run_evolve(const PipelineConfig& config, const ComplexField& psi0) {
  if (!(psi0.grid() == config.grid.make())) throw ValidationError("evolve: ground state grid differs from config grid");
  return evolve(psi0, potential(config.trap_final, psi0.grid()), config.sim);
}

PcaStage run_pca(const PipelineConfig& config, const ImageStack& stack) {
  PcaStage stage;
  stage.data = center(config.keep_every > 1 ? subsample(stack, config.keep_every) : stack);
  const int K = std::min(config.pca_K, stage.data.n_frames());
  PcaOptions opts;
  opts.seed = config.seed;
  stage.pca = principal_components(stage.data, K, opts);
  stage.weights = weights(stage.data, stage.pca.components);
  return stage;
}

BdgStage run_bdg(const PipelineConfig& config) {
  const ScalarField V = potential(config.trap_final, config.grid.make());
  GroundState ground = ground_state(V, config.sim.g2dN, config.ground_tol);
  const Condensate c{ground.psi, ground.mu, V, config.sim.g2dN};
  BdgOptions opts;
  opts.tol = config.bdg_tol;
  opts.seed = config.seed;
  auto modes = bdg_spectrum(c, config.bdg_K, opts);
  auto profiles = mode_profiles(modes, c, config.trap_final);
  return BdgStage{std::move(ground), std::move(modes), std::move(profiles)};
}

IdentifyStage run_identify(const PipelineConfig& config, std::span<const PrincipalComponent> pcs,
                           std::span<const WeightSeries> weights, std::span<const ModeProfile> profiles, int threads) {
  IdentifyStage stage;
  stage.fits.resize(weights.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k; (k = next++) < weights.size();) {
      try {
        stage.fits[k] = fit_sinusoids(weights[k], config.fit_components);
      } catch (const Error&) {
        stage.fits[k].reset();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    const int n = std::clamp(threads, 1, static_cast<int>(std::max<std::size_t>(weights.size(), 1)));
    for (int i = 1; i < n; ++i) pool.emplace_back(worker);
    worker();
  }
  const auto hydro = hydrodynamic_frequencies(config.trap_final.omega_x(), config.trap_final.omega_y());
  MatchOptions mo;
  mo.threshold = config.match_threshold;
  stage.report = report(pcs, weights, profiles, hydro, stage.fits, mo);
  stage.report.metadata = {{"seed", std::to_string(config.seed)},
                           {"g2dN", std::to_string(config.sim.g2dN)},
                           {"keep_every", std::to_string(config.keep_every)},
                           {"n_frames", weights.empty() ? "0" : std::to_string(weights.front().values.size())}};
  return stage;
}

ImageStack run_synth(const PipelineConfig& config) {
  const auto& s = config.synth;
  const Grid2D raster = Grid2D::raster(s.nx, s.ny);
  const ScalarField cloud = gaussian_cloud(raster, s.width);
  if (s.kind == "noise") return synth_noise_stack(cloud, s.noise, s.n_frames, config.seed);
  std::vector<std::string> names;
  for (const auto& m : s.modes) names.push_back(m.shape);
  const auto profiles = shape_profiles(raster, names, s.width);
  std::vector<SynthMode> modes;
  for (std::size_t k = 0; k < s.modes.size(); ++k) {
    modes.push_back({s.modes[k].amplitude, s.modes[k].omega, s.modes[k].phase, profiles[k]});
  }
  std::vector<double> times(s.n_frames);
  for (int n = 0; n < s.n_frames; ++n) times[n] = n * s.dt;
  return synthesize_dataset(cloud, modes, times, s.noise_sigma, config.seed);
}

PipelineResult run_pipeline(const PipelineConfig& config, const std::optional<std::filesystem::path>& out_dir,
                            int threads) {
  config.validate();
  namespace fs = std::filesystem;
  if (out_dir) {
    fs::create_directories(*out_dir);
    fs::remove(*out_dir / "FAILED");
    artifacts::write_text(*out_dir / "config.json", config_to_json(config));
  }
  std::string stage = "groundstate";
  try {
    GroundState ground = run_groundstate(config);
    if (out_dir) artifacts::save_ground(*out_dir, "ground_initial", ground);
    stage = "evolve";
    ImageStack stack = run_evolve(config, ground.psi);
    if (out_dir) artifacts::save_stack(*out_dir, stack);
    stage = "pca";
    PcaStage pca = run_pca(config, stack);
    if (out_dir) artifacts::save_pca(*out_dir, pca);
    stage = "bdg";
    BdgStage bdg = run_bdg(config);
    if (out_dir) artifacts::save_bdg(*out_dir, bdg);
    stage = "identify";
    IdentifyStage identify = run_identify(config, pca.pca.components, pca.weights, bdg.profiles, threads);
    if (out_dir) {
      artifacts::save_fits_csv(*out_dir / "fits.csv", identify.fits);
      artifacts::write_text(*out_dir / "report.json", report_to_json(identify.report));
    }
    return PipelineResult{std::move(ground), std::move(stack), std::move(pca), std::move(bdg), std::move(identify)};
  } catch (const std::exception& e) {
    if (out_dir) artifacts::write_text(*out_dir / "FAILED", "stage: " + stage + "\nerror: " + e.what() + "\n");
    throw;
  }
}

}  // namespace modelens

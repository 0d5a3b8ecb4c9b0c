#include "modelens/artifacts.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "modelens/errors.hpp"
#include "modelens/io.hpp"

namespace modelens::artifacts {

using nlohmann::json;

namespace {

std::string g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json read_json(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::vector<std::uint64_t> dims_of(std::initializer_list<long> d) {
  std::vector<std::uint64_t> out;
  for (long v : d) out.push_back(static_cast<std::uint64_t>(v));
  return out;
}

// Rows of a [K, ny, nx] real array.
std::vector<Eigen::VectorXd> load_images(const fs::path& path, int& nx, int& ny) {
  const auto arr = load_nda(path);
  if (arr.dims.size() != 3) throw FormatError(path.string() + ": expected a [K, ny, nx] array");
  const auto& v = arr.real();
  ny = static_cast<int>(arr.dims[1]);
  nx = static_cast<int>(arr.dims[2]);
  const auto P = static_cast<Eigen::Index>(arr.dims[1] * arr.dims[2]);
  std::vector<Eigen::VectorXd> out;
  for (std::uint64_t k = 0; k < arr.dims[0]; ++k) out.emplace_back(Eigen::Map<const Eigen::VectorXd>(v.data() + k * P, P));
  return out;
}

}  // namespace

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << text;
  if (!out) throw ValidationError("short write to " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void save_stack(const fs::path& dir, const ImageStack& stack) {
  stack.validate();
  fs::create_directories(dir);
  save_nda(dir / "stack.nda", std::span<const double>(stack.frames.data(), stack.frames.size()),
           dims_of({stack.n_frames(), stack.ny, stack.nx}));
  save_nda(dir / "times.nda", std::span<const double>(stack.times), dims_of({stack.n_frames()}));
  json meta = {{"nx", stack.nx}, {"ny", stack.ny}, {"n_frames", stack.n_frames()}, {"time_unit", stack.time_unit}};
  write_text(dir / "stack.json", meta.dump(2) + "\n");
}

ImageStack load_pgm_stack(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".pgm") files.push_back(entry.path());
  }
  if (files.empty()) throw ValidationError("no .pgm frames in " + dir.string());
  std::sort(files.begin(), files.end());
  std::vector<ScalarField> images;
  for (const auto& f : files) images.push_back(load_pgm(f));
  const int nx = images[0].grid().nx(), ny = images[0].grid().ny();
  FrameMatrix frames(static_cast<Eigen::Index>(images.size()), static_cast<Eigen::Index>(nx) * ny);
  std::vector<double> times;
  for (std::size_t n = 0; n < images.size(); ++n) {
    if (images[n].grid().nx() != nx || images[n].grid().ny() != ny) {
      throw ValidationError("PGM frames differ in size: " + files[n].string());
    }
    frames.row(static_cast<Eigen::Index>(n)) =
        Eigen::Map<const Eigen::RowVectorXd>(images[n].values().data(), frames.cols());
    times.push_back(static_cast<double>(n));
  }
  return ImageStack(nx, ny, std::move(frames), std::move(times), "frame");
}

void save_pgm_stack(const fs::path& dir, const ImageStack& stack) {
  fs::create_directories(dir);
  const double peak = stack.frames.cwiseAbs().maxCoeff();
  const double scale = peak > 0.0 ? 1.0 / peak : 1.0;
  const Grid2D raster = Grid2D::raster(stack.nx, stack.ny);
  for (int n = 0; n < stack.n_frames(); ++n) {
    std::vector<double> v(static_cast<std::size_t>(stack.n_pixels()));
    for (int j = 0; j < stack.n_pixels(); ++j) v[j] = stack.frames(n, j) * scale;
    char name[32];
    std::snprintf(name, sizeof name, "frame_%04d.pgm", n);
    save_pgm(dir / name, ScalarField(raster, std::move(v)));
  }
}

ImageStack load_stack(const fs::path& path) {
  fs::path file = path;
  if (fs::is_directory(path)) {
    if (!fs::exists(path / "stack.nda")) return load_pgm_stack(path);
    file = path / "stack.nda";
  }
  const auto arr = load_nda(file);
  if (arr.dims.size() != 3) throw FormatError(file.string() + ": expected a [N, ny, nx] array");
  const auto N = static_cast<Eigen::Index>(arr.dims[0]);
  const int ny = static_cast<int>(arr.dims[1]), nx = static_cast<int>(arr.dims[2]);
  FrameMatrix frames = Eigen::Map<const FrameMatrix>(arr.real().data(), N, static_cast<Eigen::Index>(nx) * ny);
  const fs::path dir = file.parent_path();
  std::vector<double> times;
  if (fs::exists(dir / "times.nda")) {
    times = load_nda(dir / "times.nda").real();
  } else {
    for (Eigen::Index n = 0; n < N; ++n) times.push_back(static_cast<double>(n));
  }
  std::string unit = "1/omega_x";
  if (fs::exists(dir / "stack.json")) unit = read_json(dir / "stack.json").value("time_unit", unit);
  ImageStack stack(nx, ny, std::move(frames), std::move(times), unit);
  stack.validate();
  return stack;
}

void save_ground(const fs::path& dir, const std::string& name, const GroundState& ground) {
  fs::create_directories(dir);
  const Grid2D& g = ground.psi.grid();
  save_nda(dir / (name + ".nda"), ground.psi.values(), dims_of({g.ny(), g.nx()}));
  json meta = {{"mu", ground.mu},           {"energy", ground.energy}, {"steps", ground.steps},
               {"residual", ground.residual}, {"nx", g.nx()},           {"ny", g.ny()},
               {"lx", g.lx()},              {"ly", g.ly()}};
  write_text(dir / (name + ".json"), meta.dump(2) + "\n");
}

GroundState load_ground(const fs::path& dir, const std::string& name) {
  const json meta = read_json(dir / (name + ".json"));
  const auto arr = load_nda(dir / (name + ".nda"));
  try {
    const Grid2D grid(meta.at("nx").get<int>(), meta.at("ny").get<int>(), meta.at("lx").get<double>(),
                      meta.at("ly").get<double>());
    if (arr.dims.size() != 2 || arr.dims[0] != static_cast<std::uint64_t>(grid.ny()) ||
        arr.dims[1] != static_cast<std::uint64_t>(grid.nx())) {
      throw FormatError(name + ".nda: shape does not match " + name + ".json");
    }
    return GroundState{ComplexField(grid, arr.complex()), meta.at("mu").get<double>(), meta.at("energy").get<double>(),
                       meta.at("steps").get<long>(), {}, meta.at("residual").get<double>()};
  } catch (const json::exception& e) {
    throw FormatError(name + ".json: " + e.what());
  }
}

void save_weights_csv(const fs::path& path, std::span<const WeightSeries> weights) {
  std::string out = "time,component,weight\n";
  for (const auto& w : weights) {
    for (std::size_t n = 0; n < w.values.size(); ++n) {
      out += g17(w.times[n]) + "," + std::to_string(w.component) + "," + g17(w.values[n]) + "\n";
    }
  }
  write_text(path, out);
}

std::vector<WeightSeries> load_weights_csv(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::string line;
  if (!std::getline(in, line) || line != "time,component,weight") throw FormatError(path.string() + ": bad header");
  std::map<int, WeightSeries> series;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    double t = 0.0, w = 0.0;
    int k = 0;
    if (std::sscanf(line.c_str(), "%lf,%d,%lf", &t, &k, &w) != 3) {
      throw FormatError(path.string() + ": malformed line " + std::to_string(lineno));
    }
    auto& s = series[k];
    s.component = k;
    s.times.push_back(t);
    s.values.push_back(w);
  }
  std::vector<WeightSeries> out;
  for (auto& [k, s] : series) out.push_back(std::move(s));
  return out;
}

void save_pca(const fs::path& dir, const PcaStage& stage) {
  fs::create_directories(dir);
  const auto& pcs = stage.pca.components;
  const int nx = stage.data.nx, ny = stage.data.ny;
  std::vector<double> flat;
  for (const auto& pc : pcs) flat.insert(flat.end(), pc.image.data(), pc.image.data() + pc.image.size());
  save_nda(dir / "pcs.nda", std::span<const double>(flat), dims_of({static_cast<long>(pcs.size()), ny, nx}));
  save_nda(dir / "mean.nda", std::span<const double>(stage.data.mean_image.data(), stage.data.mean_image.size()),
           dims_of({ny, nx}));
  save_nda(dir / "eigenvalues.nda",
           std::span<const double>(stage.pca.eigenvalues.data(), stage.pca.eigenvalues.size()),
           dims_of({stage.pca.eigenvalues.size()}));
  json meta = {{"nx", nx},
               {"ny", ny},
               {"n_frames", stage.data.n_frames()},
               {"total_variance", stage.pca.total_variance},
               {"zero_variance", stage.pca.zero_variance},
               {"truncated", stage.pca.truncated},
               {"eigenvalues", json::array()},
               {"fractions", json::array()}};
  for (const auto& pc : pcs) {
    meta["eigenvalues"].push_back(pc.eigenvalue);
    meta["fractions"].push_back(pc.fraction);
  }
  write_text(dir / "pca.json", meta.dump(2) + "\n");
  save_weights_csv(dir / "weights.csv", stage.weights);
}

LoadedPca load_pca(const fs::path& dir) {
  LoadedPca out;
  const auto images = load_images(dir / "pcs.nda", out.nx, out.ny);
  const json meta = read_json(dir / "pca.json");
  try {
    const auto ev = meta.at("eigenvalues").get<std::vector<double>>();
    const auto fr = meta.at("fractions").get<std::vector<double>>();
    if (ev.size() != images.size() || fr.size() != images.size()) {
      throw FormatError("pca.json: component count does not match pcs.nda");
    }
    for (std::size_t k = 0; k < images.size(); ++k) out.components.push_back({images[k], ev[k], fr[k]});
  } catch (const json::exception& e) {
    throw FormatError(std::string("pca.json: ") + e.what());
  }
  out.weights = load_weights_csv(dir / "weights.csv");
  return out;
}

void save_bdg(const fs::path& dir, const BdgStage& stage) {
  fs::create_directories(dir);
  save_ground(dir, "ground_final", stage.ground);
  const Grid2D& g = stage.ground.psi.grid();
  const long K = static_cast<long>(stage.modes.size());
  std::vector<double> f;
  std::vector<Complex> u, v;
  json rows = json::array();
  for (long k = 0; k < K; ++k) {
    const auto& m = stage.modes[k];
    const auto& p = stage.profiles[k];
    f.insert(f.end(), p.profile.data(), p.profile.data() + p.profile.size());
    u.insert(u.end(), m.u.values().begin(), m.u.values().end());
    v.insert(v.end(), m.v.values().begin(), m.v.values().end());
    rows.push_back({{"index", k}, {"omega", m.omega}, {"label", std::string(to_string(p.label))}, {"residual", m.residual}});
  }
  const auto dims = dims_of({K, g.ny(), g.nx()});
  save_nda(dir / "modes.nda", std::span<const double>(f), dims);
  save_nda(dir / "modes_u.nda", std::span<const Complex>(u), dims);
  save_nda(dir / "modes_v.nda", std::span<const Complex>(v), dims);
  write_text(dir / "modes.json", json{{"modes", rows}}.dump(2) + "\n");
}

std::vector<ModeProfile> load_modes(const fs::path& dir) {
  int nx = 0, ny = 0;
  const auto images = load_images(dir / "modes.nda", nx, ny);
  const json meta = read_json(dir / "modes.json");
  std::vector<ModeProfile> out;
  try {
    const auto& rows = meta.at("modes");
    if (rows.size() != images.size()) throw FormatError("modes.json: mode count does not match modes.nda");
    for (std::size_t k = 0; k < images.size(); ++k) {
      out.push_back({images[k], rows[k].at("omega").get<double>(),
                     parse_mode_label(rows[k].at("label").get<std::string>())});
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("modes.json: ") + e.what());
  }
  return out;
}

void save_fits_csv(const fs::path& path, std::span<const std::optional<SinusoidFit>> fits) {
  std::string out = "component,term,amplitude,frequency,phase,offset,rms_residual\n";
  for (std::size_t k = 0; k < fits.size(); ++k) {
    if (!fits[k]) continue;
    const auto& f = *fits[k];
    for (int j = 0; j < f.n_components; ++j) {
      out += std::to_string(k) + "," + std::to_string(j) + "," + g17(f.amplitudes[j]) + "," + g17(f.frequencies[j]) +
             "," + g17(f.phases[j]) + "," + g17(f.offset) + "," + g17(f.rms_residual) + "\n";
    }
  }
  write_text(path, out);
}

}  // namespace modelens::artifacts

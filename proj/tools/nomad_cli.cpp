#include "nomad/nomad.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace nomad;

namespace {

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

[[noreturn]] void usage(const std::string& msg) { throw UsageError(msg); }

void fail_json(const std::string& kind, const std::string& msg) {
  std::cerr << Json{{"error", kind}, {"message", msg}}.dump() << '\n';
}

struct GenerateOpts {
  std::string dataset = "ring";
  int n = 100;
  double radius = 1.0, r1 = 1.0, r2 = 3.0;
  double noise = 0.05;
  double gap = 3.141592653589793, height = 10.0;
  int side = 10;
  int blobs = 2;
  double blob_sep = 10.0, blob_std = 1.0;
  int noise_dims = 0;
  double noise_std = 0.05;
  std::string out;
  std::string svg;
};

struct SolveOpts {
  std::string input;
  std::string solver = "cgm";
  double k = 0.0;
  int max_outer = 5000;
  int n_inner = 10;
  double gamma = 1.0, tau = 1.0;
  int rank = 0;
  bool labels = false;
  double threshold = 1e-3;
  int embed_dims = 2;
  std::string out_dir = ".";
};

struct AnalyzeOpts {
  std::string q;
  double k = 0.0;
  std::vector<std::string> analyses{"fourier", "lp", "cone", "width", "cp", "components"};
  double threshold = 1e-3;
  double width_fraction = 0.1;
  double tol = 1e-3;
  std::vector<int> ranks;
  int sweep_seeds = 10;
  std::string out_dir = ".";
};

struct MultilayerOpts {
  std::string input;
  std::vector<double> schedule;
  int max_outer = 1000;
  bool labels = false;
  double threshold = 1e-3;
  std::string out_dir = ".";
};

struct BullseyeOpts {
  std::string clean;
  std::string noisy;
  int neighbors = 10;
  double k = 0.0;
  int max_outer = 2000;
  double significance = 0.1;
  std::vector<double> percentiles{10, 25, 50, 75, 90};
  std::string out_dir = ".";
};

struct BenchOpts {
  std::string solver = "cgm";
  std::vector<int> sizes{250, 500, 1000, 2000};
  int iters = 5;
  double neighborhood = 10.0;
  std::string out;
};

std::uint64_t resolve_seed(const CLI::Option* flag, std::uint64_t value) {
  if (flag->count() > 0) return value;
  if (const char* env = std::getenv("NOMAD_SEED")) {
    try {
      std::size_t used = 0;
      const auto s = std::stoull(env, &used);
      if (used != std::string(env).size()) throw std::invalid_argument("trailing characters");
      return s;
    } catch (const std::exception&) {
      usage(std::string("NOMAD_SEED is not an unsigned integer: '") + env + "'");
    }
  }
  return 0;
}

/// Applies config entries to options of `sub` that were not given as flags.
void apply_config(CLI::App* sub, const std::map<std::string, std::string>& kv) {
  for (const auto& [raw_key, value] : kv) {
    std::string key = raw_key;
    for (char& c : key) {
      if (c == '_') c = '-';
    }
    CLI::Option* opt = nullptr;
    try {
      opt = sub->get_option("--" + key);
    } catch (const CLI::OptionNotFound&) {
      usage("config: unknown key '" + raw_key + "' for command " + sub->get_name());
    }
    if (opt->count() > 0) continue;
    if (opt->get_expected_max() > 1) {
      for (const auto& part : detail::split_commas(value)) opt->add_result(part);
    } else {
      opt->add_result(value);
    }
    try {
      opt->run_callback();
    } catch (const CLI::Error& e) {
      usage("config: key '" + raw_key + "': " + e.what());
    }
  }
}

/// True when the file's '#' header marks a trailing label column.
bool header_marks_labels(const std::string& path) {
  std::ifstream in(path);
  std::string first;
  std::getline(in, first);
  return !first.empty() && first[0] == '#' && first.find("labels=last") != std::string::npos;
}

Dataset load_points(const std::string& path, bool labels) {
  if (!fs::exists(path)) usage("input file not found: " + path);
  Dataset ds = load_csv(path, labels || header_marks_labels(path));
  if (ds.n() < 3) usage("dataset has n = " + std::to_string(ds.n()) + " points; need n >= 3");
  return ds;
}

void ensure_dir(const std::string& dir) { fs::create_directories(dir); }

void check_k(double k, Index n) {
  if (!(k >= 1.0) || k > static_cast<double>(n)) {
    usage("K = " + detail::format_double(k) + " outside [1, n] with n = " + std::to_string(n));
  }
}

Json components_json(const std::vector<int>& comps, const std::optional<std::vector<int>>& truth) {
  int count = 0;
  for (int c : comps) count = std::max(count, c + 1);
  Json j{{"count", count}, {"labels", comps}};
  if (truth) j["labeling_errors"] = labeling_errors(*truth, comps);
  return j;
}

void write_embedding(const SymMatrix& q, int dims, const std::optional<std::vector<int>>& labels,
                     const fs::path& dir, const std::string& stem) {
  const Index m = std::min<Index>(dims, q.n());
  const auto emb = spectral_embedding(q, m);
  save_matrix_csv(emb.coords, dir / (stem + ".csv"));
  svg::write_text(svg::scatter(emb.coords, labels, 400, stem), dir / (stem + ".svg"));
}

Dataset make_dataset(const GenerateOpts& o, std::uint64_t seed) {
  const Index n = o.n;
  if (n < 3 && o.dataset != "grid10d") usage("--n must be >= 3");
  Dataset ds;
  if (o.dataset == "ring") {
    ds = ring(n, o.radius);
  } else if (o.dataset == "two_rings") {
    ds = two_rings(n, o.r1, o.r2);
  } else if (o.dataset == "moons") {
    ds = moons(n, o.noise, seed);
  } else if (o.dataset == "swiss_roll") {
    ds = double_swiss_roll(n, o.gap, o.height, seed);
  } else if (o.dataset == "trefoil") {
    ds = trefoil_knot(n);
  } else if (o.dataset == "grid10d") {
    ds = grid2d_in_10d(o.side, o.noise, seed);
  } else if (o.dataset == "blobs") {
    if (o.blobs < 1) usage("--blobs must be >= 1");
    Matrix centers = Matrix::Zero(o.blobs, 2);
    for (int b = 0; b < o.blobs; ++b) centers(b, 0) = o.blob_sep * o.blob_std * b;
    ds = gaussian_blobs(n, centers, o.blob_std, seed);
  } else {
    usage("unknown dataset '" + o.dataset + "'");
  }
  if (o.noise_dims > 0) ds = add_noise_dims(ds, o.noise_dims, o.noise_std, seed + 1);
  return ds;
}

int cmd_generate(const GenerateOpts& o, std::uint64_t seed) {
  if (o.out.empty()) usage("generate: --out is required");
  const Dataset ds = make_dataset(o, seed);
  save_csv(ds, o.out);
  if (!o.svg.empty()) svg::write_text(svg::scatter(ds.points, ds.labels, 400, ds.name), o.svg);
  return 0;
}

CgmConfig cgm_config(int max_outer, int n_inner, double gamma, double tau, std::uint64_t seed) {
  CgmConfig c;
  c.max_outer = max_outer;
  c.n_inner = n_inner;
  c.gamma = gamma;
  c.tau = tau;
  c.eig_seed = seed;
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    usage(e.what());
  }
  return c;
}

int cmd_solve(const SolveOpts& o, std::uint64_t seed) {
  const Dataset ds = load_points(o.input, o.labels);
  check_k(o.k, ds.n());
  ensure_dir(o.out_dir);
  const fs::path dir = o.out_dir;
  const SdpProblem problem(gramian(ds.points), o.k);
  Json report;
  SymMatrix q = SymMatrix(Matrix::Identity(1, 1));
  if (o.solver == "cgm") {
    const auto r = solve_nomad_cgm(problem, cgm_config(o.max_outer, o.n_inner, o.gamma, o.tau, seed));
    report = to_json(r);
    q = r.Q;
  } else if (o.solver == "bm") {
    BmConfig c;
    c.r = o.rank > 0 ? o.rank : static_cast<int>(ds.n());
    c.seed = seed;
    try {
      c.validate(ds.n());
    } catch (const std::invalid_argument& e) {
      usage(e.what());
    }
    const auto r = solve_nomad_bm(problem, c);
    report = to_json(r);
    q = r.Q;
  } else {
    usage("unknown solver '" + o.solver + "'");
  }
  report["K"] = o.k;
  report["seed"] = seed;
  report["dataset"] = ds.name;
  report["components"] = components_json(manifold_components(q, o.threshold), ds.labels);
  save_q_csv(q, o.k, dir / "Q.csv");
  write_json(report, dir / "report.json");
  svg::write_text(svg::heatmap(q.mat(), 4, "Q, K=" + detail::format_double(o.k)), dir / "Q.svg");
  write_embedding(q, o.embed_dims, ds.labels, dir, "embedding");
  return 0;
}

int cmd_analyze(const AnalyzeOpts& o, std::uint64_t seed) {
  if (!fs::exists(o.q)) usage("Q file not found: " + o.q);
  const Matrix raw = load_matrix_csv(o.q);
  if (raw.rows() != raw.cols()) usage("Q must be square");
  if (raw.rows() < 3) usage("Q has n < 3");
  const SymMatrix q(raw);
  double k = o.k;
  if (!(k > 0.0)) {
    const auto hk = read_q_header_k(o.q);
    k = hk ? *hk : q.mat().trace();
  }
  check_k(k, q.n());
  ensure_dir(o.out_dir);
  const fs::path dir = o.out_dir;
  Json out{{"n", q.n()}, {"K", k}};
  for (const auto& a : o.analyses) {
    if (a == "fourier") {
      const auto p = fourier_profile(q);
      out["fourier"] = to_json(p);
      out["fourier"]["active_modes"] = active_modes(p, o.tol);
    } else if (a == "lp") {
      out["lp"] = to_json(lp_feasibility_check(fourier_profile(q), k, o.tol));
    } else if (a == "cone") {
      out["cone"] = to_json(cone_geometry_check(q, o.tol));
    } else if (a == "width") {
      const auto w = neighborhood_width(q, o.width_fraction);
      out["width"] = Json{{"threshold_fraction", o.width_fraction}, {"mean", w.mean}, {"per_row", w.per_row}};
    } else if (a == "cp") {
      out["cp"] = to_json(cp_diagnostics(q, k, o.tol));
    } else if (a == "components") {
      out["components"] = components_json(manifold_components(q, o.threshold), std::nullopt);
    } else if (a == "embedding") {
      write_embedding(q, 2, std::nullopt, dir, "embedding");
    } else if (a == "cp_sweep") {
      std::vector<int> ranks = o.ranks;
      if (ranks.empty()) {
        const int kk = static_cast<int>(std::lround(k));
        for (int m : {1, 2, 4, 8}) {
          if (kk * m <= q.n()) ranks.push_back(kk * m);
        }
      }
      SnmfConfig base;
      base.seed = seed;
      const auto rows = cp_rank_sweep(q, ranks, o.sweep_seeds, base);
      save_cp_sweep_csv(rows, dir / "cp_sweep.csv");
      Json arr = Json::array();
      for (const auto& r : rows) {
        arr.push_back(Json{{"r", r.r}, {"mean", json_number(r.mean)}, {"std", json_number(r.std)},
                           {"median", json_number(r.median)}});
      }
      out["cp_sweep"] = arr;
    } else {
      usage("unknown analysis '" + a + "'");
    }
  }
  write_json(out, dir / "analysis.json");
  return 0;
}

int cmd_multilayer(const MultilayerOpts& o, std::uint64_t seed) {
  const Dataset ds = load_points(o.input, o.labels);
  if (o.schedule.empty()) usage("multilayer: --schedule is required");
  for (std::size_t l = 0; l < o.schedule.size(); ++l) {
    check_k(o.schedule[l], ds.n());
    if (l > 0 && o.schedule[l] > o.schedule[l - 1]) usage("multilayer: schedule must be non-increasing");
  }
  ensure_dir(o.out_dir);
  const fs::path dir = o.out_dir;
  const auto layers = multilayer_nomad(ds.points, o.schedule, cgm_config(o.max_outer, 10, 1.0, 1.0, seed));
  Json out{{"dataset", ds.name}, {"seed", seed}, {"schedule", o.schedule}, {"layers", Json::array()}};
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& r = layers[l];
    const std::string stem = "Q_" + std::to_string(l + 1);
    Json lj = to_json(r);
    lj["K"] = o.schedule[l];
    lj["components"] = components_json(manifold_components(r.Q, o.threshold), ds.labels);
    out["layers"].push_back(lj);
    save_q_csv(r.Q, o.schedule[l], dir / (stem + ".csv"));
    svg::write_text(svg::heatmap(r.Q.mat(), 4, stem), dir / (stem + ".svg"));
    write_embedding(r.Q, 2, ds.labels, dir, "embedding_" + std::to_string(l + 1));
  }
  write_json(out, dir / "report.json");
  return 0;
}

int cmd_bullseye(const BullseyeOpts& o, std::uint64_t seed) {
  const Dataset clean = load_points(o.clean, false);
  const Dataset noisy = load_points(o.noisy, false);
  if (clean.n() != noisy.n()) usage("bullseye: clean and noisy inputs differ in point count");
  const Index n = clean.n();
  if (o.neighbors < 1 || o.neighbors >= n) usage("bullseye: --neighbors must be in [1, n-1]");
  if (!(o.significance > 0.0) || o.significance > 1.0) usage("bullseye: --significance must be in (0, 1]");
  for (double p : o.percentiles) {
    if (!(p > 0.0) || p > 100.0) usage("bullseye: percentiles must lie in (0, 100]");
  }
  const double k = o.k > 0.0 ? o.k : static_cast<double>(n) / o.neighbors;
  check_k(k, n);
  ensure_dir(o.out_dir);
  const auto ground = geodesic_ranking(clean.points, o.neighbors);
  const auto raw = geodesic_ranking(noisy.points, o.neighbors);
  const auto r = solve_nomad_cgm(SdpProblem(gramian(noisy.points), k), cgm_config(o.max_outer, 10, 1.0, 1.0, seed));
  const auto nomad_rank = nomad_geodesic_ranking(r.Q, o.significance);
  const Json out{{"K", k},
                 {"seed", seed},
                 {"nomad", to_json(bullseye_score(ground, nomad_rank, o.percentiles, o.neighbors))},
                 {"no_emb", to_json(bullseye_score(ground, raw, o.percentiles, o.neighbors))},
                 {"solver", to_json(r)}};
  write_json(out, fs::path(o.out_dir) / "bullseye.json");
  return 0;
}

int cmd_bench(const BenchOpts& o, std::uint64_t seed) {
  if (o.iters < 1) usage("bench: --iters must be >= 1");
  std::ostringstream csv;
  csv << "n,seconds_per_iter\n";
  for (int n : o.sizes) {
    if (n < 3) usage("bench: sizes must be >= 3");
    const Dataset ds = ring(n);
    const double k = std::max(1.0, n / o.neighborhood);
    const SdpProblem problem(gramian(ds.points), k);
    double per_iter = 0.0;
    if (o.solver == "cgm") {
      CgmConfig c = cgm_config(o.iters, 10, 1.0, 1.0, seed);
      c.gap_every = o.iters + 1;
      const auto r = solve_nomad_cgm(problem, c);
      per_iter = r.seconds / std::max(1, r.outer_iters);
    } else if (o.solver == "bm") {
      BmConfig c;
      c.r = static_cast<int>(std::lround(2 * k));
      c.seed = seed;
      c.max_outer = o.iters;
      const auto r = solve_nomad_bm(problem, c);
      per_iter = r.seconds / std::max(1, r.outer_iters);
    } else {
      usage("unknown solver '" + o.solver + "'");
    }
    csv << n << ',' << detail::format_double(per_iter) << '\n';
  }
  if (o.out.empty()) {
    std::cout << csv.str();
  } else {
    svg::write_text(csv.str(), o.out);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"NOMAD manifold learning toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  std::uint64_t seed_value = 0;
  app.add_option("--config", config_path, "flat key = value file; flags win on conflict");
  auto* seed_opt = app.add_option("--seed", seed_value, "seed (default: NOMAD_SEED or 0)");

  GenerateOpts go;
  auto* gen = app.add_subcommand("generate", "write a synthetic dataset as CSV");
  gen->add_option("--dataset", go.dataset)
      ->check(CLI::IsMember({"ring", "two_rings", "moons", "swiss_roll", "trefoil", "grid10d", "blobs"}));
  gen->add_option("--n", go.n, "points (per manifold for two-manifold sets)");
  gen->add_option("--radius", go.radius);
  gen->add_option("--r1", go.r1);
  gen->add_option("--r2", go.r2);
  gen->add_option("--noise", go.noise, "in-sample noise std (moons, grid10d)");
  gen->add_option("--gap", go.gap);
  gen->add_option("--height", go.height);
  gen->add_option("--side", go.side);
  gen->add_option("--blobs", go.blobs);
  gen->add_option("--blob-sep", go.blob_sep, "center spacing in units of std");
  gen->add_option("--blob-std", go.blob_std);
  gen->add_option("--noise-dims", go.noise_dims, "append this multiple of d noise columns");
  gen->add_option("--noise-std", go.noise_std);
  gen->add_option("--out", go.out);
  gen->add_option("--svg", go.svg);

  SolveOpts so;
  auto* sol = app.add_subcommand("solve", "solve NOMAD on a point CSV");
  sol->add_option("--input", so.input);
  sol->add_option("--solver", so.solver)->check(CLI::IsMember({"cgm", "bm"}));
  sol->add_option("--k", so.k);
  sol->add_option("--max-outer", so.max_outer);
  sol->add_option("--n-inner", so.n_inner);
  sol->add_option("--gamma", so.gamma);
  sol->add_option("--tau", so.tau);
  sol->add_option("--rank", so.rank, "BM factor rank (default n)");
  sol->add_flag("--labels", so.labels, "input has a final label column (implied by a labels=last header)");
  sol->add_option("--threshold", so.threshold, "component edge threshold");
  sol->add_option("--embed-dims", so.embed_dims);
  sol->add_option("--out-dir", so.out_dir);

  AnalyzeOpts ao;
  auto* ana = app.add_subcommand("analyze", "structural diagnostics of a Q CSV");
  ana->add_option("--q", ao.q);
  ana->add_option("--k", ao.k, "K (default: from the Q header, else tr Q)");
  ana->add_option("--analyses", ao.analyses)->delimiter(',');
  ana->add_option("--threshold", ao.threshold);
  ana->add_option("--width-fraction", ao.width_fraction);
  ana->add_option("--tol", ao.tol);
  ana->add_option("--ranks", ao.ranks)->delimiter(',');
  ana->add_option("--sweep-seeds", ao.sweep_seeds);
  ana->add_option("--out-dir", ao.out_dir);

  MultilayerOpts mo;
  auto* mul = app.add_subcommand("multilayer", "recursive NOMAD with a K schedule");
  mul->add_option("--input", mo.input);
  mul->add_option("--schedule", mo.schedule)->delimiter(',');
  mul->add_option("--max-outer", mo.max_outer);
  mul->add_flag("--labels", mo.labels);
  mul->add_option("--threshold", mo.threshold);
  mul->add_option("--out-dir", mo.out_dir);

  BullseyeOpts bo;
  auto* bul = app.add_subcommand("bullseye", "geodesic bullseye scores, NOMAD graph vs raw distances");
  bul->add_option("--clean", bo.clean);
  bul->add_option("--noisy", bo.noisy);
  bul->add_option("--neighbors", bo.neighbors);
  bul->add_option("--k", bo.k, "default n / neighbors");
  bul->add_option("--max-outer", bo.max_outer);
  bul->add_option("--significance", bo.significance, "NOMAD graph edge cut, fraction of the row maximum");
  bul->add_option("--percentiles", bo.percentiles)->delimiter(',');
  bul->add_option("--out-dir", bo.out_dir);

  BenchOpts be;
  auto* ben = app.add_subcommand("bench", "seconds per outer iteration on ring(n)");
  ben->add_option("--solver", be.solver)->check(CLI::IsMember({"cgm", "bm"}));
  ben->add_option("--sizes", be.sizes)->delimiter(',');
  ben->add_option("--iters", be.iters);
  ben->add_option("--neighborhood", be.neighborhood, "K = n / neighborhood");
  ben->add_option("--out", be.out);

  try {
    app.parse(argc, argv);
    CLI::App* sub = app.get_subcommands().front();
    if (!config_path.empty()) {
      auto kv = load_flat_config(config_path);
      if (auto it = kv.find("seed"); it != kv.end()) {
        if (seed_opt->count() == 0) {
          seed_opt->add_result(it->second);
          seed_opt->run_callback();
        }
        kv.erase(it);
      }
      apply_config(sub, kv);
    }
    const std::uint64_t seed = resolve_seed(seed_opt, seed_value);
    if (sub == gen) return cmd_generate(go, seed);
    if (sub == sol) return cmd_solve(so, seed);
    if (sub == ana) return cmd_analyze(ao, seed);
    if (sub == mul) return cmd_multilayer(mo, seed);
    if (sub == bul) return cmd_bullseye(bo, seed);
    return cmd_bench(be, seed);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::Error& e) {
    fail_json("usage", e.what());
    return 2;
  } catch (const UsageError& e) {
    fail_json("usage", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    fail_json("usage", e.what());
    return 2;
  } catch (const std::exception& e) {
    fail_json("runtime", e.what());
    return 1;
  }
}

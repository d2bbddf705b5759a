// maxent: feature inversion from the command line.
//
//   maxent invert     --w W.csv --z z.csv --prior ted --out x.csv --report r.json
//   maxent spectrum   --nfft 128 --order 6 --seed 1 --report r.json
//   maxent autoencode --images digits.idx3 --out-dir out --report r.json
//   maxent selftest   [--json]
//
// Exit status: 0 success, 1 bad input, 2 the numerics did not deliver.

#include <CLI11.hpp>

#include <chrono>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "maxent/check/selftest.hpp"
#include "maxent/maxent.hpp"

namespace fs = std::filesystem;
using maxent::io::Json;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_input = 1;
constexpr int exit_numeric = 2;

/// Input problem attributed to one flag.
class UsageError : public std::runtime_error {
 public:
  UsageError(const std::string& flag, const std::string& what)
      : std::runtime_error(flag + ": " + what) {}
};

template <class F>
auto for_flag(const std::string& flag, F&& f) {
  try {
    return f();
  } catch (const maxent::Error& e) {
    throw UsageError(flag, e.what());
  }
}

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::optional<maxent::EntropyReport> entropy_if_positive(const Eigen::VectorXd& x) {
  if (x.size() == 0 || !(x.array() > 0.0).all()) return std::nullopt;
  return maxent::entropy_measures(std::span<const double>(x.data(), x.size()));
}

Json entropy_json(const std::optional<maxent::EntropyReport>& e) {
  if (!e) return nullptr;
  return {{"h_ds", e->h_ds}, {"h_s", e->h_s}, {"h_e", e->h_e}};
}

Json result_json(const maxent::SolveResult& r) {
  return {{"status", maxent::to_string(r.status)},
          {"converged", r.converged},
          {"residual_inf", r.residual_inf},
          {"iterations", r.iterations}};
}

// ---------------------------------------------------------------------------

struct InvertArgs {
  std::string w, z, prior, per_element, out, report;
  double tol = 1e-10;
  int max_iter = 200;
  bool timings = false;
};

std::vector<maxent::ElementModel> per_element_models(const std::string& path) {
  const Eigen::VectorXd ids = maxent::io::read_vector_csv(path);
  std::vector<maxent::ElementModel> models;
  for (Eigen::Index i = 0; i < ids.size(); ++i) {
    const double v = ids[i];
    if (v != std::floor(v) || v < 0 || v > 4) {
      throw maxent::ParseError("entry " + std::to_string(i + 1) + " is not a kind id 0-4",
                               static_cast<std::size_t>(i + 1), 1);
    }
    models.emplace_back(maxent::all_prior_kinds[static_cast<std::size_t>(v)]);
  }
  return models;
}

int run_invert(const InvertArgs& a) {
  const auto t0 = Clock::now();
  if (!(a.tol > 0.0)) throw UsageError("--tol", "must be positive");
  if (a.max_iter < 1) throw UsageError("--max-iter", "must be at least 1");
  if (a.prior.empty() == a.per_element.empty()) {
    throw UsageError("--prior", "give exactly one of --prior and --prior-per-element");
  }

  const Eigen::MatrixXd w = for_flag("--w", [&] { return maxent::io::read_matrix_csv(a.w); });
  maxent::LinearMap map = for_flag("--w", [&] { return maxent::dense_map(w); });
  const Eigen::VectorXd z = for_flag("--z", [&] { return maxent::io::read_vector_csv(a.z); });
  if (z.size() != map.m()) {
    throw UsageError("--z", "expected " + std::to_string(map.m()) + " features, got " +
                                std::to_string(z.size()));
  }
  std::vector<maxent::ElementModel> models;
  if (!a.prior.empty()) {
    const auto kind = for_flag("--prior", [&] { return maxent::parse_prior_kind(a.prior); });
    models.assign(static_cast<std::size_t>(map.n()), maxent::ElementModel(kind));
  } else {
    models = for_flag("--prior-per-element", [&] { return per_element_models(a.per_element); });
    if (static_cast<Eigen::Index>(models.size()) != map.n()) {
      throw UsageError("--prior-per-element", "expected " + std::to_string(map.n()) +
                                                  " kind ids, got " + std::to_string(models.size()));
    }
  }
  const std::string model_flag = a.prior.empty() ? "--prior-per-element" : "--prior";
  const maxent::InversionProblem problem = for_flag(model_flag, [&] {
    return maxent::InversionProblem(std::move(map), std::move(models), z);
  });
  const double t_setup = ms_since(t0);

  maxent::SolveOptions opts;
  opts.tol = a.tol;
  opts.max_iter = a.max_iter;
  const auto t1 = Clock::now();
  const maxent::SolveResult r = maxent::solve(problem, opts);
  const double t_solve = ms_since(t1);

  maxent::io::write_vector_csv(a.out, r.x_bar);

  Json params = {{"w", a.w}, {"z", a.z}};
  if (a.prior.empty()) {
    params["prior_per_element"] = a.per_element;
  } else {
    params["prior"] = maxent::to_string(problem.models().front().kind());
  }
  params["tol"] = a.tol;
  params["max_iter"] = a.max_iter;
  Json timings = nullptr;
  if (a.timings) timings = {{"setup", t_setup}, {"solve", t_solve}};
  Json report = maxent::io::make_report("invert", params, r.residual_inf, r.iterations,
                                        entropy_if_positive(r.x_bar), std::nullopt, timings);
  report["status"] = maxent::to_string(r.status);
  report["converged"] = r.converged;
  report["n"] = problem.map().n();
  report["m"] = problem.map().m();
  report["trace"] = r.trace;
  maxent::io::write_json(a.report, report);

  if (!r.converged) {
    std::cerr << "maxent invert: " << maxent::to_string(r.status) << " after " << r.iterations
              << " iterations, residual " << r.residual_inf << "\n";
    return exit_numeric;
  }
  return exit_ok;
}

// ---------------------------------------------------------------------------

struct SpectrumArgs {
  std::size_t nfft = 128;
  std::size_t order = 6;
  std::uint64_t seed = 1;
  double pole_radius = 0.5;
  std::string input, out, report;
  bool timings = false;
  bool nfft_given = false;
};

int run_spectrum(SpectrumArgs a) {
  const auto t0 = Clock::now();
  if (const char* env = std::getenv("MAXENT_SEED")) {
    const std::string_view s(env);
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
      throw UsageError("MAXENT_SEED", "not a decimal integer: '" + std::string(s) + "'");
    }
    a.seed = v;
  }
  if (!(a.pole_radius >= 0.0 && a.pole_radius < 1.0)) {
    throw UsageError("--pole-radius", "must be in [0, 1)");
  }
  maxent::NoiseFilter filter;
  filter.pole_radius = a.pole_radius;

  std::vector<double> signal;
  if (!a.input.empty()) {
    const Eigen::VectorXd v = for_flag("--input", [&] { return maxent::io::read_vector_csv(a.input); });
    if (a.nfft_given && static_cast<std::size_t>(v.size()) != a.nfft) {
      throw UsageError("--nfft", "does not match the --input length " + std::to_string(v.size()));
    }
    signal.assign(v.data(), v.data() + v.size());
    a.nfft = signal.size();
  } else {
    if (a.nfft < 4 || a.nfft % 2) throw UsageError("--nfft", "must be even and at least 4");
    signal = maxent::colored_noise(a.nfft, a.seed, filter);
  }
  const std::size_t bins = a.nfft / 2 + 1;
  if (a.order + 1 >= bins) {
    throw UsageError("--order", "must satisfy order + 1 < nfft/2 + 1 = " + std::to_string(bins));
  }

  maxent::SolveOptions opts;
  const maxent::SpectrumOutcome s = maxent::run_spectrum(std::move(signal), a.order, opts);
  const double total = ms_since(t0);
  if (!a.out.empty()) maxent::io::write_vector_csv(a.out, s.result.x_bar);

  Json params = {{"nfft", a.nfft}, {"order", a.order}};
  if (a.input.empty()) {
    params["seed"] = a.seed;
    params["filter"] = {{"kind", "two-pole all-pole"},
                        {"pole_radius", filter.pole_radius},
                        {"pole_angle", filter.pole_angle},
                        {"burn_in", filter.burn_in}};
  } else {
    params["input"] = a.input;
  }
  Json timings = nullptr;
  if (a.timings) timings = {{"total", total}};
  Json report = maxent::io::make_report("spectrum", params, s.result.residual_inf,
                                        s.result.iterations, entropy_if_positive(s.result.x_bar),
                                        std::nullopt, timings);
  report["status"] = maxent::to_string(s.result.status);
  report["converged"] = s.result.converged;
  report["acf_weighting"] = "f(i) = 1 for i = 0 and i = N-1, 2 otherwise";
  report["acf_rel_error"] = s.acf_rel_error;
  report["max_rel_deviation"] = s.max_rel_deviation;
  report["ar_scale"] = "nfft * e0 / |A_i|^2";
  if (!a.report.empty()) maxent::io::write_json(a.report, report);

  std::cout << "spectrum: nfft=" << a.nfft << " order=" << a.order << " iterations="
            << s.result.iterations << " max_rel_deviation=" << s.max_rel_deviation << "\n";
  if (!s.result.converged || !(s.max_rel_deviation <= 1e-6)) {
    std::cerr << "maxent spectrum: deviation above 1e-6 or solve did not converge ("
              << maxent::to_string(s.result.status) << ")\n";
    return exit_numeric;
  }
  return exit_ok;
}

// ---------------------------------------------------------------------------

struct AutoencodeArgs {
  std::string images, out_dir, report;
  std::size_t count = 6;
  std::size_t side = 28;
  std::size_t keep = 7;
  bool timings = false;
};

/// Removes everything written so far unless released.
class OutputGuard {
 public:
  void add(fs::path p) { paths_.push_back(std::move(p)); }
  void release() { paths_.clear(); }
  ~OutputGuard() {
    std::error_code ec;
    for (auto it = paths_.rbegin(); it != paths_.rend(); ++it) fs::remove(*it, ec);
  }

 private:
  std::vector<fs::path> paths_;
};

int run_autoencode(const AutoencodeArgs& a) {
  const auto t0 = Clock::now();
  if (a.count < 1) throw UsageError("--count", "must be at least 1");
  const maxent::LinearMap map = for_flag("--keep", [&] { return maxent::dct2_map(a.side, a.keep); });
  const maxent::io::ImageBatch batch =
      for_flag("--images", [&] { return maxent::io::read_idx_images(a.images, a.count); });
  if (batch.side != a.side) {
    throw UsageError("--side", "images are " + std::to_string(batch.side) + " pixels wide");
  }
  if (batch.count < a.count) {
    throw UsageError("--count", "file holds only " + std::to_string(batch.count) + " images");
  }

  OutputGuard guard;
  if (!fs::exists(a.out_dir)) {
    fs::create_directories(a.out_dir);
    guard.add(a.out_dir);
  }
  const double t_setup = ms_since(t0);

  Json images = Json::array();
  std::size_t clipped_total = 0;
  double worst_residual = 0.0;
  long iterations = 0;
  bool all_converged = true;
  const auto t1 = Clock::now();
  for (std::size_t k = 0; k < batch.count; ++k) {
    const Eigen::VectorXd& image = batch.pixels[k];
    const maxent::ImageReconstruction r = maxent::reconstruct_image(map, image);
    const std::string stem = "digit" + std::to_string(k) + "_";
    auto emit = [&](const std::string& name, const Eigen::VectorXd& v) {
      const fs::path p = fs::path(a.out_dir) / (stem + name + ".pgm");
      guard.add(p);
      return maxent::io::write_pgm(p, std::span<const double>(v.data(), v.size()), a.side, true);
    };
    emit("original", image);
    const std::size_t clip_pinv = emit("pinv", r.pinv);
    const std::size_t clip_exp = emit("exp", r.exponential);
    const std::size_t clip_ted = emit("ted", r.ted);
    clipped_total += clip_pinv + clip_exp + clip_ted;

    worst_residual = std::max({worst_residual, r.exp_result.residual_inf, r.ted_result.residual_inf});
    iterations = std::max<long>({iterations, r.exp_result.iterations, r.ted_result.iterations});
    all_converged = all_converged && r.exp_result.converged && r.ted_result.converged;

    Json pinv = {{"out_of_range", r.pinv_out_of_range},
                 {"min_pixel", r.pinv.minCoeff()},
                 {"max_pixel", r.pinv.maxCoeff()},
                 {"mse", r.mse_pinv},
                 {"clipped_pixels", clip_pinv}};
    Json exp = result_json(r.exp_result);
    exp["min_pixel"] = r.exponential.minCoeff();
    exp["max_pixel"] = r.exponential.maxCoeff();
    exp["mse"] = r.mse_exp;
    exp["clipped_pixels"] = clip_exp;
    exp["entropy"] = entropy_json(entropy_if_positive(r.exponential));
    Json ted = result_json(r.ted_result);
    ted["min_pixel"] = r.ted.minCoeff();
    ted["max_pixel"] = r.ted.maxCoeff();
    ted["mse"] = r.mse_ted;
    ted["clipped_pixels"] = clip_ted;
    ted["entropy"] = entropy_json(entropy_if_positive(r.ted));
    images.push_back({{"index", k},
                      {"nudged_pixels", r.nudged},
                      {"pinv", pinv},
                      {"exponential", exp},
                      {"ted", ted}});
  }
  const double t_solve = ms_since(t1);

  Json params = {{"images", a.images}, {"count", a.count}, {"side", a.side},
                 {"keep", a.keep},     {"out_dir", a.out_dir}, {"nudge", 1e-6}};
  Json timings = nullptr;
  if (a.timings) timings = {{"setup", t_setup}, {"solve", t_solve}};
  Json report = maxent::io::make_report("autoencode", params, worst_residual, iterations,
                                        std::nullopt, clipped_total, timings);
  report["converged"] = all_converged;
  report["images"] = std::move(images);
  maxent::io::write_json(a.report, report);
  guard.release();

  if (!all_converged) {
    std::cerr << "maxent autoencode: at least one reconstruction did not converge\n";
    return exit_numeric;
  }
  return exit_ok;
}

// ---------------------------------------------------------------------------

/// MAXENT_SELFTEST_TOL replaces every tolerance; an unparsable value
/// becomes NaN so that every check fails.
std::optional<double> selftest_override() {
  const char* env = std::getenv("MAXENT_SELFTEST_TOL");
  if (!env) return std::nullopt;
  const std::string_view s(env);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !(v > 0.0)) {
    return std::nan("");
  }
  return v;
}

int run_selftest(bool json) {
  const auto results = maxent::check::run_selftest(selftest_override());
  bool ok = true;
  for (const auto& r : results) ok = ok && r.passed;
  if (json) {
    Json out = Json::array();
    for (const auto& r : results) {
      out.push_back({{"name", r.name}, {"error", r.error}, {"tolerance", r.tolerance}, {"passed", r.passed}});
    }
    std::cout << Json{{"passed", ok}, {"checks", out}}.dump(2) << "\n";
  } else {
    for (const auto& r : results) {
      std::printf("%-30s %-4s error %.3e  tol %.1e\n", r.name.c_str(), r.passed ? "PASS" : "FAIL",
                  r.error, r.tolerance);
    }
    std::printf("%s\n", ok ? "all checks passed" : "self-test FAILED");
  }
  return ok ? exit_ok : exit_numeric;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Maximum-entropy feature inversion"};
  app.require_subcommand(1);

  InvertArgs inv;
  auto* c_inv = app.add_subcommand("invert", "solve W^T lambda(W h) = z for a dense map");
  c_inv->add_option("--w", inv.w, "N x M feature matrix (CSV)")->required();
  c_inv->add_option("--z", inv.z, "feature vector of length M (CSV)")->required();
  auto* o_prior = c_inv->add_option("--prior", inv.prior, "gaussian | tg | exp | chisq1 | ted");
  c_inv->add_option("--prior-per-element", inv.per_element,
                    "CSV of N kind ids (0 gaussian, 1 tg, 2 exp, 3 chisq1, 4 ted)")
      ->excludes(o_prior);
  c_inv->add_option("--tol", inv.tol, "residual tolerance")->capture_default_str();
  c_inv->add_option("--max-iter", inv.max_iter, "Newton iteration cap")->capture_default_str();
  c_inv->add_option("--out", inv.out, "reconstruction x (CSV)")->required();
  c_inv->add_option("--report", inv.report, "JSON report")->required();
  c_inv->add_flag("--timings", inv.timings, "record wall-clock timings in the report");

  SpectrumArgs spec;
  auto* c_spec = app.add_subcommand("spectrum", "MaxEnt spectrum from ACF lags vs the Levinson AR spectrum");
  auto* o_nfft = c_spec->add_option("--nfft", spec.nfft, "signal length")->capture_default_str();
  c_spec->add_option("--order", spec.order, "highest ACF lag")->capture_default_str();
  c_spec->add_option("--seed", spec.seed, "noise seed (MAXENT_SEED overrides)")->capture_default_str();
  c_spec->add_option("--input", spec.input, "signal (CSV) instead of generated noise");
  c_spec->add_option("--pole-radius", spec.pole_radius, "radius of the noise filter poles")
      ->capture_default_str();
  c_spec->add_option("--out", spec.out, "reconstructed bins (CSV)");
  c_spec->add_option("--report", spec.report, "JSON report");
  c_spec->add_flag("--timings", spec.timings, "record wall-clock timings in the report");

  AutoencodeArgs ae;
  auto* c_ae = app.add_subcommand("autoencode", "DCT auto-encoder on IDX images");
  c_ae->add_option("--images", ae.images, "IDX3 image file")->required();
  c_ae->add_option("--count", ae.count, "images to process")->capture_default_str();
  c_ae->add_option("--side", ae.side, "image side in pixels")->capture_default_str();
  c_ae->add_option("--keep", ae.keep, "retained DCT frequencies per axis")->capture_default_str();
  c_ae->add_option("--out-dir", ae.out_dir, "directory for the graymaps")->required();
  c_ae->add_option("--report", ae.report, "JSON report")->required();
  c_ae->add_flag("--timings", ae.timings, "record wall-clock timings in the report");

  bool st_json = false;
  auto* c_st = app.add_subcommand("selftest", "run the embedded property checks");
  c_st->add_flag("--json", st_json, "machine-readable output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_input;
  }

  try {
    if (*c_inv) return run_invert(inv);
    if (*c_spec) {
      spec.nfft_given = o_nfft->count() > 0;
      return run_spectrum(spec);
    }
    if (*c_ae) return run_autoencode(ae);
    if (*c_st) return run_selftest(st_json);
  } catch (const UsageError& e) {
    std::cerr << "maxent: " << e.what() << "\n";
    return exit_input;
  } catch (const maxent::IoError& e) {
    std::cerr << "maxent: " << e.what() << "\n";
    return exit_input;
  } catch (const std::exception& e) {
    std::cerr << "maxent: " << e.what() << "\n";
    return exit_numeric;
  }
  return exit_input;
}

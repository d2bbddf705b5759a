#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "maxent/linmap.hpp"
#include "maxent/oracles.hpp"
#include "maxent/priors.hpp"
#include "maxent/solver.hpp"

namespace maxent {

// ---------------------------------------------------------------------------
// Spectral estimation with non-homogeneous bins

struct NoiseFilter {
  double pole_radius = 0.5;
  double pole_angle = std::numbers::pi / 4;
  std::size_t burn_in = 512;
};

/// Gaussian noise through the all-pole filter
/// y_t = e_t + 2 r cos(theta) y_{t-1} - r^2 y_{t-2}; the first `burn_in`
/// outputs are discarded.
inline std::vector<double> colored_noise(std::size_t length, std::uint64_t seed,
                                         const NoiseFilter& filter = {}) {
  Rng rng(seed);
  const double a1 = 2.0 * filter.pole_radius * std::cos(filter.pole_angle);
  const double a2 = -filter.pole_radius * filter.pole_radius;
  std::vector<double> out;
  out.reserve(length);
  double y1 = 0.0;
  double y2 = 0.0;
  for (std::size_t t = 0; t < filter.burn_in + length; ++t) {
    const double y = rng.normal() + a1 * y1 + a2 * y2;
    y2 = y1;
    y1 = y;
    if (t >= filter.burn_in) out.push_back(y);
  }
  return out;
}

/// Chi-squared(1) for the two real bins (DC and Nyquist), exponential for
/// the complex bins in between.
inline std::vector<ElementModel> spectral_bin_models(std::size_t bins) {
  std::vector<ElementModel> models(bins, ElementModel(PriorKind::exponential));
  models.front() = ElementModel(PriorKind::chi_sq1);
  models.back() = ElementModel(PriorKind::chi_sq1);
  return models;
}

struct SpectrumOutcome {
  std::vector<double> signal;
  Eigen::VectorXd bins;      ///< periodogram bins, the "unknown" x
  Eigen::VectorXd acf_time;  ///< circular time-domain ACF lags 0..order
  Eigen::VectorXd z;         ///< W^T bins
  SolveResult result;
  Eigen::VectorXd ar_spectrum;
  double acf_rel_error = 0.0;      ///< ||z - acf_time||_inf / |r_0|
  double max_rel_deviation = 0.0;  ///< max_i |x_i - p_AR,i| / p_AR,i
};

/// Feature-inverts the periodogram of `signal` from its first order+1 ACF
/// lags and compares the result with the Levinson AR spectrum.
inline SpectrumOutcome run_spectrum(std::vector<double> signal, std::size_t order,
                                    const SolveOptions& opts = {}) {
  SpectrumOutcome out;
  out.signal = std::move(signal);
  const std::size_t nfft = out.signal.size();
  out.bins = periodogram_bins(out.signal);
  out.acf_time = circular_acf(out.signal, order);
  LinearMap map = acf_map(nfft, order);
  out.z = map.features(out.bins);
  out.acf_rel_error = (out.z - out.acf_time).lpNorm<Eigen::Infinity>() / std::abs(out.acf_time[0]);
  const InversionProblem problem(std::move(map), spectral_bin_models(nfft / 2 + 1), out.z);
  out.result = solve(problem, opts);
  out.ar_spectrum = levinson_ar_spectrum(std::span<const double>(out.z.data(), out.z.size()), nfft);
  out.max_rel_deviation =
      ((out.result.x_bar - out.ar_spectrum).cwiseAbs().array() / out.ar_spectrum.array()).maxCoeff();
  return out;
}

// ---------------------------------------------------------------------------
// DCT auto-encoder

struct ImageReconstruction {
  Eigen::VectorXd pinv;         ///< least-squares (inverse DCT)
  Eigen::VectorXd exponential;  ///< positive data, exponential prior
  Eigen::VectorXd ted;          ///< [0,1] data, uniform prior
  SolveResult exp_result;
  SolveResult ted_result;
  std::size_t nudged = 0;       ///< pixels moved off 0 or 1 before encoding
  std::size_t pinv_out_of_range = 0;
  double mse_pinv = 0.0;
  double mse_exp = 0.0;
  double mse_ted = 0.0;
};

/// Encodes `image` with `map` and decodes it three ways. Pixels are first
/// pulled into [nudge, 1 - nudge] so the features are reachable from the
/// open unit cube.
inline ImageReconstruction reconstruct_image(const LinearMap& map, const Eigen::VectorXd& image,
                                             double nudge = 1e-6, const SolveOptions& opts = {}) {
  ImageReconstruction r;
  Eigen::VectorXd interior = image;
  for (Eigen::Index i = 0; i < interior.size(); ++i) {
    const double v = std::clamp(interior[i], nudge, 1.0 - nudge);
    if (v != interior[i]) ++r.nudged;
    interior[i] = v;
  }
  const Eigen::VectorXd z = map.features(interior);

  r.pinv = solve_gaussian(map, z).x_bar;
  r.pinv_out_of_range = static_cast<std::size_t>(
      (r.pinv.array() < 0.0 || r.pinv.array() > 1.0).count());

  r.exp_result = solve(InversionProblem::homogeneous(map, PriorKind::exponential, z), opts);
  r.exponential = r.exp_result.x_bar;
  r.ted_result = solve(InversionProblem::homogeneous(map, PriorKind::ted, z), opts);
  r.ted = r.ted_result.x_bar;

  const double n = static_cast<double>(image.size());
  r.mse_pinv = (r.pinv - image).squaredNorm() / n;
  r.mse_exp = (r.exponential - image).squaredNorm() / n;
  r.mse_ted = (r.ted - image).squaredNorm() / n;
  return r;
}

}  // namespace maxent

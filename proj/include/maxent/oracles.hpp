#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "maxent/errors.hpp"
#include "maxent/priors.hpp"
#include "maxent/solver.hpp"

namespace maxent {

/// Reproducible random stream: std::mt19937_64 seeded with `seed`, uniforms
/// from the top 53 bits, normals by Box-Muller (cosine branch only),
/// exponentials by inversion. Nothing depends on the standard library's
/// distribution classes, so streams match across implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Unit-rate exponential.
  double exponential() { return -std::log1p(-uniform()); }

 private:
  std::mt19937_64 engine_;
};

struct ArModel {
  Eigen::VectorXd coeffs;      ///< (1, a_1, ..., a_p)
  double error_var;            ///< prediction error variance e0
  Eigen::VectorXd reflection;  ///< k_1 .. k_p
};

/// Levinson-Durbin recursion on autocorrelation lags r_0..r_p.
inline ArModel levinson_durbin(std::span<const double> acf) {
  if (acf.empty()) throw ShapeError("levinson_durbin: empty autocorrelation");
  const auto p = static_cast<Eigen::Index>(acf.size() - 1);
  ArModel ar{Eigen::VectorXd::Zero(p + 1), acf[0], Eigen::VectorXd::Zero(p)};
  ar.coeffs[0] = 1.0;
  if (!(ar.error_var > 0.0)) throw NotPositiveDefinite("levinson_durbin: r_0 must be positive");
  for (Eigen::Index m = 1; m <= p; ++m) {
    double acc = acf[static_cast<std::size_t>(m)];
    for (Eigen::Index j = 1; j < m; ++j) acc += ar.coeffs[j] * acf[static_cast<std::size_t>(m - j)];
    const double k = -acc / ar.error_var;
    const Eigen::VectorXd prev = ar.coeffs;
    for (Eigen::Index j = 1; j < m; ++j) ar.coeffs[j] = prev[j] + k * prev[m - j];
    ar.coeffs[m] = k;
    ar.reflection[m - 1] = k;
    ar.error_var *= (1.0 - k) * (1.0 + k);
    if (!(ar.error_var > 0.0)) {
      throw NotPositiveDefinite("levinson_durbin: error variance non-positive at order " +
                                std::to_string(m));
    }
  }
  return ar;
}

namespace detail {

inline void require_even_length(std::size_t n, const char* who) {
  if (n < 4 || n % 2 != 0) {
    throw ShapeError(std::string(who) + ": length must be even and >= 4, got " +
                     std::to_string(n));
  }
}

// DFT of `values` zero-padded to nfft, bins 0..nfft/2, by direct summation
// with exact index reduction of the phase.
inline std::vector<std::complex<double>> half_dft(std::span<const double> values,
                                                  std::size_t nfft) {
  std::vector<double> c(nfft);
  std::vector<double> s(nfft);
  for (std::size_t j = 0; j < nfft; ++j) {
    const double phase = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(nfft);
    c[j] = std::cos(phase);
    s[j] = std::sin(phase);
  }
  std::vector<std::complex<double>> out(nfft / 2 + 1);
  for (std::size_t i = 0; i < out.size(); ++i) {
    double re = 0.0;
    double im = 0.0;
    for (std::size_t t = 0; t < values.size(); ++t) {
      const std::size_t j = (i * t) % nfft;
      re += values[t] * c[j];
      im -= values[t] * s[j];
    }
    out[i] = {re, im};
  }
  return out;
}

}  // namespace detail

/// First nfft/2 + 1 magnitude-squared DFT bins of a real signal.
inline Eigen::VectorXd periodogram_bins(std::span<const double> signal) {
  detail::require_even_length(signal.size(), "periodogram_bins");
  const auto dft = detail::half_dft(signal, signal.size());
  Eigen::VectorXd bins(static_cast<Eigen::Index>(dft.size()));
  for (std::size_t i = 0; i < dft.size(); ++i) bins[static_cast<Eigen::Index>(i)] = std::norm(dft[i]);
  return bins;
}

/// Biased circular autocorrelation r_k = (1/n) sum_t s_t s_{(t+k) mod n}.
inline Eigen::VectorXd circular_acf(std::span<const double> signal, std::size_t max_lag) {
  const std::size_t n = signal.size();
  if (n == 0 || max_lag >= n) throw ShapeError("circular_acf: max_lag must be below length");
  Eigen::VectorXd r(static_cast<Eigen::Index>(max_lag + 1));
  for (std::size_t k = 0; k <= max_lag; ++k) {
    double acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) acc += signal[t] * signal[(t + k) % n];
    r[static_cast<Eigen::Index>(k)] = acc / static_cast<double>(n);
  }
  return r;
}

/// AR(p) spectrum nfft * e0 / |A_i|^2 on bins 0..nfft/2, where A_i are DFT
/// bins of the Levinson coefficients zero-padded to nfft. This is on the
/// scale of the periodogram bins the autocorrelation came from.
inline Eigen::VectorXd levinson_ar_spectrum(std::span<const double> acf, std::size_t nfft) {
  detail::require_even_length(nfft, "levinson_ar_spectrum");
  if (acf.size() > nfft) throw ShapeError("levinson_ar_spectrum: order exceeds nfft");
  const ArModel ar = levinson_durbin(acf);
  const auto a = detail::half_dft(std::span<const double>(ar.coeffs.data(), ar.coeffs.size()), nfft);
  Eigen::VectorXd out(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = static_cast<double>(nfft) * ar.error_var / std::norm(a[i]);
  }
  return out;
}

struct McEstimate {
  Eigen::VectorXd mean;
  Eigen::VectorXd std_error;  ///< per-element standard error of `mean`
  std::size_t accepted = 0;
  std::size_t drawn = 0;
};

/// Monte-Carlo estimate of the conditional mean of x under the alpha = 0
/// prior given W^T x = z, with the constraint thickened to the slab
/// ||W^T x - z||_inf <= slab_eps and rejection sampling from the prior.
/// `samples` is the number of prior draws. Desk-scale only (N <= 6).
inline McEstimate conditional_mean_mc(const InversionProblem& p, std::size_t samples,
                                      double slab_eps, std::uint64_t seed) {
  const auto n = p.map().n();
  if (n > 6) throw ProblemError("conditional_mean_mc: N must be at most 6");
  if (!(slab_eps > 0.0)) throw ProblemError("conditional_mean_mc: slab_eps must be positive");
  const auto kind = p.homogeneous_kind();
  if (kind != PriorKind::ted && kind != PriorKind::exponential && kind != PriorKind::gaussian) {
    throw UnsupportedModel("conditional_mean_mc: needs homogeneous ted, exp or gaussian priors");
  }
  const auto m = p.map().m();
  const Eigen::MatrixXd wt = p.map().matrix().transpose();  // column-major: M per column
  const double* wdata = wt.data();
  const double* zdata = p.z().data();
  Rng rng(seed);
  std::vector<double> x(static_cast<std::size_t>(n));
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd m2 = Eigen::VectorXd::Zero(n);
  std::size_t accepted = 0;
  for (std::size_t s = 0; s < samples; ++s) {
    for (auto& xi : x) {
      switch (*kind) {
        case PriorKind::ted:
          xi = rng.uniform();
          break;
        case PriorKind::exponential:
          xi = rng.exponential();
          break;
        default:
          xi = rng.normal();
          break;
      }
    }
    bool inside = true;
    for (Eigen::Index k = 0; k < m && inside; ++k) {
      double feature = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) feature += wdata[i * m + k] * x[static_cast<std::size_t>(i)];
      inside = std::abs(feature - zdata[k]) <= slab_eps;
    }
    if (!inside) continue;
    ++accepted;
    const double count = static_cast<double>(accepted);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double xi = x[static_cast<std::size_t>(i)];
      const double delta = xi - mean[i];
      mean[i] += delta / count;
      m2[i] += delta * (xi - mean[i]);
    }
  }
  if (accepted < 100) {
    throw DegenerateSlab("conditional_mean_mc: only " + std::to_string(accepted) +
                         " of " + std::to_string(samples) + " draws fell in the slab");
  }
  McEstimate est;
  est.mean = mean;
  const double a = static_cast<double>(accepted);
  est.std_error = (m2 / (a - 1.0)).cwiseSqrt() / std::sqrt(a);
  est.accepted = accepted;
  est.drawn = samples;
  return est;
}

}  // namespace maxent

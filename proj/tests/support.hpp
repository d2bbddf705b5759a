#pragma once

// Shared fixtures and independent reference computations for the tests.

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <span>
#include <vector>

#include "maxent/maxent.hpp"

namespace testing_support {

/// Root of a strictly increasing f on [lo, hi] by plain bisection.
inline double bisect(const std::function<double(double)>& f, double lo, double hi) {
  for (int i = 0; i < 200 && hi - lo > 0.0; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Orthogonal projection onto range(W) from the thin SVD.
inline Eigen::VectorXd svd_projection(const Eigen::MatrixXd& w, const Eigen::VectorXd& x) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(w, Eigen::ComputeThinU);
  const Eigen::MatrixXd& u = svd.matrixU();
  return u * (u.transpose() * x);
}

/// Circular autocorrelation by the textbook double loop.
inline Eigen::VectorXd direct_acf(const std::vector<double>& s, std::size_t max_lag) {
  const std::size_t n = s.size();
  Eigen::VectorXd r(static_cast<Eigen::Index>(max_lag + 1));
  for (std::size_t k = 0; k <= max_lag; ++k) {
    long double acc = 0.0L;
    for (std::size_t t = 0; t < n; ++t) acc += static_cast<long double>(s[t]) * s[(t + k) % n];
    r[static_cast<Eigen::Index>(k)] = static_cast<double>(acc / n);
  }
  return r;
}

/// |DFT|^2 bins 0..n/2 through std::polar, without any phase table.
inline Eigen::VectorXd direct_periodogram(const std::vector<double>& s) {
  const std::size_t n = s.size();
  Eigen::VectorXd out(static_cast<Eigen::Index>(n / 2 + 1));
  for (std::size_t i = 0; i <= n / 2; ++i) {
    std::complex<long double> acc = 0.0L;
    for (std::size_t t = 0; t < n; ++t) {
      const long double ph = -2.0L * std::numbers::pi_v<long double> * static_cast<long double>(i * t) / n;
      acc += static_cast<long double>(s[t]) * std::polar(1.0L, ph);
    }
    out[static_cast<Eigen::Index>(i)] = static_cast<double>(std::norm(acc));
  }
  return out;
}

/// AR spectrum from the Yule-Walker normal equations solved densely, on
/// the periodogram scale nfft * e0 / |A(w_i)|^2.
inline Eigen::VectorXd yule_walker_spectrum(const Eigen::VectorXd& r, std::size_t nfft) {
  const auto p = r.size() - 1;
  Eigen::VectorXd a = Eigen::VectorXd::Zero(p + 1);
  a[0] = 1.0;
  double e0 = r[0];
  if (p > 0) {
    Eigen::MatrixXd toeplitz(p, p);
    for (Eigen::Index i = 0; i < p; ++i) {
      for (Eigen::Index j = 0; j < p; ++j) toeplitz(i, j) = r[std::abs(i - j)];
    }
    const Eigen::VectorXd coeffs = toeplitz.ldlt().solve(-r.segment(1, p));
    a.tail(p) = coeffs;
    e0 = r.head(p + 1).dot(a);
  }
  Eigen::VectorXd out(static_cast<Eigen::Index>(nfft / 2 + 1));
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    std::complex<double> acc = 0.0;
    for (Eigen::Index k = 0; k <= p; ++k) {
      acc += a[k] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(i * k) / nfft);
    }
    out[i] = static_cast<double>(nfft) * e0 / std::norm(acc);
  }
  return out;
}

inline std::vector<double> white_noise(std::size_t n, std::uint64_t seed) {
  maxent::Rng rng(seed);
  std::vector<double> s(n);
  for (auto& v : s) v = rng.normal();
  return s;
}

/// Mixed element models cycling through all five kinds.
inline std::vector<maxent::ElementModel> mixed_models(std::size_t n) {
  std::vector<maxent::ElementModel> models;
  for (std::size_t i = 0; i < n; ++i) models.emplace_back(maxent::all_prior_kinds[i % 5]);
  return models;
}

inline bool strictly_in_range(const std::vector<maxent::ElementModel>& models,
                              const Eigen::VectorXd& x) {
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!maxent::in_open_range(models[static_cast<std::size_t>(i)].range(), x[i])) return false;
  }
  return true;
}

/// Sum of per-element prior entropies at the natural parameters that
/// reproduce x (exponential or TED).
inline double surrogate_entropy(maxent::PriorKind kind, const Eigen::VectorXd& x) {
  const maxent::ElementModel model(kind);
  double h = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    h += maxent::prior_entropy(model, maxent::activation_inverse(model, x[i]));
  }
  return h;
}

}  // namespace testing_support

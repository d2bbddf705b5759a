#pragma once

// Embedded property suite behind `maxent selftest`.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "maxent/check/quadrature.hpp"
#include "maxent/experiments.hpp"
#include "maxent/linmap.hpp"
#include "maxent/oracles.hpp"
#include "maxent/priors.hpp"
#include "maxent/solver.hpp"

namespace maxent::check {

struct CheckResult {
  std::string name;
  double error;
  double tolerance;
  bool passed;
};

/// Natural parameters spanning each kind's domain, close to the singular
/// edges where there are any.
inline std::vector<double> alpha_grid(PriorKind kind, int points) {
  double lo = -40.0;
  double hi = 40.0;
  switch (kind) {
    case PriorKind::gaussian:
      lo = -9.5;
      hi = 9.5;
      break;
    case PriorKind::trunc_gauss:
      lo = -30.0;
      hi = 10.0;
      break;
    case PriorKind::exponential:
      lo = -50.0;
      hi = 0.999;
      break;
    case PriorKind::chi_sq1:
      lo = -50.0;
      hi = 0.4995;
      break;
    case PriorKind::ted:
      break;
  }
  std::vector<double> grid;
  for (int i = 0; i < points; ++i) {
    // denser towards the upper end, which is singular for exp / chisq1
    const double s = static_cast<double>(i) / (points - 1);
    grid.push_back(hi - (hi - lo) * s * s);
  }
  if (kind == PriorKind::ted) {
    grid.push_back(0.0);
    grid.push_back(5e-4);
    grid.push_back(-2e-3);
  }
  return grid;
}

/// Central-difference step that stays inside bounded domains.
inline double fd_step(PriorKind kind, double alpha) {
  double scale = 1.0 + std::abs(alpha);
  if (kind == PriorKind::exponential) scale = std::min(scale, 1.0 - alpha);
  if (kind == PriorKind::chi_sq1) scale = std::min(scale, 0.5 - alpha);
  return 1e-4 * scale;
}

inline double max_quadrature_error(int points) {
  double worst = 0.0;
  for (const auto kind : all_prior_kinds) {
    const ElementModel model(kind);
    for (const double a : alpha_grid(kind, points)) {
      const double exact = activation(model, a);
      worst = std::max(worst, std::abs(quadrature_mean(model, a) - exact) / std::abs(exact));
    }
  }
  return worst;
}

inline double max_derivative_error(int points) {
  double worst = 0.0;
  for (const auto kind : all_prior_kinds) {
    const ElementModel model(kind);
    for (const double a : alpha_grid(kind, points)) {
      const double d = fd_step(kind, a);
      const double fd = (activation(model, a + d) - activation(model, a - d)) / (2.0 * d);
      const double exact = activation_deriv(model, a);
      worst = std::max(worst, std::abs(fd - exact) / exact);
    }
  }
  return worst;
}

inline double max_roundtrip_error(int points) {
  double worst = 0.0;
  for (const auto kind : all_prior_kinds) {
    const ElementModel model(kind);
    for (const double a : alpha_grid(kind, points)) {
      worst = std::max(worst, std::abs(activation_inverse(model, activation(model, a)) - a));
    }
  }
  return worst;
}

/// Random N x M map whose first column is constant, so homogeneous
/// exponential problems are admissible.
inline LinearMap random_map(Rng& rng, Eigen::Index n, Eigen::Index m) {
  Eigen::MatrixXd w(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    w(i, 0) = 1.0;
    for (Eigen::Index k = 1; k < m; ++k) w(i, k) = rng.normal();
  }
  return dense_map(std::move(w));
}

/// A point strictly inside the element's range.
inline double draw_in_range(Rng& rng, const ElementModel& model) {
  switch (model.range()) {
    case DataRange::unbounded:
      return rng.normal();
    case DataRange::positive:
      return 0.05 + rng.exponential();
    case DataRange::unit_interval:
      break;
  }
  return 0.02 + 0.96 * rng.uniform();
}

inline InversionProblem random_problem(Rng& rng, Eigen::Index n, Eigen::Index m,
                                       std::vector<ElementModel> models) {
  LinearMap map = random_map(rng, n, m);
  Eigen::VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = draw_in_range(rng, models[static_cast<std::size_t>(i)]);
  Eigen::VectorXd z = map.features(x);
  return InversionProblem(std::move(map), std::move(models), std::move(z));
}

inline double jacobian_fd_error(const InversionProblem& p, const Eigen::VectorXd& h) {
  const Eigen::MatrixXd jac = jacobian(p, h);
  Eigen::MatrixXd fd(jac.rows(), jac.cols());
  for (Eigen::Index j = 0; j < h.size(); ++j) {
    const double d = 1e-6;
    Eigen::VectorXd hp = h;
    Eigen::VectorXd hm = h;
    hp[j] += d;
    hm[j] -= d;
    fd.col(j) = (residual(p, hp) - residual(p, hm)) / (2.0 * d);
  }
  return (fd - jac).lpNorm<Eigen::Infinity>() / jac.lpNorm<Eigen::Infinity>();
}

/// Runs every check. With `tolerance_override` set, it replaces each
/// check's own tolerance.
inline std::vector<CheckResult> run_selftest(std::optional<double> tolerance_override = std::nullopt) {
  std::vector<CheckResult> results;
  auto add = [&](std::string name, double tol, const std::function<double()>& measure) {
    double err = std::numeric_limits<double>::infinity();
    try {
      err = measure();
    } catch (const std::exception&) {
    }
    const double t = tolerance_override.value_or(tol);
    results.push_back({std::move(name), err, t, err <= t});
  };

  add("activation_quadrature", 1e-8, [] { return max_quadrature_error(8); });
  add("activation_derivative_fd", 1e-6, [] { return max_derivative_error(12); });
  add("activation_inverse_roundtrip", 1e-10, [] { return max_roundtrip_error(12); });

  add("jacobian_fd", 1e-5, [] {
    Rng rng(11);
    double worst = 0.0;
    for (const auto kind : all_prior_kinds) {
      const auto p = random_problem(rng, 12, 3, std::vector<ElementModel>(12, ElementModel(kind)));
      const Eigen::VectorXd h = 0.1 * solve(p).h;
      worst = std::max(worst, jacobian_fd_error(p, h));
    }
    return worst;
  });

  add("gaussian_reduction", 1e-10, [] {
    Rng rng(12);
    const auto p = random_problem(rng, 20, 4,
                                  std::vector<ElementModel>(20, ElementModel(PriorKind::gaussian)));
    const auto newton = solve(p);
    const auto closed = solve_gaussian(p.map(), p.z());
    if (!newton.converged || newton.iterations != 1) return std::numeric_limits<double>::infinity();
    return (newton.x_bar - closed.x_bar).lpNorm<Eigen::Infinity>() /
           closed.x_bar.lpNorm<Eigen::Infinity>();
  });

  auto stationarity = [](PriorKind kind, std::uint64_t seed) {
    Rng rng(seed);
    const auto p = random_problem(rng, 25, 5, std::vector<ElementModel>(25, ElementModel(kind)));
    const auto r = solve(p);
    if (!r.converged) return std::numeric_limits<double>::infinity();
    const auto report = check_stationarity(p, r, nullspace_basis(p.map()));
    return kind == PriorKind::exponential ? *report.der0_residual : *report.der1um_residual;
  };
  add("stationarity_exponential", 1e-8, [&] { return stationarity(PriorKind::exponential, 13); });
  add("stationarity_ted", 1e-8, [&] { return stationarity(PriorKind::ted, 14); });

  add("acf_map_verification", 1e-10, [] {
    const auto signal = colored_noise(64, 15);
    const LinearMap map = acf_map(64, 5);
    const Eigen::VectorXd z = map.features(periodogram_bins(signal));
    const Eigen::VectorXd r = circular_acf(signal, 5);
    return (z - r).lpNorm<Eigen::Infinity>() / std::abs(r[0]);
  });

  add("spectral_equivalence", 1e-6, [] {
    const auto out = run_spectrum(colored_noise(128, 1), 6);
    return out.result.converged ? out.max_rel_deviation : std::numeric_limits<double>::infinity();
  });
  return results;
}

}  // namespace maxent::check

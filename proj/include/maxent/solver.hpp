#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <exception>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "maxent/errors.hpp"
#include "maxent/linmap.hpp"
#include "maxent/priors.hpp"

namespace maxent {

/// Whether a homogeneous exponential problem must have the all-ones vector
/// in range(W).
enum class ConstantCheck { enforce, skip };

/// Feature map, per-element priors and observed features z.
class InversionProblem {
 public:
  InversionProblem(LinearMap map, std::vector<ElementModel> models, Eigen::VectorXd z,
                   ConstantCheck check = ConstantCheck::enforce)
      : map_(std::move(map)), models_(std::move(models)), z_(std::move(z)) {
    if (static_cast<Eigen::Index>(models_.size()) != map_.n()) {
      throw ProblemError("expected " + std::to_string(map_.n()) + " element models, got " +
                         std::to_string(models_.size()));
    }
    if (z_.size() != map_.m()) {
      throw ProblemError("expected " + std::to_string(map_.m()) + " features, got " +
                         std::to_string(z_.size()));
    }
    if (!z_.allFinite()) throw ProblemError("feature vector has non-finite entries");
    if (std::all_of(models_.begin(), models_.end(),
                    [&](const ElementModel& m) { return m == models_.front(); })) {
      homogeneous_ = models_.front().kind();
    }
    if (homogeneous_ == PriorKind::exponential && check == ConstantCheck::enforce) {
      require_constant_in_range();
    }
  }

  static InversionProblem homogeneous(LinearMap map, PriorKind kind, Eigen::VectorXd z) {
    const auto n = static_cast<std::size_t>(map.n());
    return InversionProblem(std::move(map), std::vector<ElementModel>(n, ElementModel(kind)),
                            std::move(z));
  }

  const LinearMap& map() const { return map_; }
  const std::vector<ElementModel>& models() const { return models_; }
  const Eigen::VectorXd& z() const { return z_; }

  /// The shared kind when every element uses the same prior.
  std::optional<PriorKind> homogeneous_kind() const { return homogeneous_; }

 private:
  // Exponential entropy is unbounded unless the constant vector is
  // reachable as W u.
  void require_constant_in_range() const {
    const auto& w = map_.matrix();
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(w.rows());
    const Eigen::VectorXd u = w.colPivHouseholderQr().solve(ones);
    const double miss = (ones - w * u).norm();
    if (miss > 1e-8 * std::sqrt(static_cast<double>(w.rows()))) {
      throw ProblemError(
          "homogeneous exponential problem needs the all-ones vector in the column space "
          "of W (projection residual " + std::to_string(miss) + ")");
    }
  }

  LinearMap map_;
  std::vector<ElementModel> models_;
  Eigen::VectorXd z_;
  std::optional<PriorKind> homogeneous_;
};

struct SolveOptions {
  double tol = 1e-10;
  int max_iter = 200;
  double backtrack = 0.5;
  double min_step = 1e-12;
  double armijo = 1e-4;
  /// ||h||_inf beyond which a non-converged run is classed as infeasible.
  double divergence_threshold = 1e8;

  void validate() const {
    if (!(tol > 0.0)) throw Error("solve: tol must be positive");
    if (max_iter < 1) throw Error("solve: max_iter must be at least 1");
    if (!(backtrack > 0.0 && backtrack < 1.0)) throw Error("solve: backtrack must be in (0,1)");
    if (!(min_step > 0.0)) throw Error("solve: min_step must be positive");
  }
};

enum class SolveStatus { converged, max_iterations, infeasible_suspected, stalled };

inline std::string_view to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged:
      return "converged";
    case SolveStatus::max_iterations:
      return "max_iterations";
    case SolveStatus::infeasible_suspected:
      return "infeasible_suspected";
    case SolveStatus::stalled:
      return "stalled";
  }
  return "?";
}

struct SolveResult {
  Eigen::VectorXd h;      ///< natural coordinates, length M
  Eigen::VectorXd x_bar;  ///< reconstruction lambda(W h), length N
  double residual_inf = 0.0;
  int iterations = 0;
  std::vector<double> trace;  ///< ||F||_inf at each visited iterate
  bool converged = false;
  SolveStatus status = SolveStatus::max_iterations;
};

struct StationarityReport {
  std::optional<double> der0_residual;   ///< homogeneous exponential problems
  std::optional<double> der1um_residual; ///< homogeneous TED problems
};

namespace detail {

// Calls fn(i, kind_tag) for each element; homogeneous problems resolve the
// kind once instead of per element.
template <class Fn>
void for_each_element(const InversionProblem& p, Fn&& fn) {
  const auto n = static_cast<std::size_t>(p.map().n());
  if (const auto kind = p.homogeneous_kind()) {
    visit_kind(*kind, [&](auto k) {
      for (std::size_t i = 0; i < n; ++i) fn(i, k);
    });
    return;
  }
  for (std::size_t i = 0; i < n; ++i) {
    visit_kind(p.models()[i].kind(), [&](auto k) { fn(i, k); });
  }
}

inline std::optional<std::size_t> first_outside_domain(const InversionProblem& p,
                                                       const Eigen::VectorXd& alpha) {
  std::optional<std::size_t> bad;
  for_each_element(p, [&](std::size_t i, auto k) {
    if (!bad && !PriorTraits<decltype(k)::value>::in_domain(alpha[i])) bad = i;
  });
  return bad;
}

inline Eigen::VectorXd means(const InversionProblem& p, const Eigen::VectorXd& alpha) {
  Eigen::VectorXd out(alpha.size());
  for_each_element(p, [&](std::size_t i, auto k) {
    out[i] = PriorTraits<decltype(k)::value>::mean(alpha[i]);
  });
  return out;
}

inline Eigen::VectorXd variances(const InversionProblem& p, const Eigen::VectorXd& alpha) {
  Eigen::VectorXd out(alpha.size());
  for_each_element(p, [&](std::size_t i, auto k) {
    out[i] = PriorTraits<decltype(k)::value>::variance(alpha[i]);
  });
  return out;
}

// Convex dual sum_i A_i(alpha_i) - z.h whose gradient is the residual.
inline double dual_objective(const InversionProblem& p, const Eigen::VectorXd& alpha,
                             const Eigen::VectorXd& h) {
  double sum = 0.0;
  for_each_element(p, [&](std::size_t i, auto k) {
    sum += PriorTraits<decltype(k)::value>::log_partition(alpha[i]);
  });
  return sum - p.z().dot(h);
}

inline void require_inside(const InversionProblem& p, const Eigen::VectorXd& alpha) {
  if (const auto bad = first_outside_domain(p, alpha)) {
    throw DomainError("element " + std::to_string(*bad) + ": natural parameter " +
                          std::to_string(alpha[static_cast<Eigen::Index>(*bad)]) +
                          " outside the " +
                          std::string(to_string(p.models()[*bad].kind())) +
                          " activation domain",
                      *bad);
  }
}

inline void require_length(const InversionProblem& p, const Eigen::VectorXd& h) {
  if (h.size() != p.map().m()) {
    throw ShapeError("natural coordinate vector must have length " +
                     std::to_string(p.map().m()));
  }
}

}  // namespace detail

/// Least-squares reconstruction W (W^T W)^{-1} z, the closed form for the
/// Gaussian prior.
inline SolveResult solve_gaussian(const LinearMap& map, const Eigen::VectorXd& z) {
  if (z.size() != map.m()) throw ShapeError("feature vector length does not match map");
  const auto& w = map.matrix();
  const Eigen::MatrixXd gram = w.transpose() * w;
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success || !(llt.rcond() * 1e12 >= 1.0)) {
    throw NumericalError("W^T W is ill-conditioned (condition estimate above 1e12)");
  }
  SolveResult r;
  r.h = llt.solve(z);
  r.x_bar = w * r.h;
  r.residual_inf = (w.transpose() * r.x_bar - z).lpNorm<Eigen::Infinity>();
  r.trace = {r.residual_inf};
  r.converged = r.residual_inf <= 1e-10 * std::max(1.0, z.lpNorm<Eigen::Infinity>());
  r.status = r.converged ? SolveStatus::converged : SolveStatus::stalled;
  return r;
}

/// F(h) = W^T lambda(W h) - z.
inline Eigen::VectorXd residual(const InversionProblem& p, const Eigen::VectorXd& h) {
  detail::require_length(p, h);
  const Eigen::VectorXd alpha = p.map().matrix() * h;
  detail::require_inside(p, alpha);
  return p.map().matrix().transpose() * detail::means(p, alpha) - p.z();
}

/// dF/dh = W^T diag(lambda'(W h)) W.
inline Eigen::MatrixXd jacobian(const InversionProblem& p, const Eigen::VectorXd& h) {
  detail::require_length(p, h);
  const auto& w = p.map().matrix();
  const Eigen::VectorXd alpha = w * h;
  detail::require_inside(p, alpha);
  return w.transpose() * detail::variances(p, alpha).asDiagonal() * w;
}

/// Damped Newton from h = 0. A backtracked step is taken once it stays in
/// every element's domain and either satisfies Armijo on the dual objective
/// or lowers ||F||_2.
inline SolveResult solve(const InversionProblem& p, const SolveOptions& opts = {}) {
  opts.validate();
  const auto& w = p.map().matrix();
  const auto& z = p.z();
  const double target = opts.tol * std::max(1.0, z.lpNorm<Eigen::Infinity>());

  Eigen::VectorXd h = Eigen::VectorXd::Zero(w.cols());
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(w.rows());
  Eigen::VectorXd mean = detail::means(p, alpha);
  Eigen::VectorXd f = w.transpose() * mean - z;

  SolveResult best;
  auto record = [&](int iterations) {
    const double rinf = f.lpNorm<Eigen::Infinity>();
    best.trace.push_back(rinf);
    if (best.h.size() == 0 || rinf < best.residual_inf) {
      best.h = h;
      best.x_bar = mean;
      best.residual_inf = rinf;
    }
    best.iterations = iterations;
    return rinf;
  };

  for (int it = 0;; ++it) {
    if (record(it) <= target) {
      best.h = h;
      best.x_bar = mean;
      best.residual_inf = best.trace.back();
      best.converged = true;
      best.status = SolveStatus::converged;
      return best;
    }
    if (h.lpNorm<Eigen::Infinity>() > opts.divergence_threshold) {
      best.status = SolveStatus::infeasible_suspected;
      return best;
    }
    if (it == opts.max_iter) {
      best.status = SolveStatus::max_iterations;
      return best;
    }

    const Eigen::MatrixXd jac = w.transpose() * detail::variances(p, alpha).asDiagonal() * w;
    Eigen::LLT<Eigen::MatrixXd> llt(jac);
    if (llt.info() != Eigen::Success) {
      throw NumericalError("Newton Jacobian lost positive definiteness at iteration " +
                           std::to_string(it));
    }
    const Eigen::VectorXd step = llt.solve(-f);
    const double dual0 = detail::dual_objective(p, alpha, h);
    const double slope = f.dot(step);
    const double norm0 = f.norm();

    bool accepted = false;
    for (double t = 1.0; t >= opts.min_step; t *= opts.backtrack) {
      Eigen::VectorXd h_try = h + t * step;
      Eigen::VectorXd alpha_try = w * h_try;
      if (detail::first_outside_domain(p, alpha_try)) continue;
      Eigen::VectorXd mean_try = detail::means(p, alpha_try);
      Eigen::VectorXd f_try = w.transpose() * mean_try - z;
      const bool armijo =
          detail::dual_objective(p, alpha_try, h_try) <= dual0 + opts.armijo * t * slope;
      if (armijo || f_try.norm() < norm0) {
        h = std::move(h_try);
        alpha = std::move(alpha_try);
        mean = std::move(mean_try);
        f = std::move(f_try);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      best.status = h.lpNorm<Eigen::Infinity>() > opts.divergence_threshold
                        ? SolveStatus::infeasible_suspected
                        : SolveStatus::stalled;
      return best;
    }
  }
}

/// Solves independent problems on a few worker threads; results are in
/// input order and identical to sequential calls.
inline std::vector<SolveResult> solve_batch(std::span<const InversionProblem> problems,
                                            const SolveOptions& opts = {},
                                            unsigned threads = 0) {
  std::vector<SolveResult> out(problems.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, problems.size())));
  if (threads <= 1) {
    for (std::size_t i = 0; i < problems.size(); ++i) out[i] = solve(problems[i], opts);
    return out;
  }
  std::vector<std::exception_ptr> errors(threads);
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (std::size_t i = t; i < problems.size(); i += threads) {
            out[i] = solve(problems[i], opts);
          }
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

/// Optimality residuals on the complement of range(W): ||B^T (1/x)||_inf /
/// ||1/x||_2 for exponential problems and ||B^T alpha||_inf / max(1,
/// ||alpha||_2) for TED problems, alpha recovered from x by inversion.
inline StationarityReport check_stationarity(const InversionProblem& p,
                                             const SolveResult& result,
                                             const NullBasis& basis) {
  StationarityReport report;
  const auto kind = p.homogeneous_kind();
  if (kind != PriorKind::exponential && kind != PriorKind::ted) return report;
  const ElementModel model(*kind);
  const auto& x = result.x_bar;
  if (x.size() != p.map().n() || basis.b.rows() != x.size()) {
    throw ShapeError("check_stationarity: size mismatch");
  }
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!in_open_range(model.range(), x[i])) {
      throw RangeError("check_stationarity: element " + std::to_string(i) +
                       " lies on or outside its range boundary");
    }
  }
  if (kind == PriorKind::exponential) {
    const Eigen::VectorXd inv = x.cwiseInverse();
    report.der0_residual = (basis.b.transpose() * inv).lpNorm<Eigen::Infinity>() / inv.norm();
  } else {
    Eigen::VectorXd alpha(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) alpha[i] = activation_inverse(model, x[i]);
    report.der1um_residual = (basis.b.transpose() * alpha).lpNorm<Eigen::Infinity>() /
                             std::max(1.0, alpha.norm());
  }
  return report;
}

}  // namespace maxent

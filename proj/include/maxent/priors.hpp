#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>

#include "maxent/errors.hpp"

namespace maxent {

/// The five prior configurations. Each one is an exponential-class density
///
///     p(x; a) = x^gamma exp((alpha0 + a) x + beta x^2) / Z(a)
///
/// restricted to a data range; the activation is its mean as a function of
/// the natural parameter a.
enum class PriorKind { gaussian, trunc_gauss, exponential, chi_sq1, ted };

enum class DataRange { unbounded, positive, unit_interval };

inline constexpr PriorKind all_prior_kinds[] = {
    PriorKind::gaussian, PriorKind::trunc_gauss, PriorKind::exponential,
    PriorKind::chi_sq1, PriorKind::ted};

/// Per-element prior: the kind plus the (alpha0, beta, gamma, range) row it
/// implies. The row is fixed by the kind, so the model cannot be built
/// inconsistent.
class ElementModel {
 public:
  constexpr explicit ElementModel(PriorKind kind) : kind_(kind) {
    switch (kind) {
      case PriorKind::gaussian:
        set(0.0, -0.5, 0.0, DataRange::unbounded);
        break;
      case PriorKind::trunc_gauss:
        set(0.0, -0.5, 0.0, DataRange::positive);
        break;
      case PriorKind::exponential:
        set(-1.0, 0.0, 0.0, DataRange::positive);
        break;
      case PriorKind::chi_sq1:
        set(-0.5, 0.0, -0.5, DataRange::positive);
        break;
      case PriorKind::ted:
        set(0.0, 0.0, 0.0, DataRange::unit_interval);
        break;
    }
  }

  constexpr PriorKind kind() const { return kind_; }
  constexpr double alpha0() const { return alpha0_; }
  constexpr double beta() const { return beta_; }
  constexpr double gamma() const { return gamma_; }
  constexpr DataRange range() const { return range_; }

  friend constexpr bool operator==(const ElementModel& a,
                                   const ElementModel& b) {
    return a.kind_ == b.kind_;
  }

 private:
  constexpr void set(double alpha0, double beta, double gamma,
                     DataRange range) {
    alpha0_ = alpha0;
    beta_ = beta;
    gamma_ = gamma;
    range_ = range;
  }

  PriorKind kind_;
  double alpha0_ = 0.0;
  double beta_ = 0.0;
  double gamma_ = 0.0;
  DataRange range_ = DataRange::unbounded;
};

struct EntropyReport {
  double h_ds;  ///< -sum x log x (no normalization applied)
  double h_s;   ///< sum log x
  double h_e;   ///< sum (1 + log x)
};

/// Short names used on the command line and in reports.
inline std::string_view to_string(PriorKind kind) {
  switch (kind) {
    case PriorKind::gaussian:
      return "gaussian";
    case PriorKind::trunc_gauss:
      return "tg";
    case PriorKind::exponential:
      return "exp";
    case PriorKind::chi_sq1:
      return "chisq1";
    case PriorKind::ted:
      return "ted";
  }
  return "?";
}

/// Accepts the short names above or the decimal index 0..4.
inline PriorKind parse_prior_kind(std::string_view name) {
  for (std::size_t i = 0; i < std::size(all_prior_kinds); ++i) {
    const auto kind = all_prior_kinds[i];
    if (name == to_string(kind) || name == std::to_string(i)) return kind;
  }
  throw Error("unknown prior kind '" + std::string(name) +
              "' (expected gaussian|tg|exp|chisq1|ted)");
}

namespace detail {

inline constexpr double inv_sqrt_2pi = 0.3989422804014326779399461;
inline constexpr double half_log_2pi = 0.9189385332046727417803297;

// Truncated-Gauss tail for a = -t, t > 2. Laplace's continued fraction
// g_k = k / (t + g_{k+1}) gives mean = g_1 and g_2 for the variance, with no
// cancellation between a and the Mills ratio.
struct TgTail {
  double g1;
  double g2;
};

inline TgTail tg_tail(double t) {
  double g = 0.0;
  double prev = 0.0;
  for (int k = 128; k >= 1; --k) {
    prev = g;
    g = k / (t + g);
  }
  return {g, prev};
}

inline double normal_pdf(double a) {
  return inv_sqrt_2pi * std::exp(-0.5 * a * a);
}

inline double normal_cdf(double a) {
  return 0.5 * std::erfc(-a / std::numbers::sqrt2);
}

// sinh(u) - u without cancellation for small u.
inline double sinh_minus_identity(double u) {
  if (std::abs(u) >= 1.0) return std::sinh(u) - u;
  const double u2 = u * u;
  double term = u * u2 / 6.0;
  double sum = term;
  for (int k = 2; k < 12; ++k) {
    term *= u2 / ((2.0 * k) * (2.0 * k + 1.0));
    sum += term;
  }
  return sum;
}

}  // namespace detail

/// Static description of one prior kind. `mean`, `variance` and
/// `log_partition` assume an in-domain argument.
template <PriorKind K>
struct PriorTraits;

template <>
struct PriorTraits<PriorKind::gaussian> {
  static constexpr bool in_domain(double a) { return std::isfinite(a); }
  static double mean(double a) { return a; }
  static double variance(double) { return 1.0; }
  static double log_partition(double a) { return 0.5 * a * a; }
};

template <>
struct PriorTraits<PriorKind::trunc_gauss> {
  static constexpr double tg_tail_below = -2.0;
  static constexpr bool in_domain(double a) { return std::isfinite(a); }

  static double mean(double a) {
    if (a < tg_tail_below) return detail::tg_tail(-a).g1;
    return a + detail::normal_pdf(a) / detail::normal_cdf(a);
  }

  static double variance(double a) {
    if (a < tg_tail_below) {
      const auto tail = detail::tg_tail(-a);
      return tail.g1 * (tail.g2 - tail.g1);
    }
    const double ratio = detail::normal_pdf(a) / detail::normal_cdf(a);
    return 1.0 - ratio * (a + ratio);
  }

  static double log_partition(double a) {
    if (a < tg_tail_below) return -std::log(-a + detail::tg_tail(-a).g1);
    return 0.5 * a * a + std::log(detail::normal_cdf(a)) + detail::half_log_2pi;
  }
};

template <>
struct PriorTraits<PriorKind::exponential> {
  static constexpr bool in_domain(double a) { return a < 1.0; }
  static double mean(double a) { return 1.0 / (1.0 - a); }
  static double variance(double a) {
    const double m = 1.0 / (1.0 - a);
    return m * m;
  }
  static double log_partition(double a) { return -std::log1p(-a); }
};

template <>
struct PriorTraits<PriorKind::chi_sq1> {
  static constexpr bool in_domain(double a) { return a < 0.5; }
  static double mean(double a) { return 1.0 / (1.0 - 2.0 * a); }
  static double variance(double a) {
    const double m = 1.0 / (1.0 - 2.0 * a);
    return 2.0 * m * m;
  }
  static double log_partition(double a) { return -0.5 * std::log1p(-2.0 * a); }
};

template <>
struct PriorTraits<PriorKind::ted> {
  static constexpr bool in_domain(double a) { return std::isfinite(a); }

  static double mean(double a) {
    if (std::abs(a) < 1e-3) {
      const double a2 = a * a;
      return 0.5 + a * (1.0 / 12 + a2 * (-1.0 / 720 + a2 / 30240));
    }
    if (a > 36.0) return 1.0 - 1.0 / a;
    if (a < -36.0) return -1.0 / a;
    if (a > 0.0) return 1.0 / -std::expm1(-a) - 1.0 / a;
    return std::exp(a) / std::expm1(a) - 1.0 / a;
  }

  // 1/a^2 - 1/(4 sinh^2(a/2)), rewritten as a product so nothing cancels.
  static double variance(double a) {
    if (std::abs(a) < 1e-3) {
      const double a2 = a * a;
      return 1.0 / 12 + a2 * (-1.0 / 240 + a2 / 6048);
    }
    if (std::abs(a) > 50.0) return 1.0 / (a * a);
    const double u = 0.5 * a;
    const double s = std::sinh(u);
    return detail::sinh_minus_identity(u) * (s + u) / (4.0 * u * u * s * s);
  }

  // log((e^a - 1) / a)
  static double log_partition(double a) {
    if (std::abs(a) < 1e-3) {
      const double a2 = a * a;
      return a / 2 + a2 / 24 - a2 * a2 / 2880;
    }
    if (a > 0.0) return a + std::log(-std::expm1(-a)) - std::log(a);
    return std::log(-std::expm1(a)) - std::log(-a);
  }

  // Differential entropy log Z - a * mean, symmetric in a.
  static double entropy(double a) {
    const double b = std::abs(a);
    if (b < 1e-3) {
      const double b2 = b * b;
      return -b2 / 24 + b2 * b2 / 960;
    }
    return 1.0 - std::log(b) + std::log(-std::expm1(-b)) - b / std::expm1(b);
  }
};

/// Calls `f(std::integral_constant<PriorKind, K>{})` for the runtime kind.
template <class F>
decltype(auto) visit_kind(PriorKind kind, F&& f) {
  switch (kind) {
    case PriorKind::gaussian:
      return f(std::integral_constant<PriorKind, PriorKind::gaussian>{});
    case PriorKind::trunc_gauss:
      return f(std::integral_constant<PriorKind, PriorKind::trunc_gauss>{});
    case PriorKind::exponential:
      return f(std::integral_constant<PriorKind, PriorKind::exponential>{});
    case PriorKind::chi_sq1:
      return f(std::integral_constant<PriorKind, PriorKind::chi_sq1>{});
    case PriorKind::ted:
      break;
  }
  return f(std::integral_constant<PriorKind, PriorKind::ted>{});
}

inline bool in_domain(PriorKind kind, double alpha) {
  return visit_kind(kind, [&](auto k) {
    return PriorTraits<decltype(k)::value>::in_domain(alpha);
  });
}

/// True when `value` lies strictly inside the range.
inline bool in_open_range(DataRange range, double value) {
  switch (range) {
    case DataRange::unbounded:
      return std::isfinite(value);
    case DataRange::positive:
      return value > 0.0 && value < std::numeric_limits<double>::infinity();
    case DataRange::unit_interval:
      return value > 0.0 && value < 1.0;
  }
  return false;
}

namespace detail {

inline void require_domain(const ElementModel& model, double alpha) {
  if (!in_domain(model.kind(), alpha)) {
    throw DomainError("natural parameter " + std::to_string(alpha) +
                      " outside the domain of the " +
                      std::string(to_string(model.kind())) + " activation");
  }
}

inline double log_partition(PriorKind kind, double alpha) {
  return visit_kind(kind, [&](auto k) {
    return PriorTraits<decltype(k)::value>::log_partition(alpha);
  });
}

// Safeguarded Newton on a strictly increasing mean function, bisection
// whenever the Newton point leaves the current bracket.
template <PriorKind K>
double invert_mean(double target, double guess) {
  using T = PriorTraits<K>;
  double lo = 0.0;
  double hi = 0.0;
  if (T::mean(0.0) < target) {
    hi = 1.0;
    while (T::mean(hi) < target) {
      lo = hi;
      hi *= 2.0;
      if (!std::isfinite(hi)) throw NumericalError("activation inverse: no bracket");
    }
  } else {
    lo = -1.0;
    while (T::mean(lo) > target) {
      hi = lo;
      lo *= 2.0;
      if (!std::isfinite(lo)) throw NumericalError("activation inverse: no bracket");
    }
  }
  double a = (guess > lo && guess < hi) ? guess : 0.5 * (lo + hi);
  for (int it = 0; it < 400; ++it) {
    const double f = T::mean(a) - target;
    if (f == 0.0) return a;
    if (f < 0.0) {
      lo = a;
    } else {
      hi = a;
    }
    double next = a - f / T::variance(a);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - a) <= 4.0 * std::numeric_limits<double>::epsilon() *
                                  std::max(1.0, std::abs(a))) {
      return next;
    }
    a = next;
  }
  return a;
}

}  // namespace detail

/// Mean of the element prior at natural parameter `alpha`.
inline double activation(const ElementModel& model, double alpha) {
  detail::require_domain(model, alpha);
  return visit_kind(model.kind(), [&](auto k) {
    return PriorTraits<decltype(k)::value>::mean(alpha);
  });
}

/// d(activation)/d(alpha), equal to the variance of the element prior.
inline double activation_deriv(const ElementModel& model, double alpha) {
  detail::require_domain(model, alpha);
  return visit_kind(model.kind(), [&](auto k) {
    return PriorTraits<decltype(k)::value>::variance(alpha);
  });
}

/// Natural parameter whose activation equals `mean`.
inline double activation_inverse(const ElementModel& model, double mean) {
  if (!in_open_range(model.range(), mean)) {
    throw RangeError("mean " + std::to_string(mean) +
                     " is not strictly inside the range of the " +
                     std::string(to_string(model.kind())) + " prior");
  }
  switch (model.kind()) {
    case PriorKind::gaussian:
      return mean;
    case PriorKind::exponential:
      return 1.0 - 1.0 / mean;
    case PriorKind::chi_sq1:
      return 0.5 * (1.0 - 1.0 / mean);
    case PriorKind::trunc_gauss:
      return detail::invert_mean<PriorKind::trunc_gauss>(
          mean, mean < 0.5 ? -1.0 / mean : mean);
    case PriorKind::ted:
      break;
  }
  const double guess = mean < 0.5 ? -1.0 / mean : 1.0 / (1.0 - mean);
  return detail::invert_mean<PriorKind::ted>(mean, guess);
}

/// Differential entropy of the element prior. Only the exponential and
/// truncated-exponential kinds are supported.
inline double prior_entropy(const ElementModel& model, double alpha) {
  detail::require_domain(model, alpha);
  switch (model.kind()) {
    case PriorKind::exponential:
      return 1.0 - std::log1p(-alpha);
    case PriorKind::ted:
      return PriorTraits<PriorKind::ted>::entropy(alpha);
    default:
      throw UnsupportedModel("prior_entropy is defined for exp and ted priors only, not " +
                             std::string(to_string(model.kind())));
  }
}

/// Discrete, spectral and exponential-distribution entropies of a positive
/// vector. h_ds is evaluated as given; callers wanting the probability form
/// must normalize x themselves.
inline EntropyReport entropy_measures(std::span<const double> x) {
  EntropyReport r{0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !std::isfinite(x[i])) {
      throw RangeError("entropy_measures: element " + std::to_string(i) +
                       " is not positive");
    }
    const double lx = std::log(x[i]);
    r.h_ds -= x[i] * lx;
    r.h_s += lx;
    r.h_e += 1.0 + lx;
  }
  return r;
}

}  // namespace maxent

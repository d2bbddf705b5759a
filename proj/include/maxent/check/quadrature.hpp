#pragma once

// Reference mean of an element prior by numerical integration of its
// exponential-class density. Used only for verification; it never touches
// the closed-form activations.

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/sinh_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "maxent/priors.hpp"

namespace maxent::check {

/// Mean of x^gamma exp((alpha0 + alpha) x + beta x^2) over the model's range.
inline double quadrature_mean(const ElementModel& model, double alpha) {
  const double a = model.alpha0() + alpha;
  const double b = model.beta();
  const double g = model.gamma();
  constexpr double tol = 1e-14;

  switch (model.range()) {
    case DataRange::unbounded: {
      // b < 0: peak at -a / (2b)
      const double peak = -a / (2.0 * b);
      const double shift = a * peak + b * peak * peak;
      boost::math::quadrature::sinh_sinh<double> q;
      // integrate in the centred variable y = x - peak
      auto w = [&](double y) { return std::exp(a * (y + peak) + b * (y + peak) * (y + peak) - shift); };
      const double z0 = q.integrate(w, tol);
      const double z1 = q.integrate([&](double y) { return y * w(y); }, tol);
      return peak + z1 / z0;
    }
    case DataRange::positive: {
      // x = u^2 removes the x^gamma singularity at 0 for gamma = -1/2.
      const double peak = b < 0.0 ? std::max(0.0, -a / (2.0 * b)) : 0.0;
      const double shift = a * peak + b * peak * peak;
      auto w = [&](double u) {
        const double x = u * u;
        return 2.0 * std::pow(u, 2.0 * g + 1.0) * std::exp(a * x + b * x * x - shift);
      };
      boost::math::quadrature::exp_sinh<double> q;
      const double z0 = q.integrate(w, tol);
      const double z1 = q.integrate([&](double u) { return u * u * w(u); }, tol);
      return z1 / z0;
    }
    case DataRange::unit_interval: {
      const double shift = std::max(0.0, a + b);
      auto w = [&](double x) { return std::pow(x, g) * std::exp(a * x + b * x * x - shift); };
      boost::math::quadrature::tanh_sinh<double> q;
      const double z0 = q.integrate(w, 0.0, 1.0, tol);
      const double z1 = q.integrate([&](double x) { return x * w(x); }, 0.0, 1.0, tol);
      return z1 / z0;
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

/// Differential entropy -int p log p of the TED density on [0, 1].
inline double quadrature_ted_entropy(double alpha) {
  const double shift = std::max(0.0, alpha);
  boost::math::quadrature::tanh_sinh<double> q;
  const double z = q.integrate([&](double x) { return std::exp(alpha * x - shift); }, 0.0, 1.0, 1e-14);
  // log p = alpha x - shift - log z
  const double e = q.integrate(
      [&](double x) {
        const double p = std::exp(alpha * x - shift) / z;
        return p * (alpha * x - shift - std::log(z));
      },
      0.0, 1.0, 1e-14);
  return -e;
}

}  // namespace maxent::check

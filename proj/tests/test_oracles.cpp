#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "maxent/experiments.hpp"
#include "maxent/oracles.hpp"
#include "support.hpp"

using namespace maxent;
using namespace testing_support;

TEST(Rng, ReproducibleAndInRange) {
  Rng a(17);
  Rng b(17);
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform();
    EXPECT_EQ(u, b.uniform());
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
  Rng c(18);
  double sum = 0.0, sq = 0.0, ex = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double g = c.normal();
    sum += g;
    sq += g * g;
    ex += c.exponential();
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sq / n, 1.0, 0.015);
  EXPECT_NEAR(ex / n, 1.0, 0.01);
}

TEST(Periodogram, Examples) {
  const std::vector<double> ones{1, 1, 1, 1};
  const Eigen::VectorXd b = periodogram_bins(ones);
  ASSERT_EQ(b.size(), 3);
  EXPECT_NEAR(b[0], 16.0, 1e-14);
  EXPECT_NEAR(b[1], 0.0, 1e-14);
  EXPECT_NEAR(b[2], 0.0, 1e-14);
  const std::vector<double> impulse{1, 0, 0, 0};
  const Eigen::VectorXd f = periodogram_bins(impulse);
  for (Eigen::Index i = 0; i < 3; ++i) EXPECT_NEAR(f[i], 1.0, 1e-15);
}

TEST(Periodogram, Parseval) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto s = white_noise(64, seed);
    const Eigen::VectorXd x = periodogram_bins(s);
    double energy = 0.0;
    for (const double v : s) energy += v * v;
    const double folded = (x[0] + 2.0 * x.segment(1, x.size() - 2).sum() + x[x.size() - 1]) / 64.0;
    EXPECT_NEAR(folded, energy, 1e-12 * energy);
  }
}

TEST(Periodogram, MatchesDirectDft) {
  const auto s = white_noise(50, 3);
  EXPECT_LE((periodogram_bins(s) - direct_periodogram(s)).cwiseAbs().maxCoeff(), 1e-11);
}

TEST(Periodogram, ShapeErrors) {
  const std::vector<double> odd{1, 2, 3, 4, 5};
  const std::vector<double> tiny{1, 2};
  EXPECT_THROW(periodogram_bins(odd), ShapeError);
  EXPECT_THROW(periodogram_bins(tiny), ShapeError);
}

TEST(CircularAcf, MatchesDirect) {
  const auto s = white_noise(40, 2);
  EXPECT_LE((circular_acf(s, 10) - direct_acf(s, 10)).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_THROW(circular_acf(s, 40), ShapeError);
}

TEST(Levinson, WhiteNoiseIsFlat) {
  const std::vector<double> r{1.0, 0.0, 0.0};
  const ArModel ar = levinson_durbin(r);
  EXPECT_EQ(ar.coeffs, Eigen::Vector3d(1, 0, 0));
  EXPECT_EQ(ar.error_var, 1.0);
  const Eigen::VectorXd p = levinson_ar_spectrum(r, 16);
  ASSERT_EQ(p.size(), 9);
  for (Eigen::Index i = 0; i < p.size(); ++i) EXPECT_NEAR(p[i], 16.0, 1e-12);
}

TEST(Levinson, OrderZeroIsConstant) {
  const std::vector<double> r{2.5};
  const Eigen::VectorXd p = levinson_ar_spectrum(r, 8);
  for (Eigen::Index i = 0; i < p.size(); ++i) EXPECT_NEAR(p[i], 8.0 * 2.5, 1e-12);
}

TEST(Levinson, RecoversAr1) {
  for (const double a : {-0.8, -0.3, 0.5, 0.95}) {
    std::vector<double> r(4);
    for (std::size_t k = 0; k < r.size(); ++k) r[k] = std::pow(a, k) / (1.0 - a * a);
    const ArModel ar = levinson_durbin(r);
    EXPECT_NEAR(ar.coeffs[1], -a, 1e-12);
    EXPECT_NEAR(ar.coeffs[2], 0.0, 1e-12);
    EXPECT_NEAR(ar.coeffs[3], 0.0, 1e-12);
    EXPECT_NEAR(ar.error_var, 1.0, 1e-12);
  }
}

TEST(Levinson, MatchesYuleWalker) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto s = colored_noise(128, seed);
    const Eigen::VectorXd r = circular_acf(s, 6);
    const Eigen::VectorXd p = levinson_ar_spectrum(std::span<const double>(r.data(), r.size()), 128);
    const Eigen::VectorXd q = yule_walker_spectrum(r, 128);
    EXPECT_LE(((p - q).array() / q.array()).abs().maxCoeff(), 1e-10);
  }
}

TEST(Levinson, ErrorVarianceNonIncreasing) {
  const auto s = colored_noise(256, 4);
  const Eigen::VectorXd r = circular_acf(s, 10);
  double prev = r[0];
  for (Eigen::Index p = 1; p <= 10; ++p) {
    const ArModel ar = levinson_durbin(std::span<const double>(r.data(), static_cast<std::size_t>(p + 1)));
    EXPECT_LE(ar.error_var, prev * (1 + 1e-14));
    EXPECT_GT(ar.error_var, 0.0);
    prev = ar.error_var;
  }
}

TEST(Levinson, NotPositiveDefinite) {
  const std::vector<double> zero{0.0, 0.0};
  const std::vector<double> bad{1.0, 1.5};
  EXPECT_THROW(levinson_durbin(zero), NotPositiveDefinite);
  EXPECT_THROW(levinson_durbin(bad), NotPositiveDefinite);
  EXPECT_THROW(levinson_ar_spectrum(bad, 8), NotPositiveDefinite);
}

TEST(ConditionalMeanMc, TedSymmetricPair) {
  const auto p = InversionProblem::homogeneous(dense_map(Eigen::Vector2d(1, 1)), PriorKind::ted,
                                               Eigen::VectorXd::Constant(1, 1.0));
  const auto est = conditional_mean_mc(p, 400000, 0.01, 1);
  ASSERT_GE(est.accepted, 100u);
  for (Eigen::Index i = 0; i < 2; ++i) EXPECT_LE(std::abs(est.mean[i] - 0.5), 3 * est.std_error[i]);
}

TEST(ConditionalMeanMc, TedSymmetricTriple) {
  const auto p = InversionProblem::homogeneous(dense_map(Eigen::Vector3d(1, 1, 1)), PriorKind::ted,
                                               Eigen::VectorXd::Constant(1, 1.5));
  const auto est = conditional_mean_mc(p, 400000, 0.015, 2);
  for (Eigen::Index i = 0; i < 3; ++i) EXPECT_LE(std::abs(est.mean[i] - 0.5), 3 * est.std_error[i] + 1e-3);
}

TEST(ConditionalMeanMc, GaussianMatchesClosedForm) {
  Eigen::MatrixXd w(3, 1);
  w << 1, 2, -1;
  const LinearMap map = dense_map(w);
  const Eigen::VectorXd z = Eigen::VectorXd::Constant(1, 1.0);
  const auto p = InversionProblem::homogeneous(map, PriorKind::gaussian, z);
  const auto est = conditional_mean_mc(p, 2000000, 0.01, 3);
  const Eigen::VectorXd expect = solve_gaussian(map, z).x_bar;
  for (Eigen::Index i = 0; i < 3; ++i) EXPECT_LE(std::abs(est.mean[i] - expect[i]), 3 * est.std_error[i] + 1e-3);
}

TEST(ConditionalMeanMc, StandardErrorScaling) {
  const auto p = InversionProblem::homogeneous(dense_map(Eigen::Vector2d(1, 1)), PriorKind::ted,
                                               Eigen::VectorXd::Constant(1, 0.7));
  const auto small = conditional_mean_mc(p, 200000, 0.02, 5);
  const auto large = conditional_mean_mc(p, 800000, 0.02, 6);
  for (Eigen::Index i = 0; i < 2; ++i) {
    const double ratio = small.std_error[i] / large.std_error[i];
    EXPECT_NEAR(ratio, 2.0, 0.6) << i;
  }
}

TEST(ConditionalMeanMc, Deterministic) {
  const auto p = InversionProblem::homogeneous(dense_map(Eigen::Vector2d(1, 1)), PriorKind::exponential,
                                               Eigen::VectorXd::Constant(1, 2.0));
  const auto a = conditional_mean_mc(p, 50000, 0.05, 9);
  const auto b = conditional_mean_mc(p, 50000, 0.05, 9);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.accepted, b.accepted);
}

TEST(ConditionalMeanMc, Errors) {
  const auto p = InversionProblem::homogeneous(dense_map(Eigen::Vector2d(1, 1)), PriorKind::ted,
                                               Eigen::VectorXd::Constant(1, 1.0));
  EXPECT_THROW(conditional_mean_mc(p, 1000, 0.0, 1), ProblemError);
  EXPECT_THROW(conditional_mean_mc(p, 50, 0.01, 1), DegenerateSlab);
  const auto far = InversionProblem::homogeneous(dense_map(Eigen::Vector2d(1, 1)), PriorKind::ted,
                                                 Eigen::VectorXd::Constant(1, 2.5));
  EXPECT_THROW(conditional_mean_mc(far, 10000, 0.01, 1), DegenerateSlab);
  const auto big = InversionProblem::homogeneous(dense_map(Eigen::VectorXd::Ones(7)), PriorKind::ted,
                                                 Eigen::VectorXd::Constant(1, 3.5));
  EXPECT_THROW(conditional_mean_mc(big, 1000, 0.01, 1), ProblemError);
  const InversionProblem tg(dense_map(Eigen::Vector2d(1, 1)), std::vector<ElementModel>(2, ElementModel(PriorKind::trunc_gauss)),
                            Eigen::VectorXd::Constant(1, 1.0));
  EXPECT_THROW(conditional_mean_mc(tg, 1000, 0.01, 1), UnsupportedModel);
}

TEST(Experiments, ColoredNoiseIsSeeded) {
  EXPECT_EQ(colored_noise(64, 3), colored_noise(64, 3));
  EXPECT_NE(colored_noise(64, 3), colored_noise(64, 4));
  EXPECT_EQ(colored_noise(64, 3).size(), 64u);
}

TEST(Experiments, SpectralBinModels) {
  const auto m = spectral_bin_models(65);
  EXPECT_EQ(m.front().kind(), PriorKind::chi_sq1);
  EXPECT_EQ(m.back().kind(), PriorKind::chi_sq1);
  for (std::size_t i = 1; i + 1 < m.size(); ++i) EXPECT_EQ(m[i].kind(), PriorKind::exponential);
}

TEST(Experiments, SpectrumMatchesArOracle) {
  for (const int order : {2, 4, 6}) {
    const int nfft = 128;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const auto out = run_spectrum(colored_noise(nfft, seed), order);
      ASSERT_TRUE(out.result.converged) << order << " " << seed;
      EXPECT_LE(out.max_rel_deviation, 1e-6);
      const Eigen::VectorXd q = yule_walker_spectrum(direct_acf(out.signal, order), nfft);
      EXPECT_LE(((out.result.x_bar - q).array() / q.array()).abs().maxCoeff(), 1e-6);
    }
  }
}

TEST(Experiments, SpectrumOrderZeroIsFlat) {
  const auto out = run_spectrum(colored_noise(64, 2), 0);
  ASSERT_TRUE(out.result.converged);
  const double level = 64.0 * out.acf_time[0];
  for (Eigen::Index i = 0; i < out.result.x_bar.size(); ++i) {
    EXPECT_NEAR(out.result.x_bar[i] / level, 1.0, 1e-9);
  }
}

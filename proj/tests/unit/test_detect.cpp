#include <doctest.h>

#include "../support/random_cases.hpp"

#include "superres/detect.hpp"
#include "superres/noise.hpp"
#include "superres/signals.hpp"
#include "superres/stats.hpp"

using namespace superres;

TEST_CASE("thresholds") {
    CHECK(normal_upper_fractile(0.05) == doctest::Approx(1.6448536269514729).epsilon(1e-12));
    TestConfig cfg;
    cfg.mode = ThresholdMode::normal;
    CHECK(threshold(cfg, 21, 2) == doctest::Approx(19.0 + std::sqrt(19.0) * 1.6448536269514729).epsilon(1e-12));
    cfg.K = 1000000;
    CHECK(threshold(cfg, 21, 2) == doctest::Approx(19.0).epsilon(1e-3));

    TestConfig chi;
    chi.K = 2;
    const double eta = threshold(chi, 21, 2);
    CHECK(chi2_cdf(2.0 * 2 * 19, 2.0 * 2 * eta) == doctest::Approx(0.95).epsilon(1e-10));

    TestConfig bad;
    bad.alpha = 1.5;
    CHECK_THROWS(bad.validate(21));
}

TEST_CASE("element-power threshold reduces to the uniform case") {
    const auto g = ArrayGeometry::preset("elan_21l");
    const CMat G = projector(g, DirectionSet({{0.0, 0.0}}));
    TestConfig cfg;
    cfg.mode = ThresholdMode::normal;
    cfg.element_powers = RVec::Ones(21);
    CHECK(threshold(cfg, G) == doctest::Approx(threshold(cfg, 21, 1)).epsilon(1e-12));
}

TEST_CASE("Q-bar invariances") {
    Rng rng(51);
    const auto g = ArrayGeometry::preset("elan_11l");
    const DirectionSet dirs({{-0.04, 0.0}, {0.05, 0.0}});
    std::vector<CVec> zs;
    for (int k = 0; k < 3; ++k) zs.push_back(testing::random_cvec(rng, 11));
    const double base = q_bar(zs, g, dirs);
    CHECK(q_bar(std::span(zs).first(1), g, dirs) == doctest::Approx(q_value(zs[0], g, dirs).q));

    auto shifted = zs;
    shifted[1] += transfer_matrix(g, dirs) * testing::random_cvec(rng, 2);
    CHECK(std::abs(q_bar(shifted, g, dirs) - base) < 1e-10 * base);

    // Unitary rotation acting only on the residual subspace.
    const CMat G = projector(g, dirs);
    const CMat P = CMat::Identity(11, 11) - G;
    CMat X(11, 11);
    for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = complex_normal(rng);
    const CMat H = G * (X + X.adjoint()) * G;
    const Eigen::SelfAdjointEigenSolver<CMat> eig(H);
    const CMat U = eig.eigenvectors() * eig.eigenvalues().unaryExpr([](double l) { return std::polar(1.0, l); }).asDiagonal() *
                   eig.eigenvectors().adjoint();
    const CMat W = P + G * U * G;
    auto rotated = zs;
    for (auto& z : rotated) z = W * z;
    CHECK(std::abs(q_bar(rotated, g, dirs) - base) < 1e-10 * base);
}

TEST_CASE("likelihood-ratio statistic") {
    const auto g = ArrayGeometry::preset("elan_11l");
    const DirectionSet dirs({{0.01, 0.0}});
    const std::vector<CVec> zs(2, 2.0 * steering_vector(g, dirs[0]));
    const auto lr = lr_statistic(zs, g, dirs, 0.05);
    CHECK(lr.value < 1e-20);
    CHECK(lr.dof == 2 * 11 - 3);
    CHECK(lr_statistic(zs, ArrayGeometry::preset("elan_25"), dirs, 0.05).dof == 2 * 25 - 4);
}

TEST_CASE("likelihood-ratio statistic at the true directions is chi-square on 2(N-M)") {
    Rng rng(52);
    const auto g = ArrayGeometry::preset("elan_11l");
    const DirectionSet dirs({{0.0, 0.0}});
    const CVec s = 3.0 * steering_vector(g, dirs[0]);
    std::vector<double> v(10000);
    for (auto& x : v) {
        const std::vector<CVec> zs = {s + complex_normal_vector(rng, 11)};
        x = lr_statistic(zs, g, dirs, 0.05).value;
    }
    const double d = ks_distance(std::span(v), [](double x) { return chi2_cdf(20.0, x); });
    CHECK(kolmogorov_pvalue(d, v.size()) > 0.01);
}

TEST_CASE("Hermitian-form densities") {
    HermitianFormSpec two;
    two.mu = (RVec(2) << 1.0, 2.0).finished();
    for (double x : {0.0, 0.3, 1.0, 4.0})
        CHECK(hermitian_form_density(two, x) == doctest::Approx(2.0 * (std::exp(-x) - std::exp(-2.0 * x))).epsilon(1e-12));

    HermitianFormSpec one;
    one.mu = RVec::Constant(1, 1.5);
    CHECK(hermitian_form_density(one, 2.0) == doctest::Approx(1.5 * std::exp(-3.0)));

    // Closed forms against the residue formula.
    for (int K = 1; K <= 3; ++K) {
        HermitianFormSpec s;
        s.K = K;
        s.mu = (RVec(2) << 0.7, 1.9).finished();
        for (double x : {0.1, 1.0, 3.0})
            CHECK(hermitian_form_density(s, x) == doctest::Approx(hermitian_form_density_residue(s, x)).epsilon(1e-9));
        s.mu = (RVec(3) << 0.7, 1.9, 3.1).finished();
        for (double x : {0.1, 1.0, 3.0}) CHECK(hermitian_form_density(s, x) > 0.0);
    }
    HermitianFormSpec same;
    same.mu = (RVec(2) << 1.0, 1.0).finished();
    CHECK_THROWS_AS((void)hermitian_form_density(same, 1.0), std::invalid_argument);
}

TEST_CASE("Type-2 error: limits, monotonicity and coverage") {
    TestConfig cfg;
    HermitianFormSpec s;
    s.mu = RVec::Constant(1, 1e-9);
    CHECK(type2_error(s, cfg, 21, 1) < 1e-6);
    s.mu = RVec::Constant(1, 1e9);
    CHECK(type2_error(s, cfg, 21, 1) == doctest::Approx(1.0 - cfg.alpha).epsilon(1e-6));

    for (int K = 1; K <= 3; ++K) {
        cfg.K = K;
        s.K = K;
        double previous = 1.0;
        for (double mu : {0.5, 0.2, 0.1, 0.05, 0.02}) {
            s.mu = (RVec(2) << mu, 3 * mu).finished();
            const double b = type2_error(s, cfg, 21, 1);
            CHECK(b <= previous + 1e-12);
            previous = b;
        }
    }
    s.mu = (RVec(2) << 0.1, 0.3).finished();
    double previous = 1.0;
    for (int K = 1; K <= 3; ++K) {
        cfg.K = K;
        s.K = K;
        const double b = type2_error(s, cfg, 21, 1);
        CHECK(b <= previous);
        previous = b;
    }
    cfg.K = s.K = 4;
    CHECK_THROWS_AS((void)type2_error(s, cfg, 21, 1), NotImplemented);
    CHECK(type2_error_quadrature(s, cfg, 21, 1) < previous);
}

TEST_CASE("detection probability") {
    const auto g = ArrayGeometry::preset("elan_21l");
    const double bw = beamwidth(g);
    const DirectionSet truth({{-0.275 * bw, 0.0}, {0.275 * bw, 0.0}});
    const CMat B = amplitude_covariance(SignalModel::with_snr(SignalKind::rayleigh, 2, 5.0)).B;
    TestConfig cfg;
    cfg.mode = ThresholdMode::normal;
    for (double alpha : {0.02, 0.06, 0.1}) {
        cfg.alpha = alpha;
        const auto dp = detection_probability(g, truth, B, cfg);
        CHECK(dp.pd <= 1.0 - alpha);
        CHECK(dp.stage_estimates[0][0].u == doctest::Approx(0.0));
    }
    cfg.alpha = 0.05;
    double previous = 0.0;
    for (int K = 1; K <= 3; ++K) {
        cfg.K = K;
        const double pd = detection_probability(g, truth, B, cfg).pd;
        CHECK(pd > previous);
        previous = pd;
    }

    // Unequal powers fall back to minimising E{Q}; the single direction lands between the targets.
    const CMat Bu = (CMat(2, 2) << 4.0, 0.0, 0.0, 1.0).finished();
    const auto du = detection_probability(g, truth, Bu, cfg);
    CHECK(du.stage_estimates[0][0].u < 0.0);
    CHECK(du.stage_estimates[0][0].u > truth[0].u);
}

TEST_CASE("SNR from range") {
    CHECK(snr_from_range(1.0, 21) == doctest::Approx(2.0 / 21.0));
    CHECK(snr_from_range(2.0, 21) == doctest::Approx(2.0 / 21.0 / 16.0));
}

TEST_CASE("sequential test: strong single target and pure noise") {
    const auto g = ArrayGeometry::preset("elan_21l");
    const auto noise = NoiseModel::white(g);
    TestConfig cfg;
    cfg.M_max = 2;
    EstimatorSpec est;
    est.kind = EstimatorKind::fixed;
    est.fixed = {DirectionSet({{0.0, 0.0}}), DirectionSet({{-0.02, 0.0}, {0.02, 0.0}})};

    const CVec a = steering_vector(g, {0.0, 0.0});
    const double amp = std::sqrt(db_to_linear(20.0));
    Rng rng(53);
    int ones = 0, over = 0;
    const int trials = 2000;
    for (int t = 0; t < trials; ++t) {
        GeneratorStream strong([&] { return CVec(amp * complex_normal(rng) * a + noise.sample(rng)); });
        const auto out = multihypothesis_test(strong, g, {0.0, 0.0}, cfg, est);
        ones += out.M_hat == 1;
        CHECK(out.stages.back().accepted == !out.exhausted);
        CHECK(out.snapshots_used == out.stages.size() * static_cast<std::size_t>(cfg.K));
    }
    const double se = binomial_se(cfg.alpha, trials);
    CHECK(static_cast<double>(ones) / trials >= 1.0 - cfg.alpha - 3 * se);

    for (int t = 0; t < trials; ++t) {
        GeneratorStream pure([&] { return noise.sample(rng); });
        over += multihypothesis_test(pure, g, {0.0, 0.0}, cfg, est).M_hat > 1;
    }
    CHECK(std::abs(static_cast<double>(over) / trials - cfg.alpha) <= 3 * se);
}

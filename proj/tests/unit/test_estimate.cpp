#include <doctest.h>

#include "../support/random_cases.hpp"

#include "superres/estimate.hpp"
#include "superres/noise.hpp"
#include "superres/qfunc.hpp"
#include "superres/signals.hpp"

using namespace superres;

TEST_CASE("grid sizes and evaluation counts") {
    CHECK(grid_beam_count(6, ArrayKind::linear) == 7);
    CHECK(grid_beam_count(6, ArrayKind::planar) == 15);
    const auto g = ArrayGeometry::preset("elan_11l");
    const auto pts = grid_points(g, {0.0, 0.0}, GridSpec{});
    CHECK(pts.size() == 7);
    CHECK(pts.back().u - pts.front().u == doctest::Approx(beamwidth(g)));
    const GridTable table(g, pts, 2);
    CHECK(table.combinations() == 21);
    CHECK(table.search(CVec::Ones(11)).evaluations == 21);
    CHECK(binomial(15, 2) == 105);
    CHECK(binomial(7, 0) == 1);
}

TEST_CASE("noise-free targets on grid nodes are recovered exactly") {
    const auto g = ArrayGeometry::preset("elan_21l");
    const auto pts = grid_points(g, {0.01, 0.0}, GridSpec{});
    const DirectionSet truth({pts[1], pts[4]});
    const CVec z = transfer_matrix(g, truth) * (CVec(2) << cplx(1.0, 0.2), cplx(-0.5, 0.9)).finished();
    const auto res = grid_search(z, g, {0.01, 0.0}, GridSpec{}, 2);
    CHECK(res.best[0].u == pts[1].u);
    CHECK(res.best[1].u == pts[4].u);
    CHECK(res.q < 1e-9 * z.squaredNorm());
}

TEST_CASE("grid search is the exact argmin over all combinations") {
    Rng rng(41);
    const auto g = ArrayGeometry::preset("elan_25");
    const auto pts = grid_points(g, {0.0, 0.0}, GridSpec{});
    for (int t = 0; t < 5; ++t) {
        const CVec z = testing::random_cvec(rng, g.size());
        const auto res = GridTable(g, pts, 2).search(z);
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < pts.size(); ++a)
            for (std::size_t b = a + 1; b < pts.size(); ++b)
                best = std::min(best, q_value(z, g, DirectionSet({pts[a], pts[b]})).q);
        CHECK(res.q == doctest::Approx(best).epsilon(1e-10));
    }
}

TEST_CASE("averaging identical snapshots equals a single search") {
    Rng rng(42);
    const auto g = ArrayGeometry::preset("elan_11l");
    const CVec z = testing::random_cvec(rng, 11);
    const std::vector<CVec> zs(4, z);
    const auto single = grid_search(z, g, {0.0, 0.0}, GridSpec{}, 2).best.canonical();
    const auto avg = averaged_grid_search(zs, g, {0.0, 0.0}, GridSpec{}, 2);
    const auto one = averaged_grid_search(std::span(zs).first(1), g, {0.0, 0.0}, GridSpec{}, 2);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(avg[i].u == doctest::Approx(single[i].u));
        CHECK(one[i].u == single[i].u);
    }
}

TEST_CASE("averaged grid search disperses less than a single snapshot") {
    const auto g = ArrayGeometry::preset("elan_11l");
    const double bw = beamwidth(g);
    const DirectionSet truth({{-0.25 * bw, 0.0}, {0.25 * bw, 0.0}});
    const auto model = SignalModel::with_snr(SignalKind::uniform_phase, 2, 25.0);
    const auto noise = NoiseModel::white(g);
    const CMat A = transfer_matrix(g, truth);
    Rng rng(43);
    double s1 = 0.0, s4 = 0.0;
    const int runs = 300;
    for (int r = 0; r < runs; ++r) {
        std::vector<CVec> zs;
        for (int k = 0; k < 4; ++k) zs.push_back(A * draw_amplitudes(model, rng) + noise.sample(rng));
        s1 += std::pow(grid_search(zs[0], g, {0.0, 0.0}, GridSpec{}, 2).best.canonical()[0].u - truth[0].u, 2);
        s4 += std::pow(averaged_grid_search(zs, g, {0.0, 0.0}, GridSpec{}, 2)[0].u - truth[0].u, 2);
    }
    CHECK(s4 < s1);
}

TEST_CASE("search region projection") {
    const double bw = 0.1;
    const SearchRegion lin(ArrayKind::linear, {0.0, 0.0}, bw, 0.1);
    const DirectionSet swapped({{0.03, 0.0}, {0.02, 0.0}, {0.2, 0.0}});
    const auto p = lin.project(swapped);
    CHECK(lin.contains_inner(p, 1e-12));
    CHECK(p[1].u - p[0].u >= lin.min_separation() - 1e-12);
    CHECK(p[2].u <= lin.inner_radius() + 1e-12);
    const DirectionSet inside({{-0.01, 0.0}, {0.02, 0.0}});
    const auto q = lin.project(inside);
    CHECK(q[0].u == inside[0].u);

    const SearchRegion disk(ArrayKind::planar, {0.1, 0.1}, bw, 0.1);
    const auto d = disk.project(DirectionSet({{0.3, 0.1}}));
    CHECK(std::hypot(d[0].u - 0.1, d[0].v - 0.1) == doctest::Approx(disk.inner_radius()));
}

TEST_CASE("noise-free single target: SA converges within 0.01 BW") {
    const auto g = ArrayGeometry::preset("elan_21l");
    const double bw = beamwidth(g);
    const Direction target{0.2 * bw, 0.0};
    const CVec z = 3.0 * steering_vector(g, target);
    GeneratorStream stream([&] { return z; });
    SAConfig cfg;
    cfg.iterations = 30;
    const auto trace = stochastic_approximation(stream, g, {0.0, 0.0}, 1, cfg);
    CHECK(trace.iterates.size() == 31);
    CHECK(std::abs(trace.estimate[0].u - target.u) < 0.01 * bw);
}

TEST_CASE("SA iterates stay in the admissible region and runs are reproducible") {
    const auto g = ArrayGeometry::preset("elan_11l");
    const double bw = beamwidth(g);
    const DirectionSet truth({{-0.25 * bw, 0.0}, {0.25 * bw, 0.0}});
    const auto model = SignalModel::with_snr(SignalKind::rayleigh, 2, 5.0);
    const auto noise = NoiseModel::white(g);
    const CMat A = transfer_matrix(g, truth);
    SAConfig cfg;
    cfg.variant = Correction::hard_limit;
    auto run = [&](std::uint64_t seed) {
        Rng rng(seed);
        GeneratorStream s([&] { return CVec(A * draw_amplitudes(model, rng) + noise.sample(rng)); });
        return stochastic_approximation(s, g, {0.0, 0.0}, 2, cfg);
    };
    const auto a = run(5), b = run(5);
    CHECK(a.mu == b.mu);
    CHECK(a.estimate[0].u == b.estimate[0].u);
    const SearchRegion region(ArrayKind::linear, {0.0, 0.0}, bw, cfg.epsilon);
    for (const auto& it : a.iterates) CHECK(region.contains(it));
    CHECK(a.snapshots_used == 3 + cfg.iterations);
}

TEST_CASE("exhausted stream is an error") {
    const auto g = ArrayGeometry::preset("elan_11l");
    const std::vector<CVec> few(5, CVec::Ones(11));
    VectorStream s(few);
    CHECK_THROWS_AS((void)stochastic_approximation(s, g, {0.0, 0.0}, 1, SAConfig{}), StreamExhausted);
}

TEST_CASE("hard limiting damps SA fluctuations") {
    const auto g = ArrayGeometry::preset("elan_11l");
    const double bw = beamwidth(g);
    const DirectionSet truth({{-0.225 * bw, 0.0}, {0.225 * bw, 0.0}});
    const auto model = SignalModel::with_snr(SignalKind::rayleigh, 2, 12.0);
    const auto noise = NoiseModel::white(g);
    const CMat A = transfer_matrix(g, truth);
    auto dispersion = [&](Correction variant) {
        SAConfig cfg;
        cfg.variant = variant;
        double s = 0.0;
        const int runs = 400;
        for (int r = 0; r < runs; ++r) {
            Rng rng(mix_seed(44, static_cast<std::uint64_t>(r)));
            GeneratorStream st([&] { return CVec(A * draw_amplitudes(model, rng) + noise.sample(rng)); });
            const auto est = stochastic_approximation(st, g, {0.0, 0.0}, 2, cfg).estimate.canonical();
            s += std::pow(est[0].u - truth[0].u, 2) + std::pow(est[1].u - truth[1].u, 2);
        }
        return s / runs;
    };
    CHECK(dispersion(Correction::hard_limit) < dispersion(Correction::plain));
}

TEST_CASE("anti-phase equal targets stall while quadrature targets converge") {
    // The stall shows up with noise: the anti-phase fit wanders along a shallow valley.
    const auto g = ArrayGeometry::preset("elan_11l");
    const double bw = beamwidth(g);
    const DirectionSet truth({{-0.25 * bw, 0.0}, {0.25 * bw, 0.0}});
    const auto noise = NoiseModel::white(g);
    const CMat A = transfer_matrix(g, truth);
    auto mean_error = [&](double dphi) {
        const auto m = SignalModel::with_snr(SignalKind::deterministic, 2, 15.0, 1.0, (RVec(2) << 0.0, dphi).finished());
        double total = 0.0;
        const int runs = 200;
        for (int r = 0; r < runs; ++r) {
            Rng rng(mix_seed(45, static_cast<std::uint64_t>(r)));
            const CVec s = A * draw_amplitudes(m, rng);
            GeneratorStream st([&] { return CVec(s + noise.sample(rng)); });
            SAConfig cfg;
            cfg.initial = DirectionSet({{-0.45 * bw, 0.0}, {0.45 * bw, 0.0}});
            cfg.iterations = 17;
            const auto est = stochastic_approximation(st, g, {0.0, 0.0}, 2, cfg).estimate.canonical();
            total += std::abs(est[0].u - truth[0].u) / bw;
        }
        return total / runs;
    };
    const double quad = mean_error(pi / 2), anti = mean_error(pi);
    CHECK(quad < 0.05);
    CHECK(anti > 2 * quad);
}

TEST_CASE("log correction at one target is the monopulse ratio") {
    Rng rng(46);
    const auto g = ArrayGeometry::preset("elan_21l");
    for (int t = 0; t < 10; ++t) {
        const CVec z = testing::random_cvec(rng, 21) + 4.0 * steering_vector(g, {0.02, 0.0});
        const Direction d{std::uniform_real_distribution<double>(-0.05, 0.05)(rng), 0.0};
        const auto ge = q_gradient(z, g, DirectionSet({d}));
        const double T = std::norm(steering_vector(g, d).dot(z)) / 21.0;
        const double ratio = monopulse_ratio(z, g, d);
        CHECK(-ge.eval.gradient[0] / T == doctest::Approx(ratio).epsilon(1e-10));

        SAConfig cfg;
        cfg.variant = Correction::log;
        const RVec G = correction(ge.eval.gradient, ge.eval.q, cfg, 0.0);
        CHECK(G[0] == doctest::Approx(-ratio * T / ge.eval.q).epsilon(1e-10));
    }
}

TEST_CASE("correction variants") {
    const RVec g = (RVec(2) << 3.0, 4.0).finished();
    SAConfig cfg;
    cfg.variant = Correction::hard_limit;
    CHECK(correction(g, 2.0, cfg, 1.0).norm() == doctest::Approx(1.0));
    CHECK(correction(g, 2.0, cfg, 10.0) == g);
    cfg.variant = Correction::sign;
    CHECK(correction(g, 2.0, cfg, 1.0).norm() == doctest::Approx(1.0));
    cfg.variant = Correction::arctan;
    CHECK(correction(g, 2.0, cfg, 1.0)[0] == doctest::Approx(0.6));
}

TEST_CASE("asymptotic covariance") {
    const auto g = ArrayGeometry::preset("elan_11l");
    const double bw = beamwidth(g);
    const DirectionSet dirs({{-0.25 * bw, 0.0}, {0.25 * bw, 0.0}});
    const CVec b = (CVec(2) << 10.0, cplx(0.0, 10.0)).finished();
    const CMat B = b * b.adjoint();
    const double mu_bar = optimal_step(g, dirs, B);
    const auto ac = asymptotic_covariance(g, dirs, B, mu_bar, false);
    CHECK(ac.mu_opt == doctest::Approx(mu_bar));
    // Deterministic case without the noise term: M_i = mu^2 lambda_i / (2 mu lambda_i - 1).
    const Eigen::SelfAdjointEigenSolver<RMat> eig(ac.covariance);
    RVec expect(2);
    for (int i = 0; i < 2; ++i) expect[i] = mu_bar * mu_bar * ac.lambda[i] / (2 * mu_bar * ac.lambda[i] - 1);
    std::sort(expect.begin(), expect.end());
    CHECK(eig.eigenvalues()[0] == doctest::Approx(expect[0]).epsilon(1e-8));
    CHECK(eig.eigenvalues()[1] == doctest::Approx(expect[1]).epsilon(1e-8));
    CHECK(expect[1] == doctest::Approx(mu_bar));  // largest at lambda_min

    CHECK_THROWS_AS((void)asymptotic_covariance(g, dirs, B, 0.4 * mu_bar), StepTooSmall);
    CHECK_NOTHROW((void)asymptotic_covariance(g, dirs, B, 0.51 * mu_bar));
}

TEST_CASE("cost model") {
    const auto c = cost_model(2, 15, 5, 3, ArrayKind::linear);
    CHECK(c.sa_multiplications == 180.0);
    CHECK(c.grid_multiplications == 180.0);
    CHECK(c.sa_roots == 15.0);
    const auto zero = cost_model(0, 15, 5, 3, ArrayKind::linear);
    CHECK(zero.sa_multiplications == 0.0);
    CHECK(zero.grid_multiplications == 0.0);
    CHECK(cost_model(2, 1, 5, 1, ArrayKind::planar).sa_multiplications == 15.0);
}

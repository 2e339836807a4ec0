#include <doctest.h>

#include "superres/noise.hpp"
#include "superres/signals.hpp"

using namespace superres;

namespace {

RVec vec(std::initializer_list<double> v) {
    RVec out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

// Sample mean of b and of b b* over `n` draws.
std::pair<CVec, CMat> moments(const SignalModel& m, int n, Rng& rng) {
    CVec mean = CVec::Zero(m.size());
    CMat second = CMat::Zero(m.size(), m.size());
    for (int k = 0; k < n; ++k) {
        const CVec b = draw_amplitudes(m, rng);
        mean += b;
        second += b * b.adjoint();
    }
    return {mean / n, second / n};
}

}  // namespace

TEST_CASE("deterministic amplitudes are constant and rotate with Doppler") {
    Rng rng(1);
    const auto m = SignalModel::deterministic(vec({1.0}), vec({0.0}));
    for (int k = 0; k < 3; ++k) CHECK(std::abs(draw_amplitudes(m, rng)[0] - cplx(1.0, 0.0)) < 1e-15);

    const double step = 0.3;
    const auto d = SignalModel::deterministic(vec({2.0, 1.0}), vec({0.1, -0.5}), step);
    for (int k = 0; k < 30; ++k) {
        const CVec b = draw_amplitudes(d, rng, k);
        CHECK(std::abs(std::arg(b[0] * std::exp(-superres::j1 * (0.1 + k * step)))) < 1e-12);
        CHECK(std::abs(b[1]) == doctest::Approx(1.0));
    }
    CHECK(amplitude_covariance(d).rank_one);
}

TEST_CASE("uniform-phase amplitudes have zero mean") {
    Rng rng(2);
    const int n = 100000;
    const auto [mean, second] = moments(SignalModel::uniform_phase(vec({1.0, 2.0})), n, rng);
    CHECK(std::abs(mean[0]) < 4.0 / std::sqrt(n));
    CHECK(std::abs(mean[1]) < 8.0 / std::sqrt(n));
    CHECK(second(1, 1).real() == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("phase fluctuation shrinks the mean by exp(-sigma^2/2)") {
    Rng rng(3);
    const auto m = SignalModel::phase_fluct(vec({1.0}), vec({0.0}), vec({0.3}));
    CHECK(std::abs(amplitude_mean(m)[0]) == doctest::Approx(std::exp(-0.045)).epsilon(1e-12));
    const auto [mean, second] = moments(m, 100000, rng);
    CHECK(std::abs(mean[0]) == doctest::Approx(std::exp(-0.045)).epsilon(0.005));
}

TEST_CASE("amplitude covariances") {
    const CMat B4 = amplitude_covariance(SignalModel::rayleigh(vec({1.0, 2.0}))).B;
    CHECK(std::abs(B4(0, 0) - 1.0) < 1e-15);
    CHECK(std::abs(B4(1, 1) - 2.0) < 1e-15);
    CHECK(std::abs(B4(0, 1)) < 1e-15);

    const CMat B2 = amplitude_covariance(SignalModel::phase_fluct(vec({1.0, 1.0}), vec({0.0, 0.0}), vec({0.3, 0.3}))).B;
    CHECK(B2(0, 1).real() == doctest::Approx(std::exp(-0.09)).epsilon(1e-12));
    CHECK(B2(0, 0).real() == doctest::Approx(1.0));

    // Zero phase spread reproduces the deterministic covariance.
    const CMat B2z = amplitude_covariance(SignalModel::phase_fluct(vec({1.0, 2.0}), vec({0.2, 1.0}), vec({0.0, 0.0}))).B;
    const CMat B1 = amplitude_covariance(SignalModel::deterministic(vec({1.0, 2.0}), vec({0.2, 1.0}))).B;
    CHECK((B2z - B1).norm() < 1e-12);
}

TEST_CASE("sample moments of all four models agree with the closed forms") {
    Rng rng(4);
    const int n = 100000;
    const std::vector<SignalModel> models = {
        SignalModel::deterministic(vec({1.0, 0.5}), vec({0.3, -1.0})),
        SignalModel::phase_fluct(vec({1.0, 0.5}), vec({0.3, -1.0}), vec({0.4, 0.8})),
        SignalModel::uniform_phase(vec({1.0, 0.5})),
        SignalModel::rayleigh(vec({1.0, 0.25})),
    };
    for (const auto& m : models) {
        const auto [mean, second] = moments(m, n, rng);
        const CMat B = amplitude_covariance(m).B;
        // Every entry has variance below E|b|^4 <= 2 (max power)^2 for these models.
        const double se = std::sqrt(2.0 / n);
        CHECK((mean - amplitude_mean(m)).cwiseAbs().maxCoeff() < 5 * se);
        CHECK((second - B).cwiseAbs().maxCoeff() < 5 * 2 * se);
    }
}

TEST_CASE("SNR convention: total power over noise power") {
    const auto m = SignalModel::with_snr(SignalKind::rayleigh, 2, 10.0, 2.0);
    CHECK(m.total_power() == doctest::Approx(20.0));
    CHECK(db_to_linear(linear_to_db(3.7)) == doctest::Approx(3.7));
}

TEST_CASE("synthesis: noise-free snapshots and sample covariance") {
    const auto g = ArrayGeometry::preset("elan_7l");
    const DirectionSet dirs({{-0.1, 0.0}, {0.15, 0.0}});
    const CMat A = transfer_matrix(g, dirs);
    Rng rng(5);

    const auto det = SignalModel::deterministic(vec({1.0, 0.7}), vec({0.0, 1.0}));
    const NoiseModel silent(g, {WhiteNoise{0.0}});
    for (const auto& s : synthesize(g, dirs, det, silent, 3, rng)) CHECK((s.z - A * s.b).norm() < 1e-14);

    const auto ray = SignalModel::rayleigh(vec({1.0, 2.0}));
    const auto white = NoiseModel::white(g);
    const int n = 100000;
    CMat S = CMat::Zero(7, 7);
    for (const auto& s : synthesize(g, dirs, ray, white, n, rng)) S += s.z * s.z.adjoint();
    S /= n;
    const CMat R = CMat::Identity(7, 7) + A * amplitude_covariance(ray).B * A.adjoint();
    CHECK((S - R).norm() / R.norm() < 0.02);
}

TEST_CASE("synthesis is reproducible for a fixed seed") {
    const auto g = ArrayGeometry::preset("elan_11l");
    const DirectionSet dirs({{0.0, 0.0}});
    const auto m = SignalModel::rayleigh(vec({2.0}));
    const auto noise = NoiseModel::white(g);
    Rng a(99), b(99);
    const auto sa = synthesize(g, dirs, m, noise, 3, a);
    const auto sb = synthesize(g, dirs, m, noise, 3, b);
    for (int k = 0; k < 3; ++k) CHECK(sa[k].z == sb[k].z);
}

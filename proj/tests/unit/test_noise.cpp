#include <doctest.h>

#include "superres/noise.hpp"
#include "superres/qfunc.hpp"

#include <filesystem>
#include <fstream>

using namespace superres;

namespace {

CMat sample_covariance(const NoiseModel& m, int n, Rng& rng) {
    CMat S = CMat::Zero(m.size(), m.size());
    for (int k = 0; k < n; ++k) {
        const CVec z = m.sample(rng);
        S += z * z.adjoint();
    }
    return S / n;
}

double min_eigenvalue(const CMat& R) {
    return Eigen::SelfAdjointEigenSolver<CMat>(R, Eigen::EigenvaluesOnly).eigenvalues()[0];
}

}  // namespace

TEST_CASE("linear jammer kernel values") {
    const ArrayGeometry g("pair", ArrayKind::linear, (RVec(2) << 0.0, pi).finished(), RVec::Zero(2));
    const CMat R = component_covariance(g, LinearJammer{3.0, 0.5, 0.0});
    CHECK(std::abs(R(0, 0) - 3.0) < 1e-14);
    CHECK(std::abs(R(0, 1) - 6.0 / pi) < 1e-12);
    // A jammer filling the whole visible region decorrelates half-wavelength neighbours.
    CHECK(std::abs(component_covariance(g, LinearJammer{3.0, 1.0 - 1e-9, 0.0})(0, 1)) < 1e-8);

    const CMat none = component_covariance(g, LinearJammer{0.0, 0.2, 0.1});
    CHECK(none.norm() == 0.0);
}

TEST_CASE("jammer covariances are Hermitian and PSD") {
    for (const auto& [geom, comp] : std::vector<std::pair<ArrayGeometry, NoiseComponent>>{
             {ArrayGeometry::preset("elan_21l"), LinearJammer{10.0, 0.3, 0.2}},
             {ArrayGeometry::preset("elan_25"), PlanarJammer{5.0, 0.2, 0.1, -0.1}}}) {
        const CMat R = component_covariance(geom, comp);
        CHECK((R - R.adjoint()).norm() <= 1e-12 * R.norm());
        CHECK(min_eigenvalue(R) >= -1e-10 * R.trace().real());
        CHECK(std::abs(R(0, 0).real() - R(1, 1).real()) < 1e-12);
    }
}

TEST_CASE("white and jammed noise sample covariances converge") {
    Rng rng(7);
    const auto g = ArrayGeometry::preset("elan_7l");
    const int n = 100000;
    const auto white = NoiseModel::white(g);
    CHECK((sample_covariance(white, n, rng) - CMat::Identity(7, 7)).norm() < 5.0 * std::sqrt(49.0 / n));

    const NoiseModel jammed(g, {WhiteNoise{1.0}, LinearJammer{20.0, 0.2, 0.3}});
    const CMat R = jammed.covariance();
    CHECK((sample_covariance(jammed, n, rng) - R).norm() < 5.0 * std::sqrt(49.0 / n) * R.norm());
    CHECK(jammed.mean_power() == doctest::Approx(21.0));
}

TEST_CASE("factorisation falls back for semi-definite covariances") {
    const auto g = ArrayGeometry::preset("elan_21l");
    const NoiseModel jam_only(g, {LinearJammer{1.0, 0.05, 0.0}});
    const CMat& L = jam_only.factor();
    CHECK((L * L.adjoint() - jam_only.covariance()).norm() < 1e-8 * jam_only.covariance().norm());
    CMat bad = CMat::Identity(3, 3);
    bad(2, 2) = -1.0;
    CHECK_THROWS(psd_factor(bad));
}

TEST_CASE("fluctuating receiver powers") {
    Rng rng(8);
    const RVec same = draw_fluctuating_powers(50, 2.0, 0.0, rng);
    CHECK((same.array() - 2.0).abs().maxCoeff() == 0.0);

    const int n = 200000;
    const RVec p = draw_fluctuating_powers(n, 1.0, 0.25, rng);
    const double mean = p.mean();
    const double var = (p.array() - mean).square().sum() / (n - 1);
    CHECK(mean == doctest::Approx(1.0).epsilon(0.002));
    CHECK(var == doctest::Approx(0.0625 / 3.0).epsilon(0.02));
}

TEST_CASE("perturbation chain") {
    Rng rng(9);
    const CVec z = complex_normal_vector(rng, 6);

    const std::vector<Perturbation> identity = {Coupling{CMat::Identity(6, 6)}};
    CHECK((apply_perturbations(identity, z) - z).norm() == 0.0);

    const std::vector<Perturbation> fine = {Quantize{1e-12}};
    CHECK((apply_perturbations(fine, z) - z).cwiseAbs().maxCoeff() <= 1e-12);

    const RVec rms = RVec::Ones(6);
    const std::vector<Perturbation> three_bit = {Clip{1.0}, Quantize{quantizer_step(3, 1.0)}};
    const CVec out = apply_perturbations(three_bit, z, rms);
    const double step = quantizer_step(3, 1.0);
    for (Eigen::Index k = 0; k < 6; ++k) {
        CHECK(std::abs(out[k].real()) <= 1.0 + 1e-12);
        CHECK(std::abs(std::remainder(out[k].imag(), step)) < 1e-12);
    }
}

TEST_CASE("quantisation error power is step^2/6 per complex component") {
    Rng rng(10);
    const double step = 0.05;
    const std::vector<Perturbation> q = {Quantize{step}};
    const int n = 50000;
    double acc = 0.0;
    for (int k = 0; k < n; ++k) {
        const CVec z = 3.0 * complex_normal_vector(rng, 1);
        acc += std::norm(apply_perturbations(q, z)[0] - z[0]);
    }
    CHECK(acc / n == doctest::Approx(step * step / 6.0).epsilon(0.02));
}

TEST_CASE("coupling matrix files") {
    const auto path = std::filesystem::temp_directory_path() / "superres_coupling.txt";
    {
        std::ofstream os(path);
        os << "1 0  0.1 0.05\n0.1 -0.05  1 0\n";
    }
    const CMat C = load_coupling_matrix(path, 2);
    CHECK(C(0, 1) == cplx(0.1, 0.05));
    CHECK(C(1, 0) == cplx(0.1, -0.05));
    CHECK_THROWS(load_coupling_matrix(path, 3));
    std::filesystem::remove(path);
}

TEST_CASE("a jammer raises E{Q} by tr(Gamma R_j)") {
    const auto g = ArrayGeometry::preset("elan_11l");
    const DirectionSet dirs({{0.02, 0.0}});
    const CMat B = CMat::Identity(1, 1);
    const CMat Rj = component_covariance(g, LinearJammer{4.0, 0.1, 0.3});
    const CMat I = CMat::Identity(11, 11);
    const double base = expected_q(g, dirs, dirs, B, I);
    const double jammed = expected_q(g, dirs, dirs, B, I + Rj);
    CHECK(jammed - base == doctest::Approx((projector(g, dirs) * Rj).trace().real()).epsilon(1e-12));
}

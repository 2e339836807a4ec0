#include "superres/noise.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace superres {

namespace {

double sinc(double x) { return std::abs(x) < 1e-12 ? 1.0 : std::sin(x) / x; }

/// 2 J1(x) / x, the Fourier transform of a uniform disk.
double jinc(double x) { return std::abs(x) < 1e-12 ? 1.0 : 2.0 * std::cyl_bessel_j(1.0, x) / x; }

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

}  // namespace

CMat component_covariance(const ArrayGeometry& geom, const NoiseComponent& c) {
    const Eigen::Index n = geom.size();
    const RVec& x = geom.x();
    const RVec& y = geom.y();
    return std::visit(
        overloaded{
            [&](const WhiteNoise& w) -> CMat { return CMat::Identity(n, n) * w.sigma2; },
            [&](const FluctuatingWhite& f) -> CMat {
                if (f.powers.size() != n) throw std::invalid_argument("fluctuating powers must have N entries");
                return f.powers.cast<cplx>().asDiagonal();
            },
            [&](const LinearJammer& jm) -> CMat {
                if (!(jm.width > 0.0 && jm.width < 1.0)) throw std::invalid_argument("jammer width must lie in (0,1)");
                CMat R(n, n);
                for (Eigen::Index k = 0; k < n; ++k)
                    for (Eigen::Index l = 0; l < n; ++l) {
                        const double dx = x[k] - x[l];
                        R(k, l) = jm.power * sinc(dx * jm.width) * std::polar(1.0, -dx * jm.u0);
                    }
                return R;
            },
            [&](const PlanarJammer& jm) -> CMat {
                if (!(jm.radius > 0.0 && jm.radius < 1.0)) throw std::invalid_argument("jammer radius must lie in (0,1)");
                CMat R(n, n);
                for (Eigen::Index k = 0; k < n; ++k)
                    for (Eigen::Index l = 0; l < n; ++l) {
                        const double dx = x[k] - x[l];
                        const double dy = y[k] - y[l];
                        R(k, l) = jm.power * jinc(std::hypot(dx, dy) * jm.radius) *
                                  std::polar(1.0, -(dx * jm.u0 + dy * jm.v0));
                    }
                return R;
            },
        },
        c);
}

CMat psd_factor(const CMat& R) {
    if (R.size() == 0) return R;
    const Eigen::LLT<CMat> llt(R);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    const Eigen::SelfAdjointEigenSolver<CMat> eig(R);
    const RVec& lambda = eig.eigenvalues();
    const double tol = 1e-10 * std::max(R.trace().real(), 1e-300);
    if (lambda.minCoeff() < -tol) throw std::runtime_error("noise covariance is not positive semidefinite");
    return eig.eigenvectors() * lambda.cwiseMax(0.0).cwiseSqrt().cast<cplx>().asDiagonal();
}

NoiseModel::NoiseModel(const ArrayGeometry& geom, std::vector<NoiseComponent> components)
    : components_(std::move(components)), R_(CMat::Zero(geom.size(), geom.size())) {
    for (const auto& c : components_) R_ += component_covariance(geom, c);
    R_ = (R_ + R_.adjoint()).eval() * 0.5;
    L_ = psd_factor(R_);
}

NoiseModel NoiseModel::white(const ArrayGeometry& geom, double sigma2) {
    return {geom, {WhiteNoise{sigma2}}};
}

double NoiseModel::mean_power() const { return R_.trace().real() / static_cast<double>(size()); }

CVec NoiseModel::sample(Rng& rng) const { return L_ * complex_normal_vector(rng, size()); }

RVec draw_fluctuating_powers(Eigen::Index n, double sigma2, double c, Rng& rng) {
    if (!(c >= 0.0 && c < 1.0)) throw std::invalid_argument("fluctuation fraction must lie in [0,1)");
    RVec p(n);
    if (c == 0.0) return RVec::Constant(n, sigma2);
    std::uniform_real_distribution<double> dist(sigma2 * (1.0 - c), sigma2 * (1.0 + c));
    for (Eigen::Index k = 0; k < n; ++k) p[k] = dist(rng);
    return p;
}

CVec apply_perturbations(std::span<const Perturbation> chain, const CVec& z, const RVec& rms) {
    CVec out = z;
    for (const auto& p : chain) {
        std::visit(overloaded{
                       [&](const Coupling& c) {
                           if (c.C.rows() != out.size() || c.C.cols() != out.size())
                               throw std::invalid_argument("coupling matrix dimension mismatch");
                           out = c.C * out;
                       },
                       [&](const Quantize& q) {
                           if (q.step <= 0.0) return;
                           for (auto& v : out)
                               v = {q.step * std::round(v.real() / q.step), q.step * std::round(v.imag() / q.step)};
                       },
                       [&](const Clip& c) {
                           if (rms.size() != out.size()) throw std::invalid_argument("clip needs per-element rms");
                           for (Eigen::Index k = 0; k < out.size(); ++k) {
                               const double lim = c.bound * rms[k];
                               out[k] = {std::clamp(out[k].real(), -lim, lim), std::clamp(out[k].imag(), -lim, lim)};
                           }
                       },
                   },
                   p);
    }
    return out;
}

CMat load_coupling_matrix(const std::filesystem::path& path, Eigen::Index n) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open coupling file " + path.string());
    std::vector<double> values;
    std::string line;
    while (std::getline(in, line)) {
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream fields(line);
        for (double v; fields >> v;) values.push_back(v);
    }
    if (values.size() != static_cast<std::size_t>(2 * n * n))
        throw std::runtime_error("coupling file " + path.string() + " must hold " + std::to_string(n * n) +
                                 " complex entries");
    CMat C(n, n);
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < n; ++c) {
            const auto idx = static_cast<std::size_t>(2 * (r * n + c));
            C(r, c) = {values[idx], values[idx + 1]};
        }
    return C;
}

}  // namespace superres

#include "superres/detect.hpp"

#include "superres/noise.hpp"
#include "superres/qfunc.hpp"
#include "superres/stats.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace superres {

namespace {

constexpr double inv_sqrt_2pi = 0.39894228040143267794;

double factorial(int n) { return std::tgamma(n + 1.0); }

void require_distinct(const RVec& mu) {
    for (Eigen::Index i = 0; i < mu.size(); ++i) {
        if (!(mu[i] > 0.0)) throw std::invalid_argument("Hermitian-form eigenvalues must be positive");
        for (Eigen::Index k = i + 1; k < mu.size(); ++k)
            if (std::abs(mu[i] - mu[k]) <= 1e-9 * std::max(mu[i], mu[k]))
                throw std::invalid_argument("coincident eigenvalues are not covered by the closed-form densities");
    }
}

double density_single(double mu, int K, double q) {
    return std::exp(K * std::log(mu) + (K - 1) * std::log(q) - q * mu - std::lgamma(K));
}

/// Type-2 error of a single-eigenvalue form at c = mu K ae, for K = 1, 2, 3.
// f(d) = exp(d^2/2) Phi(d) and its first two derivatives. The direct expressions
// cancel badly for large negative d, where the asymptotic series takes over.
std::array<double, 3> scaled_cdf_derivatives(double d) {
    if (d > -10.0) {
        const double f = scaled_normal_cdf(d);
        return {f, d * f + inv_sqrt_2pi, (1.0 + d * d) * f + d * inv_sqrt_2pi};
    }
    const double x = -d;
    const double x2 = x * x;
    std::array<double, 3> out{};
    double a = 1.0;           // (-1)^n (2n-1)!!
    double p = 1.0 / x;       // x^-(2n+1)
    for (int n = 0; n < 20; ++n) {
        out[0] += a * p;
        out[1] += a * (2 * n + 1) * p / x;
        out[2] += a * (2 * n + 1) * (2 * n + 2) * p / x2;
        a *= -(2.0 * n + 1.0);
        p /= x2;
    }
    for (double& v : out) v *= inv_sqrt_2pi;
    return out;
}

std::array<double, 3> beta_single(double c, double U, double alpha) {
    const double psi = std::exp(-0.5 * U * U);
    const auto f = scaled_cdf_derivatives(U - c);
    std::array<double, 3> b{};
    b[0] = 1.0 - alpha - psi * f[0];
    b[1] = b[0] - c * psi * f[1];
    b[2] = b[1] - 0.5 * c * c * psi * f[2];
    return b;
}

double noise_scale(const TestConfig& cfg, Eigen::Index N, int M_hat) {
    return cfg.sigma2 * std::sqrt(static_cast<double>(N - M_hat) / cfg.K);
}

double expected_signal_residual(const ArrayGeometry& geom, const CMat& A_ex, const CMat& B, const DirectionSet& dirs) {
    try {
        const CMat G = projector(geom, dirs);
        return (A_ex.adjoint() * G * A_ex * B).trace().real();
    } catch (const IllConditioned&) {
        return std::numeric_limits<double>::infinity();
    }
}

}  // namespace

// ------------------------------------------------------- statistic and thresholds

void TestConfig::validate(Eigen::Index N) const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0,1)");
    if (!(sigma2 > 0.0)) throw std::invalid_argument("sigma2 must be positive");
    if (K < 1) throw std::invalid_argument("K must be at least 1");
    if (M_max < 1 || M_max >= N) throw std::invalid_argument("M_max must satisfy 1 <= M_max < N");
    if (element_powers && element_powers->size() != N) throw std::invalid_argument("element_powers must hold N entries");
}

double q_bar(std::span<const CVec> snapshots, const ArrayGeometry& geom, const DirectionSet& dirs) {
    if (snapshots.empty()) throw std::invalid_argument("Q_bar needs at least one snapshot");
    double sum = 0.0;
    for (const auto& z : snapshots) sum += q_value(z, geom, dirs).q;
    return sum / static_cast<double>(snapshots.size());
}

double threshold(const TestConfig& cfg, Eigen::Index N, int M) {
    if (M < 0 || M >= N) throw std::invalid_argument("threshold needs 0 <= M < N");
    const double r = static_cast<double>(N - M);
    if (cfg.mode == ThresholdMode::chi2)
        return cfg.sigma2 / (2.0 * cfg.K) * chi2_upper_fractile(2.0 * cfg.K * r, cfg.alpha);
    return cfg.sigma2 * (std::sqrt(r / cfg.K) * normal_upper_fractile(cfg.alpha) + r);
}

double threshold(const TestConfig& cfg, const CMat& Gamma) {
    const Eigen::Index N = Gamma.rows();
    if (!cfg.element_powers) return threshold(cfg, N, static_cast<int>(std::lround(N - Gamma.trace().real())));
    const CMat GD = Gamma * cfg.element_powers->cast<cplx>().asDiagonal();
    const double mean = GD.trace().real();
    const double var = (GD * GD).trace().real() / cfg.K;
    return mean + std::sqrt(var) * normal_upper_fractile(cfg.alpha);
}

LrStatistic lr_statistic(std::span<const CVec> snapshots, const ArrayGeometry& geom, const DirectionSet& dirs,
                         double alpha, double sigma2) {
    if (snapshots.empty()) throw std::invalid_argument("LR statistic needs at least one snapshot");
    CVec mean = CVec::Zero(geom.size());
    for (const auto& z : snapshots) mean += z;
    const auto K = static_cast<double>(snapshots.size());
    mean /= K;
    const auto N = static_cast<int>(geom.size());
    const auto M = static_cast<int>(dirs.size());
    LrStatistic out;
    out.dof = geom.kind() == ArrayKind::linear ? 2 * N - 3 * M : 2 * N - 4 * M;
    if (out.dof < 1) throw std::invalid_argument("too many targets for the LR statistic");
    out.value = 2.0 * K / sigma2 * q_value(mean, geom, dirs).q;
    out.threshold = chi2_upper_fractile(out.dof, alpha);
    return out;
}

// ---------------------------------------------------------- Hermitian forms

HermitianFormSpec HermitianFormSpec::from_matrices(const CMat& G, const CMat& B, int K, double rel_tol) {
    if (K < 1) throw std::invalid_argument("K must be at least 1");
    const CMat L = psd_factor(B);
    const CMat H = L.adjoint() * G * L;
    const Eigen::SelfAdjointEigenSolver<CMat> eig(0.5 * (H + H.adjoint()), Eigen::EigenvaluesOnly);
    const RVec& l = eig.eigenvalues();
    const double top = l.size() > 0 ? l.maxCoeff() : 0.0;
    std::vector<double> mu;
    for (Eigen::Index i = 0; i < l.size(); ++i)
        if (top > 0.0 && l[i] > rel_tol * top) mu.push_back(1.0 / l[i]);
    HermitianFormSpec spec;
    spec.K = K;
    spec.mu = Eigen::Map<const RVec>(mu.data(), static_cast<Eigen::Index>(mu.size()));
    return spec;
}

double hermitian_form_density(const HermitianFormSpec& spec, double q) {
    const Eigen::Index I = spec.size();
    const int K = spec.K;
    if (I == 0) throw std::invalid_argument("Hermitian form without eigenvalues has no density");
    if (q < 0.0) return 0.0;
    if (I == 1) return density_single(spec.mu[0], K, q);
    require_distinct(spec.mu);
    if (K == 1) {
        double sum = 0.0;
        for (Eigen::Index t = 0; t < I; ++t) {
            double den = 1.0;
            for (Eigen::Index l = 0; l < I; ++l)
                if (l != t) den *= spec.mu[t] - spec.mu[l];
            sum += std::exp(-q * spec.mu[t]) / den;
        }
        return (I % 2 == 0 ? -1.0 : 1.0) * spec.mu.prod() * sum;
    }
    if (I == 2 && K <= 3) {
        const double m1 = spec.mu[0];
        const double m2 = spec.mu[1];
        const double l12 = m1 / (m1 - m2);
        const double l21 = m2 / (m2 - m1);
        double p = l12 * density_single(m2, 1, q) + l21 * density_single(m1, 1, q);
        for (int k = 2; k <= K; ++k)
            p = std::pow(l12, k) * density_single(m2, k, q) + std::pow(l21, k) * density_single(m1, k, q) +
                k * l12 * l21 * p;
        return p;
    }
    return hermitian_form_density_residue(spec, q);
}

double hermitian_form_density_residue(const HermitianFormSpec& spec, double q) {
    const Eigen::Index I = spec.size();
    const int K = spec.K;
    if (I == 0) throw std::invalid_argument("Hermitian form without eigenvalues has no density");
    if (q < 0.0) return 0.0;
    require_distinct(spec.mu);
    double total = 0.0;
    for (Eigen::Index l = 0; l < I; ++l) {
        const double z = spec.mu[l];
        // Derivatives of g(z) = prod_{t != l} (z - mu_t)^-K through g' = h' g, h = ln g.
        std::vector<double> h(static_cast<std::size_t>(K) + 1, 0.0);
        for (int r = 1; r <= K; ++r)
            for (Eigen::Index t = 0; t < I; ++t)
                if (t != l)
                    h[r] += -K * ((r - 1) % 2 == 0 ? 1.0 : -1.0) * factorial(r - 1) / std::pow(z - spec.mu[t], r);
        std::vector<double> g(static_cast<std::size_t>(K), 0.0);
        g[0] = 1.0;
        for (Eigen::Index t = 0; t < I; ++t)
            if (t != l) g[0] *= std::pow(z - spec.mu[t], -K);
        for (int m = 1; m < K; ++m)
            for (int k = 0; k < m; ++k) g[m] += std::tgamma(m) / (factorial(k) * factorial(m - 1 - k)) * h[k + 1] * g[m - 1 - k];
        double deriv = 0.0;
        for (int m = 0; m < K; ++m)
            deriv += factorial(K - 1) / (factorial(m) * factorial(K - 1 - m)) * std::pow(-q, K - 1 - m) * g[m];
        total += deriv * std::exp(-q * z);
    }
    const double sign = (I * K + 1) % 2 == 0 ? 1.0 : -1.0;
    return sign * std::pow(spec.mu.prod(), K) / factorial(K - 1) * total;
}

HermitianFormSampler::HermitianFormSampler(const CMat& G, const CMat& B, int K) : G_(G), L_(psd_factor(B)), K_(K) {
    if (K < 1) throw std::invalid_argument("K must be at least 1");
    if (G.rows() != B.rows()) throw std::invalid_argument("G and B dimensions differ");
}

double HermitianFormSampler::operator()(Rng& rng) const {
    double q = 0.0;
    for (int k = 0; k < K_; ++k) {
        const CVec b = L_ * complex_normal_vector(rng, L_.cols());
        q += b.dot(G_ * b).real();
    }
    return q;
}

// ------------------------------------------------------- Type-2 error and PD

double type2_error(const HermitianFormSpec& spec, const TestConfig& cfg, Eigen::Index N, int M_hat) {
    const int K = cfg.K;
    if (K < 1 || K > 3 || spec.size() > 2)
        throw NotImplemented("closed-form Type-2 error covers at most two eigenvalues and K <= 3");
    const double U = normal_upper_fractile(cfg.alpha);
    if (spec.size() == 0) return 1.0 - cfg.alpha;
    const double scale = K * noise_scale(cfg, N, M_hat);
    if (spec.size() == 1) return beta_single(spec.mu[0] * scale, U, cfg.alpha)[K - 1];
    require_distinct(spec.mu);
    const double m1 = spec.mu[0];
    const double m2 = spec.mu[1];
    const double l12 = m1 / (m1 - m2);
    const double l21 = m2 / (m2 - m1);
    const auto b1 = beta_single(m1 * scale, U, cfg.alpha);
    const auto b2 = beta_single(m2 * scale, U, cfg.alpha);
    double b = l12 * b2[0] + l21 * b1[0];
    for (int k = 2; k <= K; ++k)
        b = std::pow(l12, k) * b2[k - 1] + std::pow(l21, k) * b1[k - 1] + k * l12 * l21 * b;
    return b;
}

double type2_error_quadrature(const HermitianFormSpec& spec, const TestConfig& cfg, Eigen::Index N, int M_hat) {
    const double U = normal_upper_fractile(cfg.alpha);
    if (spec.size() == 0) return 1.0 - cfg.alpha;
    const double scale = cfg.K * noise_scale(cfg, N, M_hat);
    auto integrand = [&](double t) { return normal_cdf(U - t / scale) * hermitian_form_density(spec, t); };
    // Split at the mean of the form so the adaptive rule sees the bulk.
    double mean = 0.0;
    for (Eigen::Index i = 0; i < spec.size(); ++i) mean += cfg.K / spec.mu[i];
    using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
    const double a = GK::integrate(integrand, 0.0, mean, 15, 1e-13);
    const double b = GK::integrate(integrand, mean, std::numeric_limits<double>::infinity(), 15, 1e-13);
    return a + b;
}

DirectionSet minimize_expected_q(const ArrayGeometry& geom, const DirectionSet& dirs_ex, const CMat& B, int m,
                                 Direction center) {
    if (m < 1) throw std::invalid_argument("need at least one direction");
    const CMat A_ex = transfer_matrix(geom, dirs_ex);
    const double bw = beamwidth(geom);
    double reach = bw / 2.0;
    for (const auto& d : dirs_ex) reach = std::max(reach, std::hypot(d.u - center.u, d.v - center.v) + bw / 2.0);
    const ArrayKind kind = geom.kind();
    auto objective = [&](const DirectionSet& d) { return expected_signal_residual(geom, A_ex, B, d); };

    // Dense stage over combinations of candidate directions.
    std::vector<Direction> cand;
    if (kind == ArrayKind::linear) {
        const int n = 41;
        for (int k = 0; k < n; ++k) cand.push_back({center.u - reach + 2.0 * reach * k / (n - 1), center.v});
    } else {
        const int n = m > 1 ? 11 : 21;
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
                const Direction d{center.u - reach + 2.0 * reach * a / (n - 1), center.v - reach + 2.0 * reach * b / (n - 1)};
                if (std::hypot(d.u - center.u, d.v - center.v) <= reach) cand.push_back(d);
            }
    }
    if (static_cast<std::size_t>(m) > cand.size()) throw std::invalid_argument("too many directions for the search grid");
    DirectionSet best;
    double best_value = std::numeric_limits<double>::infinity();
    std::vector<int> idx(static_cast<std::size_t>(m));
    const int n = static_cast<int>(cand.size());
    for (int i = 0; i < m; ++i) idx[i] = i;
    while (true) {
        std::vector<Direction> d;
        for (int i : idx) d.push_back(cand[static_cast<std::size_t>(i)]);
        DirectionSet ds(std::move(d));
        const double v = objective(ds);
        if (v < best_value) {
            best_value = v;
            best = ds;
        }
        int i = m - 1;
        while (i >= 0 && idx[i] == n - m + i) --i;
        if (i < 0) break;
        ++idx[i];
        for (int k = i + 1; k < m; ++k) idx[k] = idx[k - 1] + 1;
    }

    // Cyclic one-dimensional refinement with a shrinking bracket.
    RVec p = best.params(kind);
    double step = kind == ArrayKind::linear ? 2.0 * reach / 40.0 : 2.0 * reach / 10.0;
    for (int sweep = 0; sweep < 8; ++sweep) {
        for (Eigen::Index k = 0; k < p.size(); ++k) {
            auto f = [&](double x) {
                RVec trial = p;
                trial[k] = x;
                return objective(DirectionSet::from_params(trial, kind));
            };
            const auto r = boost::math::tools::brent_find_minima(f, p[k] - step, p[k] + step, 40);
            if (r.second < best_value) {
                best_value = r.second;
                p[k] = r.first;
            }
        }
        step *= 0.5;
    }
    return DirectionSet::from_params(p, kind).canonical();
}

DetectionProbability detection_probability(const ArrayGeometry& geom, const DirectionSet& dirs_ex, const CMat& B,
                                           const TestConfig& cfg) {
    const int M = static_cast<int>(dirs_ex.size());
    if (B.rows() != M || B.cols() != M) throw std::invalid_argument("B dimension mismatch");
    cfg.validate(geom.size());
    const CMat A_ex = transfer_matrix(geom, dirs_ex);
    Direction centroid{};
    for (const auto& d : dirs_ex) centroid = {centroid.u + d.u / M, centroid.v + d.v / M};
    const bool equal_pair = M == 2 && std::abs(B(0, 0) - B(1, 1)) <= 1e-12 * std::abs(B(0, 0) + B(1, 1));

    DetectionProbability out;
    out.pd = 1.0 - cfg.alpha;
    for (int m = 1; m < M; ++m) {
        const DirectionSet est = (equal_pair && m == 1) ? DirectionSet({centroid})
                                                          : minimize_expected_q(geom, dirs_ex, B, m, centroid);
        const CMat G = A_ex.adjoint() * projector(geom, est) * A_ex;
        const auto spec = HermitianFormSpec::from_matrices(G, B, cfg.K);
        const double beta = (spec.size() <= 2 && cfg.K <= 3) ? type2_error(spec, cfg, geom.size(), m)
                                                             : type2_error_quadrature(spec, cfg, geom.size(), m);
        out.pd *= 1.0 - beta;
        out.beta.push_back(beta);
        out.stage_estimates.push_back(est);
        out.specs.push_back(spec);
    }
    return out;
}

double snr_from_range(double range_ratio, Eigen::Index N) {
    if (!(range_ratio > 0.0)) throw std::invalid_argument("range ratio must be positive");
    return 2.0 / static_cast<double>(N) * std::pow(range_ratio, -4.0);
}

// ------------------------------------------------------ sequential test

TestOutcome multihypothesis_test(SnapshotStream& stream, const ArrayGeometry& geom, Direction center,
                                 const TestConfig& cfg, const EstimatorSpec& estimator) {
    cfg.validate(geom.size());
    TestOutcome out;
    for (int M = 1; M <= cfg.M_max; ++M) {
        StageRecord rec;
        rec.M = M;
        switch (estimator.kind) {
            case EstimatorKind::sa: {
                const auto trace = stochastic_approximation(stream, geom, center, M, estimator.sa);
                rec.estimate = trace.estimate.canonical();
                rec.iterations = estimator.sa.iterations;
                rec.projections = trace.projections;
                rec.degenerate_steps = trace.degenerate_steps;
                out.snapshots_used += static_cast<std::size_t>(trace.snapshots_used);
                break;
            }
            case EstimatorKind::grid: {
                const auto zs = stream.take(estimator.grid_snapshots);
                rec.estimate = averaged_grid_search(zs, geom, center, estimator.grid, M);
                out.snapshots_used += zs.size();
                break;
            }
            case EstimatorKind::fixed:
                if (static_cast<std::size_t>(M) > estimator.fixed.size())
                    throw std::invalid_argument("fixed estimator lacks directions for stage " + std::to_string(M));
                rec.estimate = estimator.fixed[static_cast<std::size_t>(M - 1)];
                break;
        }
        const auto zs = stream.take(cfg.K);
        out.snapshots_used += zs.size();
        rec.q_bar = q_bar(zs, geom, rec.estimate);
        rec.eta = threshold(cfg, geom.size(), M);
        if (cfg.element_powers) {
            try {
                rec.eta = threshold(cfg, projector(geom, rec.estimate));
            } catch (const IllConditioned&) {
                // Coincident estimates: keep the uniform-power threshold.
            }
        }
        rec.accepted = rec.q_bar <= rec.eta;
        out.stages.push_back(rec);
        if (rec.accepted) {
            out.M_hat = M;
            return out;
        }
    }
    out.M_hat = cfg.M_max + 1;
    out.exhausted = true;
    return out;
}

}  // namespace superres

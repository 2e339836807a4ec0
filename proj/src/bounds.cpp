#include "superres/bounds.hpp"

#include "superres/qfunc.hpp"

#include <cmath>

namespace superres {

namespace {

std::vector<std::string> direction_labels(const ArrayGeometry& geom, Eigen::Index M) {
    std::vector<std::string> labels;
    for (Eigen::Index i = 0; i < M; ++i) labels.push_back("u" + std::to_string(i + 1));
    if (geom.kind() == ArrayKind::planar)
        for (Eigen::Index i = 0; i < M; ++i) labels.push_back("v" + std::to_string(i + 1));
    return labels;
}

Crlb to_crlb(const RMat& block_inverse, int K, double bw) {
    if (K < 1) throw std::invalid_argument("CRLB needs K >= 1");
    Crlb out;
    out.variance = block_inverse.diagonal() / static_cast<double>(K);
    out.std_bw = out.variance.cwiseMax(0.0).cwiseSqrt() / bw;
    return out;
}

}  // namespace

FisherBlocks fisher_deterministic(const ArrayGeometry& geom, const DirectionSet& dirs, const CVec& b,
                                  double sigma2) {
    const CMat A = transfer_matrix(geom, dirs);
    const Eigen::Index M = A.cols();
    if (b.size() != M) throw std::invalid_argument("amplitude count differs from M");
    if (!(gram_condition(A) < condition_threshold)) throw IllConditioned(gram_condition(A));

    const CMat W = weighted_steering(geom, dirs);
    const Eigen::Index P = W.cols();
    CMat s(A.rows(), P + 2 * M);
    for (Eigen::Index p = 0; p < P; ++p) {
        const auto slot = param_slot(geom, M, p);
        s.col(p) = -j1 * W.col(p) * b[slot.target];
    }
    s.middleCols(P, M) = A;
    s.rightCols(M) = j1 * A;

    FisherBlocks out;
    out.F = (2.0 / sigma2) * (s.adjoint() * s).real();
    out.F = 0.5 * (out.F + out.F.transpose()).eval();
    out.direction_count = P;
    out.labels = direction_labels(geom, M);
    for (Eigen::Index i = 0; i < M; ++i) out.labels.push_back("re_b" + std::to_string(i + 1));
    for (Eigen::Index i = 0; i < M; ++i) out.labels.push_back("im_b" + std::to_string(i + 1));
    return out;
}

FisherBlocks fisher_model4(const ArrayGeometry& geom, const DirectionSet& dirs, const RVec& powers,
                           double sigma2) {
    const CMat A = transfer_matrix(geom, dirs);
    const Eigen::Index M = A.cols();
    const Eigen::Index N = A.rows();
    if (powers.size() != M) throw std::invalid_argument("power count differs from M");

    const CMat R = sigma2 * CMat::Identity(N, N) + A * powers.cast<cplx>().asDiagonal() * A.adjoint();
    const CMat Rinv = R.llt().solve(CMat::Identity(N, N));
    const CMat W = weighted_steering(geom, dirs);
    const Eigen::Index P = W.cols();

    std::vector<CMat> dR;
    for (Eigen::Index p = 0; p < P; ++p) {
        const auto slot = param_slot(geom, M, p);
        const CVec a = A.col(slot.target);
        const CVec a_w = -j1 * W.col(p);
        dR.push_back(powers[slot.target] * (a_w * a.adjoint() + a * a_w.adjoint()));
    }
    for (Eigen::Index i = 0; i < M; ++i) dR.push_back(A.col(i) * A.col(i).adjoint());

    std::vector<CMat> RinvdR;
    RinvdR.reserve(dR.size());
    for (const auto& d : dR) RinvdR.push_back(Rinv * d);

    const auto n = static_cast<Eigen::Index>(dR.size());
    FisherBlocks out;
    out.F.resize(n, n);
    for (Eigen::Index p = 0; p < n; ++p)
        for (Eigen::Index q = p; q < n; ++q)
            out.F(p, q) = out.F(q, p) = (RinvdR[p] * RinvdR[q]).trace().real();
    out.direction_count = P;
    out.labels = direction_labels(geom, M);
    for (Eigen::Index i = 0; i < M; ++i) out.labels.push_back("p" + std::to_string(i + 1));
    return out;
}

SymmetricInverse symmetric_inverse(const RMat& F, double rel_tol) {
    const Eigen::SelfAdjointEigenSolver<RMat> eig(0.5 * (F + F.transpose()));
    const RVec& l = eig.eigenvalues();
    const RMat& V = eig.eigenvectors();
    const double cutoff = rel_tol * std::max(std::abs(l[l.size() - 1]), 1e-300);
    SymmetricInverse out;
    RVec inv_l = RVec::Zero(l.size());
    std::vector<Eigen::Index> null_idx;
    for (Eigen::Index i = 0; i < l.size(); ++i) {
        if (l[i] > cutoff)
            inv_l[i] = 1.0 / l[i];
        else
            null_idx.push_back(i);
    }
    out.inverse = V * inv_l.asDiagonal() * V.transpose();
    out.singular = !null_idx.empty();
    out.nullspace.resize(F.rows(), static_cast<Eigen::Index>(null_idx.size()));
    for (std::size_t k = 0; k < null_idx.size(); ++k) out.nullspace.col(static_cast<Eigen::Index>(k)) = V.col(null_idx[k]);
    return out;
}

RMat direction_block_inverse(const FisherBlocks& fisher) {
    const auto inv = symmetric_inverse(fisher.F);
    if (inv.singular) throw SingularFisher(inv.nullspace);
    const Eigen::Index P = fisher.direction_count;
    return inv.inverse.topLeftCorner(P, P);
}

Crlb crlb_directions(const ArrayGeometry& geom, const DirectionSet& dirs, const CVec& b, int K,
                     double sigma2) {
    return to_crlb(direction_block_inverse(fisher_deterministic(geom, dirs, b, sigma2)), K, beamwidth(geom));
}

Crlb crlb_model4(const ArrayGeometry& geom, const DirectionSet& dirs, const RVec& powers, int K,
                 double sigma2) {
    return to_crlb(direction_block_inverse(fisher_model4(geom, dirs, powers, sigma2)), K, beamwidth(geom));
}

TwoTargetPatterns two_target_patterns(const ArrayGeometry& geom, const DirectionSet& dirs) {
    if (geom.kind() != ArrayKind::linear || dirs.size() != 2)
        throw std::invalid_argument("two-target patterns need a linear array and two directions");
    const CVec a1 = steering_vector(geom, dirs[0]);
    const CVec a2 = steering_vector(geom, dirs[1]);
    const RVec& x = geom.x();
    const auto N = static_cast<double>(geom.size());

    TwoTargetPatterns p;
    p.f = a1.dot(a2);
    p.d = a1.dot(x.cast<cplx>().cwiseProduct(a2));
    p.h = a1.dot(x.array().square().matrix().cast<cplx>().cwiseProduct(a2));
    p.sum_x2 = x.squaredNorm();
    p.symmetric_array = std::abs(x.sum()) <= 1e-12 * x.cwiseAbs().sum();
    const double den = N * N - std::norm(p.f);
    p.c11 = p.sum_x2 - N * std::norm(p.d) / den;
    p.c12 = p.h + std::conj(p.f) * p.d * p.d / den;
    return p;
}

CurvatureReport curvature_analysis(const ArrayGeometry& geom, const DirectionSet& dirs, const CMat& B) {
    CurvatureReport out;
    out.S = expected_hessian_at_min(geom, dirs, B);
    const Eigen::SelfAdjointEigenSolver<RMat> eig(out.S);
    out.eigenvalues = eig.eigenvalues();
    out.eigenvectors = eig.eigenvectors();
    const double lo = out.eigenvalues[0];
    const double hi = out.eigenvalues[out.eigenvalues.size() - 1];
    out.eccentricity = hi > 0.0 ? std::sqrt(std::max(0.0, 1.0 - lo / hi)) : 0.0;
    const auto inv = symmetric_inverse(out.S);
    out.crlb_std_bw = inv.inverse.diagonal().cwiseMax(0.0).cwiseSqrt() / beamwidth(geom);
    if (geom.kind() == ArrayKind::linear && dirs.size() == 2) out.patterns = two_target_patterns(geom, dirs);
    return out;
}

}  // namespace superres

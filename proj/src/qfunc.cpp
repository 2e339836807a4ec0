#include "superres/qfunc.hpp"

#include <limits>

namespace superres {

namespace {

struct Fit {
    CVec b_hat;
    double condition = 1.0;
    bool degenerate = false;
};

Fit least_squares(const CMat& A, const CVec& z) {
    Fit fit;
    if (A.cols() == 0) return fit;
    fit.condition = gram_condition(A);
    if (fit.condition < condition_threshold) {
        const CMat gram = A.adjoint() * A;
        fit.b_hat = gram.ldlt().solve(A.adjoint() * z);
        return fit;
    }
    // cond(A*A) >= 1e10 means cond(A) >= 1e5: treat columns below that pivot ratio as dependent.
    // The threshold decides the pivot count at factorization time, so it must be set before compute().
    // The minimum-norm solution keeps Q continuous as two directions merge.
    Eigen::CompleteOrthogonalDecomposition<CMat> cod(A.rows(), A.cols());
    cod.setThreshold(1e-5);
    cod.compute(A);
    fit.b_hat = cod.solve(z);
    fit.degenerate = true;
    return fit;
}

/// Element-wise product of the expanded amplitude moment and the curvature kernel.
RMat twice_real_weighted(const CMat& moment, const CMat& K, const ArrayGeometry& geom) {
    const Eigen::Index P = K.rows();
    const Eigen::Index M = moment.rows();
    RMat out(P, P);
    for (Eigen::Index p = 0; p < P; ++p)
        for (Eigen::Index q = 0; q < P; ++q) {
            const auto ip = param_slot(geom, M, p).target;
            const auto iq = param_slot(geom, M, q).target;
            out(p, q) = 2.0 * (std::conj(moment(ip, iq)) * K(p, q)).real();
        }
    return 0.5 * (out + out.transpose());
}

}  // namespace

double gram_condition(const CMat& A) {
    if (A.cols() == 0) return 1.0;
    const Eigen::SelfAdjointEigenSolver<CMat> eig(A.adjoint() * A, Eigen::EigenvaluesOnly);
    const RVec& l = eig.eigenvalues();
    const double lo = l[0];
    const double hi = l[l.size() - 1];
    return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
}

CMat projector(const CMat& A) {
    const Eigen::Index n = A.rows();
    if (A.cols() == 0) return CMat::Identity(n, n);
    const double cond = gram_condition(A);
    if (!(cond < condition_threshold)) throw IllConditioned(cond);
    const CMat gram = A.adjoint() * A;
    const CMat G = CMat::Identity(n, n) - A * gram.ldlt().solve(A.adjoint());
    return 0.5 * (G + G.adjoint());
}

CMat projector(const ArrayGeometry& geom, const DirectionSet& dirs) {
    return projector(transfer_matrix(geom, dirs));
}

QEvaluation q_value(const CVec& z, const ArrayGeometry& geom, const DirectionSet& dirs) {
    const CMat A = transfer_matrix(geom, dirs);
    QEvaluation out;
    if (dirs.empty()) {
        out.q = z.squaredNorm();
        return out;
    }
    Fit fit = least_squares(A, z);
    out.q = (z - A * fit.b_hat).squaredNorm();
    out.b_hat = std::move(fit.b_hat);
    out.condition = fit.condition;
    out.degenerate = fit.degenerate;
    return out;
}

GradientEvaluation q_gradient(const CVec& z, const ArrayGeometry& geom, const DirectionSet& dirs) {
    const CMat A = transfer_matrix(geom, dirs);
    const Eigen::Index M = A.cols();
    const bool planar = geom.kind() == ArrayKind::planar;
    GradientEvaluation out;
    auto& ev = out.eval;
    ev.condition = gram_condition(A);
    if (!(ev.condition < condition_threshold)) throw IllConditioned(ev.condition);

    const CMat gram = A.adjoint() * A;
    auto& beams = out.beams;
    beams.sum = A.adjoint() * z;
    ev.b_hat = gram.ldlt().solve(beams.sum);
    ev.q = (z - A * ev.b_hat).squaredNorm();

    // Difference beams a_i* D z and the difference patterns a_i* D a_k.
    const CMat DxA = geom.x().cast<cplx>().asDiagonal() * A;
    beams.diff_x = DxA.adjoint() * z;
    const CVec pattern_x = DxA.adjoint() * A * ev.b_hat;
    ev.gradient.resize(planar ? 2 * M : M);
    for (Eigen::Index i = 0; i < M; ++i)
        ev.gradient[i] = 2.0 * (std::conj(ev.b_hat[i]) * (beams.diff_x[i] - pattern_x[i])).imag();
    if (planar) {
        const CMat DyA = geom.y().cast<cplx>().asDiagonal() * A;
        beams.diff_y = DyA.adjoint() * z;
        const CVec pattern_y = DyA.adjoint() * A * ev.b_hat;
        for (Eigen::Index i = 0; i < M; ++i)
            ev.gradient[M + i] = 2.0 * (std::conj(ev.b_hat[i]) * (beams.diff_y[i] - pattern_y[i])).imag();
    }
    return out;
}

double expected_q(const ArrayGeometry& geom, const DirectionSet& dirs, const DirectionSet& dirs_ex,
                  const CMat& B, const CMat& R) {
    const CMat A_ex = transfer_matrix(geom, dirs_ex);
    if (B.rows() != A_ex.cols() || B.cols() != A_ex.cols()) throw std::invalid_argument("B dimension mismatch");
    if (R.rows() != geom.size() || R.cols() != geom.size()) throw std::invalid_argument("R dimension mismatch");
    const CMat G = projector(geom, dirs);
    return (A_ex.adjoint() * G * A_ex * B).trace().real() + (G * R).trace().real();
}

double var_q(const ArrayGeometry& geom, const DirectionSet& dirs, const CMat& R) {
    if (R.rows() != geom.size() || R.cols() != geom.size()) throw std::invalid_argument("R dimension mismatch");
    const CMat GR = projector(geom, dirs) * R;
    return (GR * GR).trace().real();
}

ParamSlot param_slot(const ArrayGeometry& geom, Eigen::Index M, Eigen::Index p) {
    if (geom.kind() == ArrayKind::linear) return {p, false};
    return {p % M, p >= M};
}

CMat weighted_steering(const ArrayGeometry& geom, const DirectionSet& dirs) {
    const CMat A = transfer_matrix(geom, dirs);
    const Eigen::Index M = A.cols();
    const Eigen::Index P = geom.kind() == ArrayKind::planar ? 2 * M : M;
    CMat W(A.rows(), P);
    for (Eigen::Index p = 0; p < P; ++p) {
        const auto slot = param_slot(geom, M, p);
        const RVec& d = slot.is_v ? geom.y() : geom.x();
        W.col(p) = d.cast<cplx>().cwiseProduct(A.col(slot.target));
    }
    return W;
}

CMat curvature_kernel(const ArrayGeometry& geom, const DirectionSet& dirs) {
    const CMat W = weighted_steering(geom, dirs);
    return W.adjoint() * projector(geom, dirs) * W;
}

RMat expected_hessian_at_min(const ArrayGeometry& geom, const DirectionSet& dirs_ex, const CMat& B) {
    if (B.rows() != static_cast<Eigen::Index>(dirs_ex.size())) throw std::invalid_argument("B dimension mismatch");
    return twice_real_weighted(B, curvature_kernel(geom, dirs_ex), geom);
}

RMat expected_gradient_outer(const ArrayGeometry& geom, const DirectionSet& dirs_ex, const CMat& B,
                             double sigma2, bool include_noise_term) {
    if (B.rows() != static_cast<Eigen::Index>(dirs_ex.size())) throw std::invalid_argument("B dimension mismatch");
    const CMat A = transfer_matrix(geom, dirs_ex);
    CMat moment = B;
    if (include_noise_term) moment += sigma2 * (A.adjoint() * A).inverse();
    return sigma2 * twice_real_weighted(moment, curvature_kernel(geom, dirs_ex), geom);
}

CMat projector_derivative(const ArrayGeometry& geom, const DirectionSet& dirs, Eigen::Index p) {
    const CMat A = transfer_matrix(geom, dirs);
    const Eigen::Index M = A.cols();
    const auto slot = param_slot(geom, M, p);
    const RVec& d = slot.is_v ? geom.y() : geom.x();
    CMat Ap = CMat::Zero(A.rows(), M);
    Ap.col(slot.target) = -j1 * d.cast<cplx>().cwiseProduct(A.col(slot.target));
    const CMat pinv = (A.adjoint() * A).ldlt().solve(A.adjoint());
    const CMat T = projector(A) * Ap * pinv;
    return -(T + T.adjoint());
}

}  // namespace superres

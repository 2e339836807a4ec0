#pragma once

#include "superres/geometry.hpp"
#include "superres/types.hpp"

namespace superres {

/// Above this condition number of A*A the least-squares fit switches from the
/// normal equations to a minimum-norm complete orthogonal decomposition.
inline constexpr double condition_threshold = 1e10;

/// Residual power Q = ||z - A b_hat||^2 at a direction set, with the fitted amplitudes.
struct QEvaluation {
    double q = 0.0;
    CVec b_hat;
    /// d Q / d params, ordered u_1..u_M then v_1..v_M for planar arrays; empty
    /// unless produced by q_gradient.
    RVec gradient;
    double condition = 1.0;
    /// True when the rank-revealing path dropped dependent columns.
    bool degenerate = false;
};

/// Beamformer outputs the gradient is assembled from.
struct BeamOutputs {
    CVec sum;     ///< A* z
    CVec diff_x;  ///< a_i* D_x z
    CVec diff_y;  ///< a_i* D_y z (planar only)
};

struct GradientEvaluation {
    QEvaluation eval;
    BeamOutputs beams;
};

/// cond(A*A) in the 2-norm.
[[nodiscard]] double gram_condition(const CMat& A);

/// Orthogonal projector onto the complement of span A(dirs); throws IllConditioned.
[[nodiscard]] CMat projector(const ArrayGeometry& geom, const DirectionSet& dirs);
[[nodiscard]] CMat projector(const CMat& A);

[[nodiscard]] QEvaluation q_value(const CVec& z, const ArrayGeometry& geom, const DirectionSet& dirs);

/// Q, amplitudes and analytic gradient from sum and difference beams. Throws
/// IllConditioned for (nearly) coincident directions.
[[nodiscard]] GradientEvaluation q_gradient(const CVec& z, const ArrayGeometry& geom,
                                            const DirectionSet& dirs);

/// E{Q(dirs)} for z = A(dirs_ex) b + n with E{b b*} = B and E{n n*} = R:
/// tr(A_ex* Gamma A_ex B) + tr(Gamma R).
[[nodiscard]] double expected_q(const ArrayGeometry& geom, const DirectionSet& dirs,
                                const DirectionSet& dirs_ex, const CMat& B, const CMat& R);

/// var Q = tr(Gamma R Gamma R) for zero-mean z with covariance R.
[[nodiscard]] double var_q(const ArrayGeometry& geom, const DirectionSet& dirs, const CMat& R);

/// Matrix K_pq = w_p* Gamma w_q with w_p = D_p a_i(p), over the direction parameters.
[[nodiscard]] CMat curvature_kernel(const ArrayGeometry& geom, const DirectionSet& dirs);

/// E{Q_ww} at the true directions for white unit noise and amplitude second moment B.
[[nodiscard]] RMat expected_hessian_at_min(const ArrayGeometry& geom, const DirectionSet& dirs_ex,
                                           const CMat& B);

/// E{Q_w Q_w^T} at the true directions for noise sigma2 * I. The gradient there is
/// 2 Im(b_hat_i* w_i* Gamma n) with b_hat independent of Gamma n, which gives
/// 2 sigma2 Re(conj(B + sigma2 (A*A)^-1) .* K). With include_noise_term = false the
/// (A*A)^-1 part is dropped and the result equals expected_hessian_at_min * sigma2.
[[nodiscard]] RMat expected_gradient_outer(const ArrayGeometry& geom, const DirectionSet& dirs_ex,
                                           const CMat& B, double sigma2 = 1.0,
                                           bool include_noise_term = true);

/// d Gamma / d param_p = -(Gamma A_p A^+ + (Gamma A_p A^+)*), A_p holding only the
/// derivative of the column that parameter p belongs to.
[[nodiscard]] CMat projector_derivative(const ArrayGeometry& geom, const DirectionSet& dirs,
                                        Eigen::Index p);

/// Parameter index p -> (target index, uses D_y).
struct ParamSlot {
    Eigen::Index target;
    bool is_v;
};
[[nodiscard]] ParamSlot param_slot(const ArrayGeometry& geom, Eigen::Index M, Eigen::Index p);

/// D_p a_i for every parameter, as columns.
[[nodiscard]] CMat weighted_steering(const ArrayGeometry& geom, const DirectionSet& dirs);

}  // namespace superres

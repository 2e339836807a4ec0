#pragma once

#include "superres/geometry.hpp"
#include "superres/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace superres {

/// Fisher information over (directions; nuisance parameters). The first
/// `direction_count` rows are the direction parameters in the stacked u/v order.
struct FisherBlocks {
    RMat F;
    Eigen::Index direction_count = 0;
    std::vector<std::string> labels;
};

/// Deterministic amplitudes in noise sigma2 * I, parameters (w; Re b; Im b), one snapshot.
[[nodiscard]] FisherBlocks fisher_deterministic(const ArrayGeometry& geom, const DirectionSet& dirs,
                                                const CVec& b, double sigma2 = 1.0);

/// Rayleigh targets, R = sigma2 I + A diag(p) A*, parameters (w; p), one snapshot.
[[nodiscard]] FisherBlocks fisher_model4(const ArrayGeometry& geom, const DirectionSet& dirs,
                                         const RVec& powers, double sigma2 = 1.0);

class SingularFisher : public std::runtime_error {
public:
    SingularFisher(RMat nullspace)
        : std::runtime_error("Fisher information is singular (nullspace dimension " +
                             std::to_string(nullspace.cols()) + ")"),
          nullspace_(std::move(nullspace)) {}
    [[nodiscard]] const RMat& nullspace() const noexcept { return nullspace_; }

private:
    RMat nullspace_;
};

struct SymmetricInverse {
    RMat inverse;  ///< pseudo-inverse when singular
    RMat nullspace;
    bool singular = false;
};

/// Eigen-decomposition inverse; eigenvalues below rel_tol * max are treated as zero.
[[nodiscard]] SymmetricInverse symmetric_inverse(const RMat& F, double rel_tol = 1e-12);

/// [F^-1] restricted to the direction parameters; throws SingularFisher.
[[nodiscard]] RMat direction_block_inverse(const FisherBlocks& fisher);

struct Crlb {
    RVec variance;  ///< per direction parameter, direction-cosine units squared
    RVec std_bw;    ///< standard deviations in beamwidths
};

/// (1/K) diag [F^-1]_ww for K snapshots of deterministic amplitudes.
[[nodiscard]] Crlb crlb_directions(const ArrayGeometry& geom, const DirectionSet& dirs, const CVec& b,
                                   int K = 1, double sigma2 = 1.0);
[[nodiscard]] Crlb crlb_model4(const ArrayGeometry& geom, const DirectionSet& dirs, const RVec& powers,
                               int K = 1, double sigma2 = 1.0);

/// Closed-form pieces of the equal-amplitude two-target curvature on a linear array:
/// sum pattern f = a1* a2, difference pattern d = a1* D a2 = -j f', h = a1* D^2 a2 = -f''.
struct TwoTargetPatterns {
    cplx f;
    cplx d;
    cplx h;
    double sum_x2 = 0.0;
    double c11 = 0.0;  ///< sum x^2 - N |d|^2 / (N^2 - |f|^2)
    cplx c12;          ///< h + conj(f) d^2 / (N^2 - |f|^2); equals h - f|d|^2/(...) for symmetric arrays
    bool symmetric_array = false;
};

struct CurvatureReport {
    RMat S;
    RVec eigenvalues;  ///< ascending
    RMat eigenvectors;
    double eccentricity = 0.0;
    /// Single-snapshot bound sqrt(diag S^-1) in beamwidths.
    RVec crlb_std_bw;
    std::optional<TwoTargetPatterns> patterns;
};

[[nodiscard]] TwoTargetPatterns two_target_patterns(const ArrayGeometry& geom, const DirectionSet& dirs);

/// Curvature of E{Q} at the true directions for amplitude moment B.
[[nodiscard]] CurvatureReport curvature_analysis(const ArrayGeometry& geom, const DirectionSet& dirs,
                                                 const CMat& B);

}  // namespace superres

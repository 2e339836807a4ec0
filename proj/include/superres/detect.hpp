#pragma once

#include "superres/estimate.hpp"
#include "superres/geometry.hpp"
#include "superres/types.hpp"

#include <optional>
#include <span>
#include <vector>

namespace superres {

// ------------------------------------------------------- statistic and thresholds

enum class ThresholdMode { chi2, normal };

/// Level and noise assumptions of the target-count test. Fractiles follow
/// Phi(U_alpha) = 1 - alpha and P{chi^2 <= c} = 1 - alpha.
struct TestConfig {
    double alpha = 0.05;
    double sigma2 = 1.0;
    int K = 1;
    int M_max = 3;
    ThresholdMode mode = ThresholdMode::chi2;
    /// Known unequal receiver powers; switches the threshold to the normal
    /// approximation with mean tr(Gamma D) and variance tr(Gamma D Gamma D) / K.
    std::optional<RVec> element_powers;

    void validate(Eigen::Index N) const;
};

/// (1/K) sum_k ||Gamma(dirs) z_k||^2.
[[nodiscard]] double q_bar(std::span<const CVec> snapshots, const ArrayGeometry& geom, const DirectionSet& dirs);

/// Acceptance threshold for H_M on an N-element array.
[[nodiscard]] double threshold(const TestConfig& cfg, Eigen::Index N, int M);
/// Threshold for the residual projector actually used; honours element_powers.
[[nodiscard]] double threshold(const TestConfig& cfg, const CMat& Gamma);

struct LrStatistic {
    double value = 0.0;      ///< 2 ln T = (2K / sigma2) ||Gamma z_mean||^2
    double threshold = 0.0;  ///< chi^2 fractile on `dof` degrees of freedom
    int dof = 0;             ///< 2N - 3M (linear) or 2N - 4M (planar)
};

/// Likelihood-ratio statistic for constant amplitudes. Its chi^2 law on `dof`
/// degrees of freedom applies when dirs is the maximiser of the likelihood for
/// these snapshots; at fixed true directions the law is chi^2 on 2(N - M).
[[nodiscard]] LrStatistic lr_statistic(std::span<const CVec> snapshots, const ArrayGeometry& geom,
                                       const DirectionSet& dirs, double alpha, double sigma2 = 1.0);

// ---------------------------------------------------------- Hermitian forms

/// Law of q = sum_{k=1..K} b_k* G b_k with b_k ~ CN(0, B): only mu_i = 1 / lambda_i(G B) matter.
struct HermitianFormSpec {
    RVec mu;
    int K = 1;

    /// Eigenvalues of G B below rel_tol * max are dropped (they contribute nothing).
    static HermitianFormSpec from_matrices(const CMat& G, const CMat& B, int K, double rel_tol = 1e-12);
    [[nodiscard]] Eigen::Index size() const noexcept { return mu.size(); }
};

/// Density at q >= 0. Uses the closed forms for one eigenvalue, one snapshot, or
/// two eigenvalues with K <= 3, and the residue formula otherwise. Throws
/// std::invalid_argument when two mu coincide.
[[nodiscard]] double hermitian_form_density(const HermitianFormSpec& spec, double q);
/// Residue formula for any number of distinct eigenvalues and any K.
[[nodiscard]] double hermitian_form_density_residue(const HermitianFormSpec& spec, double q);

/// Draws q directly from Gaussian amplitudes.
class HermitianFormSampler {
public:
    HermitianFormSampler(const CMat& G, const CMat& B, int K);
    [[nodiscard]] double operator()(Rng& rng) const;

private:
    CMat G_;
    CMat L_;
    int K_;
};

// ------------------------------------------------------- Type-2 error and PD

/// beta = P{Q_bar <= eta} when the fitted model misses signal whose residual form
/// has parameters `spec`, with the normal-approximation threshold on N - M_hat
/// residual dimensions. Closed form for spec.size() <= 2 and K <= 3; throws
/// NotImplemented otherwise.
[[nodiscard]] double type2_error(const HermitianFormSpec& spec, const TestConfig& cfg, Eigen::Index N, int M_hat);
/// Same quantity by numerical integration over the Hermitian-form density.
[[nodiscard]] double type2_error_quadrature(const HermitianFormSpec& spec, const TestConfig& cfg, Eigen::Index N,
                                            int M_hat);

struct DetectionProbability {
    double pd = 0.0;
    std::vector<double> beta;                  ///< per under-fitted stage M_hat = 1 .. M - 1
    std::vector<DirectionSet> stage_estimates; ///< minimiser of E{Q} for each such stage
    std::vector<HermitianFormSpec> specs;
};

/// P{M_hat = M} = (1 - alpha) prod (1 - beta_m) for M targets with amplitude
/// moment B. Two equal-power targets use the midpoint for the one-target stage;
/// otherwise E{Q} is minimised by a dense search plus coordinate refinement.
[[nodiscard]] DetectionProbability detection_probability(const ArrayGeometry& geom, const DirectionSet& dirs_ex,
                                                         const CMat& B, const TestConfig& cfg);

/// Total per-element SNR (linear) at range R for a target whose beamformed SNR is
/// 3 dB at range R0, with received power proportional to R^-4.
[[nodiscard]] double snr_from_range(double range_ratio, Eigen::Index N);

/// Minimiser of E{Q} over m directions near `center` for white noise.
[[nodiscard]] DirectionSet minimize_expected_q(const ArrayGeometry& geom, const DirectionSet& dirs_ex,
                                               const CMat& B, int m, Direction center);

// ------------------------------------------------------ sequential test

enum class EstimatorKind { sa, grid, fixed };

struct EstimatorSpec {
    EstimatorKind kind = EstimatorKind::sa;
    SAConfig sa;
    GridSpec grid;
    int grid_snapshots = 1;
    /// Directions for stage M at index M - 1 (fixed estimator only).
    std::vector<DirectionSet> fixed;
};

struct StageRecord {
    int M = 0;
    DirectionSet estimate;
    double q_bar = 0.0;
    double eta = 0.0;
    bool accepted = false;
    int iterations = 0;
    int projections = 0;
    int degenerate_steps = 0;
};

struct TestOutcome {
    int M_hat = 0;
    /// Every stage up to M_max rejected; M_hat is then M_max + 1.
    bool exhausted = false;
    std::vector<StageRecord> stages;
    std::size_t snapshots_used = 0;
};

/// Ascending test over M = 1 .. M_max. Each stage estimates directions from the
/// stream and then evaluates Q_bar on K further snapshots, so the statistic never
/// reuses estimation data.
[[nodiscard]] TestOutcome multihypothesis_test(SnapshotStream& stream, const ArrayGeometry& geom, Direction center,
                                               const TestConfig& cfg, const EstimatorSpec& estimator);

}  // namespace superres

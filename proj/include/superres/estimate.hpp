#pragma once

#include "superres/geometry.hpp"
#include "superres/types.hpp"

#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace superres {

// ---------------------------------------------------------------- grid search

/// Grid of look directions with spacing BW / divisions around a coarse centre.
/// Linear arrays use divisions + 1 beams spanning one beamwidth; planar arrays use
/// a triangular patch with divisions - 1 beams per side.
struct GridSpec {
    int divisions = 6;
    /// Overrides the generated grid when non-empty.
    std::vector<Direction> points;
};

[[nodiscard]] int grid_beam_count(int divisions, ArrayKind kind);
[[nodiscard]] std::vector<Direction> grid_points(const ArrayGeometry& geom, Direction center,
                                                 const GridSpec& spec);

struct GridResult {
    DirectionSet best;
    double q = 0.0;
    std::size_t evaluations = 0;
};

/// Precomputed beam bundle and (A*A)^-1 table for every M-subset of the grid, so a
/// search costs one set of sum beams plus one small quadratic form per subset.
class GridTable {
public:
    GridTable(const ArrayGeometry& geom, std::vector<Direction> points, int M);

    [[nodiscard]] GridResult search(const CVec& z) const;
    [[nodiscard]] std::size_t combinations() const noexcept { return combos_.size(); }
    [[nodiscard]] const std::vector<Direction>& points() const noexcept { return points_; }

private:
    std::vector<Direction> points_;
    CMat beams_;
    std::vector<std::vector<int>> combos_;
    std::vector<CMat> inverse_gram_;
};

[[nodiscard]] GridResult grid_search(const CVec& z, const ArrayGeometry& geom, Direction center,
                                     const GridSpec& spec, int M);

/// Per-snapshot grid search, then the mean of the canonically ordered estimates.
[[nodiscard]] DirectionSet averaged_grid_search(std::span<const CVec> snapshots, const ArrayGeometry& geom,
                                                Direction center, const GridSpec& spec, int M);

// ------------------------------------------------------- snapshot streams

class StreamExhausted : public std::runtime_error {
public:
    StreamExhausted() : std::runtime_error("snapshot stream exhausted") {}
};

/// Source of measurement vectors consumed one at a time.
class SnapshotStream {
public:
    virtual ~SnapshotStream() = default;
    [[nodiscard]] virtual CVec next() = 0;
    [[nodiscard]] std::vector<CVec> take(int count);
};

class VectorStream final : public SnapshotStream {
public:
    explicit VectorStream(std::span<const CVec> data) : data_(data) {}
    CVec next() override;
    [[nodiscard]] std::size_t consumed() const noexcept { return pos_; }

private:
    std::span<const CVec> data_;
    std::size_t pos_ = 0;
};

class GeneratorStream final : public SnapshotStream {
public:
    GeneratorStream(std::function<CVec()> gen, std::size_t limit = std::numeric_limits<std::size_t>::max())
        : gen_(std::move(gen)), limit_(limit) {}
    CVec next() override;
    [[nodiscard]] std::size_t consumed() const noexcept { return count_; }

private:
    std::function<CVec()> gen_;
    std::size_t limit_;
    std::size_t count_ = 0;
};

// ------------------------------------------------- stochastic approximation

enum class Correction { plain, log, arctan, hard_limit, sign };

struct SAConfig {
    Correction variant = Correction::plain;
    /// Explicit step scale; calibrated from three snapshots when absent.
    std::optional<double> mu;
    /// Auto-step factor; 0.9 for linear and 1.8 for planar arrays when absent.
    std::optional<double> delta;
    /// Saturation bound; eta_factor times the calibration gradient norm when absent.
    std::optional<double> eta;
    double eta_factor = 0.8;
    /// Also saturate the log, arctan and sign corrections at eta.
    bool saturate = false;
    int iterations = 17;
    double epsilon = 0.1;
    double spread = 0.9;
    int start_index = 3;
    std::optional<DirectionSet> initial;
};

/// Admissible region around a coarse centre: every target within BW/2 (open set) and,
/// for linear arrays, ordered with pairwise gaps of at least epsilon*BW/2. The
/// projection target shrinks the radius to (1 - epsilon)*BW/2.
class SearchRegion {
public:
    SearchRegion(ArrayKind kind, Direction center, double bw, double epsilon);

    [[nodiscard]] bool contains(const DirectionSet& dirs) const;
    [[nodiscard]] bool contains_inner(const DirectionSet& dirs, double tol = 1e-12) const;
    /// Euclidean projection onto the closed inner region (linear); per-target disk
    /// clamp (planar).
    [[nodiscard]] DirectionSet project(const DirectionSet& dirs) const;

    [[nodiscard]] Direction center() const noexcept { return center_; }
    [[nodiscard]] double outer_radius() const noexcept { return bw_ / 2.0; }
    [[nodiscard]] double inner_radius() const noexcept { return bw_ / 2.0 * (1.0 - epsilon_); }
    [[nodiscard]] double min_separation() const noexcept { return bw_ / 2.0 * epsilon_; }

private:
    ArrayKind kind_;
    Direction center_;
    double bw_;
    double epsilon_;
};

/// Starting configuration: +-spread*BW/2 along u for two targets, evenly spread on a
/// line (linear) or circle (planar) otherwise, and the diagonal pattern for three
/// targets on planar arrays.
[[nodiscard]] DirectionSet initial_directions(const ArrayGeometry& geom, Direction center, int M,
                                              double spread = 0.9);

struct EstimationTrace {
    std::vector<DirectionSet> iterates;  ///< iterations + 1 entries, starting value first
    DirectionSet estimate;
    std::vector<double> q;               ///< Q at each iterate that produced an update
    double mu = 0.0;
    double ae = 0.0;
    double eta = 0.0;
    int projections = 0;
    int degenerate_steps = 0;
    int snapshots_used = 0;
};

/// Correction vector G for the chosen variant.
[[nodiscard]] RVec correction(const RVec& grad, double q, const SAConfig& cfg, double eta);

[[nodiscard]] EstimationTrace stochastic_approximation(SnapshotStream& stream, const ArrayGeometry& geom,
                                                       Direction center, int M, const SAConfig& cfg);

/// 2 Re(D/S) for one target: the monopulse ratio, equal to T'/T for T = |S|^2 / N.
[[nodiscard]] double monopulse_ratio(const CVec& z, const ArrayGeometry& geom, Direction dir);

// ------------------------------------------------------------ asymptotics

class StepTooSmall : public std::runtime_error {
public:
    explicit StepTooSmall(double product)
        : std::runtime_error("mu * lambda_min = " + std::to_string(product) + " must exceed 1/2"),
          product_(product) {}
    [[nodiscard]] double product() const noexcept { return product_; }

private:
    double product_;
};

struct AsymptoticCovariance {
    RMat covariance;     ///< limit covariance of sqrt(n) (w_n - w_ex)
    RMat hessian;        ///< E{Q_ww}
    RMat gradient_outer; ///< E{Q_w Q_w^T}
    RVec lambda;         ///< eigenvalues of E{Q_ww}, ascending
    double mu = 0.0;
    double mu_opt = 0.0; ///< 1 / lambda_min
};

/// Covariance of sqrt(n)(w_n - w_ex) for the plain iteration with gain mu/n, white
/// unit noise and amplitude moment B. Throws StepTooSmall unless mu*lambda_min > 1/2.
[[nodiscard]] AsymptoticCovariance asymptotic_covariance(const ArrayGeometry& geom,
                                                         const DirectionSet& dirs_ex, const CMat& B,
                                                         double mu, bool include_noise_term = true);

[[nodiscard]] double optimal_step(const ArrayGeometry& geom, const DirectionSet& dirs_ex, const CMat& B);

// ------------------------------------------------------------- cost model

/// Complex-multiplication counts of the two estimators.
struct CostEstimate {
    double sa_multiplications = 0.0;
    double sa_roots = 0.0;
    double grid_multiplications = 0.0;
};

[[nodiscard]] CostEstimate cost_model(int M, int iterations, int beams, int samples, ArrayKind kind);

/// (samples, iterations) pairs with equal multiplication counts, samples = 1..max_samples.
[[nodiscard]] std::vector<std::pair<int, int>> cost_crossovers(int M, int beams, ArrayKind kind,
                                                               int max_samples);

[[nodiscard]] std::uint64_t binomial(int n, int k);

}  // namespace superres

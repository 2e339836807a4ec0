#pragma once

#include "superres/geometry.hpp"
#include "superres/types.hpp"

#include <vector>

namespace superres {

class NoiseModel;

/// The four amplitude models: constant, normally fluctuating phase, uniform phase
/// with fixed magnitude, and circular complex Gaussian (Rayleigh) amplitudes.
enum class SignalKind { deterministic, phase_fluct, uniform_phase, rayleigh };

struct SignalModel {
    SignalKind kind = SignalKind::deterministic;
    RVec magnitude;   ///< beta_i, used by the first three kinds
    RVec power;       ///< sigma_i^2, Rayleigh kind only
    RVec mean_phase;  ///< phi_i, deterministic and phase_fluct
    RVec phase_std;   ///< phase_fluct only
    double doppler = 0.0;  ///< per-snapshot phase increment, deterministic only

    static SignalModel deterministic(RVec magnitude, RVec phase, double doppler = 0.0);
    static SignalModel phase_fluct(RVec magnitude, RVec mean_phase, RVec phase_std);
    static SignalModel uniform_phase(RVec magnitude);
    static SignalModel rayleigh(RVec power);

    /// M equal-power targets with total per-element SNR `snr_db` over noise power
    /// sigma2; `phases` apply where the model carries a phase.
    static SignalModel with_snr(SignalKind kind, int M, double snr_db, double sigma2 = 1.0,
                                const RVec& phases = {}, double phase_std = 0.0);

    [[nodiscard]] Eigen::Index size() const;
    /// Sum of E|b_i|^2.
    [[nodiscard]] double total_power() const;
    void validate() const;
};

struct AmplitudeCovariance {
    CMat B;
    bool rank_one = false;  ///< set for the deterministic model, where B = b b*
};

/// Amplitudes for snapshot `snapshot_index` (only the deterministic Doppler term
/// depends on the index; the random models draw fresh values every call).
[[nodiscard]] CVec draw_amplitudes(const SignalModel& model, Rng& rng, int snapshot_index = 0);

/// E{b}.
[[nodiscard]] CVec amplitude_mean(const SignalModel& model);

/// E{b b*}.
[[nodiscard]] AmplitudeCovariance amplitude_covariance(const SignalModel& model);

struct Snapshot {
    CVec z;
    CVec b;  ///< amplitudes actually drawn
};

/// z_k = A(dirs) b_k + n_k for k = first_index .. first_index + K - 1.
[[nodiscard]] std::vector<Snapshot> synthesize(const ArrayGeometry& geom, const DirectionSet& dirs,
                                               const SignalModel& model, const NoiseModel& noise,
                                               int K, Rng& rng, int first_index = 0);

[[nodiscard]] inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
[[nodiscard]] inline double linear_to_db(double x) { return 10.0 * std::log10(x); }

}  // namespace superres

#include "superres/signals.hpp"

#include "superres/noise.hpp"

namespace superres {

SignalModel SignalModel::deterministic(RVec magnitude, RVec phase, double doppler) {
    SignalModel m;
    m.kind = SignalKind::deterministic;
    m.magnitude = std::move(magnitude);
    m.mean_phase = phase.size() ? std::move(phase) : RVec::Zero(m.magnitude.size());
    m.phase_std = RVec::Zero(m.magnitude.size());
    m.doppler = doppler;
    m.validate();
    return m;
}

SignalModel SignalModel::phase_fluct(RVec magnitude, RVec mean_phase, RVec phase_std) {
    SignalModel m;
    m.kind = SignalKind::phase_fluct;
    m.magnitude = std::move(magnitude);
    m.mean_phase = std::move(mean_phase);
    m.phase_std = std::move(phase_std);
    m.validate();
    return m;
}

SignalModel SignalModel::uniform_phase(RVec magnitude) {
    SignalModel m;
    m.kind = SignalKind::uniform_phase;
    m.magnitude = std::move(magnitude);
    m.validate();
    return m;
}

SignalModel SignalModel::rayleigh(RVec power) {
    SignalModel m;
    m.kind = SignalKind::rayleigh;
    m.power = std::move(power);
    m.validate();
    return m;
}

SignalModel SignalModel::with_snr(SignalKind kind, int M, double snr_db, double sigma2,
                                  const RVec& phases, double phase_std) {
    if (M < 1) throw std::invalid_argument("with_snr needs at least one target");
    const double per_target = db_to_linear(snr_db) * sigma2 / M;
    const RVec mag = RVec::Constant(M, std::sqrt(per_target));
    const RVec phi = phases.size() ? phases : RVec::Zero(M);
    switch (kind) {
        case SignalKind::deterministic: return deterministic(mag, phi);
        case SignalKind::phase_fluct: return phase_fluct(mag, phi, RVec::Constant(M, phase_std));
        case SignalKind::uniform_phase: return uniform_phase(mag);
        case SignalKind::rayleigh: return rayleigh(RVec::Constant(M, per_target));
    }
    throw std::invalid_argument("unknown signal kind");
}

Eigen::Index SignalModel::size() const {
    return kind == SignalKind::rayleigh ? power.size() : magnitude.size();
}

double SignalModel::total_power() const {
    return kind == SignalKind::rayleigh ? power.sum() : magnitude.squaredNorm();
}

void SignalModel::validate() const {
    const Eigen::Index m = size();
    if (kind == SignalKind::rayleigh) {
        if ((power.array() <= 0.0).any()) throw std::invalid_argument("target powers must be positive");
        return;
    }
    if ((magnitude.array() <= 0.0).any()) throw std::invalid_argument("target magnitudes must be positive");
    if (kind == SignalKind::deterministic || kind == SignalKind::phase_fluct) {
        if (mean_phase.size() != m) throw std::invalid_argument("mean phase count differs from M");
    }
    if (kind == SignalKind::phase_fluct) {
        if (phase_std.size() != m) throw std::invalid_argument("phase std count differs from M");
        if ((phase_std.array() < 0.0).any()) throw std::invalid_argument("phase std must be non-negative");
    }
}

CVec draw_amplitudes(const SignalModel& model, Rng& rng, int snapshot_index) {
    const Eigen::Index m = model.size();
    CVec b(m);
    switch (model.kind) {
        case SignalKind::deterministic:
            for (Eigen::Index i = 0; i < m; ++i)
                b[i] = std::polar(model.magnitude[i], model.mean_phase[i] + snapshot_index * model.doppler);
            break;
        case SignalKind::phase_fluct:
            for (Eigen::Index i = 0; i < m; ++i) {
                std::normal_distribution<double> phase(model.mean_phase[i], model.phase_std[i]);
                b[i] = std::polar(model.magnitude[i], model.phase_std[i] > 0.0 ? phase(rng) : model.mean_phase[i]);
            }
            break;
        case SignalKind::uniform_phase: {
            std::uniform_real_distribution<double> phase(0.0, 2.0 * pi);
            for (Eigen::Index i = 0; i < m; ++i) b[i] = std::polar(model.magnitude[i], phase(rng));
            break;
        }
        case SignalKind::rayleigh:
            for (Eigen::Index i = 0; i < m; ++i) b[i] = complex_normal(rng, model.power[i]);
            break;
    }
    return b;
}

CVec amplitude_mean(const SignalModel& model) {
    const Eigen::Index m = model.size();
    CVec mean = CVec::Zero(m);
    if (model.kind == SignalKind::deterministic || model.kind == SignalKind::phase_fluct)
        for (Eigen::Index i = 0; i < m; ++i) {
            const double s = model.kind == SignalKind::phase_fluct ? model.phase_std[i] : 0.0;
            mean[i] = std::polar(model.magnitude[i] * std::exp(-s * s / 2.0), model.mean_phase[i]);
        }
    return mean;
}

AmplitudeCovariance amplitude_covariance(const SignalModel& model) {
    const Eigen::Index m = model.size();
    AmplitudeCovariance out;
    switch (model.kind) {
        case SignalKind::deterministic: {
            const CVec b = amplitude_mean(model);
            out.B = b * b.adjoint();
            out.rank_one = true;
            break;
        }
        case SignalKind::phase_fluct: {
            const CVec mean = amplitude_mean(model);
            out.B = mean * mean.adjoint();
            for (Eigen::Index i = 0; i < m; ++i) out.B(i, i) = model.magnitude[i] * model.magnitude[i];
            break;
        }
        case SignalKind::uniform_phase:
            out.B = model.magnitude.array().square().matrix().cast<cplx>().asDiagonal();
            break;
        case SignalKind::rayleigh:
            out.B = model.power.cast<cplx>().asDiagonal();
            break;
    }
    return out;
}

std::vector<Snapshot> synthesize(const ArrayGeometry& geom, const DirectionSet& dirs,
                                 const SignalModel& model, const NoiseModel& noise, int K, Rng& rng,
                                 int first_index) {
    if (model.size() != static_cast<Eigen::Index>(dirs.size()))
        throw std::invalid_argument("signal model and direction set disagree on M");
    if (noise.size() != geom.size()) throw std::invalid_argument("noise model and geometry disagree on N");
    const CMat A = transfer_matrix(geom, dirs);
    std::vector<Snapshot> out;
    out.reserve(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
        Snapshot s;
        s.b = draw_amplitudes(model, rng, first_index + k);
        s.z = A * s.b + noise.sample(rng);
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace superres

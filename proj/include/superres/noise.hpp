#pragma once

#include "superres/geometry.hpp"
#include "superres/types.hpp"

#include <filesystem>
#include <span>
#include <variant>
#include <vector>

namespace superres {

struct WhiteNoise {
    double sigma2 = 1.0;
};

/// Jammer spread uniformly over [u0 - width, u0 + width] (sinc kernel).
struct LinearJammer {
    double power = 0.0;
    double width = 0.1;
    double u0 = 0.0;
};

/// Jammer spread uniformly over a disk of the given radius around (u0, v0) (2 J1(x)/x kernel).
struct PlanarJammer {
    double power = 0.0;
    double radius = 0.1;
    double u0 = 0.0;
    double v0 = 0.0;
};

/// White receiver noise whose per-element powers were drawn once per run.
struct FluctuatingWhite {
    RVec powers;
};

using NoiseComponent = std::variant<WhiteNoise, LinearJammer, PlanarJammer, FluctuatingWhite>;

/// Gaussian noise with covariance equal to the sum of its components' covariances.
class NoiseModel {
public:
    NoiseModel(const ArrayGeometry& geom, std::vector<NoiseComponent> components);
    static NoiseModel white(const ArrayGeometry& geom, double sigma2 = 1.0);

    [[nodiscard]] Eigen::Index size() const noexcept { return R_.rows(); }
    [[nodiscard]] const CMat& covariance() const noexcept { return R_; }
    /// Factor with R = L L*; Cholesky when possible, clamped eigendecomposition otherwise.
    [[nodiscard]] const CMat& factor() const noexcept { return L_; }
    [[nodiscard]] const std::vector<NoiseComponent>& components() const noexcept { return components_; }
    /// Average per-element noise power tr(R)/N.
    [[nodiscard]] double mean_power() const;

    [[nodiscard]] CVec sample(Rng& rng) const;

private:
    std::vector<NoiseComponent> components_;
    CMat R_;
    CMat L_;
};

[[nodiscard]] CMat component_covariance(const ArrayGeometry& geom, const NoiseComponent& c);

/// Per-element powers uniform on [sigma2 (1 - c), sigma2 (1 + c)].
[[nodiscard]] RVec draw_fluctuating_powers(Eigen::Index n, double sigma2, double c, Rng& rng);

/// Hermitian factor L with R = L L*. Throws when R has eigenvalues below
/// -1e-10 * trace(R).
[[nodiscard]] CMat psd_factor(const CMat& R);

struct Coupling {
    CMat C;
};
/// Rounds real and imaginary parts to the nearest multiple of step.
struct Quantize {
    double step = 0.0;
};
/// Clamps real and imaginary parts at bound * rms, rms taken per element.
struct Clip {
    double bound = 1.0;
};

using Perturbation = std::variant<Coupling, Quantize, Clip>;

/// Applies the perturbations in order. `rms` holds sqrt(E|z_k|^2) per element and
/// is only consulted by Clip.
[[nodiscard]] CVec apply_perturbations(std::span<const Perturbation> chain, const CVec& z,
                                       const RVec& rms = {});

/// Quantizer step for a b-bit uniform quantizer spanning +-clip_level.
[[nodiscard]] inline double quantizer_step(int bits, double clip_level) {
    return 2.0 * clip_level / static_cast<double>((1 << bits) - 1);
}

/// N x N complex matrix stored row-major as `re im` pairs.
[[nodiscard]] CMat load_coupling_matrix(const std::filesystem::path& path, Eigen::Index n);

}  // namespace superres

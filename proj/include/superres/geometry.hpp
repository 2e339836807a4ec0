#pragma once

#include "superres/types.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace superres {

/// Element layout of an antenna array. Coordinates are phase per unit direction
/// cosine, i.e. physical positions scaled by 2*pi/lambda.
class ArrayGeometry {
public:
    ArrayGeometry(std::string name, ArrayKind kind, RVec x, RVec y);

    /// Uniform line of n elements with the given spacing (in wavelengths), centred on 0.
    static ArrayGeometry linear_grid(int n, double spacing_lambda = 0.5, std::string name = {});
    /// nx-by-ny rectangular grid, centred on 0.
    static ArrayGeometry rectangular_grid(int nx, int ny, double spacing_lambda = 0.5,
                                          std::string name = {});
    /// Thinned circular aperture: one centre element plus concentric rings whose
    /// element density falls off parabolically towards the rim.
    static ArrayGeometry thinned_circular(int n_elements, double radius_lambda,
                                          std::string name = {});
    /// Plain-text `x y` pairs in wavelengths, one element per line, `#` comments.
    static ArrayGeometry from_file(const std::filesystem::path& path);
    /// Named layouts: `elan_<N>l` (N-element half-wavelength line) and the planar
    /// approximations `elan_6`, `elan_25`, `elan_29`, `elan_39`, `elan_192`.
    static ArrayGeometry preset(const std::string& name);
    /// Preset name or position file path.
    static ArrayGeometry resolve(const std::string& preset_or_path);

    [[nodiscard]] const std::string& name() const noexcept { return name_; }
    [[nodiscard]] ArrayKind kind() const noexcept { return kind_; }
    [[nodiscard]] Eigen::Index size() const noexcept { return x_.size(); }
    [[nodiscard]] const RVec& x() const noexcept { return x_; }
    [[nodiscard]] const RVec& y() const noexcept { return y_; }
    /// Number of direction parameters per target (1 linear, 2 planar).
    [[nodiscard]] int dims() const noexcept { return kind_ == ArrayKind::linear ? 1 : 2; }

    /// Largest pairwise element distance in normalised units.
    [[nodiscard]] double aperture() const;

    /// Copy with every coordinate multiplied by `factor`.
    [[nodiscard]] ArrayGeometry scaled(double factor) const;

private:
    std::string name_;
    ArrayKind kind_;
    RVec x_;
    RVec y_;
};

[[nodiscard]] CVec steering_vector(const ArrayGeometry& geom, Direction dir);
[[nodiscard]] CMat transfer_matrix(const ArrayGeometry& geom, const DirectionSet& dirs);

/// 3-dB beamwidth 0.887 * 2*pi / D in direction-cosine units.
[[nodiscard]] double beamwidth(const ArrayGeometry& geom);

enum class RegularityMode { strong, weak };

/// Region and density of the directions probed by check_regularity. For linear
/// arrays the region is the interval [center.u - radius, center.u + radius]; for
/// planar arrays it is the disk of that radius.
struct ProbeSpec {
    Direction center{};
    double radius = 0.99;
    std::size_t tuples = 10000;
};

struct RegularityReport {
    bool regular = true;
    std::size_t tuple_size = 0;
    std::size_t tuples_checked = 0;
    /// Smallest singular-value ratio seen over all probed tuples.
    double worst_ratio = 1.0;
    DirectionSet witness;
    std::string note;
};

inline constexpr double rank_tolerance = 1e-8;

/// Sampling check of strong (2M directions) or weak (M+1 directions) M-regularity:
/// any such set of distinct steering vectors drawn from the region must be linearly
/// independent. Tuples are Latin-hypercube stratified with jitter.
[[nodiscard]] RegularityReport check_regularity(const ArrayGeometry& geom, int M,
                                                RegularityMode mode, const ProbeSpec& probe,
                                                Rng& rng);

}  // namespace superres

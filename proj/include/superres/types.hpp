#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace superres {

using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;
using Rng = std::mt19937_64;

inline constexpr double pi = 3.14159265358979323846;
inline constexpr cplx j1{0.0, 1.0};

enum class ArrayKind { linear, planar };

/// A single arrival direction in direction-cosine space.
struct Direction {
    double u = 0.0;
    double v = 0.0;

    friend bool operator==(const Direction&, const Direction&) = default;
};

/// An ordered collection of M directions.
class DirectionSet {
public:
    DirectionSet() = default;
    explicit DirectionSet(std::vector<Direction> dirs) : dirs_(std::move(dirs)) {}

    static DirectionSet from_u(std::span<const double> u);

    [[nodiscard]] std::size_t size() const noexcept { return dirs_.size(); }
    [[nodiscard]] bool empty() const noexcept { return dirs_.empty(); }
    [[nodiscard]] const Direction& operator[](std::size_t i) const { return dirs_[i]; }
    [[nodiscard]] Direction& operator[](std::size_t i) { return dirs_[i]; }
    [[nodiscard]] auto begin() const noexcept { return dirs_.begin(); }
    [[nodiscard]] auto end() const noexcept { return dirs_.end(); }
    void push_back(Direction d) { dirs_.push_back(d); }

    /// Ascending u, ties broken by ascending v.
    [[nodiscard]] DirectionSet canonical() const;

    /// True when every direction lies in the visible region u^2 + v^2 <= 1.
    [[nodiscard]] bool visible() const noexcept;

    /// Stacked parameter vector: u_1..u_M for linear arrays, (u_1..u_M, v_1..v_M) for planar.
    [[nodiscard]] RVec params(ArrayKind kind) const;
    static DirectionSet from_params(const RVec& p, ArrayKind kind);

    friend bool operator==(const DirectionSet&, const DirectionSet&) = default;

private:
    std::vector<Direction> dirs_;
};

/// Raised when A*A is too badly conditioned for the normal-equation path.
class IllConditioned : public std::runtime_error {
public:
    explicit IllConditioned(double condition)
        : std::runtime_error("steering matrix is ill-conditioned (cond(A*A) = " +
                             std::to_string(condition) + ")"),
          condition_(condition) {}
    [[nodiscard]] double condition() const noexcept { return condition_; }

private:
    double condition_;
};

class NotImplemented : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Circularly symmetric complex normal with E|w|^2 = variance.
inline cplx complex_normal(Rng& rng, double variance = 1.0) {
    std::normal_distribution<double> n(0.0, std::sqrt(variance / 2.0));
    const double re = n(rng);
    const double im = n(rng);
    return {re, im};
}

inline CVec complex_normal_vector(Rng& rng, Eigen::Index n) {
    CVec w(n);
    for (Eigen::Index k = 0; k < n; ++k) w[k] = complex_normal(rng);
    return w;
}

/// Counter-based seed derivation so each Monte Carlo trial owns an independent stream.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t index) noexcept {
    auto splitmix = [](std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    };
    return splitmix(base ^ splitmix(index + 0x632be59bd9b4e019ULL));
}

}  // namespace superres

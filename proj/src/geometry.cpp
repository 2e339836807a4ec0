#include "superres/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <regex>
#include <sstream>

namespace superres {

namespace {

constexpr double two_pi = 2.0 * pi;

void require_finite(const RVec& v, const char* what) {
    if (!v.allFinite()) throw std::invalid_argument(std::string("non-finite ") + what + " coordinate");
}

}  // namespace

ArrayGeometry::ArrayGeometry(std::string name, ArrayKind kind, RVec x, RVec y)
    : name_(std::move(name)), kind_(kind), x_(std::move(x)), y_(std::move(y)) {
    if (x_.size() < 1) throw std::invalid_argument("array needs at least one element");
    if (x_.size() != y_.size()) throw std::invalid_argument("x and y coordinate counts differ");
    require_finite(x_, "x");
    require_finite(y_, "y");
    if (kind_ == ArrayKind::linear && !y_.isZero(0.0))
        throw std::invalid_argument("linear array with non-zero y coordinates");
}

ArrayGeometry ArrayGeometry::linear_grid(int n, double spacing_lambda, std::string name) {
    if (n < 1) throw std::invalid_argument("linear_grid needs n >= 1");
    RVec x(n);
    for (int k = 0; k < n; ++k) x[k] = two_pi * spacing_lambda * (k - (n - 1) / 2.0);
    if (name.empty()) name = "linear_" + std::to_string(n);
    return {std::move(name), ArrayKind::linear, std::move(x), RVec::Zero(n)};
}

ArrayGeometry ArrayGeometry::rectangular_grid(int nx, int ny, double spacing_lambda,
                                              std::string name) {
    if (nx < 1 || ny < 1) throw std::invalid_argument("rectangular_grid needs positive sizes");
    RVec x(nx * ny), y(nx * ny);
    for (int i = 0; i < nx; ++i)
        for (int k = 0; k < ny; ++k) {
            x[i * ny + k] = two_pi * spacing_lambda * (i - (nx - 1) / 2.0);
            y[i * ny + k] = two_pi * spacing_lambda * (k - (ny - 1) / 2.0);
        }
    if (name.empty()) name = "grid_" + std::to_string(nx) + "x" + std::to_string(ny);
    return {std::move(name), ArrayKind::planar, std::move(x), std::move(y)};
}

ArrayGeometry ArrayGeometry::thinned_circular(int n_elements, double radius_lambda,
                                              std::string name) {
    if (n_elements < 4) throw std::invalid_argument("thinned_circular needs at least 4 elements");
    if (!(radius_lambda > 0.0)) throw std::invalid_argument("thinned_circular needs a positive radius");

    const int ring_elements = n_elements - 1;
    const int rings = std::max(1, static_cast<int>(std::lround(std::sqrt(ring_elements / 3.0))));
    constexpr double taper = 0.75;

    std::vector<double> radius(rings), weight(rings);
    for (int k = 0; k < rings; ++k) {
        radius[k] = radius_lambda * (k + 1) / rings;
        const double rho = radius[k] / radius_lambda;
        weight[k] = radius[k] * (1.0 - taper * rho * rho);
    }
    const double total = std::accumulate(weight.begin(), weight.end(), 0.0);

    // Largest-remainder apportionment with at least three elements per ring.
    std::vector<int> count(rings);
    std::vector<std::pair<double, int>> remainder;
    int assigned = 0;
    for (int k = 0; k < rings; ++k) {
        const double share = ring_elements * weight[k] / total;
        count[k] = std::max(3, static_cast<int>(std::floor(share)));
        assigned += count[k];
        remainder.emplace_back(share - std::floor(share), k);
    }
    std::ranges::sort(remainder, std::greater<>{});
    for (std::size_t i = 0; assigned < ring_elements; i = (i + 1) % remainder.size(), ++assigned)
        ++count[remainder[i].second];
    for (int k = rings - 1; assigned > ring_elements; k = (k + rings - 1) % rings)
        if (count[k] > 3) --count[k], --assigned;

    RVec x(n_elements), y(n_elements);
    x[0] = y[0] = 0.0;
    int idx = 1;
    for (int k = 0; k < rings; ++k) {
        const double offset = (k % 2) * pi / count[k];
        for (int e = 0; e < count[k]; ++e, ++idx) {
            const double theta = offset + two_pi * e / count[k];
            x[idx] = two_pi * radius[k] * std::cos(theta);
            y[idx] = two_pi * radius[k] * std::sin(theta);
        }
    }
    if (name.empty()) name = "circular_" + std::to_string(n_elements);
    return {std::move(name), ArrayKind::planar, std::move(x), std::move(y)};
}

ArrayGeometry ArrayGeometry::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open position file " + path.string());
    std::vector<double> xs, ys;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream fields(line);
        double xv = 0.0, yv = 0.0;
        if (!(fields >> xv)) {
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": expected `x y`");
        }
        if (!(fields >> yv)) yv = 0.0;
        xs.push_back(two_pi * xv);
        ys.push_back(two_pi * yv);
    }
    if (xs.empty()) throw std::runtime_error("position file " + path.string() + " has no elements");
    RVec x = Eigen::Map<RVec>(xs.data(), static_cast<Eigen::Index>(xs.size()));
    RVec y = Eigen::Map<RVec>(ys.data(), static_cast<Eigen::Index>(ys.size()));
    const ArrayKind kind = y.isZero(0.0) ? ArrayKind::linear : ArrayKind::planar;
    return {path.stem().string(), kind, std::move(x), std::move(y)};
}

ArrayGeometry ArrayGeometry::preset(const std::string& name) {
    static const std::regex linear_re(R"(elan_(\d+)l)", std::regex::icase);
    std::smatch m;
    if (std::regex_match(name, m, linear_re)) return linear_grid(std::stoi(m[1]), 0.5, name);
    if (name == "elan_6") return thinned_circular(6, 0.6, name);
    if (name == "elan_25") return thinned_circular(25, 1.75, name);
    if (name == "elan_29") return thinned_circular(29, 1.75, name);
    if (name == "elan_39") return thinned_circular(39, 1.75, name);
    if (name == "elan_192") return thinned_circular(192, 5.0, name);
    throw std::invalid_argument("unknown array preset '" + name + "'");
}

ArrayGeometry ArrayGeometry::resolve(const std::string& preset_or_path) {
    if (std::filesystem::exists(preset_or_path)) return from_file(preset_or_path);
    return preset(preset_or_path);
}

double ArrayGeometry::aperture() const {
    double best = 0.0;
    for (Eigen::Index i = 0; i < size(); ++i)
        for (Eigen::Index k = i + 1; k < size(); ++k)
            best = std::max(best, std::hypot(x_[i] - x_[k], y_[i] - y_[k]));
    return best;
}

ArrayGeometry ArrayGeometry::scaled(double factor) const {
    return {name_, kind_, x_ * factor, y_ * factor};
}

CVec steering_vector(const ArrayGeometry& geom, Direction dir) {
    const RVec phase = geom.x() * dir.u + geom.y() * dir.v;
    CVec a(phase.size());
    for (Eigen::Index k = 0; k < phase.size(); ++k) a[k] = std::polar(1.0, -phase[k]);
    return a;
}

CMat transfer_matrix(const ArrayGeometry& geom, const DirectionSet& dirs) {
    CMat A(geom.size(), static_cast<Eigen::Index>(dirs.size()));
    for (std::size_t i = 0; i < dirs.size(); ++i)
        A.col(static_cast<Eigen::Index>(i)) = steering_vector(geom, dirs[i]);
    return A;
}

double beamwidth(const ArrayGeometry& geom) {
    const double d = geom.aperture();
    if (!(d > 0.0)) throw std::invalid_argument("beamwidth undefined for zero aperture");
    return 0.887 * two_pi / d;
}

RegularityReport check_regularity(const ArrayGeometry& geom, int M, RegularityMode mode,
                                  const ProbeSpec& probe, Rng& rng) {
    if (!(probe.radius > 0.0) || probe.tuples == 0)
        throw std::invalid_argument("regularity probe region is empty");

    RegularityReport report;
    if (M <= 0) {
        report.note = "M = 0 is trivially regular";
        return report;
    }
    const auto t = static_cast<std::size_t>(mode == RegularityMode::strong ? 2 * M : M + 1);
    report.tuple_size = t;
    if (static_cast<std::size_t>(geom.size()) < t) {
        report.regular = false;
        report.worst_ratio = 0.0;
        report.note = "fewer elements than directions per tuple: rank deficiency is structural";
        return report;
    }

    // Latin hypercube per coordinate: each slot of each tuple gets its own stratum permutation.
    const std::size_t n = probe.tuples;
    const bool planar = geom.kind() == ArrayKind::planar;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto strata = [&] {
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        std::ranges::shuffle(perm, rng);
        return perm;
    };
    std::vector<std::vector<std::size_t>> perm_a(t), perm_b(t);
    for (std::size_t s = 0; s < t; ++s) {
        perm_a[s] = strata();
        if (planar) perm_b[s] = strata();
    }

    for (std::size_t i = 0; i < n; ++i) {
        std::vector<Direction> tuple(t);
        for (std::size_t s = 0; s < t; ++s) {
            const double a = (static_cast<double>(perm_a[s][i]) + unit(rng)) / static_cast<double>(n);
            if (planar) {
                const double b = (static_cast<double>(perm_b[s][i]) + unit(rng)) / static_cast<double>(n);
                const double r = probe.radius * std::sqrt(a);
                tuple[s] = {probe.center.u + r * std::cos(2.0 * pi * b),
                            probe.center.v + r * std::sin(2.0 * pi * b)};
            } else {
                tuple[s] = {probe.center.u + probe.radius * (2.0 * a - 1.0), 0.0};
            }
        }
        const DirectionSet dirs(std::move(tuple));
        const Eigen::JacobiSVD<CMat> svd(transfer_matrix(geom, dirs));
        const RVec& sv = svd.singularValues();
        const double ratio = sv[sv.size() - 1] / sv[0];
        ++report.tuples_checked;
        if (ratio < report.worst_ratio) {
            report.worst_ratio = ratio;
            report.witness = dirs;
        }
    }
    report.regular = report.worst_ratio >= rank_tolerance;
    return report;
}

}  // namespace superres

#include "superres/types.hpp"

#include <algorithm>

namespace superres {

DirectionSet DirectionSet::from_u(std::span<const double> u) {
    std::vector<Direction> dirs;
    dirs.reserve(u.size());
    for (double ui : u) dirs.push_back({ui, 0.0});
    return DirectionSet(std::move(dirs));
}

DirectionSet DirectionSet::canonical() const {
    auto sorted = dirs_;
    std::ranges::sort(sorted, [](const Direction& a, const Direction& b) {
        return a.u != b.u ? a.u < b.u : a.v < b.v;
    });
    return DirectionSet(std::move(sorted));
}

bool DirectionSet::visible() const noexcept {
    return std::ranges::all_of(dirs_, [](const Direction& d) { return d.u * d.u + d.v * d.v <= 1.0; });
}

RVec DirectionSet::params(ArrayKind kind) const {
    const auto m = static_cast<Eigen::Index>(dirs_.size());
    RVec p(kind == ArrayKind::linear ? m : 2 * m);
    for (Eigen::Index i = 0; i < m; ++i) {
        p[i] = dirs_[i].u;
        if (kind == ArrayKind::planar) p[m + i] = dirs_[i].v;
    }
    return p;
}

DirectionSet DirectionSet::from_params(const RVec& p, ArrayKind kind) {
    const Eigen::Index m = kind == ArrayKind::linear ? p.size() : p.size() / 2;
    std::vector<Direction> dirs(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        dirs[i].u = p[i];
        dirs[i].v = kind == ArrayKind::planar ? p[m + i] : 0.0;
    }
    return DirectionSet(std::move(dirs));
}

}  // namespace superres

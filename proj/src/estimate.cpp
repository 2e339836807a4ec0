#include "superres/estimate.hpp"

#include "superres/qfunc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace superres {

namespace {

void for_each_combination(int n, int k, const std::function<void(const std::vector<int>&)>& visit) {
    if (k < 0 || k > n) return;
    std::vector<int> idx(static_cast<std::size_t>(k));
    std::iota(idx.begin(), idx.end(), 0);
    while (true) {
        visit(idx);
        int i = k - 1;
        while (i >= 0 && idx[i] == n - k + i) --i;
        if (i < 0) return;
        ++idx[i];
        for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
}

/// Pool-adjacent-violators fit of a non-decreasing sequence.
std::vector<double> isotonic(const std::vector<double>& y) {
    std::vector<double> value;
    std::vector<int> weight;
    for (double v : y) {
        value.push_back(v);
        weight.push_back(1);
        while (value.size() > 1 && value[value.size() - 2] > value.back()) {
            const double w1 = weight[weight.size() - 2];
            const double w2 = weight.back();
            const double merged = (w1 * value[value.size() - 2] + w2 * value.back()) / (w1 + w2);
            value.pop_back();
            weight.pop_back();
            value.back() = merged;
            weight.back() += static_cast<int>(w2);
        }
    }
    std::vector<double> out;
    for (std::size_t b = 0; b < value.size(); ++b) out.insert(out.end(), static_cast<std::size_t>(weight[b]), value[b]);
    return out;
}

}  // namespace

// ---------------------------------------------------------------- grid search

int grid_beam_count(int divisions, ArrayKind kind) {
    if (divisions < 1) throw std::invalid_argument("grid needs at least one division");
    return kind == ArrayKind::linear ? divisions + 1 : divisions * (divisions - 1) / 2;
}

std::vector<Direction> grid_points(const ArrayGeometry& geom, Direction center, const GridSpec& spec) {
    if (!spec.points.empty()) return spec.points;
    const double bw = beamwidth(geom);
    const int n = spec.divisions;
    const double h = bw / n;
    std::vector<Direction> pts;
    if (geom.kind() == ArrayKind::linear) {
        for (int k = 0; k <= n; ++k) pts.push_back({center.u - bw / 2.0 + k * h, center.v});
        return pts;
    }
    // Triangular lattice patch, divisions - 1 points per side, centroid on the centre.
    const int side = n - 1;
    if (side < 1) throw std::invalid_argument("planar grid needs at least two divisions");
    const double cx = (side - 1) / 3.0 * 1.5 * h;
    const double cy = (side - 1) / 3.0 * std::sqrt(3.0) / 2.0 * h;
    for (int b = 0; b < side; ++b)
        for (int a = 0; a + b < side; ++a)
            pts.push_back({center.u + a * h + b * h / 2.0 - cx, center.v + b * h * std::sqrt(3.0) / 2.0 - cy});
    return pts;
}

GridTable::GridTable(const ArrayGeometry& geom, std::vector<Direction> points, int M)
    : points_(std::move(points)) {
    const int k = static_cast<int>(points_.size());
    if (M < 1 || M > k) throw std::invalid_argument("grid search needs 1 <= M <= number of grid points");
    beams_ = transfer_matrix(geom, DirectionSet(points_));
    const CMat gram = beams_.adjoint() * beams_;
    for_each_combination(k, M, [&](const std::vector<int>& c) {
        CMat sub(M, M);
        for (int r = 0; r < M; ++r)
            for (int s = 0; s < M; ++s) sub(r, s) = gram(c[r], c[s]);
        combos_.push_back(c);
        inverse_gram_.push_back(sub.completeOrthogonalDecomposition().pseudoInverse());
    });
}

GridResult GridTable::search(const CVec& z) const {
    const CVec y = beams_.adjoint() * z;
    const double energy = z.squaredNorm();
    GridResult best;
    best.q = std::numeric_limits<double>::infinity();
    std::size_t best_idx = 0;
    for (std::size_t c = 0; c < combos_.size(); ++c) {
        const auto& idx = combos_[c];
        CVec yc(static_cast<Eigen::Index>(idx.size()));
        for (std::size_t r = 0; r < idx.size(); ++r) yc[static_cast<Eigen::Index>(r)] = y[idx[r]];
        const double q = energy - yc.dot(inverse_gram_[c] * yc).real();
        ++best.evaluations;
        if (q < best.q) {
            best.q = q;
            best_idx = c;
        }
    }
    std::vector<Direction> dirs;
    for (int i : combos_[best_idx]) dirs.push_back(points_[static_cast<std::size_t>(i)]);
    best.best = DirectionSet(std::move(dirs));
    return best;
}

GridResult grid_search(const CVec& z, const ArrayGeometry& geom, Direction center, const GridSpec& spec, int M) {
    return GridTable(geom, grid_points(geom, center, spec), M).search(z);
}

DirectionSet averaged_grid_search(std::span<const CVec> snapshots, const ArrayGeometry& geom, Direction center,
                                  const GridSpec& spec, int M) {
    if (snapshots.empty()) throw std::invalid_argument("averaged grid search needs at least one snapshot");
    const GridTable table(geom, grid_points(geom, center, spec), M);
    std::vector<Direction> mean(static_cast<std::size_t>(M));
    for (const auto& z : snapshots) {
        const DirectionSet est = table.search(z).best.canonical();
        for (int i = 0; i < M; ++i) {
            mean[i].u += est[i].u;
            mean[i].v += est[i].v;
        }
    }
    const auto k = static_cast<double>(snapshots.size());
    for (auto& d : mean) d = {d.u / k, d.v / k};
    return DirectionSet(std::move(mean));
}

// ------------------------------------------------------- snapshot streams

std::vector<CVec> SnapshotStream::take(int count) {
    std::vector<CVec> out;
    out.reserve(static_cast<std::size_t>(std::max(count, 0)));
    for (int i = 0; i < count; ++i) out.push_back(next());
    return out;
}

CVec VectorStream::next() {
    if (pos_ >= data_.size()) throw StreamExhausted();
    return data_[pos_++];
}

CVec GeneratorStream::next() {
    if (count_ >= limit_) throw StreamExhausted();
    ++count_;
    return gen_();
}

// ------------------------------------------------- stochastic approximation

SearchRegion::SearchRegion(ArrayKind kind, Direction center, double bw, double epsilon)
    : kind_(kind), center_(center), bw_(bw), epsilon_(epsilon) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must lie in (0,1)");
    if (!(bw > 0.0)) throw std::invalid_argument("beamwidth must be positive");
}

bool SearchRegion::contains(const DirectionSet& dirs) const {
    for (const auto& d : dirs)
        if (std::hypot(d.u - center_.u, d.v - center_.v) >= outer_radius()) return false;
    if (kind_ == ArrayKind::linear)
        for (std::size_t i = 1; i < dirs.size(); ++i)
            if (dirs[i].u - dirs[i - 1].u < min_separation()) return false;
    return true;
}

bool SearchRegion::contains_inner(const DirectionSet& dirs, double tol) const {
    for (const auto& d : dirs)
        if (std::hypot(d.u - center_.u, d.v - center_.v) > inner_radius() + tol) return false;
    if (kind_ == ArrayKind::linear)
        for (std::size_t i = 1; i < dirs.size(); ++i)
            if (dirs[i].u - dirs[i - 1].u < min_separation() - tol) return false;
    return true;
}

DirectionSet SearchRegion::project(const DirectionSet& dirs) const {
    const double r = inner_radius();
    if (kind_ == ArrayKind::planar) {
        DirectionSet out = dirs;
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double du = out[i].u - center_.u;
            const double dv = out[i].v - center_.v;
            const double dist = std::hypot(du, dv);
            if (dist > r) out[i] = {center_.u + du * r / dist, center_.v + dv * r / dist};
        }
        return out;
    }
    // Sorted targets with gaps >= s inside [c - r, c + r]: substituting w_i = u_i - i*s turns
    // the set into a monotone sequence under a common box, whose projection is the
    // isotonic fit clipped to the box.
    const DirectionSet sorted = dirs.canonical();
    const std::size_t m = sorted.size();
    const double s = min_separation();
    std::vector<double> w(m);
    for (std::size_t i = 0; i < m; ++i) w[i] = sorted[i].u - static_cast<double>(i) * s;
    w = isotonic(w);
    const double lo = center_.u - r;
    const double hi = std::max(lo, center_.u + r - static_cast<double>(m - 1) * s);
    std::vector<Direction> out(m);
    for (std::size_t i = 0; i < m; ++i) out[i] = {std::clamp(w[i], lo, hi) + static_cast<double>(i) * s, 0.0};
    return DirectionSet(std::move(out));
}

DirectionSet initial_directions(const ArrayGeometry& geom, Direction center, int M, double spread) {
    if (M < 1) throw std::invalid_argument("initial directions need M >= 1");
    const double half = beamwidth(geom) / 2.0;
    std::vector<Direction> dirs;
    if (M == 1) return DirectionSet({center});
    if (geom.kind() == ArrayKind::linear) {
        for (int i = 0; i < M; ++i)
            dirs.push_back({center.u - spread * half + 2.0 * spread * half * i / (M - 1), center.v});
        return DirectionSet(std::move(dirs));
    }
    if (M == 3) {
        const double o = 0.6 * half;
        return DirectionSet({{center.u - o, center.v - o}, center, {center.u + o, center.v + o}});
    }
    for (int i = 0; i < M; ++i) {
        const double phi = pi + 2.0 * pi * i / M;
        dirs.push_back({center.u + spread * half * std::cos(phi), center.v + spread * half * std::sin(phi)});
    }
    return DirectionSet(std::move(dirs));
}

RVec correction(const RVec& grad, double q, const SAConfig& cfg, double eta) {
    const double norm = grad.norm();
    RVec g;
    switch (cfg.variant) {
        case Correction::plain: g = grad; break;
        case Correction::log: g = q > 0.0 ? RVec(grad / q) : RVec::Zero(grad.size()); break;
        case Correction::arctan: g = grad / (1.0 + q * q); break;
        case Correction::hard_limit: g = norm < eta ? grad : RVec(grad * (eta / norm)); break;
        case Correction::sign: g = norm > 0.0 ? RVec(grad / norm) : RVec::Zero(grad.size()); break;
    }
    if (cfg.saturate && cfg.variant != Correction::hard_limit) {
        const double gn = g.norm();
        if (gn >= eta && gn > 0.0) g *= eta / gn;
    }
    return g;
}

EstimationTrace stochastic_approximation(SnapshotStream& stream, const ArrayGeometry& geom, Direction center,
                                         int M, const SAConfig& cfg) {
    if (cfg.iterations < 1) throw std::invalid_argument("SA needs at least one iteration");
    if (cfg.mu && !(*cfg.mu > 0.0)) throw std::invalid_argument("SA step scale must be positive");
    const double bw = beamwidth(geom);
    const SearchRegion region(geom.kind(), center, bw, cfg.epsilon);
    const ArrayKind kind = geom.kind();

    EstimationTrace trace;
    DirectionSet dirs = cfg.initial ? *cfg.initial : initial_directions(geom, center, M, cfg.spread);
    if (static_cast<int>(dirs.size()) != M) throw std::invalid_argument("initial directions must hold M entries");
    trace.iterates.push_back(dirs);

    const bool uses_eta = cfg.variant == Correction::hard_limit || cfg.saturate;
    if (!cfg.mu || (uses_eta && !cfg.eta)) {
        double sum = 0.0;
        for (int i = 0; i < 3; ++i) sum += q_gradient(stream.next(), geom, dirs).eval.gradient.norm();
        trace.snapshots_used += 3;
        trace.ae = sum / 3.0;
    }
    const double delta = cfg.delta.value_or(kind == ArrayKind::linear ? 0.9 : 1.8);
    trace.mu = cfg.mu ? *cfg.mu : (trace.ae > 0.0 ? delta / trace.ae * bw / 2.0 : 0.0);
    trace.eta = cfg.eta ? *cfg.eta : cfg.eta_factor * trace.ae;

    for (int it = 0; it < cfg.iterations; ++it) {
        const double n = cfg.start_index + it;
        const CVec z = stream.next();
        ++trace.snapshots_used;
        GradientEvaluation g;
        try {
            g = q_gradient(z, geom, dirs);
        } catch (const IllConditioned&) {
            ++trace.degenerate_steps;
            trace.iterates.push_back(dirs);
            continue;
        }
        trace.q.push_back(g.eval.q);
        const RVec step = correction(g.eval.gradient, g.eval.q, cfg, trace.eta) * (trace.mu / n);
        DirectionSet next = DirectionSet::from_params(dirs.params(kind) - step, kind);
        if (!region.contains(next)) {
            next = region.project(next);
            ++trace.projections;
        }
        dirs = std::move(next);
        trace.iterates.push_back(dirs);
    }
    trace.estimate = dirs;
    return trace;
}

double monopulse_ratio(const CVec& z, const ArrayGeometry& geom, Direction dir) {
    const CVec a = steering_vector(geom, dir);
    const CVec a_w = -j1 * geom.x().cast<cplx>().cwiseProduct(a);
    return 2.0 * (a_w.dot(z) / a.dot(z)).real();
}

// ------------------------------------------------------------ asymptotics

AsymptoticCovariance asymptotic_covariance(const ArrayGeometry& geom, const DirectionSet& dirs_ex, const CMat& B,
                                           double mu, bool include_noise_term) {
    AsymptoticCovariance out;
    out.mu = mu;
    out.hessian = expected_hessian_at_min(geom, dirs_ex, B);
    out.gradient_outer = expected_gradient_outer(geom, dirs_ex, B, 1.0, include_noise_term);
    const Eigen::SelfAdjointEigenSolver<RMat> eig(out.hessian);
    out.lambda = eig.eigenvalues();
    out.mu_opt = 1.0 / out.lambda[0];
    const double product = mu * out.lambda[0];
    if (!(product > 0.5)) throw StepTooSmall(product);

    const RMat& U = eig.eigenvectors();
    const RVec Lambda = mu * out.lambda;
    const RMat rotated = U.transpose() * (mu * mu * out.gradient_outer) * U;
    RMat Mt(rotated.rows(), rotated.cols());
    for (Eigen::Index i = 0; i < Mt.rows(); ++i)
        for (Eigen::Index k = 0; k < Mt.cols(); ++k) Mt(i, k) = rotated(i, k) / (Lambda[i] + Lambda[k] - 1.0);
    out.covariance = U * Mt * U.transpose();
    return out;
}

double optimal_step(const ArrayGeometry& geom, const DirectionSet& dirs_ex, const CMat& B) {
    const Eigen::SelfAdjointEigenSolver<RMat> eig(expected_hessian_at_min(geom, dirs_ex, B), Eigen::EigenvaluesOnly);
    return 1.0 / eig.eigenvalues()[0];
}

// ------------------------------------------------------------- cost model

std::uint64_t binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    std::uint64_t r = 1;
    for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
    return r;
}

CostEstimate cost_model(int M, int iterations, int beams, int samples, ArrayKind kind) {
    if (M < 0 || iterations < 0 || beams < 0 || samples < 0) throw std::invalid_argument("cost model needs non-negative counts");
    CostEstimate c;
    if (M == 0) return c;
    const double m2 = static_cast<double>(M) * M;
    const double i = iterations;
    c.sa_multiplications = kind == ArrayKind::linear ? 2.0 * i * (m2 + M) : 3.0 * i * (m2 + M / 2.0);
    c.sa_roots = i;
    c.grid_multiplications = samples * static_cast<double>(binomial(beams, M)) * (m2 + M);
    return c;
}

std::vector<std::pair<int, int>> cost_crossovers(int M, int beams, ArrayKind kind, int max_samples) {
    std::vector<std::pair<int, int>> out;
    if (M < 1) return out;
    const double per_iteration = cost_model(M, 1, beams, 0, kind).sa_multiplications;
    const double per_sample = cost_model(M, 0, beams, 1, kind).grid_multiplications;
    for (int m = 1; m <= max_samples; ++m) {
        const double i = m * per_sample / per_iteration;
        if (std::abs(i - std::round(i)) < 1e-9) out.emplace_back(m, static_cast<int>(std::round(i)));
    }
    return out;
}

}  // namespace superres

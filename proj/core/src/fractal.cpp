#include "conormal_lab/fractal.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "conormal_lab/errors.hpp"

namespace clab::fractal {

BoundarySet interval_endpoints(const std::vector<double>& endpoints) {
    BoundarySet b;
    b.ambient_dim = 1;
    for (double e : endpoints) {
        if (e < 0.0 || e > 1.0) throw Error("boundary points must lie in the unit cube");
        b.points.push_back(Vec{e});
    }
    return b;
}

BoundarySet cantor_middle_thirds(int depth) {
    if (depth < 1 || depth > 26) throw Error("cantor depth must lie in [1, 26]");
    BoundarySet b;
    b.ambient_dim = 1;
    b.generator_depth = static_cast<int>(std::floor(depth * std::log2(3.0)));
    std::vector<std::pair<double, double>> intervals{{0.0, 1.0}};
    for (int d = 0; d < depth; ++d) {
        std::vector<std::pair<double, double>> next;
        next.reserve(intervals.size() * 2);
        for (auto [a, c] : intervals) {
            double third = (c - a) / 3.0;
            next.push_back({a, a + third});
            next.push_back({c - third, c});
        }
        intervals = std::move(next);
    }
    for (auto [a, c] : intervals) {
        b.points.push_back(Vec{a});
        b.points.push_back(Vec{c});
    }
    return b;
}

BoundarySet segment(double a, double b, std::size_t n_points, int ambient_dim) {
    if (n_points < 2) throw Error("a segment needs at least two sample points");
    if (ambient_dim < 1 || ambient_dim > 3) throw Error("ambient dimension must be 1..3");
    BoundarySet out;
    out.ambient_dim = ambient_dim;
    out.generator_depth = static_cast<int>(std::floor(std::log2(double(n_points - 1) / (b - a))));
    for (std::size_t i = 0; i < n_points; ++i) {
        double x = a + (b - a) * double(i) / double(n_points - 1);
        Vec p(static_cast<std::size_t>(ambient_dim));
        p[0] = x;
        out.points.push_back(p);
    }
    return out;
}

BoxDimensionFit box_dimension(const BoundarySet& B, int j_min, int j_max) {
    if (j_max - j_min < 4) throw ScaleLadderTooShort("need j_max - j_min >= 4");
    if (j_min < 0 || j_max > 30) throw Error("scale levels must lie in [0, 30]");
    if (B.points.empty()) throw Error("boundary set is empty");
    if (B.generator_depth < j_max)
        throw ScaleLadderTooShort("point cloud does not resolve the finest scale");

    BoxDimensionFit fit;
    for (int j = j_min; j <= j_max; ++j) {
        const std::uint64_t boxes = 1ULL << j;
        std::unordered_set<std::uint64_t> occupied;
        for (const Vec& p : B.points) {
            std::uint64_t key = 0;
            for (int d = 0; d < B.ambient_dim; ++d) {
                double coord = std::min(std::max(p[d], 0.0), 1.0 - 1e-15);
                std::uint64_t idx = static_cast<std::uint64_t>(coord * double(boxes));
                key = key * boxes + idx;
            }
            occupied.insert(key);
        }
        fit.levels.push_back(j);
        fit.counts.push_back(occupied.size());
    }
    // log N against log(1/eps) = j log 2.
    double n = double(fit.levels.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < fit.levels.size(); ++i) {
        double x = fit.levels[i] * std::log(2.0);
        double y = std::log(double(fit.counts[i]));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
    }
    double denom = n * sxx - sx * sx;
    fit.estimate = (n * sxy - sx * sy) / denom;
    double ybar = sy / n, slope = fit.estimate, icept = (sy - slope * sx) / n;
    double ss_res = 0, ss_tot = 0;
    for (std::size_t i = 0; i < fit.levels.size(); ++i) {
        double x = fit.levels[i] * std::log(2.0);
        double y = std::log(double(fit.counts[i]));
        double e = y - (slope * x + icept);
        ss_res += e * e;
        ss_tot += (y - ybar) * (y - ybar);
    }
    fit.r_squared = ss_tot > 1e-30 ? std::max(0.0, 1.0 - ss_res / ss_tot) : 1.0;
    return fit;
}

Admissibility admissible(const BoxDimensionFit& fit, int n, int k, double margin) {
    Admissibility a;
    double threshold = double(n) - double(k) - 0.5;
    a.slack = threshold - fit.estimate;
    a.admissible = fit.estimate + margin < threshold;
    return a;
}

}  // namespace clab::fractal

#pragma once

// Shared test helpers: a deterministic RNG (independent of the standard
// library distribution implementations) and brute-force oracles that stay
// independent of the library code paths they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <tuple>
#include <vector>

#include "polytrace/geometry.hpp"
#include "polytrace/raster.hpp"

namespace testsupport {

// splitmix64; stable across platforms and standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    // inclusive range
    long long integer(long long lo, long long hi) {
        return lo + static_cast<long long>(next() % static_cast<std::uint64_t>(hi - lo + 1));
    }

private:
    std::uint64_t state_;
};

// Star-shaped polygon around a center: jittered regular angles and random
// radii, so vertices stay well separated and the ring never self-intersects.
inline polytrace::Ring random_star_ring(Rng& rng, polytrace::Point2 center, double min_radius,
                                        double max_radius, int min_points = 6,
                                        int max_points = 14) {
    const int n = static_cast<int>(rng.integer(min_points, max_points));
    std::vector<polytrace::Point2> pts;
    pts.reserve(n);
    for (int i = 0; i < n; ++i) {
        const double a =
            2.0 * 3.14159265358979323846 * (static_cast<double>(i) + rng.uniform(-0.3, 0.3)) / n;
        const double r = rng.uniform(min_radius, max_radius);
        pts.push_back({center.x + r * std::cos(a), center.y + r * std::sin(a)});
    }
    return polytrace::Ring(std::move(pts));
}

// Rectilinear "histogram" polygon: a flat base with axis-aligned steps on
// top. Every edge is at least min_edge long; every corner is a true 90
// degree corner. Integer coordinates.
inline polytrace::Ring random_rectilinear_ring(Rng& rng, double min_edge, int max_columns = 6,
                                               polytrace::Point2 origin = {0.0, 0.0}) {
    const int cols = static_cast<int>(rng.integer(2, max_columns));
    std::vector<double> xs{origin.x};
    for (int i = 0; i < cols; ++i)
        xs.push_back(xs.back() + min_edge + static_cast<double>(rng.integer(0, 40)));
    std::vector<double> hs(cols);
    double prev = 0.0;
    for (int i = 0; i < cols; ++i) {
        // heights differ from their neighbor by at least min_edge
        double h;
        do {
            h = min_edge * static_cast<double>(rng.integer(1, 5));
        } while (std::abs(h - prev) < min_edge && i > 0);
        hs[i] = h;
        prev = h;
    }
    std::vector<polytrace::Point2> pts;
    pts.push_back({xs[0], origin.y});
    for (int i = 0; i < cols; ++i) {
        pts.push_back({xs[i], origin.y - hs[i]});
        pts.push_back({xs[i + 1], origin.y - hs[i]});
    }
    pts.push_back({xs[cols], origin.y});
    // the base edge closes the ring implicitly
    return polytrace::Ring(std::move(pts));
}

// Densely sampled noisy version of a ring: points every ~step px along each
// edge, jittered by up to `noise` px.
inline polytrace::Ring noisy_outline(Rng& rng, const polytrace::Ring& shape, double step,
                                     double noise) {
    std::vector<polytrace::Point2> pts;
    for (std::size_t i = 0; i < shape.size(); ++i) {
        const polytrace::Point2 a = shape[i];
        const polytrace::Point2 b = shape[(i + 1) % shape.size()];
        const double len = polytrace::distance(a, b);
        const int segments = std::max(1, static_cast<int>(len / step));
        for (int k = 0; k < segments; ++k) {
            const double t = static_cast<double>(k) / segments;
            polytrace::Point2 p = a + t * (b - a);
            p.x += rng.uniform(-noise, noise);
            p.y += rng.uniform(-noise, noise);
            if (!pts.empty() && p == pts.back()) continue;
            pts.push_back(p);
        }
    }
    if (pts.front() == pts.back()) pts.pop_back();
    return polytrace::Ring(std::move(pts));
}

// Minimum distance from a point to a ring boundary by dense sampling; the
// independent oracle for the analytic point-to-boundary distance.
inline double sampled_ring_distance(polytrace::Point2 p, const polytrace::Ring& ring,
                                    double spacing) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < ring.size(); ++i) {
        const polytrace::Point2 a = ring[i];
        const polytrace::Point2 b = ring[(i + 1) % ring.size()];
        const double len = polytrace::distance(a, b);
        const int steps = std::max(1, static_cast<int>(std::ceil(len / spacing)));
        for (int k = 0; k <= steps; ++k) {
            const double t = static_cast<double>(k) / steps;
            best = std::min(best, polytrace::distance(p, a + t * (b - a)));
        }
    }
    return best;
}

// Undirected unit boundary edges of a mask region, derived directly from
// pixel membership; the oracle for contour extraction.
using UnitEdge = std::tuple<int, int, int, int>;  // (x1,y1,x2,y2), lexicographically ordered

inline std::set<UnitEdge> boundary_edge_oracle(const polytrace::MaskRaster& mask,
                                               const std::vector<std::int32_t>& region,
                                               std::int32_t id) {
    std::set<UnitEdge> edges;
    const auto in = [&](int x, int y) {
        return x >= 0 && y >= 0 && x < mask.width && y < mask.height &&
               region[static_cast<std::size_t>(y) * mask.width + x] == id;
    };
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x) {
            if (!in(x, y)) continue;
            if (!in(x, y - 1)) edges.insert({x, y, x + 1, y});
            if (!in(x, y + 1)) edges.insert({x, y + 1, x + 1, y + 1});
            if (!in(x - 1, y)) edges.insert({x, y, x, y + 1});
            if (!in(x + 1, y)) edges.insert({x + 1, y, x + 1, y + 1});
        }
    return edges;
}

inline void add_ring_unit_edges(const polytrace::Ring& ring, std::set<UnitEdge>& out) {
    for (std::size_t i = 0; i < ring.size(); ++i) {
        const polytrace::Point2 a = ring[i];
        const polytrace::Point2 b = ring[(i + 1) % ring.size()];
        const int ax = static_cast<int>(std::lround(a.x)), ay = static_cast<int>(std::lround(a.y));
        const int bx = static_cast<int>(std::lround(b.x)), by = static_cast<int>(std::lround(b.y));
        if (std::tie(ax, ay) < std::tie(bx, by))
            out.insert({ax, ay, bx, by});
        else
            out.insert({bx, by, ax, ay});
    }
}

}  // namespace testsupport

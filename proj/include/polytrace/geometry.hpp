#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

#include "polytrace/error.hpp"

namespace polytrace {

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Point2 operator*(double s, Point2 p) { return {s * p.x, s * p.y}; }
    friend bool operator==(Point2 a, Point2 b) { return a.x == b.x && a.y == b.y; }
    friend bool operator!=(Point2 a, Point2 b) { return !(a == b); }
};

inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double squared_norm(Point2 a) { return a.x * a.x + a.y * a.y; }
inline double norm(Point2 a) { return std::sqrt(squared_norm(a)); }
inline double squared_distance(Point2 a, Point2 b) { return squared_norm(a - b); }
inline double distance(Point2 a, Point2 b) { return norm(a - b); }

// Distance from p to the closed segment [a, b].
inline double point_segment_distance(Point2 p, Point2 a, Point2 b) {
    const Point2 ab = b - a;
    const double len2 = squared_norm(ab);
    if (len2 == 0.0) return distance(p, a);
    const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
    return distance(p, a + t * ab);
}

struct BoundingBox {
    double min_x = 0.0, min_y = 0.0, max_x = 0.0, max_y = 0.0;

    bool contains(Point2 p) const {
        return p.x >= min_x && p.x <= max_x && p.y >= min_y && p.y <= max_y;
    }
};

// Closed polygon boundary in pixel coordinates. The first point is not
// repeated at the end; the edge back()->front() is implicit. Coordinates use
// the image convention: y grows downward, and "counter-clockwise" means
// positive signed area in that frame.
class Ring {
public:
    Ring() = default;

    explicit Ring(std::vector<Point2> points) : points_(std::move(points)) {
        if (points_.size() < 3)
            throw Error("degenerate-ring", "ring needs at least 3 points, got " +
                                               std::to_string(points_.size()));
        for (std::size_t i = 0; i < points_.size(); ++i) {
            const Point2 p = points_[i];
            if (!std::isfinite(p.x) || !std::isfinite(p.y))
                throw Error("degenerate-ring", "non-finite coordinate at index " + std::to_string(i));
            if (p == points_[(i + 1) % points_.size()])
                throw Error("degenerate-ring",
                            "coincident consecutive points at index " + std::to_string(i));
        }
    }

    std::size_t size() const { return points_.size(); }
    const Point2& operator[](std::size_t i) const { return points_[i]; }
    const std::vector<Point2>& points() const { return points_; }

    // Modular indexing; accepts any integer offset.
    const Point2& wrapped(std::ptrdiff_t i) const {
        const auto n = static_cast<std::ptrdiff_t>(points_.size());
        return points_[static_cast<std::size_t>(((i % n) + n) % n)];
    }

    // Reversed traversal direction; keeps the same first point.
    Ring reversed() const {
        std::vector<Point2> pts;
        pts.reserve(points_.size());
        pts.push_back(points_.front());
        for (std::size_t i = points_.size(); i > 1; --i) pts.push_back(points_[i - 1]);
        return Ring(std::move(pts));
    }

    // Vertex centroid (arithmetic mean of the points).
    Point2 centroid() const {
        Point2 c{0.0, 0.0};
        for (const Point2& p : points_) c = c + p;
        return (1.0 / static_cast<double>(points_.size())) * c;
    }

    friend bool operator==(const Ring& a, const Ring& b) { return a.points_ == b.points_; }

private:
    std::vector<Point2> points_;
};

// Shoelace area; positive iff counter-clockwise in the y-down frame.
inline double signed_area(const Ring& ring) {
    double twice = 0.0;
    for (std::size_t i = 0; i < ring.size(); ++i) {
        const Point2 a = ring[i];
        const Point2 b = ring[(i + 1) % ring.size()];
        twice += a.x * b.y - b.x * a.y;
    }
    return 0.5 * twice;
}

inline BoundingBox bounding_box(const Ring& ring) {
    BoundingBox box{ring[0].x, ring[0].y, ring[0].x, ring[0].y};
    for (const Point2& p : ring.points()) {
        box.min_x = std::min(box.min_x, p.x);
        box.min_y = std::min(box.min_y, p.y);
        box.max_x = std::max(box.max_x, p.x);
        box.max_y = std::max(box.max_y, p.y);
    }
    return box;
}

inline double point_to_ring_distance(Point2 p, const Ring& ring) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < ring.size(); ++i)
        best = std::min(best, point_segment_distance(p, ring[i], ring[(i + 1) % ring.size()]));
    return best;
}

namespace detail {

inline int orientation_sign(Point2 a, Point2 b, Point2 c) {
    const double v = cross(b - a, c - a);
    return v > 0.0 ? 1 : v < 0.0 ? -1 : 0;
}

// collinear p within the axis-aligned box of [a, b]
inline bool on_collinear_segment(Point2 a, Point2 b, Point2 p) {
    return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) &&
           std::min(a.y, b.y) <= p.y && p.y <= std::max(a.y, b.y);
}

inline bool segments_intersect(Point2 a, Point2 b, Point2 c, Point2 d) {
    const int o1 = orientation_sign(a, b, c);
    const int o2 = orientation_sign(a, b, d);
    const int o3 = orientation_sign(c, d, a);
    const int o4 = orientation_sign(c, d, b);
    if (o1 != o2 && o3 != o4) return true;
    if (o1 == 0 && on_collinear_segment(a, b, c)) return true;
    if (o2 == 0 && on_collinear_segment(a, b, d)) return true;
    if (o3 == 0 && on_collinear_segment(c, d, a)) return true;
    if (o4 == 0 && on_collinear_segment(c, d, b)) return true;
    return false;
}

}  // namespace detail

// True iff the boundary neither crosses nor touches itself: non-adjacent
// edges are disjoint and consecutive edges meet only at their shared vertex
// (a collinear continuation is fine, a fold-back is not). Not enforced on
// construction; mask contours can legitimately self-touch at corners.
inline bool is_simple(const Ring& ring) {
    const std::size_t n = ring.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point2 a = ring[i];
        const Point2 b = ring[(i + 1) % n];
        for (std::size_t j = i + 1; j < n; ++j) {
            const Point2 c = ring[j];
            const Point2 d = ring[(j + 1) % n];
            if (j == i + 1 || (i == 0 && j == n - 1)) {
                // edges sharing vertex s: fold-back iff the other endpoints
                // are collinear with s on the same side
                const Point2 s = j == i + 1 ? b : a;
                const Point2 u = j == i + 1 ? a : b;
                const Point2 v = j == i + 1 ? d : c;
                if (detail::orientation_sign(s, u, v) == 0 && dot(u - s, v - s) > 0.0)
                    return false;
            } else if (detail::segments_intersect(a, b, c, d)) {
                return false;
            }
        }
    }
    return true;
}

// Exterior ring kept counter-clockwise (positive area), holes clockwise;
// orientation is normalized on construction by the area sign.
class PolygonWithHoles {
public:
    PolygonWithHoles() = default;

    explicit PolygonWithHoles(Ring exterior, std::vector<Ring> holes = {})
        : exterior_(std::move(exterior)), holes_(std::move(holes)) {
        if (signed_area(exterior_) < 0.0) exterior_ = exterior_.reversed();
        const BoundingBox box = bounding_box(exterior_);
        for (Ring& hole : holes_) {
            if (signed_area(hole) > 0.0) hole = hole.reversed();
            for (const Point2& p : hole.points())
                if (!box.contains(p))
                    throw Error("hole-outside-exterior",
                                "hole point outside the exterior bounding box");
        }
    }

    const Ring& exterior() const { return exterior_; }
    const std::vector<Ring>& holes() const { return holes_; }

    // Exterior area minus hole areas.
    double area() const {
        double a = signed_area(exterior_);
        for (const Ring& hole : holes_) a += signed_area(hole);
        return a;
    }

    std::size_t vertex_count() const {
        std::size_t n = exterior_.size();
        for (const Ring& hole : holes_) n += hole.size();
        return n;
    }

private:
    Ring exterior_;
    std::vector<Ring> holes_;
};

namespace detail {

// Douglas-Peucker over an open index chain [lo, hi] of the rotated ring;
// keeps a split point while its deviation is >= epsilon, so epsilon = 0
// keeps everything.
template <typename PointAt>
void dp_mark(const PointAt& at, std::size_t chain_len, double epsilon, std::vector<char>& keep) {
    std::vector<std::pair<std::size_t, std::size_t>> stack{{0, chain_len - 1}};
    while (!stack.empty()) {
        const auto [lo, hi] = stack.back();
        stack.pop_back();
        if (hi - lo < 2) continue;
        std::size_t split = lo;
        double dmax = -1.0;
        for (std::size_t k = lo + 1; k < hi; ++k) {
            const double d = point_segment_distance(at(k), at(lo), at(hi));
            if (d > dmax) {
                dmax = d;
                split = k;
            }
        }
        if (dmax >= epsilon) {
            keep[split] = 1;
            stack.emplace_back(lo, split);
            stack.emplace_back(split, hi);
        }
    }
}

}  // namespace detail

namespace detail {

// One anchored Douglas-Peucker pass over a closed ring.
inline Ring dp_pass(const Ring& ring, double epsilon) {
    const std::size_t n = ring.size();

    const Point2 c = ring.centroid();
    std::size_t anchor = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = squared_distance(ring[i], c);
        if (d > best) {
            best = d;
            anchor = i;
        }
    }

    const auto at = [&](std::size_t k) -> Point2 { return ring[(anchor + k) % n]; };
    std::vector<char> keep(n + 1, 0);
    keep[0] = keep[n] = 1;
    detail::dp_mark(at, n + 1, epsilon, keep);

    std::vector<std::size_t> kept;
    for (std::size_t k = 0; k < n; ++k)
        if (keep[k]) kept.push_back((anchor + k) % n);
    std::sort(kept.begin(), kept.end());

    if (kept.size() >= 3) {
        std::vector<Point2> pts;
        pts.reserve(kept.size());
        for (std::size_t i : kept) pts.push_back(ring[i]);
        return Ring(std::move(pts));
    }

    // Floor: recover the 3 points with the largest deviations — the anchor,
    // the point farthest from it, and the point farthest from their chord.
    std::size_t far = anchor;
    best = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (i == anchor) continue;
        const double d = squared_distance(ring[i], ring[anchor]);
        if (d > best) {
            best = d;
            far = i;
        }
    }
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < n; ++i)
        if (i != anchor && i != far) order.push_back(i);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return point_segment_distance(ring[a], ring[anchor], ring[far]) >
               point_segment_distance(ring[b], ring[anchor], ring[far]);
    });
    for (std::size_t third : order) {
        std::size_t idx[3] = {anchor, far, third};
        std::sort(std::begin(idx), std::end(idx));
        try {
            return Ring({ring[idx[0]], ring[idx[1]], ring[idx[2]]});
        } catch (const Error&) {
            // coincident non-consecutive duplicates; try the next candidate
        }
    }
    throw Error("degenerate-ring", "no 3 distinct points available after simplification");
}

}  // namespace detail

// Douglas-Peucker simplification of a closed ring. Each pass anchors the
// ring at the vertex farthest from the centroid (ties to the lowest index)
// and runs the open chain with the anchor duplicated at both ends; passes
// repeat until a fixed point so the operation is idempotent. Never collapses
// below 3 points. Output points are a subsequence of the input in original
// order.
inline Ring dp_simplify(const Ring& ring, double epsilon) {
    if (!(epsilon >= 0.0)) throw Error("invalid-epsilon", "epsilon must be >= 0");
    if (ring.size() < 3) throw Error("degenerate-ring", "cannot simplify an empty ring");
    Ring current = ring;
    for (;;) {
        Ring next = detail::dp_pass(current, epsilon);
        if (next == current) return current;
        current = std::move(next);
    }
}

// Simplified ring with equally spaced points inserted along every edge.
// is_seed flags mark exactly the vertices of the simplified input.
struct ResampledRing {
    Ring ring;
    std::vector<std::uint8_t> is_seed;
};

// Inserts points at multiples of `interval` along each edge. A point landing
// on the edge endpoint (interval divides the edge length) is skipped; the
// endpoint is contributed by the next edge. Consecutive spacing stays in
// (0, interval].
inline ResampledRing resample_ring(const Ring& simplified, double interval) {
    if (!(interval > 0.0)) throw Error("invalid-interval", "interval must be > 0");
    std::vector<Point2> pts;
    std::vector<std::uint8_t> seed;
    const std::size_t m = simplified.size();
    for (std::size_t i = 0; i < m; ++i) {
        const Point2 a = simplified[i];
        const Point2 b = simplified[(i + 1) % m];
        pts.push_back(a);
        seed.push_back(1);
        const double q = distance(a, b);
        const auto k_max = static_cast<long long>(std::floor(q / interval));
        for (long long k = 1; k <= k_max; ++k) {
            const double t = static_cast<double>(k) * interval;
            if (q - t <= 1e-9) break;  // endpoint duplicate
            pts.push_back(a + (t / q) * (b - a));
            seed.push_back(0);
        }
    }
    return {Ring(std::move(pts)), std::move(seed)};
}

// Angle at each point between the rays to its s-th neighbors on both sides,
// in [0, pi]; a locally straight configuration gives pi. Indices wrap; a
// zero-length arm yields pi (treated as straight).
inline std::vector<double> interior_angles(const Ring& ring, int neighbor_distance) {
    if (neighbor_distance < 1)
        throw Error("invalid-neighbor-distance", "neighbor distance must be >= 1");
    const std::size_t n = ring.size();
    const auto s = static_cast<std::size_t>(neighbor_distance);
    if (n < 2 * s + 1)
        throw Error("insufficient-points", "ring of " + std::to_string(n) +
                                               " points too short for neighbor distance " +
                                               std::to_string(neighbor_distance));
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Point2 u = ring[(i + n - s) % n] - ring[i];
        const Point2 w = ring[(i + s) % n] - ring[i];
        if (squared_norm(u) == 0.0 || squared_norm(w) == 0.0) {
            out[i] = std::numbers::pi;
            continue;
        }
        out[i] = std::atan2(std::abs(cross(u, w)), dot(u, w));
    }
    return out;
}

}  // namespace polytrace

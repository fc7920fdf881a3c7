#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <unordered_map>
#include <utility>
#include <vector>

#include "polytrace/error.hpp"
#include "polytrace/geometry.hpp"

namespace polytrace {

// Row-major grid of class labels; 0 is background. Pixel (x, y) spans the
// unit square [x, x+1) x [y, y+1) in ring coordinates, with its center at
// (x + 0.5, y + 0.5).
struct MaskRaster {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> labels;

    MaskRaster() = default;
    MaskRaster(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), labels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {
        if (w < 0 || h < 0) throw Error("invalid-raster", "negative dimensions");
    }

    bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
    std::uint8_t at(int x, int y) const {
        return labels[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)];
    }
    std::uint8_t& at(int x, int y) {
        return labels[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)];
    }

    friend bool operator==(const MaskRaster& a, const MaskRaster& b) {
        return a.width == b.width && a.height == b.height && a.labels == b.labels;
    }
};

// Foreground regions labeled 0..count-1 in scan order; background is -1.
// Two pixels share a region iff they hold the same class and are connected
// under the chosen connectivity.
struct ComponentMap {
    int width = 0;
    int height = 0;
    std::vector<std::int32_t> region;
    std::int32_t count = 0;
    std::vector<std::uint8_t> region_class;

    std::int32_t at(int x, int y) const {
        return region[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)];
    }
};

inline ComponentMap connected_components(const MaskRaster& mask, int connectivity = 8) {
    if (connectivity != 4 && connectivity != 8)
        throw Error("invalid-connectivity", "connectivity must be 4 or 8");
    ComponentMap cm;
    cm.width = mask.width;
    cm.height = mask.height;
    cm.region.assign(mask.labels.size(), -1);

    static constexpr int dx8[8] = {1, -1, 0, 0, 1, 1, -1, -1};
    static constexpr int dy8[8] = {0, 0, 1, -1, 1, -1, 1, -1};
    const int neighbor_count = connectivity == 4 ? 4 : 8;

    std::vector<std::int64_t> stack;
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) {
            const std::size_t idx = static_cast<std::size_t>(y) * mask.width + x;
            if (mask.labels[idx] == 0 || cm.region[idx] != -1) continue;
            const std::uint8_t cls = mask.labels[idx];
            const std::int32_t id = cm.count++;
            cm.region_class.push_back(cls);
            cm.region[idx] = id;
            stack.push_back(static_cast<std::int64_t>(idx));
            while (!stack.empty()) {
                const std::int64_t cur = stack.back();
                stack.pop_back();
                const int cx = static_cast<int>(cur % mask.width);
                const int cy = static_cast<int>(cur / mask.width);
                for (int k = 0; k < neighbor_count; ++k) {
                    const int nx = cx + dx8[k];
                    const int ny = cy + dy8[k];
                    if (!mask.in_bounds(nx, ny)) continue;
                    const std::size_t nidx = static_cast<std::size_t>(ny) * mask.width + nx;
                    if (mask.labels[nidx] != cls || cm.region[nidx] != -1) continue;
                    cm.region[nidx] = id;
                    stack.push_back(static_cast<std::int64_t>(nidx));
                }
            }
        }
    }
    return cm;
}

struct ClassedPolygon {
    std::uint8_t class_id = 0;
    PolygonWithHoles polygon;
};

using ContourSet = std::vector<ClassedPolygon>;

namespace detail {

// Directed boundary edge on the corner lattice, region interior on the side
// of the direction rotated by (x, y) -> (-y, x).
struct BorderEdge {
    int x, y;    // start corner
    int dx, dy;  // unit direction
};

inline ContourSet trace_region_contours(const std::vector<BorderEdge>& edges, std::uint8_t cls,
                                        int connectivity, std::int64_t corner_stride) {
    std::unordered_map<std::int64_t, std::pair<std::int32_t, std::int32_t>> outgoing;
    outgoing.reserve(edges.size() * 2);
    const auto key = [corner_stride](int x, int y) {
        return static_cast<std::int64_t>(y) * corner_stride + x;
    };
    for (std::size_t i = 0; i < edges.size(); ++i) {
        auto& slots = outgoing.try_emplace(key(edges[i].x, edges[i].y), -1, -1).first->second;
        (slots.first == -1 ? slots.first : slots.second) = static_cast<std::int32_t>(i);
    }

    std::vector<char> used(edges.size(), 0);
    std::vector<Ring> cycles;
    for (std::size_t start = 0; start < edges.size(); ++start) {
        if (used[start]) continue;
        std::vector<Point2> pts;
        std::size_t cur = start;
        while (!used[cur]) {
            used[cur] = 1;
            const BorderEdge e = edges[cur];
            pts.push_back({static_cast<double>(e.x), static_cast<double>(e.y)});
            const int nx = e.x + e.dx;
            const int ny = e.y + e.dy;
            const auto& slots = outgoing.at(key(nx, ny));
            std::int32_t next = slots.first;
            if (slots.second >= 0) {
                // corner where two diagonal pixels of this region touch: with
                // 8-connectivity the diagonal pair stays one boundary (turn
                // right); with 4-connectivity the two sides stay separate
                // (turn left)
                const int rdx = connectivity == 8 ? e.dy : -e.dy;
                const int rdy = connectivity == 8 ? -e.dx : e.dx;
                next = (edges[slots.first].dx == rdx && edges[slots.first].dy == rdy)
                           ? slots.first
                           : slots.second;
            }
            if (used[next]) break;  // back at the cycle start
            cur = static_cast<std::size_t>(next);
        }
        cycles.emplace_back(std::move(pts));
    }

    // exactly one positive cycle per region: the exterior; the rest are holes
    std::size_t exterior = cycles.size();
    std::vector<Ring> holes;
    for (std::size_t i = 0; i < cycles.size(); ++i) {
        if (signed_area(cycles[i]) > 0.0 && exterior == cycles.size())
            exterior = i;
        else
            holes.push_back(cycles[i]);
    }
    if (exterior == cycles.size())
        throw Error("contour-trace", "region produced no exterior cycle");
    ContourSet out;
    out.push_back({cls, PolygonWithHoles(cycles[exterior], std::move(holes))});
    return out;
}

}  // namespace detail

// Border following on the pixel corner lattice. Every region yields one
// exterior ring (counter-clockwise, dense unit steps) plus one clockwise
// ring per hole; regions touching the image border are closed along it.
inline ContourSet extract_contours(const MaskRaster& mask, int connectivity = 8) {
    const ComponentMap cm = connected_components(mask, connectivity);
    std::vector<std::vector<detail::BorderEdge>> region_edges(static_cast<std::size_t>(cm.count));
    const auto region_at = [&](int x, int y) -> std::int32_t {
        return mask.in_bounds(x, y) ? cm.at(x, y) : -1;
    };
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) {
            const std::int32_t id = cm.at(x, y);
            if (id < 0) continue;
            auto& edges = region_edges[static_cast<std::size_t>(id)];
            if (region_at(x, y - 1) != id) edges.push_back({x, y, 1, 0});
            if (region_at(x + 1, y) != id) edges.push_back({x + 1, y, 0, 1});
            if (region_at(x, y + 1) != id) edges.push_back({x + 1, y + 1, -1, 0});
            if (region_at(x - 1, y) != id) edges.push_back({x, y + 1, 0, -1});
        }
    }
    ContourSet out;
    const std::int64_t corner_stride = static_cast<std::int64_t>(mask.width) + 1;
    for (std::int32_t id = 0; id < cm.count; ++id) {
        ContourSet traced = detail::trace_region_contours(
            region_edges[static_cast<std::size_t>(id)], cm.region_class[static_cast<std::size_t>(id)],
            connectivity, corner_stride);
        for (auto& c : traced) out.push_back(std::move(c));
    }
    return out;
}

// Scanline fill with the even-odd rule, evaluated at pixel centers; hole
// interiors stay untouched. Pixels covered by the polygon are overwritten
// with class_id.
inline void rasterize_polygon(const PolygonWithHoles& poly, std::uint8_t class_id,
                              MaskRaster& target) {
    if (target.width <= 0 || target.height <= 0)
        throw Error("invalid-raster", "target dimensions must be positive");
    BoundingBox box = bounding_box(poly.exterior());
    const int y_begin = std::max(0, static_cast<int>(std::floor(box.min_y - 0.5)));
    const int y_end = std::min(target.height - 1, static_cast<int>(std::ceil(box.max_y)));
    std::vector<double> crossings;
    std::vector<const Ring*> rings{&poly.exterior()};
    for (const Ring& h : poly.holes()) rings.push_back(&h);
    for (int y = y_begin; y <= y_end; ++y) {
        const double cy = y + 0.5;
        crossings.clear();
        for (const Ring* ring : rings) {
            for (std::size_t i = 0; i < ring->size(); ++i) {
                const Point2 a = (*ring)[i];
                const Point2 b = (*ring)[(i + 1) % ring->size()];
                if ((a.y <= cy && b.y > cy) || (b.y <= cy && a.y > cy))
                    crossings.push_back(a.x + (cy - a.y) * (b.x - a.x) / (b.y - a.y));
            }
        }
        std::sort(crossings.begin(), crossings.end());
        for (std::size_t k = 0; k + 1 < crossings.size(); k += 2) {
            int x0 = static_cast<int>(std::ceil(crossings[k] - 0.5));
            int x1 = static_cast<int>(std::ceil(crossings[k + 1] - 0.5)) - 1;
            x0 = std::max(x0, 0);
            x1 = std::min(x1, target.width - 1);
            for (int x = x0; x <= x1; ++x) target.at(x, y) = class_id;
        }
    }
}

}  // namespace polytrace

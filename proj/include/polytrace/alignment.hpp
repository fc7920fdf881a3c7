#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "polytrace/error.hpp"
#include "polytrace/geometry.hpp"
#include "polytrace/raster.hpp"

namespace polytrace {

// Simplify-then-resample reconstruction of a raw contour chain.
inline ResampledRing reconstruct(const Ring& contour, double epsilon, double interval) {
    return resample_ring(dp_simplify(contour, epsilon), interval);
}

// A reconstructed contour aligned one-to-one with a ground-truth polygon:
// aligned_gt has exactly one point per reconstructed point, vertex_labels is
// 1 where the point was matched to a ground-truth vertex.
struct MatchedSample {
    Ring reconstructed;
    std::vector<Point2> aligned_gt;
    std::vector<std::uint8_t> vertex_labels;
    int matched_count = 0;
    // matched indices were not in cyclic ground-truth order; the
    // correspondence was re-rotated to the minimum-distance rotation
    bool rotation_warning = false;
};

// Matches every ground-truth vertex to its nearest reconstructed point
// (ties to the lowest index), collapsing duplicate targets by keeping the
// earliest ground-truth vertex. The kept vertices are assigned to the sorted
// match indices at the cyclic rotation minimizing total match distance, and
// the ground-truth edges are linearly interpolated across the index gaps so
// that |aligned_gt| == |reconstructed|.
inline MatchedSample match_to_ground_truth(const Ring& reconstructed, const Ring& ground_truth) {
    if (reconstructed.size() == 0 || ground_truth.size() == 0)
        throw Error("empty-polygon", "matching needs non-empty rings");
    const std::size_t n = reconstructed.size();
    const std::size_t m = ground_truth.size();

    // nearest reconstructed point per ground-truth vertex
    std::vector<std::size_t> nearest(m);
    for (std::size_t j = 0; j < m; ++j) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_i = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = squared_distance(reconstructed[i], ground_truth[j]);
            if (d < best) {
                best = d;
                best_i = i;
            }
        }
        nearest[j] = best_i;
    }

    // collapse duplicate targets, earliest ground-truth vertex wins
    std::vector<char> taken(n, 0);
    std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (index in R, index in G)
    for (std::size_t j = 0; j < m; ++j) {
        if (taken[nearest[j]]) continue;
        taken[nearest[j]] = 1;
        pairs.emplace_back(nearest[j], j);
    }
    const std::size_t p = pairs.size();

    // cyclic monotonicity of the match indices in ground-truth order
    std::size_t descents = 0;
    for (std::size_t k = 0; k < p; ++k)
        if (pairs[(k + 1) % p].first < pairs[k].first) ++descents;
    const bool crossed = p > 1 && descents > 1;

    // sorted match positions and the kept ground-truth vertices in order
    std::vector<std::size_t> positions(p);
    std::vector<Point2> kept_gt(p);
    for (std::size_t k = 0; k < p; ++k) {
        positions[k] = pairs[k].first;
        kept_gt[k] = ground_truth[pairs[k].second];
    }
    std::sort(positions.begin(), positions.end());

    // rotation of the kept ground-truth sequence that best matches the
    // sorted positions
    std::size_t best_rot = 0;
    double best_cost = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < p; ++t) {
        double cost = 0.0;
        for (std::size_t k = 0; k < p; ++k)
            cost += distance(reconstructed[positions[k]], kept_gt[(k + t) % p]);
        if (cost < best_cost) {
            best_cost = cost;
            best_rot = t;
        }
    }

    MatchedSample sample;
    sample.reconstructed = reconstructed;
    sample.aligned_gt.assign(n, Point2{});
    sample.vertex_labels.assign(n, 0);
    sample.matched_count = static_cast<int>(p);
    sample.rotation_warning = crossed;
    for (std::size_t k = 0; k < p; ++k) {
        const std::size_t i = positions[k];
        const std::size_t i_next = positions[(k + 1) % p] + (k + 1 == p ? n : 0);
        const Point2 a = kept_gt[(k + best_rot) % p];
        const Point2 b = kept_gt[(k + 1 + best_rot) % p];
        const std::size_t gap = i_next - i - 1;  // interior points on this arc
        sample.aligned_gt[i] = a;
        sample.vertex_labels[i] = 1;
        for (std::size_t q = 1; q <= gap; ++q) {
            const double s = static_cast<double>(q) / static_cast<double>(gap + 1);
            sample.aligned_gt[(i + q) % n] = a + s * (b - a);
        }
    }
    return sample;
}

struct TrainingSample {
    int instance_id = 0;
    int ring_index = 0;  // 0 = exterior, >0 = holes
    std::uint8_t class_id = 0;
    MatchedSample sample;
};

struct TrainingLabels {
    std::vector<TrainingSample> samples;
    int skipped_contours = 0;
    int skipped_holes = 0;
    int crossing_warnings = 0;
};

namespace detail {

// Mask IoU of two polygons rasterized over the joint bounding box.
inline double polygon_mask_iou(const PolygonWithHoles& a, const PolygonWithHoles& b) {
    BoundingBox ba = bounding_box(a.exterior());
    const BoundingBox bb = bounding_box(b.exterior());
    ba.min_x = std::min(ba.min_x, bb.min_x);
    ba.min_y = std::min(ba.min_y, bb.min_y);
    ba.max_x = std::max(ba.max_x, bb.max_x);
    ba.max_y = std::max(ba.max_y, bb.max_y);
    const int ox = static_cast<int>(std::floor(ba.min_x)) - 1;
    const int oy = static_cast<int>(std::floor(ba.min_y)) - 1;
    const int w = static_cast<int>(std::ceil(ba.max_x)) - ox + 2;
    const int h = static_cast<int>(std::ceil(ba.max_y)) - oy + 2;

    const auto shifted = [ox, oy](const PolygonWithHoles& poly) {
        const auto shift_ring = [ox, oy](const Ring& r) {
            std::vector<Point2> pts;
            pts.reserve(r.size());
            for (const Point2& pt : r.points())
                pts.push_back({pt.x - ox, pt.y - oy});
            return Ring(std::move(pts));
        };
        std::vector<Ring> holes;
        for (const Ring& hole : poly.holes()) holes.push_back(shift_ring(hole));
        return PolygonWithHoles(shift_ring(poly.exterior()), std::move(holes));
    };

    MaskRaster ra(w, h), rb(w, h);
    rasterize_polygon(shifted(a), 1, ra);
    rasterize_polygon(shifted(b), 1, rb);
    long inter = 0, uni = 0;
    for (std::size_t i = 0; i < ra.labels.size(); ++i) {
        inter += ra.labels[i] && rb.labels[i];
        uni += ra.labels[i] || rb.labels[i];
    }
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace detail

// Extracts contours from the mask, pairs each to the ground-truth polygon of
// maximal mask IoU (>= 0.5 required; unpaired contours are skipped and
// counted), and produces one matched sample per paired ring. Hole rings are
// paired with hole rings of the same instance by the same IoU rule.
inline TrainingLabels make_training_labels(const MaskRaster& mask, const ContourSet& ground_truth,
                                           double epsilon, double interval,
                                           int connectivity = 8) {
    if (ground_truth.empty()) throw Error("empty-polygon", "ground truth is empty");
    TrainingLabels out;
    const ContourSet contours = extract_contours(mask, connectivity);
    int instance_id = 0;
    for (const ClassedPolygon& contour : contours) {
        double best_iou = 0.0;
        const ClassedPolygon* best = nullptr;
        for (const ClassedPolygon& gt : ground_truth) {
            if (gt.class_id != contour.class_id) continue;
            const double iou = detail::polygon_mask_iou(contour.polygon, gt.polygon);
            if (iou > best_iou) {
                best_iou = iou;
                best = &gt;
            }
        }
        const int id = instance_id++;
        if (best == nullptr || best_iou < 0.5) {
            ++out.skipped_contours;
            continue;
        }

        const auto emit = [&](const Ring& pred_ring, const Ring& gt_ring, int ring_index) {
            const ResampledRing rec = reconstruct(pred_ring, epsilon, interval);
            TrainingSample ts;
            ts.instance_id = id;
            ts.ring_index = ring_index;
            ts.class_id = contour.class_id;
            ts.sample = match_to_ground_truth(rec.ring, gt_ring);
            out.crossing_warnings += ts.sample.rotation_warning;
            out.samples.push_back(std::move(ts));
        };

        emit(contour.polygon.exterior(), best->polygon.exterior(), 0);

        int ring_index = 1;
        for (const Ring& hole : contour.polygon.holes()) {
            double best_hole_iou = 0.0;
            const Ring* best_hole = nullptr;
            for (const Ring& gt_hole : best->polygon.holes()) {
                const double iou = detail::polygon_mask_iou(PolygonWithHoles(hole),
                                                            PolygonWithHoles(gt_hole));
                if (iou > best_hole_iou) {
                    best_hole_iou = iou;
                    best_hole = &gt_hole;
                }
            }
            if (best_hole == nullptr || best_hole_iou < 0.5) {
                ++out.skipped_holes;
                continue;
            }
            emit(hole, *best_hole, ring_index++);
        }
    }
    return out;
}

}  // namespace polytrace

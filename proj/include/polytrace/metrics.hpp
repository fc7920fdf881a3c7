#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "polytrace/error.hpp"
#include "polytrace/geometry.hpp"
#include "polytrace/raster.hpp"

namespace polytrace {

// Symmetric mean vertex-to-boundary distance between two rings. Each vertex
// of one ring is measured against the closest point on the other ring's
// boundary (minimum over segments, not vertices).
inline double polis(const Ring& a, const Ring& b) {
    if (a.size() < 3 || b.size() < 3)
        throw Error("degenerate-ring", "polis needs two valid rings");
    double sum_a = 0.0;
    for (const Point2& p : a.points()) sum_a += point_to_ring_distance(p, b);
    double sum_b = 0.0;
    for (const Point2& p : b.points()) sum_b += point_to_ring_distance(p, a);
    return sum_a / (2.0 * static_cast<double>(a.size())) +
           sum_b / (2.0 * static_cast<double>(b.size()));
}

namespace detail {

// Pixel set of a polygon rasterized over an axis-aligned window of the
// shared grid, as a local bitmap.
struct LocalMask {
    int x0 = 0, y0 = 0, w = 0, h = 0;
    std::vector<std::uint8_t> bits;
    long count = 0;
};

inline LocalMask rasterize_local(const PolygonWithHoles& poly, int grid_w, int grid_h) {
    const BoundingBox box = bounding_box(poly.exterior());
    LocalMask lm;
    lm.x0 = std::max(0, static_cast<int>(std::floor(box.min_x)) - 1);
    lm.y0 = std::max(0, static_cast<int>(std::floor(box.min_y)) - 1);
    const int x1 = std::min(grid_w, static_cast<int>(std::ceil(box.max_x)) + 1);
    const int y1 = std::min(grid_h, static_cast<int>(std::ceil(box.max_y)) + 1);
    lm.w = std::max(0, x1 - lm.x0);
    lm.h = std::max(0, y1 - lm.y0);
    if (lm.w == 0 || lm.h == 0) return lm;

    const auto shift_ring = [&](const Ring& r) {
        std::vector<Point2> pts;
        pts.reserve(r.size());
        for (const Point2& p : r.points()) pts.push_back({p.x - lm.x0, p.y - lm.y0});
        return Ring(std::move(pts));
    };
    std::vector<Ring> holes;
    for (const Ring& hole : poly.holes()) holes.push_back(shift_ring(hole));
    MaskRaster raster(lm.w, lm.h);
    rasterize_polygon(PolygonWithHoles(shift_ring(poly.exterior()), std::move(holes)), 1, raster);
    lm.bits = std::move(raster.labels);
    for (std::uint8_t v : lm.bits) lm.count += v;
    return lm;
}

inline double mask_iou(const LocalMask& a, const LocalMask& b) {
    const int x0 = std::max(a.x0, b.x0);
    const int y0 = std::max(a.y0, b.y0);
    const int x1 = std::min(a.x0 + a.w, b.x0 + b.w);
    const int y1 = std::min(a.y0 + a.h, b.y0 + b.h);
    long inter = 0;
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) {
            const bool in_a = a.bits[static_cast<std::size_t>(y - a.y0) * a.w + (x - a.x0)];
            const bool in_b = b.bits[static_cast<std::size_t>(y - b.y0) * b.w + (x - b.x0)];
            inter += in_a && in_b;
        }
    const long uni = a.count + b.count - inter;
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace detail

// C-IoU: mask IoU on the shared grid, discounted by the relative difference
// of the vertex counts. Returns a percentage.
inline double ciou(const Ring& a, const Ring& b, int grid_w, int grid_h) {
    if (a.size() < 3 || b.size() < 3)
        throw Error("degenerate-ring", "ciou needs two valid rings");
    if (grid_w <= 0 || grid_h <= 0) throw Error("invalid-raster", "grid must be positive");
    const detail::LocalMask ma = detail::rasterize_local(PolygonWithHoles(a), grid_w, grid_h);
    const detail::LocalMask mb = detail::rasterize_local(PolygonWithHoles(b), grid_w, grid_h);
    const double iou = detail::mask_iou(ma, mb);
    const double rd = static_cast<double>(std::abs(static_cast<long>(a.size()) -
                                                   static_cast<long>(b.size()))) /
                      static_cast<double>(a.size() + b.size());
    return 100.0 * iou * (1.0 - rd);
}

struct SemanticScores {
    double iou = 0.0;  // percent
    double f1 = 0.0;   // percent
};

// Per-foreground-class IoU and F1 from the pixel confusion counts, averaged
// over the classes present in either mask.
inline SemanticScores semantic_iou_f1(const MaskRaster& pred, const MaskRaster& gt) {
    if (pred.width != gt.width || pred.height != gt.height)
        throw Error("size-mismatch", "mask dimensions differ");
    std::array<long, 256> tp{}, fp{}, fn{};
    for (std::size_t i = 0; i < pred.labels.size(); ++i) {
        const std::uint8_t p = pred.labels[i];
        const std::uint8_t g = gt.labels[i];
        if (p == g) {
            if (p != 0) ++tp[p];
        } else {
            if (p != 0) ++fp[p];
            if (g != 0) ++fn[g];
        }
    }
    double iou_sum = 0.0, f1_sum = 0.0;
    int classes = 0;
    for (int c = 1; c < 256; ++c) {
        const long denom = tp[c] + fp[c] + fn[c];
        if (denom == 0) continue;
        ++classes;
        iou_sum += static_cast<double>(tp[c]) / static_cast<double>(denom);
        f1_sum += 2.0 * static_cast<double>(tp[c]) / static_cast<double>(tp[c] + denom);
    }
    if (classes == 0) return {0.0, 0.0};
    return {100.0 * iou_sum / classes, 100.0 * f1_sum / classes};
}

struct ScoredInstance {
    std::uint8_t class_id = 0;
    PolygonWithHoles polygon;
    double score = 1.0;
};

struct ApResult {
    double ap = 0.0, ap_s = 0.0, ap_m = 0.0, ap_l = 0.0;  // percent
};

namespace detail {

struct AreaBin {
    double lo;
    double hi;  // inclusive bounds on the mask-pixel area
};

// size bins over mask-pixel areas, redefined for large imagery
inline constexpr AreaBin kBinAll{0.0, std::numeric_limits<double>::infinity()};
inline constexpr AreaBin kBinSmall{0.0, 128.0 * 128.0 - 1.0};
inline constexpr AreaBin kBinMedium{128.0 * 128.0, 512.0 * 512.0};
inline constexpr AreaBin kBinLarge{512.0 * 512.0 + 1.0, std::numeric_limits<double>::infinity()};

// COCO-style AP at one area bin for one class, averaged over the ten IoU
// thresholds 0.50:0.05:0.95 with 101-point interpolated precision.
// Returns the AP in [0, 1], or no value when the bin holds no ground truth.
inline std::optional<double> ap_single_class(const std::vector<std::size_t>& pred_order,
                                             const std::vector<double>& pred_area,
                                             const std::vector<double>& gt_area,
                                             const std::vector<std::vector<double>>& iou,
                                             const AreaBin& bin) {
    const std::size_t num_gt = gt_area.size();
    std::vector<char> gt_ignored(num_gt);
    std::size_t active_gt = 0;
    for (std::size_t j = 0; j < num_gt; ++j) {
        gt_ignored[j] = gt_area[j] < bin.lo || gt_area[j] > bin.hi;
        active_gt += !gt_ignored[j];
    }
    if (active_gt == 0) return std::nullopt;

    double ap_sum = 0.0;
    for (int ti = 0; ti < 10; ++ti) {
        const double threshold = 0.5 + 0.05 * ti;
        std::vector<char> gt_used(num_gt, 0);
        std::vector<char> tp, ignored;
        tp.reserve(pred_order.size());
        ignored.reserve(pred_order.size());
        for (const std::size_t pi : pred_order) {
            // best available ground truth; prefer non-ignored
            long best = -1;
            double best_iou = threshold;
            long best_ignored = -1;
            double best_ignored_iou = threshold;
            for (std::size_t j = 0; j < num_gt; ++j) {
                if (gt_used[j]) continue;
                const double v = iou[pi][j];
                if (gt_ignored[j]) {
                    if (v >= best_ignored_iou) {
                        best_ignored_iou = v;
                        best_ignored = static_cast<long>(j);
                    }
                } else if (v >= best_iou) {
                    best_iou = v;
                    best = static_cast<long>(j);
                }
            }
            if (best >= 0) {
                gt_used[static_cast<std::size_t>(best)] = 1;
                tp.push_back(1);
                ignored.push_back(0);
            } else if (best_ignored >= 0) {
                gt_used[static_cast<std::size_t>(best_ignored)] = 1;
                tp.push_back(0);
                ignored.push_back(1);  // matched an out-of-bin ground truth
            } else {
                tp.push_back(0);
                // unmatched detections outside the bin do not count as FP
                ignored.push_back(pred_area[pi] < bin.lo || pred_area[pi] > bin.hi);
            }
        }

        // precision/recall over the ranked, non-ignored detections
        std::vector<double> precision, recall;
        long tp_cum = 0, fp_cum = 0;
        for (std::size_t k = 0; k < tp.size(); ++k) {
            if (ignored[k]) continue;
            tp_cum += tp[k];
            fp_cum += !tp[k];
            precision.push_back(static_cast<double>(tp_cum) /
                                static_cast<double>(tp_cum + fp_cum));
            recall.push_back(static_cast<double>(tp_cum) / static_cast<double>(active_gt));
        }
        // monotone non-increasing envelope
        for (std::size_t k = precision.size(); k-- > 1;)
            precision[k - 1] = std::max(precision[k - 1], precision[k]);
        // 101-point interpolation
        double ap = 0.0;
        std::size_t idx = 0;
        for (int r = 0; r <= 100; ++r) {
            const double want = r / 100.0;
            while (idx < recall.size() && recall[idx] < want) ++idx;
            if (idx < precision.size()) ap += precision[idx];
        }
        ap_sum += ap / 101.0;
    }
    return ap_sum / 10.0;
}

}  // namespace detail

// COCO-style instance AP over polygon masks rasterized on the shared grid,
// averaged over classes, with size-binned variants (areas measured in mask
// pixels: small < 128^2, medium in [128^2, 512^2], large > 512^2).
inline ApResult instance_ap(const std::vector<ScoredInstance>& preds,
                            const std::vector<ClassedPolygon>& gts, int grid_w, int grid_h) {
    std::set<int> classes;
    for (const ClassedPolygon& g : gts) classes.insert(g.class_id);

    std::vector<detail::LocalMask> pred_masks(preds.size());
    for (std::size_t i = 0; i < preds.size(); ++i)
        pred_masks[i] = detail::rasterize_local(preds[i].polygon, grid_w, grid_h);
    std::vector<detail::LocalMask> gt_masks(gts.size());
    for (std::size_t j = 0; j < gts.size(); ++j)
        gt_masks[j] = detail::rasterize_local(gts[j].polygon, grid_w, grid_h);

    const std::array<detail::AreaBin, 4> bins{detail::kBinAll, detail::kBinSmall,
                                              detail::kBinMedium, detail::kBinLarge};
    std::array<double, 4> sums{};
    std::array<int, 4> counts{};
    for (int cls : classes) {
        std::vector<std::size_t> pred_idx, gt_idx;
        for (std::size_t i = 0; i < preds.size(); ++i)
            if (preds[i].class_id == cls) pred_idx.push_back(i);
        for (std::size_t j = 0; j < gts.size(); ++j)
            if (gts[j].class_id == cls) gt_idx.push_back(j);

        std::vector<std::vector<double>> iou(pred_idx.size(),
                                             std::vector<double>(gt_idx.size(), 0.0));
        for (std::size_t i = 0; i < pred_idx.size(); ++i)
            for (std::size_t j = 0; j < gt_idx.size(); ++j)
                iou[i][j] = detail::mask_iou(pred_masks[pred_idx[i]], gt_masks[gt_idx[j]]);

        // rank by descending score, stable on input order
        std::vector<std::size_t> order(pred_idx.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return preds[pred_idx[a]].score > preds[pred_idx[b]].score;
        });

        std::vector<double> pred_area(pred_idx.size()), gt_area(gt_idx.size());
        for (std::size_t i = 0; i < pred_idx.size(); ++i)
            pred_area[i] = static_cast<double>(pred_masks[pred_idx[i]].count);
        for (std::size_t j = 0; j < gt_idx.size(); ++j)
            gt_area[j] = static_cast<double>(gt_masks[gt_idx[j]].count);

        for (std::size_t bi = 0; bi < bins.size(); ++bi) {
            const auto ap = detail::ap_single_class(order, pred_area, gt_area, iou, bins[bi]);
            if (ap) {
                sums[bi] += *ap;
                ++counts[bi];
            }
        }
    }
    const auto pct = [&](std::size_t bi) {
        return counts[bi] == 0 ? 0.0 : 100.0 * sums[bi] / counts[bi];
    };
    return {pct(0), pct(1), pct(2), pct(3)};
}

// Undirected road graph with explicit edge lengths.
struct RoadGraph {
    std::map<int, Point2> nodes;
    struct Edge {
        int a = 0, b = 0;
        double length = 0.0;
    };
    std::vector<Edge> edges;

    void validate() const {
        for (const Edge& e : edges) {
            if (!nodes.count(e.a) || !nodes.count(e.b))
                throw Error("invalid-graph", "edge endpoint missing");
            if (e.a == e.b) throw Error("invalid-graph", "self-loop");
            if (!(e.length > 0.0)) throw Error("invalid-graph", "non-positive edge length");
        }
    }
};

namespace detail {

// single-source shortest path lengths over nonnegative edge weights
inline std::map<int, double> dijkstra(const RoadGraph& g, int source) {
    std::map<int, std::vector<std::pair<int, double>>> adj;
    for (const RoadGraph::Edge& e : g.edges) {
        adj[e.a].push_back({e.b, e.length});
        adj[e.b].push_back({e.a, e.length});
    }
    std::map<int, double> dist;
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    heap.push({0.0, source});
    while (!heap.empty()) {
        const auto [d, u] = heap.top();
        heap.pop();
        if (dist.count(u)) continue;
        dist[u] = d;
        for (const auto& [v, w] : adj[u])
            if (!dist.count(v)) heap.push({d + w, v});
    }
    return dist;
}

}  // namespace detail

// Average Path Length Similarity between a ground-truth and a predicted
// graph, as a percentage. Ground-truth nodes pair with their nearest
// predicted node within the pairing radius; every ground-truth node pair
// with a valid path contributes |d_pred - d_gt| / d_gt clamped to [0, 1],
// with a full penalty of 1 when the pairing or the predicted path is
// missing.
inline double apls(const RoadGraph& gt, const RoadGraph& pred, double pairing_radius = 50.0) {
    gt.validate();
    pred.validate();
    if (gt.nodes.empty()) throw Error("empty-graph", "ground-truth graph has no nodes");

    std::map<int, int> paired;  // gt node -> pred node
    for (const auto& [id, pos] : gt.nodes) {
        double best = pairing_radius;
        int best_id = -1;
        for (const auto& [pid, ppos] : pred.nodes) {
            const double d = distance(pos, ppos);
            if (d < best || (d == best && best_id == -1)) {
                best = d;
                best_id = pid;
            }
        }
        if (best_id != -1) paired[id] = best_id;
    }

    std::vector<int> gt_ids;
    for (const auto& [id, pos] : gt.nodes) gt_ids.push_back(id);

    double penalty_sum = 0.0;
    long pair_count = 0;
    for (std::size_t i = 0; i < gt_ids.size(); ++i) {
        const std::map<int, double> d_gt = detail::dijkstra(gt, gt_ids[i]);
        std::map<int, double> d_pred;
        const auto pi = paired.find(gt_ids[i]);
        if (pi != paired.end()) d_pred = detail::dijkstra(pred, pi->second);
        for (std::size_t j = i + 1; j < gt_ids.size(); ++j) {
            const auto dg = d_gt.find(gt_ids[j]);
            if (dg == d_gt.end() || dg->second <= 0.0) continue;  // no valid gt path
            ++pair_count;
            const auto pj = paired.find(gt_ids[j]);
            if (pi == paired.end() || pj == paired.end()) {
                penalty_sum += 1.0;
                continue;
            }
            const auto dp = d_pred.find(pj->second);
            if (dp == d_pred.end()) {
                penalty_sum += 1.0;
                continue;
            }
            penalty_sum += std::min(1.0, std::abs(dp->second - dg->second) / dg->second);
        }
    }
    if (pair_count == 0) throw Error("empty-graph", "no ground-truth node pairs with valid paths");
    return 100.0 * (1.0 - penalty_sum / static_cast<double>(pair_count));
}

// Full metric suite for one prediction/ground-truth layer pair.
struct MetricsReport {
    double polis = 0.0;
    double ciou = 0.0;
    double iou = 0.0;
    double f1 = 0.0;
    double ap = 0.0, ap_s = 0.0, ap_m = 0.0, ap_l = 0.0;
    std::optional<double> apls;
    int matched = 0;
    int unmatched_pred = 0;
    int unmatched_gt = 0;
};

struct EvalOptions {
    bool with_polis = true;
    bool with_ciou = true;
    bool with_semantic = true;
    bool with_ap = true;
    const MaskRaster* gt_mask = nullptr;           // overrides the rasterized ground truth
    const RoadGraph* graph_gt = nullptr;           // both graphs present -> APLS
    const RoadGraph* graph_pred = nullptr;
    double apls_pairing_radius = 50.0;
};

// Layer-level evaluation. Instances are matched one-to-one per class by
// descending mask IoU with a 0.5 floor; PoLiS averages over matched exterior
// rings. C-IoU is computed over the combined layer masks with total vertex
// counts. Semantic metrics compare the rasterized layers (or the provided
// ground-truth mask).
inline MetricsReport evaluate_layers(const std::vector<ScoredInstance>& preds,
                                     const std::vector<ClassedPolygon>& gts, int grid_w,
                                     int grid_h, const EvalOptions& opts = {}) {
    MetricsReport report;

    std::vector<detail::LocalMask> pred_masks(preds.size());
    for (std::size_t i = 0; i < preds.size(); ++i)
        pred_masks[i] = detail::rasterize_local(preds[i].polygon, grid_w, grid_h);
    std::vector<detail::LocalMask> gt_masks(gts.size());
    for (std::size_t j = 0; j < gts.size(); ++j)
        gt_masks[j] = detail::rasterize_local(gts[j].polygon, grid_w, grid_h);

    // greedy one-to-one matching by descending IoU within each class
    struct Pair {
        double iou;
        std::size_t pred, gt;
    };
    std::vector<Pair> candidates;
    for (std::size_t i = 0; i < preds.size(); ++i)
        for (std::size_t j = 0; j < gts.size(); ++j) {
            if (preds[i].class_id != gts[j].class_id) continue;
            const double v = detail::mask_iou(pred_masks[i], gt_masks[j]);
            if (v >= 0.5) candidates.push_back({v, i, j});
        }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Pair& a, const Pair& b) { return a.iou > b.iou; });
    std::vector<char> pred_used(preds.size(), 0), gt_used(gts.size(), 0);
    std::vector<std::pair<std::size_t, std::size_t>> matches;
    for (const Pair& c : candidates) {
        if (pred_used[c.pred] || gt_used[c.gt]) continue;
        pred_used[c.pred] = 1;
        gt_used[c.gt] = 1;
        matches.push_back({c.pred, c.gt});
    }
    report.matched = static_cast<int>(matches.size());
    report.unmatched_pred = static_cast<int>(preds.size() - matches.size());
    report.unmatched_gt = static_cast<int>(gts.size() - matches.size());

    if (opts.with_polis && !matches.empty()) {
        double sum = 0.0;
        for (const auto& [pi, gj] : matches)
            sum += polis(preds[pi].polygon.exterior(), gts[gj].polygon.exterior());
        report.polis = sum / static_cast<double>(matches.size());
    }

    if (opts.with_ciou) {
        // combined layer masks and total vertex counts
        MaskRaster pred_layer(grid_w, grid_h), gt_layer(grid_w, grid_h);
        std::size_t pred_vertices = 0, gt_vertices = 0;
        for (const ScoredInstance& p : preds) {
            rasterize_polygon(p.polygon, 1, pred_layer);
            pred_vertices += p.polygon.vertex_count();
        }
        for (const ClassedPolygon& g : gts) {
            rasterize_polygon(g.polygon, 1, gt_layer);
            gt_vertices += g.polygon.vertex_count();
        }
        long inter = 0, uni = 0;
        for (std::size_t i = 0; i < pred_layer.labels.size(); ++i) {
            inter += pred_layer.labels[i] && gt_layer.labels[i];
            uni += pred_layer.labels[i] || gt_layer.labels[i];
        }
        const double iou = uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
        const std::size_t total = pred_vertices + gt_vertices;
        const double rd =
            total == 0 ? 0.0
                       : static_cast<double>(pred_vertices > gt_vertices
                                                 ? pred_vertices - gt_vertices
                                                 : gt_vertices - pred_vertices) /
                             static_cast<double>(total);
        report.ciou = 100.0 * iou * (1.0 - rd);
    }

    if (opts.with_semantic) {
        MaskRaster pred_layer(grid_w, grid_h);
        for (const ScoredInstance& p : preds) rasterize_polygon(p.polygon, p.class_id, pred_layer);
        if (opts.gt_mask != nullptr) {
            const SemanticScores s = semantic_iou_f1(pred_layer, *opts.gt_mask);
            report.iou = s.iou;
            report.f1 = s.f1;
        } else {
            MaskRaster gt_layer(grid_w, grid_h);
            for (const ClassedPolygon& g : gts) rasterize_polygon(g.polygon, g.class_id, gt_layer);
            const SemanticScores s = semantic_iou_f1(pred_layer, gt_layer);
            report.iou = s.iou;
            report.f1 = s.f1;
        }
    }

    if (opts.with_ap) {
        const ApResult ap = instance_ap(preds, gts, grid_w, grid_h);
        report.ap = ap.ap;
        report.ap_s = ap.ap_s;
        report.ap_m = ap.ap_m;
        report.ap_l = ap.ap_l;
    }

    if (opts.graph_gt != nullptr && opts.graph_pred != nullptr)
        report.apls = apls(*opts.graph_gt, *opts.graph_pred, opts.apls_pairing_radius);

    return report;
}

}  // namespace polytrace

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "polytrace/alignment.hpp"
#include "polytrace/error.hpp"
#include "polytrace/geometry.hpp"
#include "polytrace/parallel.hpp"
#include "polytrace/raster.hpp"

namespace polytrace {

namespace defaults {
inline constexpr double epsilon = 5.0;
inline constexpr double interval = 25.0;
inline constexpr double theta_threshold = 135.0 * std::numbers::pi / 180.0;
inline constexpr double prob_threshold = 0.5;
inline constexpr int offset_iterations = 2;
}  // namespace defaults

// Per-point scores produced by a scorer: one displacement row per offset
// iteration plus a vertex probability per point.
struct PointScores {
    std::vector<std::vector<Point2>> offsets;
    std::vector<double> vertex_prob;
};

// Final traced instance. vertex_conf holds the per-vertex probability of the
// exterior ring; the instance score is its mean.
struct TracedPolygon {
    std::uint8_t class_id = 0;
    PolygonWithHoles polygon;
    std::vector<double> vertex_conf;
    double instance_score = 0.0;
};

struct ScoreContext {
    const MaskRaster* mask = nullptr;
    int instance_id = 0;
    int iteration = 0;  // offset iteration index; equals the iteration count on the final scoring pass
};

// Pluggable provider of offsets and vertex probabilities. Implementations
// must return arrays sized to the input ring, and must either be safe for
// concurrent calls or report thread_safe() == false, in which case the
// pipeline serializes all score() invocations.
class Scorer {
public:
    virtual ~Scorer() = default;
    virtual PointScores score(const Ring& ring, const ScoreContext& ctx) const = 0;
    virtual bool thread_safe() const { return true; }
};

// Applies the offset iterations in sequence. Consecutive points that become
// coincident are nudged apart by 1e-6 px so the result stays a valid ring.
inline Ring apply_offsets(const Ring& ring, const std::vector<std::vector<Point2>>& iterations) {
    std::vector<Point2> pts(ring.points());
    for (const std::vector<Point2>& step : iterations) {
        if (step.size() != pts.size())
            throw Error("offset-shape", "offset row of " + std::to_string(step.size()) +
                                            " for ring of " + std::to_string(pts.size()));
        for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = pts[i] + step[i];
    }
    const std::size_t n = pts.size();
    for (std::size_t pass = 0; pass < n; ++pass) {
        bool clean = true;
        for (std::size_t i = 0; i < n; ++i) {
            if (pts[(i + 1) % n] == pts[i]) {
                pts[(i + 1) % n].x += 1e-6;
                clean = false;
            }
        }
        if (clean) break;
    }
    return Ring(std::move(pts));
}

// Interior angles at neighbor distances 1, 2 and 3, stacked per point.
struct AngleFeatures {
    std::vector<double> s1, s2, s3;
};

inline AngleFeatures angle_feature_block(const Ring& ring) {
    if (ring.size() < 7)
        throw Error("insufficient-points",
                    "angle features need at least 7 points, got " + std::to_string(ring.size()));
    return {interior_angles(ring, 1), interior_angles(ring, 2), interior_angles(ring, 3)};
}

// Angle features in the polar encoding handed to scorer plugins:
// (cos, sin) pairs for each of the three neighbor distances.
inline std::vector<std::array<double, 6>> angle_features_polar(const AngleFeatures& f) {
    std::vector<std::array<double, 6>> out(f.s1.size());
    for (std::size_t i = 0; i < f.s1.size(); ++i)
        out[i] = {std::cos(f.s1[i]), std::sin(f.s1[i]), std::cos(f.s2[i]),
                  std::sin(f.s2[i]), std::cos(f.s3[i]), std::sin(f.s3[i])};
    return out;
}

// Geometry-only scores: zero offsets, and a vertex probability that falls
// monotonically with the s=1 interior angle, crossing 0.5 exactly at the
// threshold (probability 1 at angle 0, 0 at a straight 180 degrees).
inline PointScores rule_based_scores(const Ring& ring,
                                     double theta_threshold = defaults::theta_threshold) {
    const AngleFeatures feats = angle_feature_block(ring);
    PointScores scores;
    scores.offsets.assign(1, std::vector<Point2>(ring.size(), Point2{0.0, 0.0}));
    scores.vertex_prob.resize(ring.size());
    for (std::size_t i = 0; i < ring.size(); ++i) {
        const double theta = feats.s1[i];
        double p;
        if (theta < theta_threshold) {
            p = (theta_threshold - theta) / theta_threshold * 0.5 + 0.5;
        } else {
            const double span = std::numbers::pi - theta_threshold;
            p = span > 0.0 ? 0.5 - (theta - theta_threshold) / span * 0.5 : 0.5;
        }
        scores.vertex_prob[i] = std::clamp(p, 0.0, 1.0);
    }
    return scores;
}

class RuleBasedScorer final : public Scorer {
public:
    explicit RuleBasedScorer(double theta_threshold = defaults::theta_threshold)
        : theta_threshold_(theta_threshold) {}

    PointScores score(const Ring& ring, const ScoreContext&) const override {
        return rule_based_scores(ring, theta_threshold_);
    }

private:
    double theta_threshold_;
};

// Selected subsequence of a ring with per-vertex confidences; cyclic order
// preserved, orientation untouched.
struct SelectedRing {
    Ring ring;
    std::vector<double> vertex_conf;
};

namespace detail {

inline std::vector<std::size_t> top_k_indices(const std::vector<double>& prob, std::size_t k) {
    std::vector<std::size_t> order(prob.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return prob[a] > prob[b]; });
    order.resize(k);
    std::sort(order.begin(), order.end());
    return order;
}

}  // namespace detail

// Keeps points whose probability reaches the threshold, reduces each maximal
// cyclic run of kept points to its best-probability point (ties to the
// lowest index), and falls back to the top-3 probabilities if fewer than 3
// points survive.
inline SelectedRing select_ring(const Ring& ring, const std::vector<double>& prob,
                                double prob_threshold = defaults::prob_threshold) {
    if (prob.size() != ring.size())
        throw Error("offset-shape", "probability row does not match the ring");
    const std::size_t n = ring.size();
    std::vector<std::size_t> selected;

    std::size_t start = n;
    for (std::size_t i = 0; i < n; ++i) {
        if (prob[i] >= prob_threshold && prob[(i + n - 1) % n] < prob_threshold) {
            start = i;
            break;
        }
    }
    if (start == n) {
        // no run boundary: either nothing is kept, or the whole ring is one
        // run and reduces to its single best point
        if (std::all_of(prob.begin(), prob.end(),
                        [&](double p) { return p >= prob_threshold; })) {
            std::size_t best = 0;
            for (std::size_t i = 1; i < n; ++i)
                if (prob[i] > prob[best]) best = i;
            selected.push_back(best);
        }
    } else {
        // walk once around from a run boundary, reducing each maximal run to
        // its first best-probability point
        std::size_t run_best = n;
        for (std::size_t off = 0; off < n; ++off) {
            const std::size_t idx = (start + off) % n;
            if (prob[idx] >= prob_threshold) {
                if (run_best == n || prob[idx] > prob[run_best] ||
                    (prob[idx] == prob[run_best] && idx < run_best))
                    run_best = idx;
            } else if (run_best != n) {
                selected.push_back(run_best);
                run_best = n;
            }
        }
        if (run_best != n) selected.push_back(run_best);
    }

    if (selected.size() < 3) selected = detail::top_k_indices(prob, std::min<std::size_t>(3, n));
    std::sort(selected.begin(), selected.end());

    SelectedRing out;
    std::vector<Point2> pts;
    pts.reserve(selected.size());
    for (std::size_t idx : selected) {
        pts.push_back(ring[idx]);
        out.vertex_conf.push_back(prob[idx]);
    }
    out.ring = Ring(std::move(pts));
    return out;
}

// select_ring wrapped into a traced instance (exterior only).
inline TracedPolygon select_vertices(const Ring& ring, const PointScores& scores,
                                     double prob_threshold = defaults::prob_threshold) {
    SelectedRing sel = select_ring(ring, scores.vertex_prob, prob_threshold);
    TracedPolygon traced;
    traced.polygon = PolygonWithHoles(sel.ring);
    traced.vertex_conf = std::move(sel.vertex_conf);
    traced.instance_score =
        traced.vertex_conf.empty()
            ? 0.0
            : std::accumulate(traced.vertex_conf.begin(), traced.vertex_conf.end(), 0.0) /
                  static_cast<double>(traced.vertex_conf.size());
    return traced;
}

struct TraceParams {
    double epsilon = defaults::epsilon;
    double interval = defaults::interval;
    int offset_iterations = defaults::offset_iterations;
    double prob_threshold = defaults::prob_threshold;
    int connectivity = 8;
    int jobs = 0;  // 0 = available parallelism
};

struct TraceResult {
    std::vector<TracedPolygon> polygons;
    // "instance <id>: <code>" per failed instance, in instance order
    std::vector<std::string> instance_errors;
};

// Full prediction pipeline: contours -> reconstruct -> iterative offsets
// (scores recomputed each iteration) -> vertex probabilities -> selection.
// Hole rings go through the same per-ring pipeline. A failure inside one
// instance is recorded and the remaining instances proceed.
inline TraceResult trace(const MaskRaster& mask, const Scorer& scorer, const TraceParams& params) {
    const ContourSet contours = extract_contours(mask, params.connectivity);
    const std::size_t n = contours.size();

    std::mutex scorer_mutex;
    const bool serialize = !scorer.thread_safe();
    const auto call_scorer = [&](const Ring& ring, const ScoreContext& ctx) {
        if (serialize) {
            std::lock_guard<std::mutex> lock(scorer_mutex);
            return scorer.score(ring, ctx);
        }
        return scorer.score(ring, ctx);
    };

    const auto run_ring = [&](const Ring& raw, int instance_id) -> SelectedRing {
        Ring ring = reconstruct(raw, params.epsilon, params.interval).ring;
        ScoreContext ctx{&mask, instance_id, 0};
        for (int k = 0; k < params.offset_iterations; ++k) {
            ctx.iteration = k;
            PointScores s = call_scorer(ring, ctx);
            if (s.offsets.empty()) continue;
            if (s.offsets.size() != 1)
                throw Error("offset-shape", "scorer must return one offset row per iteration");
            ring = apply_offsets(ring, s.offsets);
        }
        ctx.iteration = params.offset_iterations;
        PointScores final_scores = call_scorer(ring, ctx);
        if (final_scores.vertex_prob.size() != ring.size())
            throw Error("offset-shape", "scorer probabilities do not match the ring");
        return select_ring(ring, final_scores.vertex_prob, params.prob_threshold);
    };

    std::vector<std::optional<TracedPolygon>> slots(n);
    std::vector<std::string> errors(n);
    parallel_for(n, effective_jobs(params.jobs), [&](std::size_t i) {
        try {
            const ClassedPolygon& contour = contours[i];
            SelectedRing exterior = run_ring(contour.polygon.exterior(), static_cast<int>(i));
            std::vector<Ring> holes;
            for (const Ring& hole : contour.polygon.holes())
                holes.push_back(run_ring(hole, static_cast<int>(i)).ring);
            TracedPolygon traced;
            traced.class_id = contour.class_id;
            traced.polygon = PolygonWithHoles(exterior.ring, std::move(holes));
            traced.vertex_conf = std::move(exterior.vertex_conf);
            traced.instance_score =
                std::accumulate(traced.vertex_conf.begin(), traced.vertex_conf.end(), 0.0) /
                static_cast<double>(traced.vertex_conf.size());
            slots[i] = std::move(traced);
        } catch (const Error& e) {
            errors[i] = "instance " + std::to_string(i) + ": " + e.code();
        } catch (const std::exception& e) {
            errors[i] = "instance " + std::to_string(i) + ": " + e.what();
        }
    });

    TraceResult result;
    for (std::size_t i = 0; i < n; ++i) {
        if (slots[i])
            result.polygons.push_back(std::move(*slots[i]));
        else if (!errors[i].empty())
            result.instance_errors.push_back(std::move(errors[i]));
    }
    return result;
}

}  // namespace polytrace

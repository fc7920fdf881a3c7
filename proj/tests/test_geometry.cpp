#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <set>
#include <vector>

#include "polytrace/geometry.hpp"
#include "support.hpp"

using namespace polytrace;
using testsupport::Rng;

namespace {

Ring unit_square() { return Ring({{0, 0}, {1, 0}, {1, 1}, {0, 1}}); }

Ring square(double side, Point2 origin = {0, 0}) {
    return Ring({origin,
                 {origin.x + side, origin.y},
                 {origin.x + side, origin.y + side},
                 {origin.x, origin.y + side}});
}

Ring regular_polygon(int n, double radius, Point2 center = {0, 0}) {
    std::vector<Point2> pts;
    for (int i = 0; i < n; ++i) {
        const double a = 2.0 * std::numbers::pi * i / n;
        pts.push_back({center.x + radius * std::cos(a), center.y + radius * std::sin(a)});
    }
    return Ring(std::move(pts));
}

// true iff the candidate points appear in the reference in the same order
bool is_ordered_subsequence(const Ring& candidate, const Ring& reference) {
    std::size_t j = 0;
    for (std::size_t i = 0; i < candidate.size(); ++i) {
        while (j < reference.size() && !(reference[j] == candidate[i])) ++j;
        if (j == reference.size()) return false;
        ++j;
    }
    return true;
}

}  // namespace

TEST_CASE("ring validation") {
    CHECK_THROWS_AS(Ring({{0, 0}, {1, 0}}), Error);
    CHECK_THROWS_AS(Ring({{0, 0}, {0, 0}, {1, 1}}), Error);
    CHECK_THROWS_AS(Ring({{0, 0}, {1, 0}, {0, 0}}), Error);  // wrap pair coincides
    const double nan = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(Ring({{0, 0}, {1, nan}, {1, 1}}), Error);
    CHECK_NOTHROW(Ring({{0, 0}, {1, 0}, {2, 0}}));  // collinear is allowed
}

TEST_CASE("signed_area on canonical rings") {
    CHECK(signed_area(unit_square()) == Catch::Approx(1.0));
    CHECK(signed_area(unit_square().reversed()) == Catch::Approx(-1.0));
    CHECK(signed_area(Ring({{0, 0}, {1, 0}, {2, 0}})) == Catch::Approx(0.0));
}

TEST_CASE("signed_area flips sign under reversal") {
    Rng rng(11);
    for (int it = 0; it < 50; ++it) {
        const Ring r = testsupport::random_star_ring(rng, {100, 100}, 10, 60);
        CHECK(signed_area(r) == Catch::Approx(-signed_area(r.reversed())).margin(1e-9));
    }
}

TEST_CASE("dp_simplify removes a near-collinear point") {
    const Ring input({{0, 0}, {50, 1}, {100, 0}, {50, -20}});
    const Ring out = dp_simplify(input, 5.0);
    REQUIRE(out.size() == 3);
    CHECK(out[0] == Point2{0, 0});
    CHECK(out[1] == Point2{100, 0});
    CHECK(out[2] == Point2{50, -20});
}

TEST_CASE("dp_simplify with zero tolerance is the identity") {
    Rng rng(12);
    for (int it = 0; it < 20; ++it) {
        const Ring r = testsupport::noisy_outline(rng, square(80, {10, 10}), 7.0, 1.0);
        CHECK(dp_simplify(r, 0.0) == r);
    }
    // exactly collinear points also survive at epsilon = 0
    const Ring collinear({{0, 0}, {5, 0}, {10, 0}, {5, 8}});
    CHECK(dp_simplify(collinear, 0.0) == collinear);
}

TEST_CASE("dp_simplify output is an ordered subsequence of the input") {
    Rng rng(13);
    for (int it = 0; it < 30; ++it) {
        const Ring r = testsupport::noisy_outline(rng, testsupport::random_star_ring(rng, {0, 0}, 30, 90),
                                                  4.0, 1.5);
        const Ring out = dp_simplify(r, 5.0);
        CHECK(is_ordered_subsequence(out, r));
    }
}

TEST_CASE("dp_simplify keeps every removed point within epsilon of the surviving segment") {
    Rng rng(14);
    const double eps = 5.0;
    for (int it = 0; it < 10; ++it) {
        // ~200-point noisy square
        const Ring r = testsupport::noisy_outline(rng, square(200, {0, 0}), 4.0, 2.0);
        const Ring out = dp_simplify(r, eps);

        // map each input index to whether it survived
        std::vector<std::size_t> surviving;
        std::size_t j = 0;
        for (std::size_t i = 0; i < r.size(); ++i) {
            if (j < out.size() && r[i] == out[j]) {
                surviving.push_back(i);
                ++j;
            }
        }
        REQUIRE(surviving.size() == out.size());

        for (std::size_t i = 0; i < r.size(); ++i) {
            const bool kept = std::binary_search(surviving.begin(), surviving.end(), i);
            if (kept) continue;
            // surviving neighbors around i in cyclic order
            auto it_hi = std::upper_bound(surviving.begin(), surviving.end(), i);
            const std::size_t hi = it_hi == surviving.end() ? surviving.front() : *it_hi;
            const std::size_t lo = it_hi == surviving.begin() ? surviving.back() : *(it_hi - 1);
            CHECK(point_segment_distance(r[i], r[lo], r[hi]) <= eps + 1e-12);
        }
    }
}

TEST_CASE("dp_simplify is idempotent") {
    Rng rng(15);
    for (int it = 0; it < 30; ++it) {
        const Ring base = it % 2 == 0 ? testsupport::random_star_ring(rng, {0, 0}, 20, 80)
                                      : square(150, {5, 5});
        const Ring r = testsupport::noisy_outline(rng, base, 5.0, 1.5);
        const Ring once = dp_simplify(r, 5.0);
        CHECK(dp_simplify(once, 5.0) == once);
    }
}

TEST_CASE("dp_simplify never returns fewer than 3 points") {
    // tiny triangle with a huge tolerance
    const Ring r({{0, 0}, {2, 0}, {1, 1.5}});
    const Ring out = dp_simplify(r, 100.0);
    CHECK(out.size() == 3);
    // dense small blob
    const Ring blob({{0, 0}, {1, 0}, {2, 0.2}, {2, 1}, {1, 1.3}, {0, 1}});
    CHECK(dp_simplify(blob, 50.0).size() == 3);
}

TEST_CASE("resample_ring spaces points along edges") {
    const Ring sq = square(100);
    const ResampledRing out = resample_ring(sq, 25.0);
    REQUIRE(out.ring.size() == 16);
    REQUIRE(out.is_seed.size() == 16);
    int seeds = 0;
    for (std::uint8_t f : out.is_seed) seeds += f;
    CHECK(seeds == 4);
    // first edge contributes its start vertex plus three interior points
    CHECK(out.ring[0] == Point2{0, 0});
    CHECK(out.ring[1] == Point2{25, 0});
    CHECK(out.ring[2] == Point2{50, 0});
    CHECK(out.ring[3] == Point2{75, 0});
    CHECK(out.ring[4] == Point2{100, 0});  // seed of the next edge
    CHECK(out.is_seed[4] == 1);
}

TEST_CASE("resample_ring leaves short edges untouched") {
    const Ring tri({{0, 0}, {10, 0}, {5, 8}});
    const ResampledRing out = resample_ring(tri, 25.0);
    CHECK(out.ring.size() == 3);
    CHECK(out.ring == tri);
}

TEST_CASE("resample_ring rejects non-positive intervals") {
    const Ring sq = square(10);
    CHECK_THROWS_AS(resample_ring(sq, 0.0), Error);
    CHECK_THROWS_AS(resample_ring(sq, -1.0), Error);
    try {
        resample_ring(sq, 0.0);
    } catch (const Error& e) {
        CHECK(e.code() == "invalid-interval");
    }
}

TEST_CASE("resample_ring spacing and seed properties") {
    Rng rng(16);
    for (int it = 0; it < 25; ++it) {
        const Ring base = testsupport::random_star_ring(rng, {0, 0}, 20, 90);
        const Ring simplified = dp_simplify(testsupport::noisy_outline(rng, base, 5.0, 1.0), 5.0);
        const double l = rng.uniform(8.0, 40.0);
        const ResampledRing out = resample_ring(simplified, l);

        double max_gap = 0.0, min_gap = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < out.ring.size(); ++i) {
            const double gap = distance(out.ring[i], out.ring[(i + 1) % out.ring.size()]);
            max_gap = std::max(max_gap, gap);
            min_gap = std::min(min_gap, gap);
        }
        CHECK(max_gap <= l + 1e-9);
        CHECK(min_gap > 0.0);

        // seed flags mark exactly the simplified vertices, in order
        std::vector<Point2> seeds;
        for (std::size_t i = 0; i < out.ring.size(); ++i)
            if (out.is_seed[i]) seeds.push_back(out.ring[i]);
        REQUIRE(seeds.size() == simplified.size());
        for (std::size_t i = 0; i < seeds.size(); ++i) CHECK(seeds[i] == simplified[i]);
    }
}

TEST_CASE("interior_angles on canonical configurations") {
    const Ring corner({{0, 0}, {1, 0}, {1, 1}});
    CHECK(interior_angles(corner, 1)[1] == Catch::Approx(std::numbers::pi / 2));

    const Ring flat({{0, 0}, {1, 0}, {2, 0}});
    CHECK(interior_angles(flat, 1)[1] == Catch::Approx(std::numbers::pi));

    const Ring hex = regular_polygon(6, 10.0);
    for (double a : interior_angles(hex, 1))
        CHECK(a == Catch::Approx(2.0 * std::numbers::pi / 3).margin(1e-9));
}

TEST_CASE("interior_angles rejects rings too short for the neighbor distance") {
    const Ring tri({{0, 0}, {4, 0}, {2, 3}});
    CHECK_NOTHROW(interior_angles(tri, 1));
    CHECK_THROWS_AS(interior_angles(tri, 2), Error);
    try {
        interior_angles(tri, 3);
    } catch (const Error& e) {
        CHECK(e.code() == "insufficient-points");
    }
}

TEST_CASE("interior_angles stay in range and are rigid-motion invariant") {
    Rng rng(17);
    for (int it = 0; it < 20; ++it) {
        const Ring r = testsupport::random_star_ring(rng, {0, 0}, 10, 50, 8, 20);
        const double phi = rng.uniform(0, 2 * std::numbers::pi);
        const Point2 shift{rng.uniform(-100, 100), rng.uniform(-100, 100)};
        std::vector<Point2> moved;
        for (const Point2& p : r.points())
            moved.push_back({p.x * std::cos(phi) - p.y * std::sin(phi) + shift.x,
                             p.x * std::sin(phi) + p.y * std::cos(phi) + shift.y});
        const Ring m(std::move(moved));
        for (int s = 1; s <= 3; ++s) {
            const auto a = interior_angles(r, s);
            const auto b = interior_angles(m, s);
            for (std::size_t i = 0; i < a.size(); ++i) {
                CHECK(a[i] >= 0.0);
                CHECK(a[i] <= std::numbers::pi);
                CHECK(a[i] == Catch::Approx(b[i]).margin(1e-9));
            }
        }
    }
}

TEST_CASE("is_simple distinguishes clean rings from crossings and folds") {
    CHECK(is_simple(unit_square()));
    CHECK(is_simple(regular_polygon(9, 20.0)));
    // a collinear continuation vertex is fine
    CHECK(is_simple(Ring({{0, 0}, {1, 0}, {2, 0}, {1, 1}})));
    // bowtie: edges cross
    CHECK_FALSE(is_simple(Ring({{0, 0}, {2, 2}, {2, 0}, {0, 2}})));
    // fold-back spike
    CHECK_FALSE(is_simple(Ring({{0, 0}, {2, 0}, {1, 0}, {1, 1}})));
    // self-touching contour of two diagonal pixels (8-connectivity trace)
    MaskRaster diag(4, 4);
    diag.at(1, 1) = 1;
    diag.at(2, 2) = 1;
    const ContourSet contours = extract_contours(diag, 8);
    REQUIRE(contours.size() == 1);
    CHECK_FALSE(is_simple(contours[0].polygon.exterior()));
    // the same pixels under 4-connectivity yield two plain squares
    for (const ClassedPolygon& c : extract_contours(diag, 4))
        CHECK(is_simple(c.polygon.exterior()));
}

TEST_CASE("polygon with holes normalizes orientation") {
    const Ring ext = square(10);
    const Ring hole = square(2, {4, 4});
    const PolygonWithHoles poly(ext.reversed(), {hole});
    CHECK(signed_area(poly.exterior()) > 0.0);
    REQUIRE(poly.holes().size() == 1);
    CHECK(signed_area(poly.holes()[0]) < 0.0);
    CHECK(poly.area() == Catch::Approx(96.0));
    CHECK(poly.vertex_count() == 8);

    CHECK_THROWS_AS(PolygonWithHoles(square(10), {square(3, {100, 100})}), Error);
}

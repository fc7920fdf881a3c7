#pragma once

#include <array>
#include <cmath>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "polytrace/error.hpp"
#include "polytrace/geometry.hpp"

namespace polytrace {

// Row-major 2x3 pixel-to-world transform:
//   world_x = m[0] x + m[1] y + m[2]
//   world_y = m[3] x + m[4] y + m[5]
struct AffineTransform {
    std::array<double, 6> m{1, 0, 0, 0, 1, 0};

    Point2 apply(Point2 p) const {
        return {m[0] * p.x + m[1] * p.y + m[2], m[3] * p.x + m[4] * p.y + m[5]};
    }

    AffineTransform inverse() const {
        const double det = m[0] * m[4] - m[1] * m[3];
        if (det == 0.0) throw Error("singular-transform", "pixel-to-world transform not invertible");
        AffineTransform inv;
        inv.m[0] = m[4] / det;
        inv.m[1] = -m[1] / det;
        inv.m[3] = -m[3] / det;
        inv.m[4] = m[0] / det;
        inv.m[2] = -(inv.m[0] * m[2] + inv.m[1] * m[5]);
        inv.m[5] = -(inv.m[3] * m[2] + inv.m[4] * m[5]);
        return inv;
    }

    bool is_identity() const { return m == std::array<double, 6>{1, 0, 0, 0, 1, 0}; }
};

struct Feature {
    std::uint8_t class_id = 1;
    PolygonWithHoles polygon;  // pixel space
    std::optional<double> score;
    std::optional<std::vector<double>> vertex_conf;
};

// In-memory vector map: features in pixel space plus the transform applied
// on serialization.
struct VectorLayer {
    std::vector<Feature> features;
    AffineTransform transform;
};

namespace detail {

inline double round3(double v) {
    double r = std::round(v * 1000.0) / 1000.0;
    if (r == 0.0) r = 0.0;  // normalize -0
    return r;
}

inline nlohmann::json ring_to_json(const Ring& ring, const AffineTransform& tf) {
    nlohmann::json arr = nlohmann::json::array();
    for (const Point2& p : ring.points()) {
        const Point2 w = tf.apply(p);
        arr.push_back({round3(w.x), round3(w.y)});
    }
    const Point2 first = tf.apply(ring[0]);
    arr.push_back({round3(first.x), round3(first.y)});  // closed per RFC 7946
    return arr;
}

inline Ring ring_from_json(const nlohmann::json& arr, const AffineTransform& inv,
                           std::size_t feature_index) {
    if (!arr.is_array() || arr.size() < 3)
        throw Error("parse-error",
                    "feature " + std::to_string(feature_index) + ": ring too short");
    std::vector<Point2> pts;
    pts.reserve(arr.size());
    for (const auto& pos : arr) {
        if (!pos.is_array() || pos.size() < 2)
            throw Error("parse-error",
                        "feature " + std::to_string(feature_index) + ": bad position");
        pts.push_back(inv.apply({pos[0].get<double>(), pos[1].get<double>()}));
    }
    if (pts.size() > 3 && pts.front() == pts.back()) pts.pop_back();
    try {
        return Ring(std::move(pts));
    } catch (const Error& e) {
        throw Error("parse-error",
                    "feature " + std::to_string(feature_index) + ": " + e.what());
    }
}

inline PolygonWithHoles polygon_from_json(const nlohmann::json& rings, const AffineTransform& inv,
                                          std::size_t feature_index) {
    if (!rings.is_array() || rings.empty())
        throw Error("parse-error",
                    "feature " + std::to_string(feature_index) + ": empty polygon");
    Ring exterior = ring_from_json(rings[0], inv, feature_index);
    std::vector<Ring> holes;
    for (std::size_t k = 1; k < rings.size(); ++k)
        holes.push_back(ring_from_json(rings[k], inv, feature_index));
    try {
        return PolygonWithHoles(std::move(exterior), std::move(holes));
    } catch (const Error& e) {
        throw Error("parse-error",
                    "feature " + std::to_string(feature_index) + ": " + e.what());
    }
}

}  // namespace detail

inline void write_vector_layer(const VectorLayer& layer, const std::string& path) {
    nlohmann::json doc;
    doc["type"] = "FeatureCollection";
    if (!layer.transform.is_identity())
        doc["pixel_to_world"] = layer.transform.m;
    nlohmann::json features = nlohmann::json::array();
    for (const Feature& f : layer.features) {
        nlohmann::json geom;
        geom["type"] = "Polygon";
        nlohmann::json rings = nlohmann::json::array();
        rings.push_back(detail::ring_to_json(f.polygon.exterior(), layer.transform));
        for (const Ring& hole : f.polygon.holes())
            rings.push_back(detail::ring_to_json(hole, layer.transform));
        geom["coordinates"] = std::move(rings);

        nlohmann::json props;
        props["class_id"] = f.class_id;
        if (f.score) props["score"] = *f.score;
        if (f.vertex_conf) props["vertex_conf"] = *f.vertex_conf;

        nlohmann::json feature;
        feature["type"] = "Feature";
        feature["properties"] = std::move(props);
        feature["geometry"] = std::move(geom);
        features.push_back(std::move(feature));
    }
    doc["features"] = std::move(features);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("io-error", "cannot write " + path);
    out << doc.dump() << '\n';
}

inline VectorLayer read_vector_layer(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("io-error", "cannot read " + path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error("parse-error", std::string(e.what()));
    }
    if (!doc.is_object() || doc.value("type", "") != "FeatureCollection")
        throw Error("parse-error", "not a FeatureCollection");

    VectorLayer layer;
    if (doc.contains("pixel_to_world")) {
        const auto& tf = doc["pixel_to_world"];
        if (!tf.is_array() || tf.size() != 6)
            throw Error("parse-error", "pixel_to_world must hold 6 coefficients");
        for (std::size_t i = 0; i < 6; ++i) layer.transform.m[i] = tf[i].get<double>();
    }
    const AffineTransform inv = layer.transform.inverse();

    const auto& features = doc.value("features", nlohmann::json::array());
    for (std::size_t i = 0; i < features.size(); ++i) {
        const auto& fj = features[i];
        if (!fj.contains("geometry") || fj["geometry"].is_null()) continue;
        const auto& geom = fj["geometry"];
        const std::string type = geom.value("type", "");

        Feature base;
        if (fj.contains("properties") && fj["properties"].is_object()) {
            const auto& props = fj["properties"];
            if (props.contains("class_id"))
                base.class_id = static_cast<std::uint8_t>(props["class_id"].get<int>());
            if (props.contains("score")) base.score = props["score"].get<double>();
            if (props.contains("vertex_conf"))
                base.vertex_conf = props["vertex_conf"].get<std::vector<double>>();
        }

        if (type == "Polygon") {
            Feature f = base;
            f.polygon = detail::polygon_from_json(geom["coordinates"], inv, i);
            layer.features.push_back(std::move(f));
        } else if (type == "MultiPolygon") {
            for (const auto& poly : geom["coordinates"]) {
                Feature f = base;
                f.polygon = detail::polygon_from_json(poly, inv, i);
                layer.features.push_back(std::move(f));
            }
        } else {
            throw Error("unsupported-geometry",
                        "feature " + std::to_string(i) + " has geometry type " + type);
        }
    }
    return layer;
}

}  // namespace polytrace

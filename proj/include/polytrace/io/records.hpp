#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "polytrace/alignment.hpp"
#include "polytrace/error.hpp"
#include "polytrace/io/raster_io.hpp"
#include "polytrace/metrics.hpp"
#include "polytrace/pyramid.hpp"
#include "polytrace/tracing.hpp"

namespace polytrace {

namespace detail {

inline nlohmann::json points_to_json(const std::vector<Point2>& pts) {
    nlohmann::json arr = nlohmann::json::array();
    for (const Point2& p : pts) arr.push_back({p.x, p.y});
    return arr;
}

inline std::vector<Point2> points_from_json(const nlohmann::json& arr) {
    std::vector<Point2> pts;
    pts.reserve(arr.size());
    for (const auto& p : arr) pts.push_back({p[0].get<double>(), p[1].get<double>()});
    return pts;
}

}  // namespace detail

// ---- training label records (one JSON object per line) ----

inline void write_training_labels(const TrainingLabels& labels, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("io-error", "cannot write " + path);
    for (const TrainingSample& ts : labels.samples) {
        nlohmann::json rec;
        rec["instance_id"] = ts.instance_id;
        rec["ring_index"] = ts.ring_index;
        rec["class_id"] = ts.class_id;
        rec["reconstructed"] = detail::points_to_json(ts.sample.reconstructed.points());
        rec["aligned_gt"] = detail::points_to_json(ts.sample.aligned_gt);
        rec["vertex_labels"] = ts.sample.vertex_labels;
        rec["matched_count"] = ts.sample.matched_count;
        rec["rotation_warning"] = ts.sample.rotation_warning;
        out << rec.dump() << '\n';
    }
}

inline TrainingLabels read_training_labels(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("io-error", "cannot read " + path);
    TrainingLabels labels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw Error("parse-error", "line " + std::to_string(line_no) + ": " + e.what());
        }
        TrainingSample ts;
        ts.instance_id = rec.at("instance_id").get<int>();
        ts.ring_index = rec.at("ring_index").get<int>();
        ts.class_id = static_cast<std::uint8_t>(rec.at("class_id").get<int>());
        ts.sample.reconstructed = Ring(detail::points_from_json(rec.at("reconstructed")));
        ts.sample.aligned_gt = detail::points_from_json(rec.at("aligned_gt"));
        ts.sample.vertex_labels = rec.at("vertex_labels").get<std::vector<std::uint8_t>>();
        ts.sample.matched_count = rec.at("matched_count").get<int>();
        ts.sample.rotation_warning = rec.value("rotation_warning", false);
        labels.crossing_warnings += ts.sample.rotation_warning;
        labels.samples.push_back(std::move(ts));
    }
    return labels;
}

// ---- score interchange records (one JSON object per line) ----

struct ScoreRecord {
    int instance_id = 0;
    std::vector<std::vector<Point2>> offsets;  // per iteration, per point
    std::vector<double> vertex_prob;
};

inline void write_score_records(const std::vector<ScoreRecord>& records, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("io-error", "cannot write " + path);
    for (const ScoreRecord& r : records) {
        nlohmann::json rec;
        rec["instance_id"] = r.instance_id;
        nlohmann::json iters = nlohmann::json::array();
        for (const auto& row : r.offsets) iters.push_back(detail::points_to_json(row));
        rec["offsets"] = std::move(iters);
        rec["vertex_prob"] = r.vertex_prob;
        out << rec.dump() << '\n';
    }
}

inline std::vector<ScoreRecord> read_score_records(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("io-error", "cannot read " + path);
    std::vector<ScoreRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw Error("parse-error", "line " + std::to_string(line_no) + ": " + e.what());
        }
        ScoreRecord r;
        r.instance_id = rec.at("instance_id").get<int>();
        for (const auto& row : rec.value("offsets", nlohmann::json::array()))
            r.offsets.push_back(detail::points_from_json(row));
        r.vertex_prob = rec.value("vertex_prob", std::vector<double>{});
        records.push_back(std::move(r));
    }
    return records;
}

// Scorer backed by a score-interchange file, keyed by instance id. Offsets
// come from the record row for the requested iteration (none past the
// provided rows); probabilities come from the record as-is.
class FileScorer final : public Scorer {
public:
    explicit FileScorer(const std::string& path) {
        for (ScoreRecord& r : read_score_records(path)) records_[r.instance_id] = std::move(r);
    }

    PointScores score(const Ring& ring, const ScoreContext& ctx) const override {
        const auto it = records_.find(ctx.instance_id);
        if (it == records_.end())
            throw Error("score-missing", "no record for instance " + std::to_string(ctx.instance_id));
        const ScoreRecord& r = it->second;
        PointScores s;
        if (ctx.iteration < static_cast<int>(r.offsets.size())) {
            const auto& row = r.offsets[static_cast<std::size_t>(ctx.iteration)];
            if (row.size() != ring.size())
                throw Error("offset-shape", "instance " + std::to_string(ctx.instance_id) +
                                                ": offset row does not match the ring");
            for (const Point2& o : row)
                if (!std::isfinite(o.x) || !std::isfinite(o.y))
                    throw Error("invalid-score", "instance " + std::to_string(ctx.instance_id) +
                                                     ": non-finite offset");
            s.offsets.push_back(row);
        }
        for (double p : r.vertex_prob)
            if (!(p >= 0.0 && p <= 1.0))
                throw Error("invalid-score", "instance " + std::to_string(ctx.instance_id) +
                                                 ": probability outside [0, 1]");
        s.vertex_prob = r.vertex_prob;
        return s;
    }

private:
    std::map<int, ScoreRecord> records_;
};

// ---- plain-text road graphs: "node id x y" / "edge id1 id2 length" ----

inline RoadGraph read_road_graph(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("io-error", "cannot read " + path);
    RoadGraph graph;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::string kind;
        if (!(ls >> kind) || kind[0] == '#') continue;
        if (kind == "node") {
            int id;
            double x, y;
            if (!(ls >> id >> x >> y))
                throw Error("parse-error", path + " line " + std::to_string(line_no));
            graph.nodes[id] = {x, y};
        } else if (kind == "edge") {
            RoadGraph::Edge e;
            if (!(ls >> e.a >> e.b >> e.length))
                throw Error("parse-error", path + " line " + std::to_string(line_no));
            graph.edges.push_back(e);
        } else {
            throw Error("parse-error",
                        path + " line " + std::to_string(line_no) + ": unknown record " + kind);
        }
    }
    graph.validate();
    return graph;
}

inline void write_road_graph(const RoadGraph& graph, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("io-error", "cannot write " + path);
    for (const auto& [id, pos] : graph.nodes)
        out << "node " << id << ' ' << pos.x << ' ' << pos.y << '\n';
    for (const RoadGraph::Edge& e : graph.edges)
        out << "edge " << e.a << ' ' << e.b << ' ' << e.length << '\n';
}

// ---- metric reports ----

inline nlohmann::json report_to_json(const MetricsReport& report) {
    nlohmann::json doc;
    doc["polis"] = report.polis;
    doc["ciou"] = report.ciou;
    doc["iou"] = report.iou;
    doc["f1"] = report.f1;
    doc["ap"] = report.ap;
    doc["ap_s"] = report.ap_s;
    doc["ap_m"] = report.ap_m;
    doc["ap_l"] = report.ap_l;
    if (report.apls)
        doc["apls"] = *report.apls;
    else
        doc["apls"] = nullptr;
    doc["counts"] = {{"matched", report.matched},
                     {"unmatched_pred", report.unmatched_pred},
                     {"unmatched_gt", report.unmatched_gt}};
    return doc;
}

inline void write_report(const MetricsReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("io-error", "cannot write " + path);
    out << report_to_json(report).dump(2) << '\n';
}

// ---- pyramid patch groups: indexed image files plus a manifest ----

inline std::string patch_file_name(int group_index, int level) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "g%06d_l%d.pgm", group_index, level);
    return buf;
}

inline void write_window_groups(const std::vector<WindowGroup>& groups, const PyramidConfig& cfg,
                                int src_width, int src_height, const std::string& dir) {
    std::filesystem::create_directories(dir);
    nlohmann::json manifest;
    manifest["width"] = src_width;
    manifest["height"] = src_height;
    manifest["window"] = cfg.window;
    manifest["stride"] = cfg.stride;
    manifest["rates"] = cfg.rates;
    nlohmann::json jgroups = nlohmann::json::array();
    for (const WindowGroup& g : groups) {
        nlohmann::json jg;
        jg["index"] = g.index;
        jg["anchor"] = {g.anchor_x, g.anchor_y};
        nlohmann::json jlevels = nlohmann::json::array();
        for (std::size_t li = 0; li < g.levels.size(); ++li) {
            const LevelPatch& lp = g.levels[li];
            const std::string name = patch_file_name(g.index, static_cast<int>(li));
            write_mask(lp.patch, (std::filesystem::path(dir) / name).string());
            nlohmann::json jl;
            jl["rate"] = lp.rate;
            jl["extent"] = {lp.extent.x0, lp.extent.y0, lp.extent.x1, lp.extent.y1};
            jl["file"] = name;
            jlevels.push_back(std::move(jl));
        }
        jg["levels"] = std::move(jlevels);
        jgroups.push_back(std::move(jg));
    }
    manifest["groups"] = std::move(jgroups);
    std::ofstream out(std::filesystem::path(dir) / "manifest.json", std::ios::binary);
    if (!out) throw Error("io-error", "cannot write manifest in " + dir);
    out << manifest.dump(2) << '\n';
}

struct StitchInput {
    int width = 0;
    int height = 0;
    std::vector<StitchPiece> pieces;  // bottom-layer patches only
};

inline StitchInput read_stitch_input(const std::string& manifest_path) {
    std::ifstream in(manifest_path, std::ios::binary);
    if (!in) throw Error("io-error", "cannot read " + manifest_path);
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error("parse-error", std::string(e.what()));
    }
    StitchInput input;
    input.width = manifest.at("width").get<int>();
    input.height = manifest.at("height").get<int>();
    const std::filesystem::path dir = std::filesystem::path(manifest_path).parent_path();
    for (const auto& jg : manifest.at("groups")) {
        const auto& levels = jg.at("levels");
        bool found = false;
        for (const auto& jl : levels) {
            if (jl.at("rate").get<int>() != 1) continue;
            StitchPiece piece;
            piece.anchor_x = jg.at("anchor")[0].get<int>();
            piece.anchor_y = jg.at("anchor")[1].get<int>();
            piece.mask = read_mask((dir / jl.at("file").get<std::string>()).string());
            input.pieces.push_back(std::move(piece));
            found = true;
            break;
        }
        if (!found)
            throw Error("incomplete-coverage",
                        "group " + std::to_string(jg.at("index").get<int>()) +
                            " has no bottom-layer patch");
    }
    return input;
}

}  // namespace polytrace

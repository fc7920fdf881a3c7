// Command-line surface for the mask-to-vector toolkit: contour tracing,
// training-label generation, vector-map evaluation, and pyramid slicing.

#include <cstdio>
#include <iostream>
#include <memory>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "polytrace/alignment.hpp"
#include "polytrace/io/geojson.hpp"
#include "polytrace/io/raster_io.hpp"
#include "polytrace/io/records.hpp"
#include "polytrace/metrics.hpp"
#include "polytrace/pyramid.hpp"
#include "polytrace/tracing.hpp"

namespace {

using namespace polytrace;

std::vector<int> parse_rates(const std::string& text) {
    std::vector<int> rates;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            rates.push_back(std::stoi(item));
        } catch (const std::exception&) {
            throw Error("invalid-pyramid-config", "bad rate '" + item + "'");
        }
    }
    return rates;
}

std::unique_ptr<Scorer> make_scorer(const std::string& spec, double theta_threshold_rad) {
    if (spec == "rule") return std::make_unique<RuleBasedScorer>(theta_threshold_rad);
    if (spec.rfind("file:", 0) == 0) return std::make_unique<FileScorer>(spec.substr(5));
    throw Error("invalid-scorer", "scorer must be 'rule' or 'file:PATH', got '" + spec + "'");
}

int run_trace(const std::string& mask_path, const std::string& out_path, double epsilon,
              double interval, const std::string& scorer_spec, double angle_threshold_deg,
              double prob_threshold, int iters, int jobs) {
    const MaskRaster mask = read_mask(mask_path);
    const double theta = angle_threshold_deg * std::numbers::pi / 180.0;
    const std::unique_ptr<Scorer> scorer = make_scorer(scorer_spec, theta);

    TraceParams params;
    params.epsilon = epsilon;
    params.interval = interval;
    params.offset_iterations = iters;
    params.prob_threshold = prob_threshold;
    params.jobs = jobs;
    const TraceResult result = trace(mask, *scorer, params);

    VectorLayer layer;
    layer.features.reserve(result.polygons.size());
    for (const TracedPolygon& tp : result.polygons) {
        Feature f;
        f.class_id = tp.class_id;
        f.polygon = tp.polygon;
        f.score = tp.instance_score;
        f.vertex_conf = tp.vertex_conf;
        layer.features.push_back(std::move(f));
    }
    write_vector_layer(layer, out_path);

    std::cerr << "traced " << result.polygons.size() << " instances";
    if (!result.instance_errors.empty()) {
        std::cerr << ", " << result.instance_errors.size() << " skipped";
        for (const std::string& e : result.instance_errors) std::cerr << "\n  " << e;
    }
    std::cerr << '\n';
    return 0;
}

int run_mcr_label(const std::string& mask_path, const std::string& gt_path,
                  const std::string& out_path, double epsilon, double interval) {
    const MaskRaster mask = read_mask(mask_path);
    const VectorLayer gt_layer = read_vector_layer(gt_path);
    ContourSet gt;
    gt.reserve(gt_layer.features.size());
    for (const Feature& f : gt_layer.features) gt.push_back({f.class_id, f.polygon});

    const TrainingLabels labels = make_training_labels(mask, gt, epsilon, interval);
    write_training_labels(labels, out_path);

    std::cerr << labels.samples.size() << " samples";
    if (labels.skipped_contours > 0)
        std::cerr << ", " << labels.skipped_contours << " unpaired contours skipped";
    if (labels.skipped_holes > 0)
        std::cerr << ", " << labels.skipped_holes << " unpaired holes skipped";
    if (labels.crossing_warnings > 0)
        std::cerr << ", " << labels.crossing_warnings << " crossing-match warnings";
    std::cerr << '\n';
    return 0;
}

int run_eval(const std::string& pred_path, const std::string& gt_path,
             const std::string& gt_mask_path, const std::string& metrics_list,
             const std::string& graph_gt_path, const std::string& graph_pred_path,
             const std::string& report_path) {
    std::set<std::string> wanted;
    {
        std::stringstream ss(metrics_list);
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (item != "polis" && item != "ciou" && item != "ap" && item != "iou" &&
                item != "f1" && item != "apls")
                throw Error("invalid-metric", "unknown metric '" + item + "'");
            wanted.insert(item);
        }
    }

    const VectorLayer pred_layer = read_vector_layer(pred_path);
    const VectorLayer gt_layer = read_vector_layer(gt_path);
    std::vector<ScoredInstance> preds;
    for (const Feature& f : pred_layer.features)
        preds.push_back({f.class_id, f.polygon, f.score.value_or(1.0)});
    std::vector<ClassedPolygon> gts;
    for (const Feature& f : gt_layer.features) gts.push_back({f.class_id, f.polygon});

    MaskRaster gt_mask;
    EvalOptions opts;
    opts.with_polis = wanted.count("polis") > 0;
    opts.with_ciou = wanted.count("ciou") > 0;
    opts.with_semantic = wanted.count("iou") + wanted.count("f1") > 0;
    opts.with_ap = wanted.count("ap") > 0;

    int grid_w = 0, grid_h = 0;
    if (!gt_mask_path.empty()) {
        gt_mask = read_mask(gt_mask_path);
        opts.gt_mask = &gt_mask;
        grid_w = gt_mask.width;
        grid_h = gt_mask.height;
    } else {
        double max_x = 1.0, max_y = 1.0;
        const auto grow = [&](const PolygonWithHoles& poly) {
            const BoundingBox box = bounding_box(poly.exterior());
            max_x = std::max(max_x, box.max_x);
            max_y = std::max(max_y, box.max_y);
        };
        for (const ScoredInstance& p : preds) grow(p.polygon);
        for (const ClassedPolygon& g : gts) grow(g.polygon);
        grid_w = static_cast<int>(std::ceil(max_x)) + 1;
        grid_h = static_cast<int>(std::ceil(max_y)) + 1;
    }

    RoadGraph graph_gt, graph_pred;
    if (wanted.count("apls") > 0) {
        if (graph_gt_path.empty() || graph_pred_path.empty())
            throw Error("invalid-metric", "apls requires --graph-gt and --graph-pred");
    }
    if (!graph_gt_path.empty() && !graph_pred_path.empty()) {
        graph_gt = read_road_graph(graph_gt_path);
        graph_pred = read_road_graph(graph_pred_path);
        opts.graph_gt = &graph_gt;
        opts.graph_pred = &graph_pred;
    }

    const MetricsReport report = evaluate_layers(preds, gts, grid_w, grid_h, opts);
    if (!report_path.empty()) write_report(report, report_path);
    std::cout << report_to_json(report).dump(2) << '\n';
    return 0;
}

int run_pyramid_slice(const std::string& image_path, const std::string& rates_text, int window,
                      int stride, const std::string& out_dir, const std::string& mode_text) {
    const MaskRaster image = read_mask(image_path);
    PyramidConfig cfg;
    cfg.rates = parse_rates(rates_text);
    cfg.window = window;
    cfg.stride = stride;
    cfg.validate();
    const DownsampleMode mode =
        mode_text == "majority" ? DownsampleMode::MajorityVote : DownsampleMode::AreaAverage;
    const auto pyramid = build_pyramid(image, cfg.rates, mode);
    const auto groups = slice_windows(pyramid, cfg);
    write_window_groups(groups, cfg, image.width, image.height, out_dir);
    std::cerr << groups.size() << " window groups written to " << out_dir << '\n';
    return 0;
}

int run_pyramid_stitch(const std::string& manifest_path, const std::string& out_path) {
    const StitchInput input = read_stitch_input(manifest_path);
    const MaskRaster mask = stitch(input.pieces, input.width, input.height);
    write_mask(mask, out_path);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"raster-mask vectorization and vector-map evaluation toolkit"};
    app.require_subcommand(1);

    // trace
    std::string trace_mask, trace_out, trace_scorer = "rule";
    double trace_epsilon = 5.0, trace_interval = 25.0;
    double trace_angle = 135.0, trace_prob = 0.5;
    int trace_iters = 2, trace_jobs = 0;
    CLI::App* trace_cmd = app.add_subcommand("trace", "vectorize a segmentation mask");
    trace_cmd->add_option("--mask", trace_mask, "input mask (PGM/PNG)")->required();
    trace_cmd->add_option("--out", trace_out, "output GeoJSON layer")->required();
    trace_cmd->add_option("--epsilon", trace_epsilon, "simplification tolerance (px)");
    trace_cmd->add_option("--interval", trace_interval, "resampling interval (px)");
    trace_cmd->add_option("--scorer", trace_scorer, "rule | file:PATH");
    trace_cmd->add_option("--angle-threshold", trace_angle, "vertex angle threshold (degrees)");
    trace_cmd->add_option("--prob-threshold", trace_prob, "vertex probability threshold");
    trace_cmd->add_option("--iters", trace_iters, "offset refinement iterations");
    trace_cmd->add_option("--jobs", trace_jobs, "worker threads (0 = all cores)");

    // mcr-label
    std::string label_mask, label_gt, label_out;
    double label_epsilon = 5.0, label_interval = 25.0;
    CLI::App* label_cmd = app.add_subcommand("mcr-label", "generate matched training labels");
    label_cmd->add_option("--mask", label_mask, "input mask (PGM/PNG)")->required();
    label_cmd->add_option("--gt", label_gt, "ground-truth GeoJSON layer")->required();
    label_cmd->add_option("--out", label_out, "output JSONL label file")->required();
    label_cmd->add_option("--epsilon", label_epsilon, "simplification tolerance (px)");
    label_cmd->add_option("--interval", label_interval, "resampling interval (px)");

    // eval
    std::string eval_pred, eval_gt, eval_gt_mask, eval_report;
    std::string eval_metrics = "polis,ciou,ap,iou,f1";
    std::string eval_graph_gt, eval_graph_pred;
    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a vector layer against ground truth");
    eval_cmd->add_option("--pred", eval_pred, "predicted GeoJSON layer")->required();
    eval_cmd->add_option("--gt", eval_gt, "ground-truth GeoJSON layer")->required();
    eval_cmd->add_option("--gt-mask", eval_gt_mask, "ground-truth mask for semantic metrics");
    eval_cmd->add_option("--metrics", eval_metrics, "comma list: polis,ciou,ap,iou,f1,apls");
    eval_cmd->add_option("--graph-gt", eval_graph_gt, "ground-truth road graph");
    eval_cmd->add_option("--graph-pred", eval_graph_pred, "predicted road graph");
    eval_cmd->add_option("--report", eval_report, "output report JSON")->required();

    // pyramid-slice
    std::string slice_image, slice_rates = "1,3,6", slice_dir, slice_mode = "area";
    int slice_window = 1000, slice_stride = 1000;
    CLI::App* slice_cmd = app.add_subcommand("pyramid-slice", "slice a raster into window groups");
    slice_cmd->add_option("--image", slice_image, "input raster (PGM/PNG)")->required();
    slice_cmd->add_option("--rates", slice_rates, "comma list of downsample rates");
    slice_cmd->add_option("--window", slice_window, "window side (px)");
    slice_cmd->add_option("--stride", slice_stride, "bottom-layer step (px)");
    slice_cmd->add_option("--out-dir", slice_dir, "output directory")->required();
    slice_cmd->add_option("--mode", slice_mode, "area | majority downsampling")
        ->check(CLI::IsMember({"area", "majority"}));

    // pyramid-stitch
    std::string stitch_manifest, stitch_out;
    CLI::App* stitch_cmd = app.add_subcommand("pyramid-stitch", "stitch window groups into a mask");
    stitch_cmd->add_option("--manifest", stitch_manifest, "manifest.json from pyramid-slice")
        ->required();
    stitch_cmd->add_option("--out", stitch_out, "output mask (PGM/PNG)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help() << std::flush;
        return 1;
    }

    try {
        if (trace_cmd->parsed())
            return run_trace(trace_mask, trace_out, trace_epsilon, trace_interval, trace_scorer,
                             trace_angle, trace_prob, trace_iters, trace_jobs);
        if (label_cmd->parsed())
            return run_mcr_label(label_mask, label_gt, label_out, label_epsilon, label_interval);
        if (eval_cmd->parsed())
            return run_eval(eval_pred, eval_gt, eval_gt_mask, eval_metrics, eval_graph_gt,
                            eval_graph_pred, eval_report);
        if (slice_cmd->parsed())
            return run_pyramid_slice(slice_image, slice_rates, slice_window, slice_stride,
                                     slice_dir, slice_mode);
        if (stitch_cmd->parsed()) return run_pyramid_stitch(stitch_manifest, stitch_out);
    } catch (const polytrace::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 2;
    }
    return 2;
}

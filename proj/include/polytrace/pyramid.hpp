#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "polytrace/error.hpp"
#include "polytrace/raster.hpp"

namespace polytrace {

// Downsample rates must ascend from 1; the window is square, anchors step by
// the stride on the bottom (full-resolution) layer.
struct PyramidConfig {
    std::vector<int> rates;
    int window = 0;
    int stride = 0;

    void validate() const {
        if (rates.empty() || rates.front() != 1)
            throw Error("invalid-pyramid-config", "rates must start at 1");
        for (std::size_t i = 1; i < rates.size(); ++i)
            if (rates[i] <= rates[i - 1])
                throw Error("invalid-pyramid-config", "rates must be strictly increasing");
        if (window <= 0) throw Error("invalid-pyramid-config", "window must be positive");
        if (stride <= 0 || stride > window)
            throw Error("invalid-pyramid-config", "stride must be in (0, window]");
    }
};

enum class DownsampleMode {
    AreaAverage,   // imagery: mean over each block, rounded
    MajorityVote,  // label masks: most frequent label, ties to the smallest
};

// Axis-aligned world rectangle [x0, x1) x [y0, y1) in bottom-layer pixels.
struct WorldExtent {
    double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;

    double center_x() const { return 0.5 * (x0 + x1); }
    double center_y() const { return 0.5 * (y0 + y1); }
};

// One W x W patch per pyramid level; the extent is the nominal world
// rectangle (side rate * W) centered on the bottom patch, before any border
// clamping applied during sampling.
struct LevelPatch {
    int rate = 1;
    WorldExtent extent;
    MaskRaster patch;
};

struct WindowGroup {
    int index = 0;
    int anchor_x = 0;
    int anchor_y = 0;
    std::vector<LevelPatch> levels;
};

namespace detail {

inline MaskRaster downsample(const MaskRaster& src, int rate, DownsampleMode mode) {
    if (rate == 1) return src;
    const int w = (src.width + rate - 1) / rate;
    const int h = (src.height + rate - 1) / rate;
    MaskRaster out(w, h);
    std::array<int, 256> histogram{};
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int x0 = x * rate, y0 = y * rate;
            const int x1 = std::min(src.width, x0 + rate);
            const int y1 = std::min(src.height, y0 + rate);
            if (mode == DownsampleMode::AreaAverage) {
                long sum = 0;
                for (int sy = y0; sy < y1; ++sy)
                    for (int sx = x0; sx < x1; ++sx) sum += src.at(sx, sy);
                const long n = static_cast<long>(x1 - x0) * (y1 - y0);
                out.at(x, y) = static_cast<std::uint8_t>((sum + n / 2) / n);
            } else {
                // ties resolve to the smallest label; only touched histogram
                // bins are reset afterwards
                int best = 256;
                for (int sy = y0; sy < y1; ++sy)
                    for (int sx = x0; sx < x1; ++sx) {
                        const int v = src.at(sx, sy);
                        ++histogram[v];
                        if (best == 256 || histogram[v] > histogram[best] ||
                            (histogram[v] == histogram[best] && v < best))
                            best = v;
                    }
                for (int sy = y0; sy < y1; ++sy)
                    for (int sx = x0; sx < x1; ++sx) histogram[src.at(sx, sy)] = 0;
                out.at(x, y) = static_cast<std::uint8_t>(best);
            }
        }
    }
    return out;
}

// symmetric reflection into [0, n)
inline int reflect_index(int i, int n) {
    while (i < 0 || i >= n) {
        if (i < 0) i = -i - 1;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
}

}  // namespace detail

// Level k is the source downsampled by rates[k]; level 0 is the original.
inline std::vector<MaskRaster> build_pyramid(const MaskRaster& src, const std::vector<int>& rates,
                                             DownsampleMode mode = DownsampleMode::AreaAverage) {
    PyramidConfig cfg{rates, 1, 1};
    cfg.validate();
    std::vector<MaskRaster> levels;
    levels.reserve(rates.size());
    for (int rate : rates) levels.push_back(detail::downsample(src, rate, mode));
    return levels;
}

// Slices the pyramid with a uniform window. Bottom anchors step by the
// stride and the final row/column is clamped to the border; each upper
// level's patch covers the rate*W world extent centered on the bottom patch,
// sampled from that level with reflect padding past the image bounds.
inline std::vector<WindowGroup> slice_windows(const std::vector<MaskRaster>& pyramid,
                                              const PyramidConfig& cfg) {
    cfg.validate();
    if (pyramid.size() != cfg.rates.size())
        throw Error("invalid-pyramid-config", "pyramid levels do not match rates");
    const MaskRaster& bottom = pyramid.front();
    const int w = cfg.window;
    if (w > bottom.width || w > bottom.height)
        throw Error("window-too-large", "window exceeds the bottom level");

    const auto anchors = [&](int extent) {
        std::vector<int> out;
        for (int a = 0;; a += cfg.stride) {
            if (a + w >= extent) {
                out.push_back(extent - w);  // clamp the last window to the border
                break;
            }
            out.push_back(a);
        }
        return out;
    };
    const std::vector<int> xs = anchors(bottom.width);
    const std::vector<int> ys = anchors(bottom.height);

    std::vector<WindowGroup> groups;
    groups.reserve(xs.size() * ys.size());
    int index = 0;
    for (int ay : ys) {
        for (int ax : xs) {
            WindowGroup group;
            group.index = index++;
            group.anchor_x = ax;
            group.anchor_y = ay;
            const double cx = ax + 0.5 * w;
            const double cy = ay + 0.5 * w;
            for (std::size_t li = 0; li < pyramid.size(); ++li) {
                const int rate = cfg.rates[li];
                const MaskRaster& level = pyramid[li];
                LevelPatch lp;
                lp.rate = rate;
                const double half = 0.5 * rate * w;
                lp.extent = {cx - half, cy - half, cx + half, cy + half};
                lp.patch = MaskRaster(w, w);
                // contiguous sample window in level pixels
                const int sx0 = static_cast<int>(std::floor(lp.extent.x0 / rate + 0.5));
                const int sy0 = static_cast<int>(std::floor(lp.extent.y0 / rate + 0.5));
                for (int py = 0; py < w; ++py) {
                    const int sy = detail::reflect_index(sy0 + py, level.height);
                    for (int px = 0; px < w; ++px) {
                        const int sx = detail::reflect_index(sx0 + px, level.width);
                        lp.patch.at(px, py) = level.at(sx, sy);
                    }
                }
                group.levels.push_back(std::move(lp));
            }
            groups.push_back(std::move(group));
        }
    }
    return groups;
}

// Bottom-layer mask for one window, to be written back at its anchor.
struct StitchPiece {
    int anchor_x = 0;
    int anchor_y = 0;
    MaskRaster mask;
};

// Writes the per-window bottom-layer masks back at their anchors; overlaps
// resolve to the last writer in row-major anchor order. Every output pixel
// must be covered.
inline MaskRaster stitch(std::vector<StitchPiece> pieces, int width, int height) {
    std::stable_sort(pieces.begin(), pieces.end(), [](const StitchPiece& a, const StitchPiece& b) {
        return a.anchor_y != b.anchor_y ? a.anchor_y < b.anchor_y : a.anchor_x < b.anchor_x;
    });
    MaskRaster out(width, height);
    std::vector<char> covered(out.labels.size(), 0);
    for (const StitchPiece& piece : pieces) {
        if (piece.mask.width <= 0 || piece.mask.height <= 0)
            throw Error("incomplete-coverage", "empty stitch piece");
        for (int y = 0; y < piece.mask.height; ++y) {
            const int ty = piece.anchor_y + y;
            if (ty < 0 || ty >= height) continue;
            for (int x = 0; x < piece.mask.width; ++x) {
                const int tx = piece.anchor_x + x;
                if (tx < 0 || tx >= width) continue;
                out.at(tx, ty) = piece.mask.at(x, y);
                covered[static_cast<std::size_t>(ty) * width + tx] = 1;
            }
        }
    }
    for (char c : covered)
        if (!c) throw Error("incomplete-coverage", "pixels left unwritten");
    return out;
}

}  // namespace polytrace

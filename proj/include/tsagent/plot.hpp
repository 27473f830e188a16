#ifndef TSAGENT_PLOT_HPP
#define TSAGENT_PLOT_HPP

#include "tsagent/dataset.hpp"
#include "tsagent/priors.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace tsa {

struct PlotConfig {
    int width = 640;
    int height = 320;
    std::vector<int> channels;      // empty -> bundle.selected_channels
    bool show_mask_markers = true;
};

// RGB8 raster used by the renderer and inspected directly by tests.
struct Canvas {
    int width = 0, height = 0;
    std::vector<std::uint8_t> rgb;  // 3 bytes per pixel, row-major

    Canvas(int w, int h) : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, 255) {}
    void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
        if (x < 0 || y < 0 || x >= width || y >= height) return;
        std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
        rgb[i] = r;
        rgb[i + 1] = g;
        rgb[i + 2] = b;
    }
    bool is(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) const {
        std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
        return rgb[i] == r && rgb[i + 1] == g && rgb[i + 2] == b;
    }
};

struct PlotImage {
    int width = 0, height = 0;
    std::vector<std::uint8_t> png;    // lossless raster bytes
    std::vector<int> channel_layout;  // channels drawn, in draw order
    double axis_low = 0.0, axis_high = 0.0;
};

// The color every masked time column is marked with.
inline constexpr std::uint8_t kMaskMarker[3] = {255, 153, 153};

// Column pixel of time index t inside the canvas (for tests and annotation).
int plot_column_of(int t, int seq_len, int canvas_width);

// Deterministic line plot: same window + same config -> byte-identical bytes.
Canvas render_canvas(const TimeSeriesWindow& window, const PriorBundle& bundle, const PlotConfig& cfg);
PlotImage render_plot(const TimeSeriesWindow& window, const PriorBundle& bundle, const PlotConfig& cfg);

// Minimal PNG writer (RGB8, stored-deflate blocks); no external codec needed.
std::vector<std::uint8_t> encode_png(const Canvas& canvas);

// FNV-1a of the byte stream, hex string; used for content-hash filenames.
std::string content_hash(const std::vector<std::uint8_t>& bytes);

} // namespace tsa

#endif // TSAGENT_PLOT_HPP

#include "tsagent/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace tsa {

namespace {

constexpr int kMarginLeft = 40, kMarginRight = 10, kMarginTop = 10, kMarginBottom = 24;

constexpr std::uint8_t kPalette[8][3] = {
    {31, 119, 180}, {255, 127, 14}, {44, 160, 44},  {214, 39, 40},
    {148, 103, 189}, {140, 86, 75}, {227, 119, 194}, {127, 127, 127},
};

void draw_line(Canvas& c, int x0, int y0, int x1, int y1,
               std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
    int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    while (true) {
        c.set(x0, y0, r, g, b);
        if (x0 == x1 && y0 == y1) break;
        int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            x0 += sx;
        }
        if (e2 <= dx) {
            err += dx;
            y0 += sy;
        }
    }
}

std::uint32_t crc32_of(const std::uint8_t* data, std::size_t n, std::uint32_t crc = 0) {
    static std::uint32_t table[256];
    static bool init = false;
    if (!init) {
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
            table[i] = c;
        }
        init = true;
    }
    crc ^= 0xffffffffu;
    for (std::size_t i = 0; i < n; ++i) crc = table[(crc ^ data[i]) & 0xffu] ^ (crc >> 8);
    return crc ^ 0xffffffffu;
}

std::uint32_t adler32_of(const std::uint8_t* data, std::size_t n) {
    std::uint32_t a = 1, b = 0;
    for (std::size_t i = 0; i < n; ++i) {
        a = (a + data[i]) % 65521u;
        b = (b + a) % 65521u;
    }
    return (b << 16) | a;
}

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

void put_chunk(std::vector<std::uint8_t>& out, const char type[4], const std::vector<std::uint8_t>& data) {
    put_be32(out, static_cast<std::uint32_t>(data.size()));
    std::size_t start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), data.begin(), data.end());
    put_be32(out, crc32_of(out.data() + start, out.size() - start));
}

} // namespace

int plot_column_of(int t, int seq_len, int canvas_width) {
    int x0 = kMarginLeft;
    int x1 = canvas_width - kMarginRight - 1;
    if (seq_len <= 1) return x0;
    double frac = static_cast<double>(t) / (seq_len - 1);
    return x0 + static_cast<int>(std::lround(frac * (x1 - x0)));
}

Canvas render_canvas(const TimeSeriesWindow& window, const PriorBundle& bundle, const PlotConfig& cfg) {
    window.validate();
    std::vector<int> channels = cfg.channels.empty() ? bundle.selected_channels : cfg.channels;
    if (channels.empty()) throw ContractError("render_plot: no channels selected");
    int L = window.length();
    int width = std::max(cfg.width, L + kMarginLeft + kMarginRight);
    int height = std::max(cfg.height, 80);
    Canvas c(width, height);

    // Value range over drawn channels (observed entries) with 5% padding.
    double lo = 0.0, hi = 0.0;
    bool first = true;
    for (int d : channels) {
        for (int t = 0; t < L; ++t) {
            if (window.is_masked(t, d)) continue;
            double v = window.values.at(t, d);
            if (first) {
                lo = hi = v;
                first = false;
            } else {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
    }
    double span = hi - lo;
    if (span <= 0.0) span = std::max(std::fabs(hi), 1.0);
    lo -= 0.05 * span;
    hi += 0.05 * span;

    int px0 = kMarginLeft, px1 = width - kMarginRight - 1;
    int py0 = kMarginTop, py1 = height - kMarginBottom - 1;

    // Frame
    draw_line(c, px0, py0, px0, py1, 64, 64, 64);
    draw_line(c, px0, py1, px1, py1, 64, 64, 64);

    auto x_of = [&](int t) { return plot_column_of(t, L, width); };
    auto y_of = [&](double v) {
        double frac = (v - lo) / (hi - lo);
        return py1 - static_cast<int>(std::lround(frac * (py1 - py0)));
    };

    // Mask markers first so data lines stay visible on top.
    if (cfg.show_mask_markers && window.mask) {
        for (int t = 0; t < L; ++t) {
            bool any = false;
            for (int d : channels) any = any || window.is_masked(t, d);
            if (!any) continue;
            int x = x_of(t);
            draw_line(c, x, py0, x, py1, kMaskMarker[0], kMaskMarker[1], kMaskMarker[2]);
        }
    }

    for (std::size_t ci = 0; ci < channels.size(); ++ci) {
        int d = channels[ci];
        const auto* col = kPalette[ci % 8];
        int prev_t = -1;
        for (int t = 0; t < L; ++t) {
            if (window.is_masked(t, d)) {
                prev_t = -1;  // gap
                continue;
            }
            if (prev_t >= 0) {
                draw_line(c, x_of(prev_t), y_of(window.values.at(prev_t, d)), x_of(t),
                          y_of(window.values.at(t, d)), col[0], col[1], col[2]);
            } else {
                c.set(x_of(t), y_of(window.values.at(t, d)), col[0], col[1], col[2]);
            }
            prev_t = t;
        }
    }
    return c;
}

PlotImage render_plot(const TimeSeriesWindow& window, const PriorBundle& bundle, const PlotConfig& cfg) {
    Canvas c = render_canvas(window, bundle, cfg);
    PlotImage img;
    img.width = c.width;
    img.height = c.height;
    img.channel_layout = cfg.channels.empty() ? bundle.selected_channels : cfg.channels;
    img.png = encode_png(c);

    // Recompute the padded range for the record (matches render_canvas).
    double lo = 0.0, hi = 0.0;
    bool first = true;
    for (int d : img.channel_layout) {
        for (int t = 0; t < window.length(); ++t) {
            if (window.is_masked(t, d)) continue;
            double v = window.values.at(t, d);
            if (first) {
                lo = hi = v;
                first = false;
            } else {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
    }
    double span = hi - lo;
    if (span <= 0.0) span = std::max(std::fabs(hi), 1.0);
    img.axis_low = lo - 0.05 * span;
    img.axis_high = hi + 0.05 * span;
    return img;
}

std::vector<std::uint8_t> encode_png(const Canvas& canvas) {
    std::vector<std::uint8_t> out = {137, 80, 78, 71, 13, 10, 26, 10};

    std::vector<std::uint8_t> ihdr;
    put_be32(ihdr, static_cast<std::uint32_t>(canvas.width));
    put_be32(ihdr, static_cast<std::uint32_t>(canvas.height));
    ihdr.push_back(8);   // bit depth
    ihdr.push_back(2);   // RGB
    ihdr.push_back(0);   // compression
    ihdr.push_back(0);   // filter
    ihdr.push_back(0);   // no interlace
    put_chunk(out, "IHDR", ihdr);

    // Raw scanlines, filter byte 0 per row.
    std::vector<std::uint8_t> raw;
    raw.reserve(static_cast<std::size_t>(canvas.height) * (1 + 3 * canvas.width));
    for (int y = 0; y < canvas.height; ++y) {
        raw.push_back(0);
        const std::uint8_t* row = canvas.rgb.data() + static_cast<std::size_t>(y) * canvas.width * 3;
        raw.insert(raw.end(), row, row + canvas.width * 3);
    }

    // zlib stream with deflate "stored" blocks.
    std::vector<std::uint8_t> z;
    z.push_back(0x78);
    z.push_back(0x01);
    std::size_t pos = 0;
    while (pos < raw.size()) {
        std::size_t block = std::min<std::size_t>(65535, raw.size() - pos);
        bool final = pos + block == raw.size();
        z.push_back(final ? 1 : 0);
        z.push_back(static_cast<std::uint8_t>(block & 0xff));
        z.push_back(static_cast<std::uint8_t>(block >> 8));
        z.push_back(static_cast<std::uint8_t>(~block & 0xff));
        z.push_back(static_cast<std::uint8_t>((~block >> 8) & 0xff));
        z.insert(z.end(), raw.begin() + static_cast<std::ptrdiff_t>(pos),
                 raw.begin() + static_cast<std::ptrdiff_t>(pos + block));
        pos += block;
    }
    put_be32(z, adler32_of(raw.data(), raw.size()));
    put_chunk(out, "IDAT", z);
    put_chunk(out, "IEND", {});
    return out;
}

std::string content_hash(const std::vector<std::uint8_t>& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::uint8_t b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

} // namespace tsa

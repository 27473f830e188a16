#include "tsagent/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <cstring>

namespace tsa::kernels {

namespace {
std::atomic<bool> g_parallel{true};

// Below this many output elements the OpenMP fork is not worth it.
constexpr long kParGrain = 4096;
} // namespace

void set_parallel(bool on) { g_parallel.store(on); }
bool parallel_enabled() { return g_parallel.load(); }

namespace ref {

void matmul(const double* a, const double* b, double* out, int n, int k, int m) {
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < m; ++j) {
            double acc = 0.0;
            for (int p = 0; p < k; ++p) acc += a[i * k + p] * b[p * m + j];
            out[i * m + j] = acc;
        }
    }
}

void matmul_tn(const double* a, const double* b, double* out, int n, int k, int m) {
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < m; ++j) {
            double acc = 0.0;
            for (int p = 0; p < k; ++p) acc += a[p * n + i] * b[p * m + j];
            out[i * m + j] = acc;
        }
    }
}

void matmul_nt(const double* a, const double* b, double* out, int n, int k, int m) {
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < m; ++j) {
            double acc = 0.0;
            for (int p = 0; p < k; ++p) acc += a[i * k + p] * b[j * k + p];
            out[i * m + j] = acc;
        }
    }
}

void moving_average(const double* x, double* out, int len, int d, int kernel) {
    int half = kernel / 2;
    for (int t = 0; t < len; ++t) {
        for (int c = 0; c < d; ++c) {
            double acc = 0.0;
            for (int o = -half; o <= half; ++o) {
                int src = std::clamp(t + o, 0, len - 1);
                acc += x[src * d + c];
            }
            out[t * d + c] = acc / kernel;
        }
    }
}

} // namespace ref

void matmul(const double* a, const double* b, double* out, int n, int k, int m) {
    bool par = g_parallel.load() && static_cast<long>(n) * m >= kParGrain;
#pragma omp parallel for schedule(static) if (par)
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < m; ++j) {
            double acc = 0.0;
            for (int p = 0; p < k; ++p) acc += a[i * k + p] * b[p * m + j];
            out[i * m + j] = acc;
        }
    }
}

void matmul_tn(const double* a, const double* b, double* out, int n, int k, int m) {
    bool par = g_parallel.load() && static_cast<long>(n) * m >= kParGrain;
#pragma omp parallel for schedule(static) if (par)
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < m; ++j) {
            double acc = 0.0;
            for (int p = 0; p < k; ++p) acc += a[p * n + i] * b[p * m + j];
            out[i * m + j] = acc;
        }
    }
}

void matmul_nt(const double* a, const double* b, double* out, int n, int k, int m) {
    bool par = g_parallel.load() && static_cast<long>(n) * m >= kParGrain;
#pragma omp parallel for schedule(static) if (par)
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < m; ++j) {
            double acc = 0.0;
            for (int p = 0; p < k; ++p) acc += a[i * k + p] * b[j * k + p];
            out[i * m + j] = acc;
        }
    }
}

void im2col1d(const double* x, double* cols, int len, int cin, int ksize,
              int stride, int dilation, int pad_left, int len_out) {
    bool par = g_parallel.load() && static_cast<long>(len_out) * cin * ksize >= kParGrain;
#pragma omp parallel for schedule(static) if (par)
    for (int t = 0; t < len_out; ++t) {
        double* row = cols + static_cast<std::size_t>(t) * cin * ksize;
        for (int c = 0; c < cin; ++c) {
            for (int i = 0; i < ksize; ++i) {
                int src = t * stride + i * dilation - pad_left;
                row[c * ksize + i] = (src >= 0 && src < len) ? x[src * cin + c] : 0.0;
            }
        }
    }
}

void col2im1d(const double* cols, double* x, int len, int cin, int ksize,
              int stride, int dilation, int pad_left, int len_out) {
    std::memset(x, 0, sizeof(double) * static_cast<std::size_t>(len) * cin);
    // Scatter-add; kept serial so the accumulation order is fixed.
    for (int t = 0; t < len_out; ++t) {
        const double* row = cols + static_cast<std::size_t>(t) * cin * ksize;
        for (int c = 0; c < cin; ++c) {
            for (int i = 0; i < ksize; ++i) {
                int dst = t * stride + i * dilation - pad_left;
                if (dst >= 0 && dst < len) x[dst * cin + c] += row[c * ksize + i];
            }
        }
    }
}

void im2col2d(const double* x, double* cols, int h, int w, int cin, int kh, int kw) {
    int ph = kh / 2, pw = kw / 2;
    bool par = g_parallel.load() && static_cast<long>(h) * w * cin * kh * kw >= kParGrain;
#pragma omp parallel for schedule(static) if (par)
    for (int idx = 0; idx < h * w; ++idx) {
        int r = idx / w, c = idx % w;
        double* row = cols + static_cast<std::size_t>(idx) * cin * kh * kw;
        for (int ch = 0; ch < cin; ++ch) {
            for (int i = 0; i < kh; ++i) {
                for (int j = 0; j < kw; ++j) {
                    int sr = r + i - ph, sc = c + j - pw;
                    double v = 0.0;
                    if (sr >= 0 && sr < h && sc >= 0 && sc < w) v = x[(sr * w + sc) * cin + ch];
                    row[(ch * kh + i) * kw + j] = v;
                }
            }
        }
    }
}

void col2im2d(const double* cols, double* x, int h, int w, int cin, int kh, int kw) {
    int ph = kh / 2, pw = kw / 2;
    std::memset(x, 0, sizeof(double) * static_cast<std::size_t>(h) * w * cin);
    for (int idx = 0; idx < h * w; ++idx) {
        int r = idx / w, c = idx % w;
        const double* row = cols + static_cast<std::size_t>(idx) * cin * kh * kw;
        for (int ch = 0; ch < cin; ++ch) {
            for (int i = 0; i < kh; ++i) {
                for (int j = 0; j < kw; ++j) {
                    int dr = r + i - ph, dc = c + j - pw;
                    if (dr >= 0 && dr < h && dc >= 0 && dc < w)
                        x[(dr * w + dc) * cin + ch] += row[(ch * kh + i) * kw + j];
                }
            }
        }
    }
}

void moving_average(const double* x, double* out, int len, int d, int kernel) {
    int half = kernel / 2;
    bool par = g_parallel.load() && static_cast<long>(len) * d >= kParGrain;
#pragma omp parallel for schedule(static) if (par)
    for (int t = 0; t < len; ++t) {
        for (int c = 0; c < d; ++c) {
            double acc = 0.0;
            for (int o = -half; o <= half; ++o) {
                int src = std::clamp(t + o, 0, len - 1);
                acc += x[src * d + c];
            }
            out[t * d + c] = acc / kernel;
        }
    }
}

} // namespace tsa::kernels

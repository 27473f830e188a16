#ifndef TSAGENT_KERNELS_HPP
#define TSAGENT_KERNELS_HPP

#include <cstddef>

namespace tsa::kernels {

// Dense row-major kernels backing the tensor engine. The default entry points
// parallelize independent output elements with OpenMP; ref:: holds the serial
// reference implementations used by the unit tests and the benchmark target.
// Both paths accumulate each output element in the same order, so results are
// bit-identical regardless of thread count.

void set_parallel(bool on);
bool parallel_enabled();

namespace ref {

// out[n x m] = a[n x k] * b[k x m]
void matmul(const double* a, const double* b, double* out, int n, int k, int m);
// out[n x m] = a[k x n]^T * b[k x m]
void matmul_tn(const double* a, const double* b, double* out, int n, int k, int m);
// out[n x m] = a[n x k] * b[m x k]^T
void matmul_nt(const double* a, const double* b, double* out, int n, int k, int m);

} // namespace ref

void matmul(const double* a, const double* b, double* out, int n, int k, int m);
void matmul_tn(const double* a, const double* b, double* out, int n, int k, int m);
void matmul_nt(const double* a, const double* b, double* out, int n, int k, int m);

// Patch extraction for 1-D convolution: x is [len x cin], cols is
// [len_out x (cin*ksize)]. offset(t, i) = t*stride + i*dilation - pad_left;
// out-of-range taps read zero.
void im2col1d(const double* x, double* cols, int len, int cin, int ksize,
              int stride, int dilation, int pad_left, int len_out);
void col2im1d(const double* cols, double* x, int len, int cin, int ksize,
              int stride, int dilation, int pad_left, int len_out);

// 2-D variant with square same-padding, stride 1: x is [h x w x cin],
// cols is [(h*w) x (cin*kh*kw)].
void im2col2d(const double* x, double* cols, int h, int w, int cin, int kh, int kw);
void col2im2d(const double* cols, double* x, int h, int w, int cin, int kh, int kw);

// Centered moving average over the time axis with replicate edge padding.
// x and out are [len x d]; kernel must be odd.
namespace ref {
void moving_average(const double* x, double* out, int len, int d, int kernel);
}
void moving_average(const double* x, double* out, int len, int d, int kernel);

} // namespace tsa::kernels

#endif // TSAGENT_KERNELS_HPP

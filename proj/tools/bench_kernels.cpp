// Compares the serial reference kernels against the OpenMP entry points and
// reports throughput plus a bit-exactness check for each size.

#include "tsagent/kernels.hpp"
#include "tsagent/rng.hpp"

#include <chrono>
#include <cstdio>
#include <cstring>
#include <vector>

using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

void fill(std::vector<double>& v, tsa::Rng& rng) {
    for (auto& x : v) x = rng.uniform(-1.0, 1.0);
}

void bench_matmul(int n, int k, int m, int reps) {
    tsa::Rng rng(7);
    std::vector<double> a(static_cast<std::size_t>(n) * k), b(static_cast<std::size_t>(k) * m);
    std::vector<double> out_ref(static_cast<std::size_t>(n) * m), out_par(out_ref.size());
    fill(a, rng);
    fill(b, rng);

    auto t0 = Clock::now();
    for (int r = 0; r < reps; ++r) tsa::kernels::ref::matmul(a.data(), b.data(), out_ref.data(), n, k, m);
    double t_ref = seconds_since(t0) / reps;

    tsa::kernels::set_parallel(true);
    t0 = Clock::now();
    for (int r = 0; r < reps; ++r) tsa::kernels::matmul(a.data(), b.data(), out_par.data(), n, k, m);
    double t_par = seconds_since(t0) / reps;

    bool exact = std::memcmp(out_ref.data(), out_par.data(), sizeof(double) * out_ref.size()) == 0;
    double gflop = 2.0 * n * k * m / 1e9;
    std::printf("matmul %4dx%4dx%4d  serial %8.3f ms (%6.2f GF/s)  omp %8.3f ms (%6.2f GF/s)  speedup %5.2fx  bit-exact %s\n",
                n, k, m, t_ref * 1e3, gflop / t_ref, t_par * 1e3, gflop / t_par, t_ref / t_par,
                exact ? "yes" : "NO");
}

void bench_moving_average(int len, int d, int kernel, int reps) {
    tsa::Rng rng(11);
    std::vector<double> x(static_cast<std::size_t>(len) * d), out_ref(x.size()), out_par(x.size());
    fill(x, rng);

    auto t0 = Clock::now();
    for (int r = 0; r < reps; ++r) tsa::kernels::ref::moving_average(x.data(), out_ref.data(), len, d, kernel);
    double t_ref = seconds_since(t0) / reps;

    tsa::kernels::set_parallel(true);
    t0 = Clock::now();
    for (int r = 0; r < reps; ++r) tsa::kernels::moving_average(x.data(), out_par.data(), len, d, kernel);
    double t_par = seconds_since(t0) / reps;

    bool exact = std::memcmp(out_ref.data(), out_par.data(), sizeof(double) * out_ref.size()) == 0;
    std::printf("movavg %6dx%-3d k=%-3d     serial %8.3f ms               omp %8.3f ms               speedup %5.2fx  bit-exact %s\n",
                len, d, kernel, t_ref * 1e3, t_par * 1e3, t_ref / t_par, exact ? "yes" : "NO");
}

} // namespace

int main() {
    std::printf("kernel benchmark: serial reference vs OpenMP\n\n");
    bench_matmul(64, 64, 64, 200);
    bench_matmul(192, 133, 128, 100);
    bench_matmul(256, 256, 256, 50);
    bench_matmul(512, 512, 512, 10);
    std::printf("\n");
    bench_moving_average(100000, 8, 25, 50);
    bench_moving_average(500000, 4, 51, 20);
    return 0;
}

// Times the OpenMP kernels against their serial reference implementations.
// Build and run manually: ./fnucb_bench [dims...]

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "fnucb/kernels.hpp"
#include "fnucb/neural.hpp"
#include "fnucb/rng.hpp"

using namespace fnucb;

namespace {

double now_ms() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double, std::milli>(clock::now().time_since_epoch()).count();
}

template <typename F>
double time_ms(int reps, F&& f) {
    const double t0 = now_ms();
    for (int r = 0; r < reps; ++r) f();
    return (now_ms() - t0) / reps;
}

void bench_dim(std::size_t n) {
    Rng rng(42);
    std::vector<double> a(n * n), x(n), y(n), work(n);
    for (auto& v : a) v = rng.next_gaussian();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) a[i * n + j] = a[j * n + i];
    for (std::size_t i = 0; i < n; ++i) a[i * n + i] += static_cast<double>(n);
    for (auto& v : x) v = rng.next_gaussian();

    const int reps = n >= 2048 ? 3 : 20;
    std::vector<double> a1, a2;

    a1 = a;
    const double t_r1_s = time_ms(reps, [&] { kern::sym_rank1_update_serial(a1.data(), n, x.data()); });
    a2 = a;
    const double t_r1_p = time_ms(reps, [&] { kern::sym_rank1_update(a2.data(), n, x.data()); });

    const double t_mv_s = time_ms(reps, [&] { kern::sym_matvec_serial(a.data(), n, x.data(), y.data()); });
    const double t_mv_p = time_ms(reps, [&] { kern::sym_matvec(a.data(), n, x.data(), y.data()); });

    a1 = a;
    const double t_sm_s =
        time_ms(reps, [&] { kern::sherman_morrison_update_serial(a1.data(), n, x.data(), work.data()); });
    a2 = a;
    const double t_sm_p =
        time_ms(reps, [&] { kern::sherman_morrison_update(a2.data(), n, x.data(), work.data()); });

    const int chol_reps = n >= 2048 ? 1 : 5;
    const double t_ch_s = time_ms(chol_reps, [&] {
        a1 = a;
        kern::cholesky_serial(a1.data(), n);
    });
    const double t_ch_p = time_ms(chol_reps, [&] {
        a2 = a;
        kern::cholesky(a2.data(), n);
    });

    std::printf("n=%5zu  rank1 %8.3f/%8.3f ms (x%.2f)  matvec %8.3f/%8.3f ms (x%.2f)  "
                "sherman %8.3f/%8.3f ms (x%.2f)  chol %8.3f/%8.3f ms (x%.2f)\n",
                n, t_r1_s, t_r1_p, t_r1_s / t_r1_p, t_mv_s, t_mv_p, t_mv_s / t_mv_p, t_sm_s,
                t_sm_p, t_sm_s / t_sm_p, t_ch_s, t_ch_p, t_ch_s / t_ch_p);
}

void bench_training() {
    const NetworkShape shape{20, 64, 2};
    const ParamVector theta0 = init_params(shape, 7);
    Rng rng(9);
    const int n = 512;
    std::vector<std::vector<double>> xs(n);
    std::vector<double> ys(n);
    for (int i = 0; i < n; ++i) {
        xs[i].resize(20);
        double norm2 = 0.0;
        for (auto& v : xs[i]) {
            v = rng.next_gaussian();
            norm2 += v * v;
        }
        for (auto& v : xs[i]) v /= std::sqrt(norm2);
        ys[i] = rng.next_gaussian();
    }
    TrainConfig cfg;
    cfg.steps = 30;
    cfg.lambda = 0.1;
    cfg.cutoff = -1;
    const double t = time_ms(3, [&] { train_local(shape, theta0, xs, ys, cfg, nullptr, Rng(1)); });
    std::printf("train_local 30 full-batch steps over %d points (p0=%d): %.2f ms\n", n,
                shape.param_count(), t);
}

}  // namespace

int main(int argc, char** argv) {
#ifdef _OPENMP
    std::printf("OpenMP max threads: %d\n", omp_get_max_threads());
#else
    std::printf("built without OpenMP\n");
#endif
    std::vector<std::size_t> dims = {220, 512, 1024, 2048};
    if (argc > 1) {
        dims.clear();
        for (int i = 1; i < argc; ++i) dims.push_back(std::stoul(argv[i]));
    }
    std::printf("serial/parallel timings per call\n");
    for (const std::size_t n : dims) bench_dim(n);
    bench_training();
    return 0;
}

// Times the serial reference kernels against the OpenMP kernels on
// training-sized workloads and reports the speedup.

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <random>
#include <vector>

#include "phsfl/kernels.hpp"

using namespace phsfl;
namespace k = phsfl::kernels;

namespace {

double now_ms() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double, std::milli>(clock::now().time_since_epoch()).count();
}

std::vector<double> randvec(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) x = dist(rng);
    return v;
}

template <typename F>
double time_best_of(int reps, F&& fn) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const double t0 = now_ms();
        fn();
        best = std::min(best, now_ms() - t0);
    }
    return best;
}

void row(const char* name, double serial_ms, double parallel_ms) {
    std::printf("%-22s %10.2f ms %10.2f ms %8.2fx\n", name, serial_ms, parallel_ms,
                serial_ms / parallel_ms);
}

}  // namespace

int main() {
    std::printf("threads: %d\n", omp_get_max_threads());
    std::printf("%-22s %13s %13s %9s\n", "kernel", "serial", "openmp", "speedup");

    {  // conv on the full-scale first layer: 16 x 3 x 32 x 32 -> 64ch k5
        const k::ConvDims d{16, 3, 32, 32, 64, 5};
        const auto in = randvec(d.n * d.in_ch * d.in_h * d.in_w, 1);
        const auto w = randvec(d.out_ch * d.in_ch * d.k * d.k, 2);
        const auto b = randvec(d.out_ch, 3);
        std::vector<double> out(d.n * d.out_ch * d.out_h() * d.out_w());
        std::vector<double> up = randvec(out.size(), 4);
        std::vector<double> dw(w.size()), db(b.size()), din(in.size());

        row("conv_forward",
            time_best_of(3, [&] { k::serial::conv_forward(in.data(), w.data(), b.data(), out.data(), d); }),
            time_best_of(3, [&] { k::par::conv_forward(in.data(), w.data(), b.data(), out.data(), d); }));
        row("conv_backward_params",
            time_best_of(3, [&] { k::serial::conv_backward_params(in.data(), up.data(), dw.data(), db.data(), d); }),
            time_best_of(3, [&] { k::par::conv_backward_params(in.data(), up.data(), dw.data(), db.data(), d); }));
        row("conv_backward_input",
            time_best_of(3, [&] { k::serial::conv_backward_input(up.data(), w.data(), din.data(), d); }),
            time_best_of(3, [&] { k::par::conv_backward_input(up.data(), w.data(), din.data(), d); }));
    }

    {  // dense 256 x 1024 -> 512
        const std::size_t n = 256, in_f = 1024, out_f = 512;
        const auto in = randvec(n * in_f, 5);
        const auto w = randvec(out_f * in_f, 6);
        const auto b = randvec(out_f, 7);
        std::vector<double> out(n * out_f);
        std::vector<double> up = randvec(out.size(), 8);
        std::vector<double> dw(w.size()), db(b.size()), din(in.size());

        row("dense_forward",
            time_best_of(3, [&] { k::serial::dense_forward(in.data(), w.data(), b.data(), out.data(), n, in_f, out_f); }),
            time_best_of(3, [&] { k::par::dense_forward(in.data(), w.data(), b.data(), out.data(), n, in_f, out_f); }));
        row("dense_backward_params",
            time_best_of(3, [&] { k::serial::dense_backward_params(in.data(), up.data(), dw.data(), db.data(), n, in_f, out_f); }),
            time_best_of(3, [&] { k::par::dense_backward_params(in.data(), up.data(), dw.data(), db.data(), n, in_f, out_f); }));
        row("dense_backward_input",
            time_best_of(3, [&] { k::serial::dense_backward_input(up.data(), w.data(), din.data(), n, in_f, out_f); }),
            time_best_of(3, [&] { k::par::dense_backward_input(up.data(), w.data(), din.data(), n, in_f, out_f); }));
    }

    {  // pooling on 64 x 64 x 28 x 28
        const k::PoolDims d{64, 64, 28, 28};
        const auto in = randvec(d.n * d.ch * d.in_h * d.in_w, 9);
        std::vector<double> out(d.n * d.ch * d.out_h() * d.out_w());
        std::vector<std::uint32_t> arg(out.size());
        std::vector<double> up = randvec(out.size(), 10);
        std::vector<double> din(in.size());

        row("maxpool_forward",
            time_best_of(5, [&] { k::serial::maxpool_forward(in.data(), out.data(), arg.data(), d); }),
            time_best_of(5, [&] { k::par::maxpool_forward(in.data(), out.data(), arg.data(), d); }));
        row("maxpool_backward",
            time_best_of(5, [&] { k::serial::maxpool_backward(up.data(), arg.data(), din.data(), d); }),
            time_best_of(5, [&] { k::par::maxpool_backward(up.data(), arg.data(), din.data(), d); }));
    }

    return 0;
}

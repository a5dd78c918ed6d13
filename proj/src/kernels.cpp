#include "phsfl/kernels.hpp"

#include <atomic>
#include <cstdlib>

namespace phsfl::kernels {

namespace {
std::atomic<bool> g_parallel{[] {
    const char* env = std::getenv("PHSFL_SERIAL");
    return !(env && env[0] == '1');
}()};
}

bool parallel_enabled() { return g_parallel.load(std::memory_order_relaxed); }
void set_parallel(bool on) { g_parallel.store(on, std::memory_order_relaxed); }

void dense_forward(const double* in, const double* w, const double* b, double* out,
                   std::size_t n, std::size_t in_f, std::size_t out_f) {
    parallel_enabled() ? par::dense_forward(in, w, b, out, n, in_f, out_f)
                       : serial::dense_forward(in, w, b, out, n, in_f, out_f);
}

void dense_backward_params(const double* in, const double* up, double* dw, double* db,
                           std::size_t n, std::size_t in_f, std::size_t out_f) {
    parallel_enabled() ? par::dense_backward_params(in, up, dw, db, n, in_f, out_f)
                       : serial::dense_backward_params(in, up, dw, db, n, in_f, out_f);
}

void dense_backward_input(const double* up, const double* w, double* din, std::size_t n,
                          std::size_t in_f, std::size_t out_f) {
    parallel_enabled() ? par::dense_backward_input(up, w, din, n, in_f, out_f)
                       : serial::dense_backward_input(up, w, din, n, in_f, out_f);
}

void conv_forward(const double* in, const double* w, const double* b, double* out,
                  const ConvDims& d) {
    parallel_enabled() ? par::conv_forward(in, w, b, out, d)
                       : serial::conv_forward(in, w, b, out, d);
}

void conv_backward_params(const double* in, const double* up, double* dw, double* db,
                          const ConvDims& d) {
    parallel_enabled() ? par::conv_backward_params(in, up, dw, db, d)
                       : serial::conv_backward_params(in, up, dw, db, d);
}

void conv_backward_input(const double* up, const double* w, double* din, const ConvDims& d) {
    parallel_enabled() ? par::conv_backward_input(up, w, din, d)
                       : serial::conv_backward_input(up, w, din, d);
}

void relu_forward(const double* in, double* out, std::size_t m) {
    parallel_enabled() ? par::relu_forward(in, out, m) : serial::relu_forward(in, out, m);
}

void relu_backward(const double* in, const double* up, double* din, std::size_t m) {
    parallel_enabled() ? par::relu_backward(in, up, din, m)
                       : serial::relu_backward(in, up, din, m);
}

void maxpool_forward(const double* in, double* out, std::uint32_t* arg, const PoolDims& d) {
    parallel_enabled() ? par::maxpool_forward(in, out, arg, d)
                       : serial::maxpool_forward(in, out, arg, d);
}

void maxpool_backward(const double* up, const std::uint32_t* arg, double* din,
                      const PoolDims& d) {
    parallel_enabled() ? par::maxpool_backward(up, arg, din, d)
                       : serial::maxpool_backward(up, arg, din, d);
}

}  // namespace phsfl::kernels

#pragma once

#include <cstddef>
#include <cstdint>

namespace phsfl::kernels {

/// Process-wide switch between the OpenMP kernels and the serial reference.
/// Both produce bit-identical results for any thread count: every output
/// element is accumulated by exactly one thread in a fixed loop order.
bool parallel_enabled();
void set_parallel(bool on);

struct ConvDims {
    std::size_t n, in_ch, in_h, in_w, out_ch, k;
    std::size_t out_h() const { return in_h - k + 1; }
    std::size_t out_w() const { return in_w - k + 1; }
};

struct PoolDims {
    std::size_t n, ch, in_h, in_w;
    std::size_t out_h() const { return in_h / 2; }
    std::size_t out_w() const { return in_w / 2; }
};

// Serial reference implementations, kept for testing and benchmarking.
namespace serial {
void dense_forward(const double* in, const double* w, const double* b, double* out,
                   std::size_t n, std::size_t in_f, std::size_t out_f);
void dense_backward_params(const double* in, const double* up, double* dw, double* db,
                           std::size_t n, std::size_t in_f, std::size_t out_f);
void dense_backward_input(const double* up, const double* w, double* din,
                          std::size_t n, std::size_t in_f, std::size_t out_f);

void conv_forward(const double* in, const double* w, const double* b, double* out,
                  const ConvDims& d);
void conv_backward_params(const double* in, const double* up, double* dw, double* db,
                          const ConvDims& d);
void conv_backward_input(const double* up, const double* w, double* din, const ConvDims& d);

void relu_forward(const double* in, double* out, std::size_t m);
void relu_backward(const double* in, const double* up, double* din, std::size_t m);

void maxpool_forward(const double* in, double* out, std::uint32_t* arg, const PoolDims& d);
void maxpool_backward(const double* up, const std::uint32_t* arg, double* din,
                      const PoolDims& d);
}  // namespace serial

// OpenMP implementations; same signatures, bit-identical output.
namespace par {
void dense_forward(const double* in, const double* w, const double* b, double* out,
                   std::size_t n, std::size_t in_f, std::size_t out_f);
void dense_backward_params(const double* in, const double* up, double* dw, double* db,
                           std::size_t n, std::size_t in_f, std::size_t out_f);
void dense_backward_input(const double* up, const double* w, double* din,
                          std::size_t n, std::size_t in_f, std::size_t out_f);

void conv_forward(const double* in, const double* w, const double* b, double* out,
                  const ConvDims& d);
void conv_backward_params(const double* in, const double* up, double* dw, double* db,
                          const ConvDims& d);
void conv_backward_input(const double* up, const double* w, double* din, const ConvDims& d);

void relu_forward(const double* in, double* out, std::size_t m);
void relu_backward(const double* in, const double* up, double* din, std::size_t m);

void maxpool_forward(const double* in, double* out, std::uint32_t* arg, const PoolDims& d);
void maxpool_backward(const double* up, const std::uint32_t* arg, double* din,
                      const PoolDims& d);
}  // namespace par

// Dispatch wrappers honoring parallel_enabled().
void dense_forward(const double* in, const double* w, const double* b, double* out,
                   std::size_t n, std::size_t in_f, std::size_t out_f);
void dense_backward_params(const double* in, const double* up, double* dw, double* db,
                           std::size_t n, std::size_t in_f, std::size_t out_f);
void dense_backward_input(const double* up, const double* w, double* din,
                          std::size_t n, std::size_t in_f, std::size_t out_f);
void conv_forward(const double* in, const double* w, const double* b, double* out,
                  const ConvDims& d);
void conv_backward_params(const double* in, const double* up, double* dw, double* db,
                          const ConvDims& d);
void conv_backward_input(const double* up, const double* w, double* din, const ConvDims& d);
void relu_forward(const double* in, double* out, std::size_t m);
void relu_backward(const double* in, const double* up, double* din, std::size_t m);
void maxpool_forward(const double* in, double* out, std::uint32_t* arg, const PoolDims& d);
void maxpool_backward(const double* up, const std::uint32_t* arg, double* din,
                      const PoolDims& d);

}  // namespace phsfl::kernels

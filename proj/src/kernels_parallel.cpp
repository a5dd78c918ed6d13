#include "kernel_inner.hpp"
#include "phsfl/kernels.hpp"

// OpenMP variants. Loops are distributed over independent output elements;
// the per-element accumulation in kernel_inner.hpp runs serially, so the
// result matches the serial kernels bit for bit at any thread count.

namespace phsfl::kernels::par {

namespace {
using idx_t = long long;  // OpenMP wants a signed loop variable
}

void dense_forward(const double* in, const double* w, const double* b, double* out,
                   std::size_t n, std::size_t in_f, std::size_t out_f) {
#pragma omp parallel for schedule(static)
    for (idx_t s = 0; s < static_cast<idx_t>(n); ++s)
        for (std::size_t o = 0; o < out_f; ++o)
            out[s * out_f + o] = inner::dense_out_elem(in + s * in_f, w + o * in_f, b[o], in_f);
}

void dense_backward_params(const double* in, const double* up, double* dw, double* db,
                           std::size_t n, std::size_t in_f, std::size_t out_f) {
#pragma omp parallel for schedule(static)
    for (idx_t o = 0; o < static_cast<idx_t>(out_f); ++o) {
        for (std::size_t i = 0; i < in_f; ++i)
            dw[o * in_f + i] = inner::dense_dw_elem(in, up, n, in_f, out_f, o, i);
        db[o] = inner::dense_db_elem(up, n, out_f, o);
    }
}

void dense_backward_input(const double* up, const double* w, double* din, std::size_t n,
                          std::size_t in_f, std::size_t out_f) {
#pragma omp parallel for schedule(static)
    for (idx_t s = 0; s < static_cast<idx_t>(n); ++s)
        for (std::size_t i = 0; i < in_f; ++i)
            din[s * in_f + i] = inner::dense_din_elem(up + s * out_f, w, in_f, out_f, i);
}

void conv_forward(const double* in, const double* w, const double* b, double* out,
                  const ConvDims& d) {
    const std::size_t oh = d.out_h(), ow = d.out_w();
#pragma omp parallel for schedule(static) collapse(2)
    for (idx_t s = 0; s < static_cast<idx_t>(d.n); ++s)
        for (idx_t oc = 0; oc < static_cast<idx_t>(d.out_ch); ++oc) {
            double* out_ch = out + (s * d.out_ch + oc) * oh * ow;
            for (std::size_t oy = 0; oy < oh; ++oy)
                for (std::size_t ox = 0; ox < ow; ++ox)
                    out_ch[oy * ow + ox] = inner::conv_out_elem(in, w, b[oc], d, s, oc, oy, ox);
        }
}

void conv_backward_params(const double* in, const double* up, double* dw, double* db,
                          const ConvDims& d) {
#pragma omp parallel for schedule(static) collapse(2)
    for (idx_t oc = 0; oc < static_cast<idx_t>(d.out_ch); ++oc)
        for (idx_t ic = 0; ic < static_cast<idx_t>(d.in_ch); ++ic)
            for (std::size_t ky = 0; ky < d.k; ++ky)
                for (std::size_t kx = 0; kx < d.k; ++kx)
                    dw[((oc * d.in_ch + ic) * d.k + ky) * d.k + kx] =
                        inner::conv_dw_elem(in, up, d, oc, ic, ky, kx);
#pragma omp parallel for schedule(static)
    for (idx_t oc = 0; oc < static_cast<idx_t>(d.out_ch); ++oc)
        db[oc] = inner::conv_db_elem(up, d, oc);
}

void conv_backward_input(const double* up, const double* w, double* din, const ConvDims& d) {
    const std::size_t in_plane = d.in_h * d.in_w;
#pragma omp parallel for schedule(static) collapse(2)
    for (idx_t s = 0; s < static_cast<idx_t>(d.n); ++s)
        for (idx_t ic = 0; ic < static_cast<idx_t>(d.in_ch); ++ic) {
            double* din_ch = din + (s * d.in_ch + ic) * in_plane;
            for (std::size_t iy = 0; iy < d.in_h; ++iy)
                for (std::size_t ix = 0; ix < d.in_w; ++ix)
                    din_ch[iy * d.in_w + ix] = inner::conv_din_elem(up, w, d, s, ic, iy, ix);
        }
}

void relu_forward(const double* in, double* out, std::size_t m) {
#pragma omp parallel for schedule(static)
    for (idx_t i = 0; i < static_cast<idx_t>(m); ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
}

void relu_backward(const double* in, const double* up, double* din, std::size_t m) {
#pragma omp parallel for schedule(static)
    for (idx_t i = 0; i < static_cast<idx_t>(m); ++i) din[i] = in[i] > 0.0 ? up[i] : 0.0;
}

void maxpool_forward(const double* in, double* out, std::uint32_t* arg, const PoolDims& d) {
    const std::size_t oh = d.out_h(), ow = d.out_w();
    const std::size_t in_plane = d.in_h * d.in_w;
#pragma omp parallel for schedule(static)
    for (idx_t p = 0; p < static_cast<idx_t>(d.n * d.ch); ++p) {
        const double* plane = in + p * in_plane;
        for (std::size_t oy = 0; oy < oh; ++oy)
            for (std::size_t ox = 0; ox < ow; ++ox)
                inner::pool_elem(plane, d.in_w, oy, ox, out[p * oh * ow + oy * ow + ox],
                                 arg[p * oh * ow + oy * ow + ox]);
    }
}

void maxpool_backward(const double* up, const std::uint32_t* arg, double* din,
                      const PoolDims& d) {
    const std::size_t out_plane = d.out_h() * d.out_w();
    const std::size_t in_plane = d.in_h * d.in_w;
#pragma omp parallel for schedule(static)
    for (idx_t p = 0; p < static_cast<idx_t>(d.n * d.ch); ++p) {
        double* din_p = din + p * in_plane;
        for (std::size_t i = 0; i < in_plane; ++i) din_p[i] = 0.0;
        for (std::size_t o = 0; o < out_plane; ++o)
            din_p[arg[p * out_plane + o]] = up[p * out_plane + o];
    }
}

}  // namespace phsfl::kernels::par

#include "kernel_inner.hpp"
#include "phsfl/kernels.hpp"

namespace phsfl::kernels::serial {

void dense_forward(const double* in, const double* w, const double* b, double* out,
                   std::size_t n, std::size_t in_f, std::size_t out_f) {
    for (std::size_t s = 0; s < n; ++s)
        for (std::size_t o = 0; o < out_f; ++o)
            out[s * out_f + o] = inner::dense_out_elem(in + s * in_f, w + o * in_f, b[o], in_f);
}

void dense_backward_params(const double* in, const double* up, double* dw, double* db,
                           std::size_t n, std::size_t in_f, std::size_t out_f) {
    for (std::size_t o = 0; o < out_f; ++o) {
        for (std::size_t i = 0; i < in_f; ++i)
            dw[o * in_f + i] = inner::dense_dw_elem(in, up, n, in_f, out_f, o, i);
        db[o] = inner::dense_db_elem(up, n, out_f, o);
    }
}

void dense_backward_input(const double* up, const double* w, double* din, std::size_t n,
                          std::size_t in_f, std::size_t out_f) {
    for (std::size_t s = 0; s < n; ++s)
        for (std::size_t i = 0; i < in_f; ++i)
            din[s * in_f + i] = inner::dense_din_elem(up + s * out_f, w, in_f, out_f, i);
}

void conv_forward(const double* in, const double* w, const double* b, double* out,
                  const ConvDims& d) {
    const std::size_t oh = d.out_h(), ow = d.out_w();
    for (std::size_t s = 0; s < d.n; ++s)
        for (std::size_t oc = 0; oc < d.out_ch; ++oc) {
            double* out_ch = out + (s * d.out_ch + oc) * oh * ow;
            for (std::size_t oy = 0; oy < oh; ++oy)
                for (std::size_t ox = 0; ox < ow; ++ox)
                    out_ch[oy * ow + ox] = inner::conv_out_elem(in, w, b[oc], d, s, oc, oy, ox);
        }
}

void conv_backward_params(const double* in, const double* up, double* dw, double* db,
                          const ConvDims& d) {
    for (std::size_t oc = 0; oc < d.out_ch; ++oc) {
        for (std::size_t ic = 0; ic < d.in_ch; ++ic)
            for (std::size_t ky = 0; ky < d.k; ++ky)
                for (std::size_t kx = 0; kx < d.k; ++kx)
                    dw[((oc * d.in_ch + ic) * d.k + ky) * d.k + kx] =
                        inner::conv_dw_elem(in, up, d, oc, ic, ky, kx);
        db[oc] = inner::conv_db_elem(up, d, oc);
    }
}

void conv_backward_input(const double* up, const double* w, double* din, const ConvDims& d) {
    const std::size_t in_plane = d.in_h * d.in_w;
    for (std::size_t s = 0; s < d.n; ++s)
        for (std::size_t ic = 0; ic < d.in_ch; ++ic) {
            double* din_ch = din + (s * d.in_ch + ic) * in_plane;
            for (std::size_t iy = 0; iy < d.in_h; ++iy)
                for (std::size_t ix = 0; ix < d.in_w; ++ix)
                    din_ch[iy * d.in_w + ix] = inner::conv_din_elem(up, w, d, s, ic, iy, ix);
        }
}

void relu_forward(const double* in, double* out, std::size_t m) {
    for (std::size_t i = 0; i < m; ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
}

void relu_backward(const double* in, const double* up, double* din, std::size_t m) {
    for (std::size_t i = 0; i < m; ++i) din[i] = in[i] > 0.0 ? up[i] : 0.0;
}

void maxpool_forward(const double* in, double* out, std::uint32_t* arg, const PoolDims& d) {
    const std::size_t oh = d.out_h(), ow = d.out_w();
    const std::size_t in_plane = d.in_h * d.in_w;
    for (std::size_t p = 0; p < d.n * d.ch; ++p) {
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
    for (std::size_t i = 0; i < d.n * d.ch * in_plane; ++i) din[i] = 0.0;
    // 2x2 stride-2 windows are disjoint, so each input cell is written once
    for (std::size_t p = 0; p < d.n * d.ch; ++p)
        for (std::size_t o = 0; o < out_plane; ++o)
            din[p * in_plane + arg[p * out_plane + o]] = up[p * out_plane + o];
}

}  // namespace phsfl::kernels::serial

#pragma once

#include <cstddef>
#include <cstdint>

#include "phsfl/kernels.hpp"

// Per-output-element accumulators shared by the serial and OpenMP kernels.
// Each output value is produced by exactly one call with a fixed inner loop
// order, which is what makes the two paths bit-identical.

namespace phsfl::kernels::inner {

inline double dense_out_elem(const double* in_row, const double* w_row, double bias,
                             std::size_t in_f) {
    double acc = bias;
    for (std::size_t i = 0; i < in_f; ++i) acc += in_row[i] * w_row[i];
    return acc;
}

inline double dense_dw_elem(const double* in, const double* up, std::size_t n,
                            std::size_t in_f, std::size_t out_f, std::size_t o, std::size_t i) {
    double acc = 0.0;
    for (std::size_t s = 0; s < n; ++s) acc += up[s * out_f + o] * in[s * in_f + i];
    return acc;
}

inline double dense_db_elem(const double* up, std::size_t n, std::size_t out_f, std::size_t o) {
    double acc = 0.0;
    for (std::size_t s = 0; s < n; ++s) acc += up[s * out_f + o];
    return acc;
}

inline double dense_din_elem(const double* up_row, const double* w, std::size_t in_f,
                             std::size_t out_f, std::size_t i) {
    double acc = 0.0;
    for (std::size_t o = 0; o < out_f; ++o) acc += up_row[o] * w[o * in_f + i];
    return acc;
}

inline double conv_out_elem(const double* in, const double* w, double bias, const ConvDims& d,
                            std::size_t s, std::size_t oc, std::size_t oy, std::size_t ox) {
    const std::size_t in_plane = d.in_h * d.in_w;
    const double* in_sample = in + s * d.in_ch * in_plane;
    const double* w_oc = w + oc * d.in_ch * d.k * d.k;
    double acc = bias;
    for (std::size_t ic = 0; ic < d.in_ch; ++ic) {
        const double* in_ch = in_sample + ic * in_plane;
        const double* w_ic = w_oc + ic * d.k * d.k;
        for (std::size_t ky = 0; ky < d.k; ++ky)
            for (std::size_t kx = 0; kx < d.k; ++kx)
                acc += in_ch[(oy + ky) * d.in_w + (ox + kx)] * w_ic[ky * d.k + kx];
    }
    return acc;
}

inline double conv_dw_elem(const double* in, const double* up, const ConvDims& d, std::size_t oc,
                           std::size_t ic, std::size_t ky, std::size_t kx) {
    const std::size_t oh = d.out_h(), ow = d.out_w();
    const std::size_t in_plane = d.in_h * d.in_w;
    const std::size_t out_plane = oh * ow;
    double acc = 0.0;
    for (std::size_t s = 0; s < d.n; ++s) {
        const double* in_ch = in + (s * d.in_ch + ic) * in_plane;
        const double* up_ch = up + (s * d.out_ch + oc) * out_plane;
        for (std::size_t oy = 0; oy < oh; ++oy)
            for (std::size_t ox = 0; ox < ow; ++ox)
                acc += up_ch[oy * ow + ox] * in_ch[(oy + ky) * d.in_w + (ox + kx)];
    }
    return acc;
}

inline double conv_db_elem(const double* up, const ConvDims& d, std::size_t oc) {
    const std::size_t out_plane = d.out_h() * d.out_w();
    double acc = 0.0;
    for (std::size_t s = 0; s < d.n; ++s) {
        const double* up_ch = up + (s * d.out_ch + oc) * out_plane;
        for (std::size_t i = 0; i < out_plane; ++i) acc += up_ch[i];
    }
    return acc;
}

inline double conv_din_elem(const double* up, const double* w, const ConvDims& d, std::size_t s,
                            std::size_t ic, std::size_t iy, std::size_t ix) {
    const std::size_t oh = d.out_h(), ow = d.out_w();
    const std::size_t out_plane = oh * ow;
    double acc = 0.0;
    for (std::size_t oc = 0; oc < d.out_ch; ++oc) {
        const double* up_ch = up + (s * d.out_ch + oc) * out_plane;
        const double* w_ic = w + (oc * d.in_ch + ic) * d.k * d.k;
        for (std::size_t ky = 0; ky < d.k; ++ky) {
            if (iy < ky) break;
            const std::size_t oy = iy - ky;
            if (oy >= oh) continue;
            for (std::size_t kx = 0; kx < d.k; ++kx) {
                if (ix < kx) break;
                const std::size_t ox = ix - kx;
                if (ox >= ow) continue;
                acc += up_ch[oy * ow + ox] * w_ic[ky * d.k + kx];
            }
        }
    }
    return acc;
}

/// First maximum wins on ties, making the selected index deterministic.
inline void pool_elem(const double* plane, std::size_t in_w, std::size_t oy, std::size_t ox,
                      double& value, std::uint32_t& index) {
    const std::size_t y0 = 2 * oy, x0 = 2 * ox;
    double best = plane[y0 * in_w + x0];
    std::uint32_t arg = static_cast<std::uint32_t>(y0 * in_w + x0);
    for (std::size_t dy = 0; dy < 2; ++dy)
        for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t off = (y0 + dy) * in_w + (x0 + dx);
            if (plane[off] > best) {
                best = plane[off];
                arg = static_cast<std::uint32_t>(off);
            }
        }
    value = best;
    index = arg;
}

}  // namespace phsfl::kernels::inner

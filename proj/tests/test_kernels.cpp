#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <random>
#include <vector>

#include "phsfl/kernels.hpp"

using namespace phsfl;
namespace k = phsfl::kernels;

namespace {

std::vector<double> randvec(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) x = dist(rng);
    return v;
}

bool bits_equal(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() &&
           std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("dense kernels: serial and openmp agree bit for bit") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const std::size_t n = 3 + seed, in_f = 17, out_f = 9;
        const auto in = randvec(n * in_f, seed);
        const auto w = randvec(out_f * in_f, seed + 100);
        const auto b = randvec(out_f, seed + 200);
        const auto up = randvec(n * out_f, seed + 300);

        std::vector<double> out_s(n * out_f), out_p(n * out_f);
        k::serial::dense_forward(in.data(), w.data(), b.data(), out_s.data(), n, in_f, out_f);
        k::par::dense_forward(in.data(), w.data(), b.data(), out_p.data(), n, in_f, out_f);
        CHECK(bits_equal(out_s, out_p));

        std::vector<double> dw_s(w.size()), db_s(b.size()), dw_p(w.size()), db_p(b.size());
        k::serial::dense_backward_params(in.data(), up.data(), dw_s.data(), db_s.data(), n, in_f,
                                         out_f);
        k::par::dense_backward_params(in.data(), up.data(), dw_p.data(), db_p.data(), n, in_f,
                                      out_f);
        CHECK(bits_equal(dw_s, dw_p));
        CHECK(bits_equal(db_s, db_p));

        std::vector<double> din_s(in.size()), din_p(in.size());
        k::serial::dense_backward_input(up.data(), w.data(), din_s.data(), n, in_f, out_f);
        k::par::dense_backward_input(up.data(), w.data(), din_p.data(), n, in_f, out_f);
        CHECK(bits_equal(din_s, din_p));
    }
}

TEST_CASE("conv kernels: serial and openmp agree bit for bit") {
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        const k::ConvDims d{2 + seed % 3, 3, 11, 9, 5, 3};
        const auto in = randvec(d.n * d.in_ch * d.in_h * d.in_w, seed);
        const auto w = randvec(d.out_ch * d.in_ch * d.k * d.k, seed + 1);
        const auto b = randvec(d.out_ch, seed + 2);
        const std::size_t out_n = d.n * d.out_ch * d.out_h() * d.out_w();
        const auto up = randvec(out_n, seed + 3);

        std::vector<double> out_s(out_n), out_p(out_n);
        k::serial::conv_forward(in.data(), w.data(), b.data(), out_s.data(), d);
        k::par::conv_forward(in.data(), w.data(), b.data(), out_p.data(), d);
        CHECK(bits_equal(out_s, out_p));

        std::vector<double> dw_s(w.size()), db_s(b.size()), dw_p(w.size()), db_p(b.size());
        k::serial::conv_backward_params(in.data(), up.data(), dw_s.data(), db_s.data(), d);
        k::par::conv_backward_params(in.data(), up.data(), dw_p.data(), db_p.data(), d);
        CHECK(bits_equal(dw_s, dw_p));
        CHECK(bits_equal(db_s, db_p));

        std::vector<double> din_s(in.size()), din_p(in.size());
        k::serial::conv_backward_input(up.data(), w.data(), din_s.data(), d);
        k::par::conv_backward_input(up.data(), w.data(), din_p.data(), d);
        CHECK(bits_equal(din_s, din_p));
    }
}

TEST_CASE("relu and maxpool kernels: serial and openmp agree bit for bit") {
    const k::PoolDims d{4, 3, 9, 7};  // odd extents exercise the floor
    const std::size_t m = d.n * d.ch * d.in_h * d.in_w;
    const auto in = randvec(m, 42);
    const auto up_relu = randvec(m, 43);

    std::vector<double> ra(m), rb(m);
    k::serial::relu_forward(in.data(), ra.data(), m);
    k::par::relu_forward(in.data(), rb.data(), m);
    CHECK(bits_equal(ra, rb));
    k::serial::relu_backward(in.data(), up_relu.data(), ra.data(), m);
    k::par::relu_backward(in.data(), up_relu.data(), rb.data(), m);
    CHECK(bits_equal(ra, rb));

    const std::size_t out_n = d.n * d.ch * d.out_h() * d.out_w();
    std::vector<double> pa(out_n), pb(out_n);
    std::vector<std::uint32_t> ia(out_n), ib(out_n);
    k::serial::maxpool_forward(in.data(), pa.data(), ia.data(), d);
    k::par::maxpool_forward(in.data(), pb.data(), ib.data(), d);
    CHECK(bits_equal(pa, pb));
    CHECK(ia == ib);

    const auto up = randvec(out_n, 44);
    std::vector<double> da(m), db(m);
    k::serial::maxpool_backward(up.data(), ia.data(), da.data(), d);
    k::par::maxpool_backward(up.data(), ib.data(), db.data(), d);
    CHECK(bits_equal(da, db));
}

TEST_CASE("maxpool picks the first maximum on ties") {
    const k::PoolDims d{1, 1, 2, 2};
    const std::vector<double> in{7.0, 7.0, 7.0, 7.0};
    double out = 0;
    std::uint32_t arg = 99;
    k::serial::maxpool_forward(in.data(), &out, &arg, d);
    CHECK(out == 7.0);
    CHECK(arg == 0);  // lowest flat offset wins
}

TEST_CASE("dispatch honors the parallel switch") {
    const bool saved = k::parallel_enabled();
    k::set_parallel(false);
    CHECK_FALSE(k::parallel_enabled());
    k::set_parallel(true);
    CHECK(k::parallel_enabled());
    k::set_parallel(saved);
}

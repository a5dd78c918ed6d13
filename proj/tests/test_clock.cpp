#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "phsfl/clock.hpp"

using namespace phsfl;

TEST_CASE("clock: origin maps to zero") {
    CHECK(clock_to_scalar({0, 0, 0, 3, 5}) == 0);
}

TEST_CASE("clock: direct arithmetic") {
    // t = t2*k1*k0 + t1*k0 + t0 = 1*15 + 2*5 + 3
    CHECK(clock_to_scalar({1, 2, 3, 3, 5}) == 28);
}

TEST_CASE("clock: round trip over two full global rounds") {
    const std::uint64_t k1 = 3, k0 = 5;
    for (std::uint64_t t = 0; t < 2 * k1 * k0; ++t) {
        const RoundClock c = clock_from_scalar(t, k1, k0);
        CHECK(clock_to_scalar(c) == t);
        CHECK(c.t1 < k1);
        CHECK(c.t0 < k0);
    }
}

TEST_CASE("clock rejects out-of-range components") {
    CHECK_THROWS_AS(clock_to_scalar({0, 3, 0, 3, 5}), std::invalid_argument);
    CHECK_THROWS_AS(clock_to_scalar({0, 0, 5, 3, 5}), std::invalid_argument);
    CHECK_THROWS_AS(clock_to_scalar({0, 0, 0, 0, 5}), std::invalid_argument);
}

#pragma once

#include <cstdint>

namespace phsfl {

/// Nested round index (t2 global, t1 edge, t0 local) with the edge/local
/// round counts kappa1, kappa0. Bijective with the scalar SGD step
/// t = t2*k1*k0 + t1*k0 + t0.
struct RoundClock {
    std::uint64_t t2 = 0;
    std::uint64_t t1 = 0;
    std::uint64_t t0 = 0;
    std::uint64_t kappa1 = 1;
    std::uint64_t kappa0 = 1;

    bool operator==(const RoundClock&) const = default;
};

std::uint64_t clock_to_scalar(const RoundClock& c);  // validates component ranges
RoundClock clock_from_scalar(std::uint64_t t, std::uint64_t kappa1, std::uint64_t kappa0);

}  // namespace phsfl

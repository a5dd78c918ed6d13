#include "phsfl/clock.hpp"

#include <stdexcept>
#include <string>

namespace phsfl {

std::uint64_t clock_to_scalar(const RoundClock& c) {
    if (c.kappa0 == 0 || c.kappa1 == 0)
        throw std::invalid_argument("round clock needs kappa0, kappa1 >= 1");
    if (c.t1 >= c.kappa1 || c.t0 >= c.kappa0)
        throw std::invalid_argument("round clock component out of range: t1=" +
                                    std::to_string(c.t1) + " t0=" + std::to_string(c.t0));
    return c.t2 * c.kappa1 * c.kappa0 + c.t1 * c.kappa0 + c.t0;
}

RoundClock clock_from_scalar(std::uint64_t t, std::uint64_t kappa1, std::uint64_t kappa0) {
    if (kappa0 == 0 || kappa1 == 0)
        throw std::invalid_argument("round clock needs kappa0, kappa1 >= 1");
    RoundClock c;
    c.kappa1 = kappa1;
    c.kappa0 = kappa0;
    c.t0 = t % kappa0;
    c.t1 = (t / kappa0) % kappa1;
    c.t2 = t / (kappa0 * kappa1);
    return c;
}

}  // namespace phsfl

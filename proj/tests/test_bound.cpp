#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "phsfl/bound.hpp"

using namespace phsfl;

namespace {

BoundInputs uniform_inputs(std::size_t edges, std::size_t clients_per_edge) {
    BoundInputs in;
    in.edge_weights.assign(edges, 1.0 / static_cast<double>(edges));
    in.client_weights.assign(edges, std::vector<double>(clients_per_edge,
                                                        1.0 / static_cast<double>(
                                                                  clients_per_edge)));
    return in;
}

BoundInputs random_inputs(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.05, 1.0);
    std::uniform_int_distribution<int> counts(1, 4);
    BoundInputs in;
    const int edges = counts(rng);
    in.edge_weights.resize(edges);
    in.client_weights.resize(edges);
    double esum = 0;
    for (auto& w : in.edge_weights) {
        w = unit(rng);
        esum += w;
    }
    for (auto& w : in.edge_weights) w /= esum;
    for (auto& cw : in.client_weights) {
        cw.resize(counts(rng));
        double csum = 0;
        for (auto& w : cw) {
            w = unit(rng);
            csum += w;
        }
        for (auto& w : cw) w /= csum;
    }
    in.beta = unit(rng) * 4.0;
    in.eta = unit(rng) * 0.02;
    in.kappa0 = counts(rng);
    in.kappa1 = counts(rng);
    in.total_steps = 50;
    in.sigma_sq = unit(rng);
    in.eps0_sq = unit(rng);
    in.eps1_sq = unit(rng);
    in.delta_f = unit(rng) * 3.0;
    return in;
}

}  // namespace

TEST_CASE("lr_admissible: strict threshold at 1/(2 sqrt 5 beta k1 k0)") {
    BoundInputs in = uniform_inputs(1, 1);
    in.beta = 1.0;
    in.kappa0 = 1;
    in.kappa1 = 1;

    in.eta = 0.2;  // 0.2 < 0.22360679...
    CHECK(lr_admissible(in));
    in.eta = 1.0 / (2.0 * std::sqrt(5.0));  // exactly on the boundary
    CHECK_FALSE(lr_admissible(in));
    in.eta = 0.2236068;
    CHECK_FALSE(lr_admissible(in));

    in.eta = 0.2;
    in.kappa0 = 1000;  // kappa0 -> infinity forces inadmissibility
    CHECK_FALSE(lr_admissible(in));
}

TEST_CASE("gamma terms: hand arithmetic for gamma1 tilde") {
    BoundInputs in = uniform_inputs(2, 3);
    in.beta = 1.0;
    in.eta = 0.1;
    in.kappa1 = 2;
    in.kappa0 = 3;
    const GammaTerms g = gamma_terms(in);
    CHECK(g.gamma1_tilde == doctest::Approx(7.2).epsilon(1e-14));  // 20*0.01*4*9
}

TEST_CASE("gamma terms: single client per edge collapses gamma0 to zero") {
    BoundInputs in = uniform_inputs(3, 1);  // alpha_u = 1 everywhere, S1 = 1
    in.beta = 2.0;
    in.eta = 0.01;
    in.kappa0 = 4;
    in.kappa1 = 2;
    const GammaTerms g = gamma_terms(in);
    CHECK(g.gamma0 == doctest::Approx(0.0).epsilon(1e-18));
}

TEST_CASE("gamma terms: eta 0 zeroes all four") {
    BoundInputs in = uniform_inputs(2, 2);
    in.eta = 0.0;
    const GammaTerms g = gamma_terms(in);
    CHECK(g.gamma0 == 0.0);
    CHECK(g.gamma1 == 0.0);
    CHECK(g.gamma0_tilde == 0.0);
    CHECK(g.gamma1_tilde == 0.0);
}

TEST_CASE("theorem rhs: noise-free collapse keeps only the loss-drop term") {
    BoundInputs in = uniform_inputs(2, 2);
    in.sigma_sq = 0;
    in.eps0_sq = 0;
    in.eps1_sq = 0;
    in.delta_f = 3.0;
    in.eta = 0.01;
    in.total_steps = 60;
    CHECK(theorem_bound(in) == doctest::Approx(2.0 * 3.0 / (0.01 * 60)).epsilon(1e-14));
}

TEST_CASE("theorem rhs: frozen single-client example") {
    // delta_f=1, eta=0.01, T=100, beta=1, sigma^2=1, eps=0, k=1, B=U=1
    BoundInputs in = uniform_inputs(1, 1);
    in.delta_f = 1.0;
    in.eta = 0.01;
    in.total_steps = 100;
    in.beta = 1.0;
    in.sigma_sq = 1.0;
    // independent evaluation: 2 + 0.01 + 0 (gamma terms cancel at S1=S2=1)
    CHECK(theorem_bound(in) == doctest::Approx(2.01).epsilon(1e-14));
}

TEST_CASE("theorem rhs: large T approaches the variance floor") {
    BoundInputs in = uniform_inputs(2, 2);
    in.sigma_sq = 1.0;
    in.delta_f = 5.0;
    in.eta = 0.005;
    in.total_steps = 1;
    const double small_t = theorem_bound(in);
    in.total_steps = 1000000000000ULL;
    const double large_t = theorem_bound(in);
    in.delta_f = 0.0;
    const double floor = theorem_bound(in);
    CHECK(large_t < small_t);
    CHECK(large_t == doctest::Approx(floor).epsilon(1e-5));
}

TEST_CASE("main-text and appendix groupings agree to 1e-12 relative") {
    std::mt19937_64 rng(2024);
    for (int i = 0; i < 200; ++i) {
        const BoundInputs in = random_inputs(rng);
        const double a = theorem_bound(in);
        const double b = theorem_bound_appendix(in);
        CHECK(std::abs(a - b) <= 1e-12 * std::max({std::abs(a), std::abs(b), 1.0}));
    }
}

TEST_CASE("theorem rhs is monotone in each noise input") {
    std::mt19937_64 rng(4711);
    std::uniform_real_distribution<double> bump(0.01, 1.0);
    for (int i = 0; i < 100; ++i) {
        BoundInputs in = random_inputs(rng);
        const double base = theorem_bound(in);
        BoundInputs s = in;
        s.sigma_sq += bump(rng);
        CHECK(theorem_bound(s) >= base);
        BoundInputs e0 = in;
        e0.eps0_sq += bump(rng);
        CHECK(theorem_bound(e0) >= base);
        BoundInputs e1 = in;
        e1.eps1_sq += bump(rng);
        CHECK(theorem_bound(e1) >= base);
        BoundInputs df = in;
        df.delta_f += bump(rng);
        CHECK(theorem_bound(df) >= base);
    }
}

TEST_CASE("lemma bounds: zero eta gives zero") {
    BoundInputs in = uniform_inputs(2, 2);
    in.eta = 0.0;
    in.sigma_sq = 1.0;
    in.eps0_sq = 1.0;
    in.eps1_sq = 1.0;
    CHECK(lemma_bound(1, in) == 0.0);
    CHECK(lemma_bound(2, in) == 0.0);
}

TEST_CASE("lemma 1: zero variance and divergence give zero") {
    BoundInputs in = uniform_inputs(2, 3);
    in.eta = 0.01;
    in.sigma_sq = 0.0;
    in.eps0_sq = 0.0;
    CHECK(lemma_bound(1, in) == 0.0);
}

TEST_CASE("lemma values: symbolically frozen example") {
    // beta=1, eta=0.01, k0=k1=2, uniform B=2 x U=2, sigma^2=eps^2=1
    BoundInputs in = uniform_inputs(2, 2);
    in.beta = 1.0;
    in.eta = 0.01;
    in.kappa0 = 2;
    in.kappa1 = 2;
    in.sigma_sq = 1.0;
    in.eps0_sq = 1.0;
    in.eps1_sq = 1.0;
    CHECK(lemma_bound(1, in) == doctest::Approx(0.0028).epsilon(1e-12));       // 7/2500
    CHECK(lemma_bound(2, in) == doctest::Approx(0.0162896).epsilon(1e-12));    // 10181/625000
}

TEST_CASE("lemma bounds reject an inadmissible eta naming the condition") {
    BoundInputs in = uniform_inputs(1, 2);
    in.beta = 1.0;
    in.kappa0 = 10;
    in.kappa1 = 10;
    in.eta = 0.1;  // above both limits
    CHECK_THROWS_WITH_AS(lemma_bound(1, in), doctest::Contains("sqrt(3)"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(lemma_bound(2, in), doctest::Contains("sqrt(5)"),
                         std::invalid_argument);
    CHECK_THROWS_AS(lemma_bound(3, in), std::invalid_argument);
}

TEST_CASE("bound inputs validation") {
    BoundInputs in = uniform_inputs(2, 2);
    in.beta = 0.0;
    CHECK_THROWS_AS(lr_admissible(in), std::invalid_argument);
    in = uniform_inputs(2, 2);
    in.sigma_sq = -1.0;
    CHECK_THROWS_AS(gamma_terms(in), std::invalid_argument);
    in = uniform_inputs(2, 2);
    in.edge_weights = {0.6, 0.6};
    CHECK_THROWS_AS(gamma_terms(in), std::invalid_argument);
}

#pragma once

#include <cstdint>
#include <vector>

#include "phsfl/data.hpp"
#include "phsfl/layers.hpp"

namespace phsfl {

/// Constants of the convergence bound. Weights are the two-level
/// aggregation simplices: edge_weights over edges, client_weights[b] over
/// the clients of edge b.
struct BoundInputs {
    double beta = 1.0;      // smoothness
    double sigma_sq = 0.0;  // gradient variance bound
    double eps0_sq = 0.0;   // client-edge divergence
    double eps1_sq = 0.0;   // edge-global divergence
    double eta = 0.01;
    std::uint64_t kappa0 = 1;
    std::uint64_t kappa1 = 1;
    std::uint64_t total_steps = 1;  // T
    double delta_f = 0.0;           // E[f(w0)] - E[f(wT)]
    std::vector<double> edge_weights{1.0};
    std::vector<std::vector<double>> client_weights{{1.0}};

    void validate() const;
    /// sum_b a_b * sum_u a_u^2
    double weight_s1() const;
    /// sum_b a_b^2 * sum_u a_u^2
    double weight_s2() const;
};

/// Strict check eta < 1 / (2*sqrt(5)*beta*kappa1*kappa0).
bool lr_admissible(const BoundInputs& in);

struct GammaTerms {
    double gamma0 = 0;        // 4 b^2 e^2 k0^2 (1 - S1)
    double gamma1 = 0;        // 80 k1^2 b^4 e^4 k0^4 (1 - S1) + 4 k1 k0 b^2 e^2 (S1 - S2)
    double gamma0_tilde = 0;  // 12 b^2 e^2 k0^2 (1 + 20 k0^2 k1^2 b^2 e^2)
    double gamma1_tilde = 0;  // 20 b^2 e^2 k1^2 k0^2
};

GammaTerms gamma_terms(const BoundInputs& in);

/// Average-gradient-norm bound, main-text grouping:
/// 2 df/(eta T) + b eta s^2 S2 + (G0+G1) s^2 + G0~ e0^2 + G1~ e1^2.
double theorem_bound(const BoundInputs& in);

/// Identical quantity via the appendix grouping, where the 80k1^2b^4e^4k0^4
/// term sits in Gamma_0 and the divergence terms are spelled out.
double theorem_bound_appendix(const BoundInputs& in);

/// Closed-form RHS of appendix lemma 1 (requires eta <= 1/(2 sqrt(3) b k0))
/// or lemma 2 (requires eta <= 1/(2 sqrt(5) b k1 k0)); rejects an
/// inadmissible eta naming the violated condition.
double lemma_bound(int which, const BoundInputs& in);

/// Empirical constants measured on a finished run: beta from max
/// gradient-difference ratios over perturbation pairs, sigma^2 from
/// mini-batch gradient variance, eps^2 from the weighted divergence sums,
/// delta_f from the loss drop between the initial and final model.
struct BoundEstimate {
    double beta = 0, sigma_sq = 0, eps0_sq = 0, eps1_sq = 0, delta_f = 0;
};

BoundEstimate estimate_bound_inputs(const LayeredModel& initial, const LayeredModel& final_model,
                                    const Dataset& dataset,
                                    const std::vector<ClientShard>& shards, const Topology& topo,
                                    const std::vector<double>& edge_w,
                                    const std::vector<std::vector<double>>& client_w,
                                    std::uint64_t seed);

}  // namespace phsfl

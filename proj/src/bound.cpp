#include "phsfl/bound.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "phsfl/network.hpp"
#include "phsfl/rng.hpp"

namespace phsfl {

void BoundInputs::validate() const {
    if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
    if (sigma_sq < 0 || eps0_sq < 0 || eps1_sq < 0)
        throw std::invalid_argument("variance and divergence bounds must be >= 0");
    if (!(eta >= 0.0)) throw std::invalid_argument("eta must be >= 0");
    if (kappa0 < 1 || kappa1 < 1 || total_steps < 1)
        throw std::invalid_argument("kappa0, kappa1, T must be >= 1");
    if (edge_weights.empty() || client_weights.size() != edge_weights.size())
        throw std::invalid_argument("need one client-weight simplex per edge");
    auto check_simplex = [](const std::vector<double>& w, const char* what) {
        double total = 0.0;
        for (double x : w) {
            if (x < 0.0 || x > 1.0)
                throw std::invalid_argument(std::string(what) + " weight outside [0,1]");
            total += x;
        }
        if (std::abs(total - 1.0) > 1e-9)
            throw std::invalid_argument(std::string(what) + " weights do not sum to 1");
    };
    check_simplex(edge_weights, "edge");
    for (const auto& cw : client_weights) check_simplex(cw, "client");
}

double BoundInputs::weight_s1() const {
    double s1 = 0.0;
    for (std::size_t b = 0; b < edge_weights.size(); ++b) {
        double inner = 0.0;
        for (double au : client_weights[b]) inner += au * au;
        s1 += edge_weights[b] * inner;
    }
    return s1;
}

double BoundInputs::weight_s2() const {
    double s2 = 0.0;
    for (std::size_t b = 0; b < edge_weights.size(); ++b) {
        double inner = 0.0;
        for (double au : client_weights[b]) inner += au * au;
        s2 += edge_weights[b] * edge_weights[b] * inner;
    }
    return s2;
}

bool lr_admissible(const BoundInputs& in) {
    in.validate();
    const double limit = 1.0 / (2.0 * std::sqrt(5.0) * in.beta *
                                static_cast<double>(in.kappa1) *
                                static_cast<double>(in.kappa0));
    return in.eta < limit;  // strict
}

GammaTerms gamma_terms(const BoundInputs& in) {
    in.validate();
    const double b2e2 = in.beta * in.beta * in.eta * in.eta;
    const double k0 = static_cast<double>(in.kappa0);
    const double k1 = static_cast<double>(in.kappa1);
    const double s1 = in.weight_s1();
    const double s2 = in.weight_s2();

    GammaTerms g;
    g.gamma0 = 4.0 * b2e2 * k0 * k0 - 4.0 * b2e2 * k0 * k0 * s1;
    g.gamma1 = 80.0 * k1 * k1 * b2e2 * b2e2 * k0 * k0 * k0 * k0 +
               4.0 * k1 * k0 * b2e2 * s1 - 4.0 * k1 * k0 * b2e2 * s2 -
               80.0 * k1 * k1 * b2e2 * b2e2 * k0 * k0 * k0 * k0 * s1;
    g.gamma0_tilde = 12.0 * b2e2 * k0 * k0 * (1.0 + 20.0 * k0 * k0 * k1 * k1 * b2e2);
    g.gamma1_tilde = 20.0 * b2e2 * k1 * k1 * k0 * k0;
    return g;
}

double theorem_bound(const BoundInputs& in) {
    const GammaTerms g = gamma_terms(in);  // validates
    const double first = 2.0 * in.delta_f / (in.eta * static_cast<double>(in.total_steps));
    const double second = in.beta * in.eta * in.sigma_sq * in.weight_s2();
    return first + second + (g.gamma0 + g.gamma1) * in.sigma_sq + g.gamma0_tilde * in.eps0_sq +
           g.gamma1_tilde * in.eps1_sq;
}

double theorem_bound_appendix(const BoundInputs& in) {
    in.validate();
    const double b2e2 = in.beta * in.beta * in.eta * in.eta;
    const double k0 = static_cast<double>(in.kappa0);
    const double k1 = static_cast<double>(in.kappa1);
    const double k0_4 = k0 * k0 * k0 * k0;
    const double s1 = in.weight_s1();
    const double s2 = in.weight_s2();

    // the 80 k1^2 b^4 e^4 k0^4 term lives in Gamma_0 here
    const double gamma0 = 4.0 * b2e2 * k0 * k0 - 4.0 * b2e2 * k0 * k0 * s1 +
                          80.0 * k1 * k1 * b2e2 * b2e2 * k0_4;
    const double gamma1 = 4.0 * k1 * k0 * b2e2 * s1 - 4.0 * k1 * k0 * b2e2 * s2 -
                          80.0 * k1 * k1 * b2e2 * b2e2 * k0_4 * s1;

    const double first = 2.0 * in.delta_f / (in.eta * static_cast<double>(in.total_steps));
    const double second = in.beta * in.eta * in.sigma_sq * s2;
    return first + second + gamma0 * in.sigma_sq + gamma1 * in.sigma_sq +
           12.0 * b2e2 * in.eps0_sq * k0 * k0 +
           20.0 * b2e2 * in.eps1_sq * k1 * k1 * k0 * k0 +
           240.0 * in.eps0_sq * k1 * k1 * b2e2 * b2e2 * k0_4;
}

double lemma_bound(int which, const BoundInputs& in) {
    in.validate();
    const double e2 = in.eta * in.eta;
    const double k0 = static_cast<double>(in.kappa0);
    const double k1 = static_cast<double>(in.kappa1);
    const double s1 = in.weight_s1();
    const double s2 = in.weight_s2();

    if (which == 1) {
        const double limit = 1.0 / (2.0 * std::sqrt(3.0) * in.beta * k0);
        if (in.eta > limit)
            throw std::invalid_argument("lemma 1 requires eta <= 1/(2*sqrt(3)*beta*kappa0)");
        return 2.0 * e2 * k0 * k0 * in.sigma_sq + 6.0 * in.eps0_sq * e2 * k0 * k0 -
               2.0 * e2 * k0 * k0 * in.sigma_sq * s1;
    }
    if (which == 2) {
        const double limit = 1.0 / (2.0 * std::sqrt(5.0) * in.beta * k1 * k0);
        if (in.eta > limit)
            throw std::invalid_argument(
                "lemma 2 requires eta <= 1/(2*sqrt(5)*beta*kappa1*kappa0)");
        const double b2 = in.beta * in.beta;
        const double e4 = e2 * e2;
        const double k0_4 = k0 * k0 * k0 * k0;
        return 10.0 * in.eps1_sq * e2 * k1 * k1 * k0 * k0 +
               40.0 * b2 * k1 * k1 * in.sigma_sq * e4 * k0_4 +
               120.0 * b2 * in.eps0_sq * k1 * k1 * e4 * k0_4 +
               2.0 * k1 * k0 * e2 * in.sigma_sq * s1 - 2.0 * k1 * k0 * e2 * in.sigma_sq * s2 -
               40.0 * b2 * k1 * k1 * in.sigma_sq * e4 * k0_4 * s1;
    }
    throw std::invalid_argument("lemma index must be 1 or 2");
}

namespace {

/// Mean cross-entropy gradient over a fixed index set, flattened to one
/// vector ordered by layer. Chunked to bound the working set.
std::vector<double> full_gradient(const LayeredModel& model, const Dataset& dataset,
                                  const std::vector<std::uint32_t>& indices, double* loss_out) {
    constexpr std::size_t kChunk = 128;
    const LayerRange full = LayerRange::full(model);
    std::vector<double> flat(model.total_params(), 0.0);
    double loss = 0.0;
    for (std::size_t start = 0; start < indices.size(); start += kChunk) {
        const std::size_t end = std::min(start + kChunk, indices.size());
        const std::vector<std::uint32_t> part(indices.begin() + start, indices.begin() + end);
        const Batch batch = batch_from_indices(dataset, part);
        Tape tape;
        const Tensor logits = forward(model, full, batch.features, &tape);
        Tensor dlogits;
        loss += cross_entropy_grad(logits, batch.labels, dlogits) *
                static_cast<double>(part.size());
        const GradientSet grads = backward(model, full, tape, dlogits);
        // batch means combine by sample-count weights
        std::size_t off = 0;
        for (const auto& blk : grads.blocks) {
            for (double v : blk) flat[off++] += v * static_cast<double>(part.size());
        }
    }
    const double n = static_cast<double>(indices.size());
    for (double& v : flat) v /= n;
    if (loss_out) *loss_out = loss / n;
    return flat;
}

double norm_sq_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

std::vector<double> weighted_sum(const std::vector<std::vector<double>>& vs,
                                 const std::vector<double>& w) {
    std::vector<double> out(vs[0].size(), 0.0);
    for (std::size_t k = 0; k < vs.size(); ++k)
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += w[k] * vs[k][i];
    return out;
}

}  // namespace

BoundEstimate estimate_bound_inputs(const LayeredModel& initial, const LayeredModel& final_model,
                                    const Dataset& dataset,
                                    const std::vector<ClientShard>& shards, const Topology& topo,
                                    const std::vector<double>& edge_w,
                                    const std::vector<std::vector<double>>& client_w,
                                    std::uint64_t seed) {
    BoundEstimate est;
    const std::size_t U = shards.size();

    // full-batch per-client gradients and losses at the final model
    std::vector<std::vector<double>> grad_u(U);
    std::vector<double> loss_final(U, 0.0), loss_init(U, 0.0);
#pragma omp parallel for schedule(dynamic)
    for (long long u = 0; u < static_cast<long long>(U); ++u) {
        grad_u[u] = full_gradient(final_model, dataset, shards[u].train_idx, &loss_final[u]);
        full_gradient(initial, dataset, shards[u].train_idx, &loss_init[u]);
    }

    // divergences per the two-level weighted sums
    std::vector<std::vector<double>> grad_b(topo.num_edges());
    for (std::size_t b = 0; b < topo.num_edges(); ++b) {
        std::vector<std::vector<double>> members;
        for (std::size_t u : topo.edge_clients[b]) members.push_back(grad_u[u]);
        grad_b[b] = weighted_sum(members, client_w[b]);
        double div = 0.0;
        for (std::size_t i = 0; i < topo.edge_clients[b].size(); ++i)
            div += client_w[b][i] * norm_sq_diff(grad_u[topo.edge_clients[b][i]], grad_b[b]);
        est.eps0_sq = std::max(est.eps0_sq, div);
    }
    const std::vector<double> grad_global = weighted_sum(grad_b, edge_w);
    for (std::size_t b = 0; b < topo.num_edges(); ++b)
        est.eps1_sq += edge_w[b] * norm_sq_diff(grad_b[b], grad_global);

    // sigma^2: mini-batch gradient variance around the full-batch gradient
    Rng rng = make_rng(seed, 0x65737469ULL);
    constexpr std::size_t kProbes = 8;
    for (std::size_t u = 0; u < U; ++u) {
        const std::size_t n = std::min<std::size_t>(shards[u].train_idx.size(), 16);
        double var = 0.0;
        for (std::size_t p = 0; p < kProbes; ++p) {
            Batch batch = sample_minibatch(dataset, shards[u], n, rng);
            const auto g = full_gradient(final_model, dataset, batch.sample_indices, nullptr);
            var += norm_sq_diff(g, grad_u[u]);
        }
        est.sigma_sq = std::max(est.sigma_sq, var / static_cast<double>(kProbes));
    }

    // beta: max ratio ||grad f_u(w) - grad f_u(w')|| / ||w - w'|| over
    // random perturbation pairs around the final model
    std::normal_distribution<double> normal(0.0, 1e-3);
    constexpr std::size_t kPairs = 4;
    for (std::size_t p = 0; p < kPairs; ++p) {
        LayeredModel other = final_model;
        double step_sq = 0.0;
        for (auto& blk : other.params)
            for (auto& v : blk) {
                const double d = normal(rng);
                v += d;
                step_sq += d * d;
            }
        for (std::size_t u = 0; u < U; ++u) {
            const auto g2 = full_gradient(other, dataset, shards[u].train_idx, nullptr);
            const double ratio = std::sqrt(norm_sq_diff(g2, grad_u[u]) / std::max(step_sq, 1e-30));
            est.beta = std::max(est.beta, ratio);
        }
    }

    // delta_f over the weighted global loss
    double f0 = 0.0, fT = 0.0;
    for (std::size_t b = 0; b < topo.num_edges(); ++b)
        for (std::size_t i = 0; i < topo.edge_clients[b].size(); ++i) {
            const std::size_t u = topo.edge_clients[b][i];
            f0 += edge_w[b] * client_w[b][i] * loss_init[u];
            fT += edge_w[b] * client_w[b][i] * loss_final[u];
        }
    est.delta_f = f0 - fT;
    return est;
}

}  // namespace phsfl

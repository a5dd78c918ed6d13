#include "phsfl/orchestrator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "phsfl/personalize.hpp"
#include "phsfl/rng.hpp"

namespace phsfl {

namespace {
constexpr std::uint64_t kClientStreamTag = 0x636c6e74ULL;

struct Stats {
    double mean = 0, stdev = 0, min = 0, max = 0;
};

Stats summarize(const std::vector<double>& v) {
    Stats s;
    s.min = v[0];
    s.max = v[0];
    for (double x : v) {
        s.mean += x;
        s.min = std::min(s.min, x);
        s.max = std::max(s.max, x);
    }
    s.mean /= static_cast<double>(v.size());
    for (double x : v) s.stdev += (x - s.mean) * (x - s.mean);
    s.stdev = std::sqrt(s.stdev / static_cast<double>(v.size()));
    return s;
}
}  // namespace

std::string mode_name(Mode m) {
    switch (m) {
        case Mode::PHSFL: return "phsfl";
        case Mode::HSFL: return "hsfl";
        case Mode::HFL: return "hfl";
        case Mode::Centralized: return "centralized";
    }
    return "?";
}

Mode mode_from_name(const std::string& name) {
    if (name == "phsfl") return Mode::PHSFL;
    if (name == "hsfl") return Mode::HSFL;
    if (name == "hfl") return Mode::HFL;
    if (name == "centralized") return Mode::Centralized;
    throw std::invalid_argument("unknown mode '" + name + "'");
}

void TrainConfig::validate() const {
    if (num_edges < 1 || num_clients < num_edges)
        throw std::invalid_argument("need clients >= edges >= 1");
    if (local_epochs < 1 || edge_rounds < 1 || global_rounds < 1 || batch_size < 1 ||
        minibatches_per_epoch < 1)
        throw std::invalid_argument("all round/batch counts must be >= 1");
    if (!(lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
    if (!(dirichlet_alpha > 0.0)) throw std::invalid_argument("dirichlet alpha must be positive");
}

std::vector<double> client_weights(const std::vector<ClientShard>& shards,
                                   const std::vector<std::size_t>& clients,
                                   WeightPolicy policy) {
    if (clients.empty()) throw std::invalid_argument("edge with no clients");
    std::vector<double> w(clients.size());
    if (policy == WeightPolicy::Uniform) {
        std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(clients.size()));
        return w;
    }
    double total = 0.0;
    for (std::size_t i = 0; i < clients.size(); ++i) {
        w[i] = static_cast<double>(shards.at(clients[i]).size());
        total += w[i];
    }
    for (auto& x : w) x /= total;
    return w;
}

std::vector<double> edge_weights(const std::vector<ClientShard>& shards, const Topology& topo,
                                 WeightPolicy policy) {
    std::vector<double> w(topo.num_edges());
    if (policy == WeightPolicy::Uniform) {
        std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(topo.num_edges()));
        return w;
    }
    double total = 0.0;
    for (std::size_t b = 0; b < topo.num_edges(); ++b) {
        for (std::size_t u : topo.edge_clients[b])
            w[b] += static_cast<double>(shards.at(u).size());
        total += w[b];
    }
    for (auto& x : w) x /= total;
    return w;
}

LayeredModel aggregate_models(const std::vector<const LayeredModel*>& parts,
                              const std::vector<double>& weights) {
    if (parts.empty() || parts.size() != weights.size())
        throw std::invalid_argument("aggregation needs matching parts and weights");
    double wsum = 0.0;
    for (double w : weights) wsum += w;
    if (std::abs(wsum - 1.0) > 1e-12)
        throw std::invalid_argument("aggregation weights sum to " + std::to_string(wsum) +
                                    ", expected 1");
    for (const auto* p : parts)
        if (!p->same_structure(*parts[0]))
            throw std::invalid_argument("aggregation parts are not congruent");

    LayeredModel out = *parts[0];
    for (std::size_t li = 0; li < out.layer_count(); ++li) {
        auto& blk = out.params[li];
        for (std::size_t j = 0; j < blk.size(); ++j) {
            double acc = 0.0, mn = parts[0]->params[li][j], mx = mn;
            for (std::size_t k = 0; k < parts.size(); ++k) {
                const double v = parts[k]->params[li][j];
                acc += weights[k] * v;
                mn = std::min(mn, v);
                mx = std::max(mx, v);
            }
            // weighted means stay inside the contributors' hull; this also
            // makes averaging identical blocks (e.g. a frozen head) bit-exact
            blk[j] = std::clamp(acc, mn, mx);
        }
    }
    return out;
}

namespace {

std::vector<bool> head_freeze_mask(const LayeredModel& model, const PartitionSpec& part) {
    std::vector<bool> mask(model.layer_count(), false);
    for (std::size_t i = part.head_start; i < model.layer_count(); ++i) mask[i] = true;
    return mask;
}

RoundMetrics evaluate_round(const LayeredModel& global, const Dataset& dataset,
                            const std::vector<ClientShard>& shards, std::uint64_t bits_phsfl,
                            std::uint64_t bits_hfl) {
    RoundMetrics m;
    m.client_accuracy.resize(shards.size());
    m.client_loss.resize(shards.size());
#pragma omp parallel for schedule(dynamic)
    for (long long u = 0; u < static_cast<long long>(shards.size()); ++u) {
        const ClientEval ev = evaluate(global, dataset, shards[u]);
        m.client_accuracy[u] = ev.accuracy;
        m.client_loss[u] = ev.loss;
    }
    const Stats acc = summarize(m.client_accuracy);
    const Stats loss = summarize(m.client_loss);
    m.mean_acc = acc.mean;
    m.std_acc = acc.stdev;
    m.min_acc = acc.min;
    m.max_acc = acc.max;
    m.mean_loss = loss.mean;
    m.std_loss = loss.stdev;
    m.cum_comm_bits_phsfl = bits_phsfl;
    m.cum_comm_bits_hfl = bits_hfl;
    return m;
}

}  // namespace

TrainingTrace run_training(const TrainConfig& config, const Dataset& dataset,
                           const LayeredModel& initial) {
    config.validate();
    dataset.validate();
    initial.validate();

    TrainingTrace trace;
    trace.ledger = CommLedger(config.precision_bits);
    trace.topology = Topology::contiguous(config.num_clients, config.num_edges);
    trace.shards = dirichlet_partition(dataset, config.num_clients, config.dirichlet_alpha,
                                       config.seed, config.test_fraction);
    assign_edges(trace.shards, trace.topology);
    trace.initial_model = initial;

    const bool split_mode = config.mode == Mode::PHSFL || config.mode == Mode::HSFL;
    const bool frozen = config.mode == Mode::PHSFL || config.force_frozen_head;

    PartitionSpec part = config.partition;
    if (split_mode || frozen) part.validate(initial);

    const std::size_t cut_width = split_mode ? shape_numel(initial.shape_at(part.cut_after)) : 0;
    const std::uint64_t total_z = initial.total_params();

    std::vector<Rng> client_rng;
    client_rng.reserve(config.num_clients);
    for (std::size_t u = 0; u < config.num_clients; ++u)
        client_rng.push_back(make_rng(config.seed, kClientStreamTag, u));

    std::vector<LabelStore> edge_labels;
    std::vector<std::vector<double>> edge_client_w;
    for (std::size_t b = 0; b < trace.topology.num_edges(); ++b) {
        edge_labels.emplace_back(dataset, trace.shards, trace.topology.edge_clients[b]);
        edge_client_w.push_back(
            client_weights(trace.shards, trace.topology.edge_clients[b], config.weights));
    }
    const std::vector<double> edge_w = edge_weights(trace.shards, trace.topology, config.weights);

    const std::vector<bool> freeze = frozen ? head_freeze_mask(initial, part)
                                            : std::vector<bool>(initial.layer_count(), false);

    LayeredModel global = initial;
    std::uint64_t hfl_equiv_bits = 0;
    std::uint64_t steps_client0 = 0;
    const std::size_t steps_per_edge_round =
        config.local_epochs * config.minibatches_per_epoch;

    if (config.mode == Mode::Centralized) {
        // Genie baseline: plain SGD over the union of the train splits,
        // stepping as often per round as a hierarchical client would.
        ClientShard everyone;
        for (const auto& s : trace.shards)
            everyone.train_idx.insert(everyone.train_idx.end(), s.train_idx.begin(),
                                      s.train_idx.end());
        std::sort(everyone.train_idx.begin(), everyone.train_idx.end());

        for (std::size_t r = 0; r < config.global_rounds; ++r) {
            for (std::size_t step = 0; step < config.edge_rounds * steps_per_edge_round; ++step) {
                Batch batch =
                    sample_minibatch(dataset, everyone, config.batch_size, client_rng[0]);
                Tape tape;
                const Tensor logits =
                    forward(global, LayerRange::full(global), batch.features, &tape);
                Tensor dlogits;
                cross_entropy_grad(logits, batch.labels, dlogits);
                GradientSet grads =
                    backward(global, LayerRange::full(global), tape, dlogits);
                sgd_step(global, grads, config.lr, &freeze);
                ++steps_client0;
            }
            trace.rounds.push_back(evaluate_round(global, dataset, trace.shards, 0, 0));
            if (config.record_models) trace.model_snapshots.push_back(global);
        }
        trace.final_model = std::move(global);
        trace.local_steps_per_client = steps_client0;
        return trace;
    }

    for (std::size_t r = 0; r < config.global_rounds; ++r) {
        // Step 1-2: broadcast the global model; edges sync at t1 = 0
        std::vector<LayeredModel> edge_models(trace.topology.num_edges(), global);

        for (std::size_t t1 = 0; t1 < config.edge_rounds; ++t1) {
            for (std::size_t b = 0; b < trace.topology.num_edges(); ++b) {
                const auto& clients = trace.topology.edge_clients[b];
                const std::size_t nb = clients.size();

                if (split_mode) {
                    const SplitParts parts = split(edge_models[b], part);
                    const std::uint64_t z0 = parts.client.total_params();
                    std::vector<LayeredModel> w0(nb, parts.client);
                    std::vector<LayeredModel> body(nb, parts.server_body);
                    std::vector<LayeredModel> head(nb, parts.server_head);
                    std::vector<CommLedger> local(nb, CommLedger(config.precision_bits));

#pragma omp parallel for schedule(dynamic)
                    for (long long ci = 0; ci < static_cast<long long>(nb); ++ci) {
                        const std::size_t u = clients[ci];
                        const std::uint64_t du = trace.shards[u].train_idx.size() +
                                                 trace.shards[u].test_idx.size();
                        // shards can run smaller than N under heavy skew
                        const std::size_t n = std::min<std::size_t>(
                            config.batch_size, trace.shards[u].train_idx.size());
                        auto& lg = local[ci];
                        lg.begin_window();
                        lg.record_client_model_down(z0);
                        for (std::size_t step = 0; step < steps_per_edge_round; ++step) {
                            Batch batch =
                                sample_minibatch(dataset, trace.shards[u], n, client_rng[u]);
                            CutActivation act = client_forward(w0[ci], batch);
                            lg.record_activation_upload(batch.size(), cut_width);
                            lg.record_index_upload(batch.size(), du);
                            ServerStepResult res = server_step(body[ci], head[ci], act,
                                                               edge_labels[b], config.lr, frozen);
                            lg.record_gradient_download(batch.size(), cut_width);
                            client_step(w0[ci], act, res.cut_gradient, config.lr);
                            if (u == 0) ++steps_client0;
                        }
                        lg.record_client_model_up(z0);
                        lg.end_window();
                    }

                    for (std::size_t ci = 0; ci < nb; ++ci) {
                        trace.ledger.merge(local[ci]);
                        hfl_equiv_bits += phi_hfl(total_z, config.precision_bits);
                    }

                    auto ptrs = [](const std::vector<LayeredModel>& v) {
                        std::vector<const LayeredModel*> p;
                        for (const auto& m : v) p.push_back(&m);
                        return p;
                    };
                    // Step 5: client-side and per-client server-side aggregation
                    SplitParts agg;
                    agg.client = aggregate_models(ptrs(w0), edge_client_w[b]);
                    agg.server_body = aggregate_models(ptrs(body), edge_client_w[b]);
                    agg.server_head = aggregate_models(ptrs(head), edge_client_w[b]);
                    edge_models[b] = assemble(agg);
                } else {  // HFL: clients train the entire model locally
                    std::vector<LayeredModel> locals(nb, edge_models[b]);
                    std::vector<CommLedger> local(nb, CommLedger(config.precision_bits));

#pragma omp parallel for schedule(dynamic)
                    for (long long ci = 0; ci < static_cast<long long>(nb); ++ci) {
                        const std::size_t u = clients[ci];
                        const std::size_t n = std::min<std::size_t>(
                            config.batch_size, trace.shards[u].train_idx.size());
                        auto& lg = local[ci];
                        lg.begin_window();
                        lg.record_full_model_sync(total_z);
                        for (std::size_t step = 0; step < steps_per_edge_round; ++step) {
                            Batch batch =
                                sample_minibatch(dataset, trace.shards[u], n, client_rng[u]);
                            Tape tape;
                            const Tensor logits = forward(locals[ci], LayerRange::full(locals[ci]),
                                                          batch.features, &tape);
                            Tensor dlogits;
                            cross_entropy_grad(logits, batch.labels, dlogits);
                            GradientSet grads = backward(locals[ci],
                                                         LayerRange::full(locals[ci]), tape,
                                                         dlogits);
                            sgd_step(locals[ci], grads, config.lr, &freeze);
                            if (u == 0) ++steps_client0;
                        }
                        lg.end_window();
                    }

                    std::vector<const LayeredModel*> ptrs;
                    for (std::size_t ci = 0; ci < nb; ++ci) {
                        trace.ledger.merge(local[ci]);
                        hfl_equiv_bits += phi_hfl(total_z, config.precision_bits);
                        ptrs.push_back(&locals[ci]);
                    }
                    edge_models[b] = aggregate_models(ptrs, edge_client_w[b]);
                }
            }
        }

        // Step 6: global aggregation over the edges
        std::vector<const LayeredModel*> eptrs;
        for (const auto& m : edge_models) eptrs.push_back(&m);
        global = aggregate_models(eptrs, edge_w);

        trace.rounds.push_back(evaluate_round(global, dataset, trace.shards,
                                              trace.ledger.total_bits(), hfl_equiv_bits));
        if (config.record_models) trace.model_snapshots.push_back(global);
    }

    trace.final_model = std::move(global);
    trace.local_steps_per_client = steps_client0;
    return trace;
}

void write_metrics_csv(const TrainingTrace& trace, Mode mode, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    os << "round,mode,mean_acc,std_acc,min_acc,max_acc,mean_loss,std_loss,"
          "cum_comm_bits_phsfl,cum_comm_bits_hfl\n";
    char buf[64];
    auto fmt = [&buf](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    for (std::size_t r = 0; r < trace.rounds.size(); ++r) {
        const RoundMetrics& m = trace.rounds[r];
        os << r << ',' << mode_name(mode) << ',' << fmt(m.mean_acc) << ',' << fmt(m.std_acc)
           << ',' << fmt(m.min_acc) << ',' << fmt(m.max_acc) << ',' << fmt(m.mean_loss) << ','
           << fmt(m.std_loss) << ',' << m.cum_comm_bits_phsfl << ',' << m.cum_comm_bits_hfl
           << '\n';
    }
    if (!os) throw std::runtime_error("write failed for " + path);
}

}  // namespace phsfl

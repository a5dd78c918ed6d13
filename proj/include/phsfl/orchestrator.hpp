#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "phsfl/comm.hpp"
#include "phsfl/data.hpp"
#include "phsfl/layers.hpp"
#include "phsfl/split.hpp"

namespace phsfl {

enum class Mode { PHSFL, HSFL, HFL, Centralized };

enum class WeightPolicy { DataSize, Uniform };

std::string mode_name(Mode m);
Mode mode_from_name(const std::string& name);

struct TrainConfig {
    Mode mode = Mode::PHSFL;
    std::size_t num_edges = 1;    // B
    std::size_t num_clients = 1;  // U
    double dirichlet_alpha = 0.1;
    std::size_t local_epochs = 1;            // kappa_0
    std::size_t edge_rounds = 1;             // kappa_1
    std::size_t global_rounds = 1;           // R
    std::size_t batch_size = 8;              // N
    std::size_t minibatches_per_epoch = 1;   // N-bar
    double lr = 0.01;
    std::uint64_t seed = 1;
    PartitionSpec partition;
    WeightPolicy weights = WeightPolicy::DataSize;
    std::uint64_t precision_bits = 64;
    double test_fraction = 0.2;
    /// Freezes the head regardless of mode (control-experiment switch).
    bool force_frozen_head = false;
    /// Keeps a copy of the global model after every round (tests only).
    bool record_models = false;

    void validate() const;
};

struct RoundMetrics {
    std::vector<double> client_accuracy;
    std::vector<double> client_loss;
    double mean_acc = 0, std_acc = 0, min_acc = 0, max_acc = 0;
    double mean_loss = 0, std_loss = 0;
    std::uint64_t cum_comm_bits_phsfl = 0;
    std::uint64_t cum_comm_bits_hfl = 0;
};

struct TrainingTrace {
    std::vector<RoundMetrics> rounds;
    LayeredModel final_model;
    LayeredModel initial_model;
    std::vector<ClientShard> shards;
    Topology topology;
    std::vector<LayeredModel> model_snapshots;  // filled when record_models
    std::uint64_t local_steps_per_client = 0;
    CommLedger ledger{64};
};

/// Aggregation weights on one edge: alpha_u = |D_u| / sum over the edge
/// (or uniform). Sums to 1 by construction.
std::vector<double> client_weights(const std::vector<ClientShard>& shards,
                                   const std::vector<std::size_t>& clients,
                                   WeightPolicy policy);
std::vector<double> edge_weights(const std::vector<ClientShard>& shards, const Topology& topo,
                                 WeightPolicy policy);

/// Parameter-wise weighted mean over congruent models, accumulated in the
/// given order. Every aggregated value is clamped to the contributors'
/// [min, max], so averaging identical blocks is bit-exact. Weights must sum
/// to 1 within 1e-12.
LayeredModel aggregate_models(const std::vector<const LayeredModel*>& parts,
                              const std::vector<double>& weights);

/// Runs the configured algorithm for R global rounds on the dataset,
/// starting from `initial`. Clients inside an edge round execute in
/// parallel; results are independent of the thread count.
TrainingTrace run_training(const TrainConfig& config, const Dataset& dataset,
                           const LayeredModel& initial);

/// Writes the per-round metrics CSV (byte-stable for a fixed trace).
void write_metrics_csv(const TrainingTrace& trace, Mode mode, const std::string& path);

}  // namespace phsfl

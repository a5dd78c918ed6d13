#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "phsfl/data.hpp"
#include "phsfl/split.hpp"

namespace phsfl {

/// Shared trained body plus one client's fine-tuned head.
struct PersonalizedModel {
    LayeredModel model;
    std::size_t client_id = 0;
};

struct ClientEval {
    std::size_t client_id = 0;
    double accuracy = 0.0;
    double loss = 0.0;
};

struct EvalReport {
    std::vector<ClientEval> clients;
    double mean_acc = 0, std_acc = 0, min_acc = 0, max_acc = 0;
    double mean_loss = 0, std_loss = 0;
};

/// K SGD steps on the head only; every block outside the head stays
/// bit-identical to the global model. Mini-batches are the full train split
/// when it holds at most 256 samples, else 32 sampled per step.
PersonalizedModel fine_tune_head(const LayeredModel& global_model, const PartitionSpec& spec,
                                 const Dataset& dataset, const ClientShard& shard,
                                 std::size_t steps, double lr, std::uint64_t seed);

/// Test accuracy (argmax, ties to the lowest class index) and mean
/// cross-entropy on the shard's test split.
ClientEval evaluate(const LayeredModel& model, const Dataset& dataset,
                    const ClientShard& shard);

/// Aggregates per-client evals; std is the population formula.
EvalReport report(const std::vector<ClientEval>& evals);

/// Personalization CSV: client_id, generalized_acc, personalized_acc,
/// generalized_loss, personalized_loss.
void write_personalization_csv(const std::vector<ClientEval>& generalized,
                               const std::vector<ClientEval>& personalized,
                               const std::string& path);

}  // namespace phsfl

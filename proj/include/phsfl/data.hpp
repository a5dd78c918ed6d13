#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "phsfl/layers.hpp"
#include "phsfl/rng.hpp"
#include "phsfl/tensor.hpp"

namespace phsfl {

struct Dataset {
    Tensor features;  // {D, ...sample shape}
    std::vector<int> labels;
    std::size_t num_classes = 0;

    std::size_t size() const { return labels.size(); }
    Shape sample_shape() const { return features.sample_shape(); }
    void validate() const;
};

/// One client's slice of the dataset: global sample indices split into a
/// train and a stratified test part.
struct ClientShard {
    std::size_t client_id = 0;
    std::size_t edge_id = 0;
    std::vector<std::uint32_t> train_idx;
    std::vector<std::uint32_t> test_idx;

    std::size_t size() const { return train_idx.size() + test_idx.size(); }
};

/// Client-to-edge assignment: disjoint groups covering all clients.
struct Topology {
    std::vector<std::vector<std::size_t>> edge_clients;

    std::size_t num_edges() const { return edge_clients.size(); }
    std::size_t num_clients() const;
    /// Contiguous assignment in client-id order; the first U % B edges get
    /// one extra client when B does not divide U.
    static Topology contiguous(std::size_t num_clients, std::size_t num_edges);
};

/// Symmetric-Dirichlet non-IID label partition across U clients. Per class,
/// proportions drawn from Dir(alpha * 1_U) are converted to integer counts
/// by largest-remainder rounding. Resamples (bounded) until every client
/// holds at least one sample. The per-client test split is `test_fraction`,
/// stratified by label.
std::vector<ClientShard> dirichlet_partition(const Dataset& dataset, std::size_t num_clients,
                                             double alpha, std::uint64_t seed,
                                             double test_fraction = 0.2);

void assign_edges(std::vector<ClientShard>& shards, const Topology& topo);

/// Uniform sample of N train indices without replacement.
Batch sample_minibatch(const Dataset& dataset, const ClientShard& shard, std::size_t n,
                       Rng& rng);

Batch batch_from_indices(const Dataset& dataset, const std::vector<std::uint32_t>& indices);

/// Class-conditional Gaussian blobs, linearly separable for large margins.
/// Feature values are rounded to f32 so dataset files round-trip exactly.
Dataset generate_synthetic(std::size_t num_classes, std::size_t num_samples,
                           const Shape& sample_shape, std::uint64_t seed,
                           double margin = 2.5);

/// Dataset file: magic "PHSFDATA", u32 D, u32 C, u32 rank + dims,
/// features as little-endian f32, labels as u8.
Dataset load_dataset(const std::string& path);
void save_dataset(const Dataset& dataset, const std::string& path);

/// Natural-log entropy of the shard's label distribution (train + test).
double label_entropy(const Dataset& dataset, const ClientShard& shard);

/// Labels owned by an edge server, addressable by global sample index.
/// Lookups outside the edge's client population are rejected.
class LabelStore {
public:
    LabelStore() = default;
    LabelStore(const Dataset& dataset, const std::vector<ClientShard>& shards,
               const std::vector<std::size_t>& clients);

    bool contains(std::uint32_t global_idx) const;
    int label_at(std::uint32_t global_idx) const;  // throws if absent

private:
    std::vector<int> labels_;
    std::vector<bool> present_;
};

}  // namespace phsfl

#pragma once

#include <cstdint>
#include <vector>

#include "phsfl/data.hpp"
#include "phsfl/layers.hpp"
#include "phsfl/network.hpp"

namespace phsfl {

/// Cut-layer and head boundaries. The client side is [0, cut_after), the
/// server body [cut_after, head_start), the head [head_start, L). The head
/// is the final output layer.
struct PartitionSpec {
    std::size_t cut_after = 0;
    std::size_t head_start = 0;

    void validate(const LayeredModel& model) const;
    /// cut_after = boundary after the first MaxPool2d, head_start = last layer.
    static PartitionSpec auto_for(const LayeredModel& model);
};

struct SplitParts {
    LayeredModel client;       // w_0
    LayeredModel server_body;  // w_bd
    LayeredModel server_head;  // w_hd
};

/// Cuts a model into client / body / head pieces; assemble() restores the
/// original bit-exactly.
SplitParts split(const LayeredModel& model, const PartitionSpec& spec);
LayeredModel assemble(const SplitParts& parts);

/// Cut-layer output o_fp with the sampled global indices and the client-side
/// tape needed for the later backward pass.
struct CutActivation {
    Tensor values;  // {N, Z_c...}
    std::vector<std::uint32_t> sample_indices;
    Tape tape;

    std::size_t batch_size() const { return sample_indices.size(); }
    /// Little-endian 64-bit byte layout, as counted by the comm ledger.
    std::vector<std::uint8_t> to_bytes() const;
};

/// Cut-layer gradient o_bp, paired with the CutActivation of the same step.
struct CutGradient {
    Tensor values;
    std::vector<std::uint8_t> to_bytes() const;
};

struct ServerStepResult {
    double loss = 0.0;
    CutGradient cut_gradient;
};

/// Forward pass over the client piece; carries the indices through.
CutActivation client_forward(const LayeredModel& client, const Batch& batch);

/// Server-side forward + backward + SGD. Labels are looked up by global
/// index in the edge's label store. The head block is left bit-identical
/// when head_frozen. Returns the loss and d(loss)/d(cut input).
ServerStepResult server_step(LayeredModel& body, LayeredModel& head, const CutActivation& act,
                             const LabelStore& labels, double eta, bool head_frozen);

/// Client-side backward through the stored tape followed by an SGD step.
void client_step(LayeredModel& client, const CutActivation& act, const CutGradient& grad,
                 double eta);

}  // namespace phsfl

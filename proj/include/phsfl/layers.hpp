#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "phsfl/tensor.hpp"

namespace phsfl {

enum class LayerKind { Dense, Conv2d, MaxPool2d, ReLU, Flatten };

/// One layer of the network. Conv2d is stride 1, no padding; MaxPool2d is
/// 2x2 with stride 2 and floor division on odd extents.
struct LayerSpec {
    LayerKind kind = LayerKind::ReLU;
    std::size_t in = 0;      // Dense: in features, Conv2d: in channels
    std::size_t out = 0;     // Dense: out features, Conv2d: out channels
    std::size_t kernel = 5;  // Conv2d only

    static LayerSpec dense(std::size_t in_features, std::size_t out_features);
    static LayerSpec conv2d(std::size_t in_channels, std::size_t out_channels,
                            std::size_t kernel = 5);
    static LayerSpec maxpool2d();
    static LayerSpec relu();
    static LayerSpec flatten();

    /// Weights plus biases for Dense/Conv2d, zero for the rest.
    std::size_t param_count() const;

    /// Per-sample output shape; throws on a shape the layer cannot accept.
    Shape output_shape(const Shape& input) const;

    bool has_params() const { return param_count() > 0; }
    std::string name() const;
    bool operator==(const LayerSpec&) const = default;
};

/// An ordered stack of layers with one flat parameter block per layer.
/// Parameter layout: Dense = weights (out x in, row-major) then biases;
/// Conv2d = weights (out_ch x in_ch x k x k) then biases.
struct LayeredModel {
    Shape input_shape;  // per-sample shape accepted by layer 0
    std::vector<LayerSpec> layers;
    std::vector<std::vector<double>> params;  // one block per layer, empty if no params

    std::size_t layer_count() const { return layers.size(); }
    std::size_t total_params() const;  // the paper's Z

    /// Per-sample activation shape entering layer `boundary`
    /// (boundary 0 = model input, boundary L = model output).
    Shape shape_at(std::size_t boundary) const;

    /// Structural and parameter-count invariants; throws on violation.
    void validate() const;

    bool same_structure(const LayeredModel& other) const;
    bool bit_equal(const LayeredModel& other) const;
};

/// A mini-batch: features with batch dim first, labels, and the global
/// sample indices that identify each row in the full dataset.
struct Batch {
    Tensor features;
    std::vector<int> labels;
    std::vector<std::uint32_t> sample_indices;

    std::size_t size() const { return sample_indices.size(); }
    void validate(std::size_t num_classes) const;
};

/// Per-layer parameter gradients congruent with a model, plus the gradient
/// with respect to the pass's input.
struct GradientSet {
    std::vector<std::vector<double>> blocks;  // same indexing as LayeredModel::params
    Tensor input_gradient;

    bool congruent_with(const LayeredModel& model) const;
};

// Architecture builders (uninitialized parameter blocks, all zeros).

/// The full-scale CNN for 32x32 inputs:
/// Conv(c,64,k5) ReLU Pool Conv(64,128,k5) ReLU Pool Pool Flatten
/// Dense(512,256) ReLU Dense(256,classes).
LayeredModel paper_cnn(std::size_t in_channels, std::size_t num_classes);

/// Same stack and channel widths scaled to 8x8 inputs (kernels 3 and 2).
LayeredModel paper_cnn_8x8(std::size_t in_channels, std::size_t num_classes);

/// Thin 8x8 CNN used by the desk-scale experiments.
LayeredModel desk_cnn(std::size_t in_channels, std::size_t num_classes);

/// Single linear layer on flattened input.
LayeredModel linear_model(const Shape& sample_shape, std::size_t num_classes);

}  // namespace phsfl

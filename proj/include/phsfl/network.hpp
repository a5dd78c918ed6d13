#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "phsfl/layers.hpp"
#include "phsfl/tensor.hpp"

namespace phsfl {

/// Half-open layer interval [begin, end) within a model.
struct LayerRange {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t length() const { return end - begin; }
    static LayerRange full(const LayeredModel& m) { return {0, m.layer_count()}; }
};

/// Activations cached by forward, consumed by backward. One input tensor
/// per layer in the range, plus the argmax indices of each pool layer.
struct Tape {
    LayerRange range;
    std::vector<Tensor> inputs;
    std::vector<std::vector<std::uint32_t>> pool_arg;
    Shape output_shape;

    bool matches(const LayeredModel& model, LayerRange r) const;
};

/// Runs layers [range.begin, range.end) on a batched input. When `tape`
/// is non-null every intermediate needed by backward is recorded.
Tensor forward(const LayeredModel& model, LayerRange range, const Tensor& input,
               Tape* tape = nullptr);

/// Mean over the batch of -log softmax(logits)[label].
double cross_entropy(const Tensor& logits, const std::vector<int>& labels);

/// Same, also writing d(loss)/d(logits) into `dlogits`.
double cross_entropy_grad(const Tensor& logits, const std::vector<int>& labels,
                          Tensor& dlogits);

/// Backpropagates `upstream` through the taped range. blocks are indexed
/// like the model's param blocks; layers outside the range stay empty.
/// input_gradient is d(loss)/d(range input) -- the cut gradient when the
/// range is the server side.
GradientSet backward(const LayeredModel& model, LayerRange range, const Tape& tape,
                     const Tensor& upstream);

/// In-place SGD update: block <- block - eta * grad for every layer whose
/// freeze flag is unset. A frozen block (or eta == 0) is left bit-identical.
void sgd_step(LayeredModel& model, const GradientSet& grads, double eta,
              const std::vector<bool>* freeze_mask = nullptr);

/// Fan-in scaled uniform init: weights ~ U(-sqrt(6/fan_in), +sqrt(6/fan_in)),
/// biases zero. Deterministic per seed.
LayeredModel init_model(const LayeredModel& structure, std::uint64_t seed);

}  // namespace phsfl

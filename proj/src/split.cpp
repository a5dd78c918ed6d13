#include "phsfl/split.hpp"

#include <cstring>
#include <stdexcept>

namespace phsfl {

void PartitionSpec::validate(const LayeredModel& model) const {
    const std::size_t L = model.layer_count();
    if (cut_after < 1 || cut_after >= head_start || head_start >= L)
        throw std::invalid_argument("partition (cut_after=" + std::to_string(cut_after) +
                                    ", head_start=" + std::to_string(head_start) +
                                    ") invalid for " + std::to_string(L) + " layers");
    if (head_start != L - 1 || model.layers[head_start].kind != LayerKind::Dense)
        throw std::invalid_argument("head must be the final Dense output layer");
}

PartitionSpec PartitionSpec::auto_for(const LayeredModel& model) {
    PartitionSpec spec;
    for (std::size_t i = 0; i < model.layer_count(); ++i)
        if (model.layers[i].kind == LayerKind::MaxPool2d) {
            spec.cut_after = i + 1;
            break;
        }
    if (spec.cut_after == 0)
        spec.cut_after = 1;  // no pool layer: cut after the first layer
    spec.head_start = model.layer_count() - 1;
    spec.validate(model);
    return spec;
}

namespace {
LayeredModel slice(const LayeredModel& model, std::size_t begin, std::size_t end) {
    LayeredModel part;
    part.input_shape = model.shape_at(begin);
    part.layers.assign(model.layers.begin() + begin, model.layers.begin() + end);
    part.params.assign(model.params.begin() + begin, model.params.begin() + end);
    return part;
}
}  // namespace

SplitParts split(const LayeredModel& model, const PartitionSpec& spec) {
    model.validate();
    spec.validate(model);
    return {slice(model, 0, spec.cut_after), slice(model, spec.cut_after, spec.head_start),
            slice(model, spec.head_start, model.layer_count())};
}

LayeredModel assemble(const SplitParts& parts) {
    LayeredModel m = parts.client;
    for (const auto* piece : {&parts.server_body, &parts.server_head}) {
        m.layers.insert(m.layers.end(), piece->layers.begin(), piece->layers.end());
        m.params.insert(m.params.end(), piece->params.begin(), piece->params.end());
    }
    m.validate();
    return m;
}

namespace {
std::vector<std::uint8_t> tensor_bytes(const Tensor& t) {
    std::vector<std::uint8_t> out(t.size() * sizeof(double));
    std::memcpy(out.data(), t.data.data(), out.size());
    return out;
}
}  // namespace

std::vector<std::uint8_t> CutActivation::to_bytes() const { return tensor_bytes(values); }
std::vector<std::uint8_t> CutGradient::to_bytes() const { return tensor_bytes(values); }

CutActivation client_forward(const LayeredModel& client, const Batch& batch) {
    CutActivation act;
    act.sample_indices = batch.sample_indices;
    act.values = forward(client, LayerRange::full(client), batch.features, &act.tape);
    return act;
}

ServerStepResult server_step(LayeredModel& body, LayeredModel& head, const CutActivation& act,
                             const LabelStore& labels, double eta, bool head_frozen) {
    std::vector<int> batch_labels;
    batch_labels.reserve(act.sample_indices.size());
    for (std::uint32_t idx : act.sample_indices) batch_labels.push_back(labels.label_at(idx));

    Tape body_tape, head_tape;
    const Tensor body_out = forward(body, LayerRange::full(body), act.values, &body_tape);
    const Tensor logits = forward(head, LayerRange::full(head), body_out, &head_tape);

    Tensor dlogits;
    ServerStepResult result;
    result.loss = cross_entropy_grad(logits, batch_labels, dlogits);

    GradientSet head_grads = backward(head, LayerRange::full(head), head_tape, dlogits);
    GradientSet body_grads =
        backward(body, LayerRange::full(body), body_tape, head_grads.input_gradient);

    sgd_step(body, body_grads, eta);
    if (!head_frozen) sgd_step(head, head_grads, eta);

    result.cut_gradient.values = std::move(body_grads.input_gradient);
    return result;
}

void client_step(LayeredModel& client, const CutActivation& act, const CutGradient& grad,
                 double eta) {
    if (grad.values.shape != act.values.shape)
        throw std::invalid_argument("cut gradient " + shape_str(grad.values.shape) +
                                    " not paired with activation " +
                                    shape_str(act.values.shape));
    GradientSet grads = backward(client, LayerRange::full(client), act.tape, grad.values);
    sgd_step(client, grads, eta);
}

}  // namespace phsfl

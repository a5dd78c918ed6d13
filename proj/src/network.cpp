#include "phsfl/network.hpp"

#include <cmath>
#include <stdexcept>

#include "phsfl/kernels.hpp"
#include "phsfl/rng.hpp"

namespace phsfl {

namespace {

void check_range(const LayeredModel& model, LayerRange r) {
    if (r.begin >= r.end || r.end > model.layer_count())
        throw std::invalid_argument("layer range [" + std::to_string(r.begin) + "," +
                                    std::to_string(r.end) + ") invalid for " +
                                    std::to_string(model.layer_count()) + " layers");
}

Shape batched(const Shape& sample, std::size_t n) {
    Shape s{n};
    s.insert(s.end(), sample.begin(), sample.end());
    return s;
}

kernels::ConvDims conv_dims(const LayerSpec& spec, const Shape& in_sample, std::size_t n) {
    return {n, in_sample[0], in_sample[1], in_sample[2], spec.out, spec.kernel};
}

kernels::PoolDims pool_dims(const Shape& in_sample, std::size_t n) {
    return {n, in_sample[0], in_sample[1], in_sample[2]};
}

}  // namespace

bool Tape::matches(const LayeredModel& model, LayerRange r) const {
    if (range.begin != r.begin || range.end != r.end) return false;
    if (inputs.size() != r.length()) return false;
    Shape s = model.shape_at(r.begin);
    for (std::size_t i = 0; i < r.length(); ++i) {
        if (inputs[i].sample_shape() != s) return false;
        s = model.layers[r.begin + i].output_shape(s);
    }
    return true;
}

Tensor forward(const LayeredModel& model, LayerRange range, const Tensor& input, Tape* tape) {
    check_range(model, range);
    if (input.shape.empty() || input.shape[0] == 0)
        throw std::invalid_argument("forward needs a batched, nonempty input");
    const std::size_t n = input.shape[0];

    Shape sample = model.shape_at(range.begin);
    if (input.sample_shape() != sample)
        throw std::invalid_argument("layer " + std::to_string(range.begin) + " expects input " +
                                    shape_str(sample) + ", got " +
                                    shape_str(input.sample_shape()));

    if (tape) {
        tape->range = range;
        tape->inputs.clear();
        tape->pool_arg.assign(range.length(), {});
    }

    Tensor cur = input;
    for (std::size_t li = range.begin; li < range.end; ++li) {
        const LayerSpec& spec = model.layers[li];
        const Shape out_sample = spec.output_shape(sample);
        Tensor out(batched(out_sample, n));
        const double* p = model.params[li].data();

        switch (spec.kind) {
            case LayerKind::Dense:
                kernels::dense_forward(cur.data.data(), p, p + spec.in * spec.out,
                                       out.data.data(), n, spec.in, spec.out);
                break;
            case LayerKind::Conv2d: {
                const auto d = conv_dims(spec, sample, n);
                kernels::conv_forward(cur.data.data(), p, p + spec.param_count() - spec.out,
                                      out.data.data(), d);
                break;
            }
            case LayerKind::MaxPool2d: {
                const auto d = pool_dims(sample, n);
                std::vector<std::uint32_t> arg(shape_numel(out.shape));
                kernels::maxpool_forward(cur.data.data(), out.data.data(), arg.data(), d);
                if (tape) tape->pool_arg[li - range.begin] = std::move(arg);
                break;
            }
            case LayerKind::ReLU:
                kernels::relu_forward(cur.data.data(), out.data.data(), cur.size());
                break;
            case LayerKind::Flatten:
                out.data = cur.data;
                break;
        }

        if (tape) tape->inputs.push_back(std::move(cur));
        cur = std::move(out);
        sample = out_sample;
    }
    if (tape) tape->output_shape = cur.shape;
    return cur;
}

double cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
    if (logits.shape.size() != 2) throw std::invalid_argument("logits must be {N,C}");
    const std::size_t n = logits.shape.at(0);
    const std::size_t c = logits.shape.at(1);
    if (labels.size() != n) throw std::invalid_argument("labels/logits batch mismatch");
    if (!logits.all_finite()) throw std::invalid_argument("non-finite logits");
    double total = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
        if (labels[s] < 0 || static_cast<std::size_t>(labels[s]) >= c)
            throw std::invalid_argument("label " + std::to_string(labels[s]) + " outside [0," +
                                        std::to_string(c) + ")");
        const double* row = logits.data.data() + s * c;
        double mx = row[0];
        for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, row[j]);
        double denom = 0.0;
        for (std::size_t j = 0; j < c; ++j) denom += std::exp(row[j] - mx);
        total += std::log(denom) - (row[labels[s]] - mx);
    }
    return total / static_cast<double>(n);
}

double cross_entropy_grad(const Tensor& logits, const std::vector<int>& labels,
                          Tensor& dlogits) {
    const double loss = cross_entropy(logits, labels);  // validates everything
    const std::size_t n = logits.shape[0];
    const std::size_t c = logits.shape[1];
    dlogits = Tensor(logits.shape);
    for (std::size_t s = 0; s < n; ++s) {
        const double* row = logits.data.data() + s * c;
        double* grow = dlogits.data.data() + s * c;
        double mx = row[0];
        for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, row[j]);
        double denom = 0.0;
        for (std::size_t j = 0; j < c; ++j) denom += std::exp(row[j] - mx);
        for (std::size_t j = 0; j < c; ++j)
            grow[j] = std::exp(row[j] - mx) / denom / static_cast<double>(n);
        grow[labels[s]] -= 1.0 / static_cast<double>(n);
    }
    return loss;
}

GradientSet backward(const LayeredModel& model, LayerRange range, const Tape& tape,
                     const Tensor& upstream) {
    check_range(model, range);
    if (!tape.matches(model, range))
        throw std::invalid_argument("tape does not match model range [" +
                                    std::to_string(range.begin) + "," +
                                    std::to_string(range.end) + ")");
    if (upstream.shape != tape.output_shape)
        throw std::invalid_argument("upstream gradient shape " + shape_str(upstream.shape) +
                                    " does not match forward output " +
                                    shape_str(tape.output_shape));

    const std::size_t n = upstream.shape[0];
    GradientSet grads;
    grads.blocks.resize(model.layer_count());

    Tensor up = upstream;
    for (std::size_t i = range.length(); i-- > 0;) {
        const std::size_t li = range.begin + i;
        const LayerSpec& spec = model.layers[li];
        const Tensor& in = tape.inputs[i];
        const Shape in_sample = in.sample_shape();
        Tensor din(in.shape);
        const double* p = model.params[li].data();

        switch (spec.kind) {
            case LayerKind::Dense: {
                auto& blk = grads.blocks[li];
                blk.assign(spec.param_count(), 0.0);
                kernels::dense_backward_params(in.data.data(), up.data.data(), blk.data(),
                                               blk.data() + spec.in * spec.out, n, spec.in,
                                               spec.out);
                kernels::dense_backward_input(up.data.data(), p, din.data.data(), n, spec.in,
                                              spec.out);
                break;
            }
            case LayerKind::Conv2d: {
                const auto d = conv_dims(spec, in_sample, n);
                auto& blk = grads.blocks[li];
                blk.assign(spec.param_count(), 0.0);
                kernels::conv_backward_params(in.data.data(), up.data.data(), blk.data(),
                                              blk.data() + spec.param_count() - spec.out, d);
                kernels::conv_backward_input(up.data.data(), p, din.data.data(), d);
                break;
            }
            case LayerKind::MaxPool2d: {
                const auto d = pool_dims(in_sample, n);
                kernels::maxpool_backward(up.data.data(), tape.pool_arg[i].data(),
                                          din.data.data(), d);
                break;
            }
            case LayerKind::ReLU:
                kernels::relu_backward(in.data.data(), up.data.data(), din.data.data(),
                                       in.size());
                break;
            case LayerKind::Flatten:
                din.data = up.data;
                break;
        }
        up = std::move(din);
    }
    grads.input_gradient = std::move(up);
    return grads;
}

void sgd_step(LayeredModel& model, const GradientSet& grads, double eta,
              const std::vector<bool>* freeze_mask) {
    if (!grads.congruent_with(model))
        throw std::invalid_argument("gradient blocks not congruent with model");
    if (freeze_mask && freeze_mask->size() != model.layer_count())
        throw std::invalid_argument("freeze mask length mismatch");
    for (std::size_t li = 0; li < model.layer_count(); ++li) {
        const auto& g = grads.blocks[li];
        if (g.empty()) continue;
        for (double v : g)
            if (!std::isfinite(v))
                throw std::invalid_argument("non-finite gradient in layer " + std::to_string(li));
        if (eta == 0.0) continue;  // keep blocks bit-identical
        if (freeze_mask && (*freeze_mask)[li]) continue;
        auto& blk = model.params[li];
        for (std::size_t j = 0; j < blk.size(); ++j) blk[j] -= eta * g[j];
    }
}

LayeredModel init_model(const LayeredModel& structure, std::uint64_t seed) {
    structure.validate();
    LayeredModel m = structure;
    Rng rng = make_rng(seed, 0x696e6974ULL);  // init stream
    for (std::size_t li = 0; li < m.layer_count(); ++li) {
        const LayerSpec& spec = m.layers[li];
        if (!spec.has_params()) continue;
        const std::size_t fan_in =
            spec.kind == LayerKind::Dense ? spec.in : spec.in * spec.kernel * spec.kernel;
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
        std::uniform_real_distribution<double> dist(-bound, bound);
        auto& blk = m.params[li];
        const std::size_t weights = blk.size() - spec.out;
        for (std::size_t j = 0; j < weights; ++j) blk[j] = dist(rng);
        for (std::size_t j = weights; j < blk.size(); ++j) blk[j] = 0.0;
    }
    return m;
}

}  // namespace phsfl

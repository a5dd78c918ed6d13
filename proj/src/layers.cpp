#include "phsfl/layers.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_set>

namespace phsfl {

LayerSpec LayerSpec::dense(std::size_t in_features, std::size_t out_features) {
    if (in_features == 0 || out_features == 0)
        throw std::invalid_argument("dense layer needs nonzero feature counts");
    return {LayerKind::Dense, in_features, out_features, 0};
}

LayerSpec LayerSpec::conv2d(std::size_t in_channels, std::size_t out_channels,
                            std::size_t kernel) {
    if (in_channels == 0 || out_channels == 0 || kernel == 0)
        throw std::invalid_argument("conv layer needs nonzero channels and kernel");
    return {LayerKind::Conv2d, in_channels, out_channels, kernel};
}

LayerSpec LayerSpec::maxpool2d() { return {LayerKind::MaxPool2d, 0, 0, 0}; }
LayerSpec LayerSpec::relu() { return {LayerKind::ReLU, 0, 0, 0}; }
LayerSpec LayerSpec::flatten() { return {LayerKind::Flatten, 0, 0, 0}; }

std::size_t LayerSpec::param_count() const {
    switch (kind) {
        case LayerKind::Dense:
            return in * out + out;
        case LayerKind::Conv2d:
            return out * in * kernel * kernel + out;
        default:
            return 0;
    }
}

Shape LayerSpec::output_shape(const Shape& input) const {
    switch (kind) {
        case LayerKind::Dense:
            if (input.size() != 1 || input[0] != in)
                throw std::invalid_argument("dense(" + std::to_string(in) + "," +
                                            std::to_string(out) + ") cannot take input " +
                                            shape_str(input));
            return {out};
        case LayerKind::Conv2d: {
            if (input.size() != 3 || input[0] != in)
                throw std::invalid_argument("conv2d expects {" + std::to_string(in) +
                                            ",h,w}, got " + shape_str(input));
            if (input[1] < kernel || input[2] < kernel)
                throw std::invalid_argument("conv2d kernel " + std::to_string(kernel) +
                                            " larger than input " + shape_str(input));
            return {out, input[1] - kernel + 1, input[2] - kernel + 1};
        }
        case LayerKind::MaxPool2d:
            if (input.size() != 3 || input[1] < 2 || input[2] < 2)
                throw std::invalid_argument("maxpool2d needs {c,h>=2,w>=2}, got " +
                                            shape_str(input));
            return {input[0], input[1] / 2, input[2] / 2};
        case LayerKind::ReLU:
            return input;
        case LayerKind::Flatten:
            return {shape_numel(input)};
    }
    throw std::logic_error("unreachable layer kind");
}

std::string LayerSpec::name() const {
    switch (kind) {
        case LayerKind::Dense:
            return "Dense(" + std::to_string(in) + "," + std::to_string(out) + ")";
        case LayerKind::Conv2d:
            return "Conv2d(" + std::to_string(in) + "," + std::to_string(out) + ",k" +
                   std::to_string(kernel) + ")";
        case LayerKind::MaxPool2d:
            return "MaxPool2d";
        case LayerKind::ReLU:
            return "ReLU";
        case LayerKind::Flatten:
            return "Flatten";
    }
    return "?";
}

std::size_t LayeredModel::total_params() const {
    std::size_t z = 0;
    for (const auto& spec : layers) z += spec.param_count();
    return z;
}

Shape LayeredModel::shape_at(std::size_t boundary) const {
    if (boundary > layers.size())
        throw std::out_of_range("layer boundary " + std::to_string(boundary) + " beyond model");
    Shape s = input_shape;
    for (std::size_t i = 0; i < boundary; ++i) s = layers[i].output_shape(s);
    return s;
}

void LayeredModel::validate() const {
    if (params.size() != layers.size())
        throw std::invalid_argument("model has " + std::to_string(layers.size()) +
                                    " layers but " + std::to_string(params.size()) +
                                    " parameter blocks");
    Shape s = input_shape;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        s = layers[i].output_shape(s);  // throws with shape details
        if (params[i].size() != layers[i].param_count())
            throw std::invalid_argument("layer " + std::to_string(i) + " (" + layers[i].name() +
                                        ") expects " + std::to_string(layers[i].param_count()) +
                                        " params, block holds " +
                                        std::to_string(params[i].size()));
    }
}

bool LayeredModel::same_structure(const LayeredModel& other) const {
    return input_shape == other.input_shape && layers == other.layers;
}

bool LayeredModel::bit_equal(const LayeredModel& other) const {
    return same_structure(other) && params == other.params;
}

void Batch::validate(std::size_t num_classes) const {
    const std::size_t n = sample_indices.size();
    if (labels.size() != n || features.shape.empty() || features.shape[0] != n)
        throw std::invalid_argument("batch fields disagree on sample count");
    for (int lb : labels)
        if (lb < 0 || static_cast<std::size_t>(lb) >= num_classes)
            throw std::invalid_argument("label " + std::to_string(lb) + " outside [0," +
                                        std::to_string(num_classes) + ")");
    std::unordered_set<std::uint32_t> seen(sample_indices.begin(), sample_indices.end());
    if (seen.size() != n) throw std::invalid_argument("duplicate sample index in batch");
}

bool GradientSet::congruent_with(const LayeredModel& model) const {
    if (blocks.size() != model.params.size()) return false;
    for (std::size_t i = 0; i < blocks.size(); ++i)
        if (!blocks[i].empty() && blocks[i].size() != model.params[i].size()) return false;
    return true;
}

namespace {
LayeredModel with_zero_params(Shape input, std::vector<LayerSpec> layers) {
    LayeredModel m;
    m.input_shape = std::move(input);
    m.layers = std::move(layers);
    m.params.resize(m.layers.size());
    for (std::size_t i = 0; i < m.layers.size(); ++i)
        m.params[i].assign(m.layers[i].param_count(), 0.0);
    m.validate();
    return m;
}
}  // namespace

LayeredModel paper_cnn(std::size_t in_channels, std::size_t num_classes) {
    // 32 -> 28 -> 14 -> 10 -> 5 -> 2 spatial; 128*2*2 = 512 into the FC stack
    return with_zero_params({in_channels, 32, 32},
                            {LayerSpec::conv2d(in_channels, 64, 5), LayerSpec::relu(),
                             LayerSpec::maxpool2d(), LayerSpec::conv2d(64, 128, 5),
                             LayerSpec::relu(), LayerSpec::maxpool2d(), LayerSpec::maxpool2d(),
                             LayerSpec::flatten(), LayerSpec::dense(512, 256), LayerSpec::relu(),
                             LayerSpec::dense(256, num_classes)});
}

LayeredModel paper_cnn_8x8(std::size_t in_channels, std::size_t num_classes) {
    // 8 -> 6 -> 3 -> 2 -> 1 spatial with the full-scale channel widths
    return with_zero_params({in_channels, 8, 8},
                            {LayerSpec::conv2d(in_channels, 64, 3), LayerSpec::relu(),
                             LayerSpec::maxpool2d(), LayerSpec::conv2d(64, 128, 2),
                             LayerSpec::relu(), LayerSpec::maxpool2d(), LayerSpec::flatten(),
                             LayerSpec::dense(128, 256), LayerSpec::relu(),
                             LayerSpec::dense(256, num_classes)});
}

LayeredModel desk_cnn(std::size_t in_channels, std::size_t num_classes) {
    return with_zero_params({in_channels, 8, 8},
                            {LayerSpec::conv2d(in_channels, 16, 3), LayerSpec::relu(),
                             LayerSpec::maxpool2d(), LayerSpec::conv2d(16, 32, 2),
                             LayerSpec::relu(), LayerSpec::maxpool2d(), LayerSpec::flatten(),
                             LayerSpec::dense(32, 64), LayerSpec::relu(),
                             LayerSpec::dense(64, num_classes)});
}

LayeredModel linear_model(const Shape& sample_shape, std::size_t num_classes) {
    const std::size_t dim = shape_numel(sample_shape);
    return with_zero_params(sample_shape,
                            {LayerSpec::flatten(), LayerSpec::dense(dim, num_classes)});
}

}  // namespace phsfl

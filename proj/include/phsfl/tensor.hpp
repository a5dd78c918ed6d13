#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace phsfl {

/// Dimensions of a tensor or of a single sample, outermost first.
using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);
bool shape_eq(const Shape& a, const Shape& b);

/// Dense row-major tensor of 64-bit floats. Batched activations put the
/// batch dimension first, e.g. {N, C, H, W} or {N, F}.
struct Tensor {
    Shape shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(Shape s);
    Tensor(Shape s, std::vector<double> values);

    std::size_t size() const { return data.size(); }
    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }

    /// Shape with the leading (batch) dimension dropped.
    Shape sample_shape() const;

    bool all_finite() const;
};

}  // namespace phsfl

#include "phsfl/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace phsfl {

std::size_t shape_numel(const Shape& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return n;
}

std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
    os << "]";
    return os.str();
}

bool shape_eq(const Shape& a, const Shape& b) { return a == b; }

Tensor::Tensor(Shape s) : shape(std::move(s)), data(shape_numel(shape), 0.0) {}

Tensor::Tensor(Shape s, std::vector<double> values) : shape(std::move(s)), data(std::move(values)) {
    if (data.size() != shape_numel(shape)) {
        throw std::invalid_argument("tensor data size " + std::to_string(data.size()) +
                                    " does not match shape " + shape_str(shape));
    }
}

Shape Tensor::sample_shape() const {
    if (shape.empty()) return {};
    return Shape(shape.begin() + 1, shape.end());
}

bool Tensor::all_finite() const {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace phsfl

#include "mvmae/tensor.hpp"

#include <sstream>

#include "mvmae/errors.hpp"

namespace mvmae {

std::size_t numel(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

std::string shape_str(const Shape& shape) {
    std::ostringstream out;
    out << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out << 'x';
        out << shape[i];
    }
    out << ']';
    return out.str();
}

Tensor::Tensor(Shape s, double fill) : shape(std::move(s)), data(numel(shape), fill) {}

Tensor::Tensor(Shape s, std::vector<double> values) : shape(std::move(s)), data(std::move(values)) {
    if (data.size() != numel(shape)) {
        throw ShapeError("tensor of shape " + shape_str(shape) + " given " +
                         std::to_string(data.size()) + " values");
    }
}

}  // namespace mvmae

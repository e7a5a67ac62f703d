#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace mvmae {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

// Dense row-major value tensor. Storage is always 64-bit.
struct Tensor {
    Shape shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(Shape s, double fill = 0.0);
    Tensor(Shape s, std::vector<double> values);

    std::size_t size() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }
    std::size_t dim(std::size_t i) const { return shape.at(i); }

    // 2-D accessors; callers guarantee rank 2.
    double& at(std::size_t r, std::size_t c) { return data[r * shape[1] + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * shape[1] + c]; }

    std::span<const double> row(std::size_t r) const {
        return {data.data() + r * shape[1], shape[1]};
    }

    bool operator==(const Tensor&) const = default;
};

}  // namespace mvmae

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mvmae/autodiff/var.hpp"

// Differentiable primitives. Binary elementwise ops broadcast NumPy-style
// (right-aligned, extent 1 stretches). Row-wise ops (softmax, log_softmax,
// layer_norm) act on the last axis. Shape violations throw ShapeError naming
// the offending shapes.
namespace mvmae::ad {

Shape broadcast_shape(const Shape& a, const Shape& b);

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }
inline Var operator/(const Var& a, const Var& b) { return div(a, b); }

Var scale(const Var& x, double c);
Var add_scalar(const Var& x, double c);
Var neg(const Var& x);

Var exp(const Var& x);
Var log(const Var& x);
Var square(const Var& x);
Var gelu(const Var& x);  // exact erf form
Var sigmoid(const Var& x);
Var softplus(const Var& x);

Var matmul(const Var& a, const Var& b);  // 2-D only
Var transpose(const Var& x);             // 2-D swap
Var transpose(const Var& x, std::size_t dim0, std::size_t dim1);
Var reshape(const Var& x, Shape shape);
Var broadcast_to(const Var& x, const Shape& shape);

Var sum(const Var& x);
Var sum(const Var& x, std::size_t axis, bool keepdim = false);
Var mean(const Var& x);
Var mean(const Var& x, std::size_t axis, bool keepdim = false);

Var softmax(const Var& x);
Var log_softmax(const Var& x);
Var layer_norm(const Var& x, double eps = 1e-6);  // no affine

// Rows of a 2-D table picked by index; repeated indices accumulate in
// backward. Serves both embedding lookup and selection by an index set.
Var gather_rows(const Var& table, std::span<const std::size_t> rows);
inline Var select_rows(const Var& x, std::span<const std::size_t> rows) {
    return gather_rows(x, rows);
}

Var concat(std::span<const Var> parts, std::size_t axis);
Var slice(const Var& x, std::size_t axis, std::size_t begin, std::size_t end);

}  // namespace mvmae::ad

#include "mvmae/autodiff/ops.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <numbers>
#include <string>

#include "mvmae/errors.hpp"
#include "mvmae/kernels.hpp"

namespace mvmae::ad {

namespace {

using IndexMap = std::shared_ptr<const std::vector<std::size_t>>;

[[noreturn]] void shape_fail(const char* op, const Shape& a, const Shape& b) {
    throw ShapeError(std::string(op) + ": incompatible shapes " + shape_str(a) + " and " +
                     shape_str(b));
}

std::vector<std::size_t> strides_of(const Shape& s) {
    std::vector<std::size_t> st(s.size(), 1);
    for (std::size_t i = s.size(); i > 1; --i) st[i - 2] = st[i - 1] * s[i - 1];
    return st;
}

// For every element of `out`, the linear offset of the element of `in` it
// reads under right-aligned broadcasting.
IndexMap build_broadcast_map(const Shape& out, const Shape& in) {
    const std::size_t n = numel(out);
    auto map = std::make_shared<std::vector<std::size_t>>(n);
    const std::size_t r = out.size();
    const std::size_t lead = r - in.size();
    std::vector<std::size_t> in_strides(r, 0);
    const auto st = strides_of(in);
    for (std::size_t d = 0; d < in.size(); ++d) {
        in_strides[lead + d] = in[d] == 1 ? 0 : st[d];
    }
    std::vector<std::size_t> coord(r, 0);
    std::size_t off = 0;
    for (std::size_t i = 0; i < n; ++i) {
        (*map)[i] = off;
        for (std::size_t d = r; d-- > 0;) {
            ++coord[d];
            off += in_strides[d];
            if (coord[d] < out[d]) break;
            off -= in_strides[d] * coord[d];
            coord[d] = 0;
        }
    }
    return map;
}

// Maps depend only on the shape pair and recur on every step.
IndexMap broadcast_map(const Shape& out, const Shape& in) {
    thread_local std::map<std::pair<Shape, Shape>, IndexMap> cache;
    auto key = std::make_pair(out, in);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    IndexMap map = build_broadcast_map(out, in);
    cache.emplace(std::move(key), map);
    return map;
}

template <typename Fwd, typename Da, typename Db>
Var binary(const Var& a, const Var& b, Fwd fwd, Da da, Db db) {
    const Shape out_shape = a.shape() == b.shape() ? a.shape() : broadcast_shape(a.shape(), b.shape());
    const std::size_t n = numel(out_shape);
    const auto av = a.value();
    const auto bv = b.value();
    std::vector<double> out(n);
    if (a.shape() == b.shape()) {
        for (std::size_t i = 0; i < n; ++i) out[i] = fwd(av[i], bv[i]);
        return make_result(out_shape, std::move(out), {a, b}, [n, da, db](Node& self) {
            Node& A = *self.parents[0];
            Node& B = *self.parents[1];
            const double* g = self.grad.data();
            if (A.requires_grad) {
                double* ga = A.grad_buffer();
                for (std::size_t i = 0; i < n; ++i) ga[i] += da(A.value[i], B.value[i], g[i]);
            }
            if (B.requires_grad) {
                double* gb = B.grad_buffer();
                for (std::size_t i = 0; i < n; ++i) gb[i] += db(A.value[i], B.value[i], g[i]);
            }
        });
    }
    IndexMap ia = broadcast_map(out_shape, a.shape());
    IndexMap ib = broadcast_map(out_shape, b.shape());
    for (std::size_t i = 0; i < n; ++i) out[i] = fwd(av[(*ia)[i]], bv[(*ib)[i]]);
    return make_result(out_shape, std::move(out), {a, b}, [n, ia, ib, da, db](Node& self) {
        Node& A = *self.parents[0];
        Node& B = *self.parents[1];
        const double* g = self.grad.data();
        if (A.requires_grad) {
            double* ga = A.grad_buffer();
            for (std::size_t i = 0; i < n; ++i) {
                ga[(*ia)[i]] += da(A.value[(*ia)[i]], B.value[(*ib)[i]], g[i]);
            }
        }
        if (B.requires_grad) {
            double* gb = B.grad_buffer();
            for (std::size_t i = 0; i < n; ++i) {
                gb[(*ib)[i]] += db(A.value[(*ia)[i]], B.value[(*ib)[i]], g[i]);
            }
        }
    });
}

// y = f(x); dx += g * dfdx(x, y).
template <typename Fwd, typename Deriv>
Var unary(const Var& x, Fwd fwd, Deriv deriv) {
    const auto xv = x.value();
    std::vector<double> out(xv.size());
    for (std::size_t i = 0; i < xv.size(); ++i) out[i] = fwd(xv[i]);
    return make_result(x.shape(), std::move(out), {x}, [deriv](Node& self) {
        Node& X = *self.parents[0];
        double* gx = X.grad_buffer();
        const std::size_t n = self.value.size();
        for (std::size_t i = 0; i < n; ++i) gx[i] += self.grad[i] * deriv(X.value[i], self.value[i]);
    });
}

void require_rank(const char* op, const Var& x, std::size_t rank) {
    if (x.shape().size() != rank) {
        throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                         shape_str(x.shape()));
    }
}

struct AxisSplit {
    std::size_t outer = 1, len = 1, inner = 1;
};

AxisSplit split_axis(const Shape& s, std::size_t axis) {
    AxisSplit r;
    for (std::size_t d = 0; d < axis; ++d) r.outer *= s[d];
    r.len = s[axis];
    for (std::size_t d = axis + 1; d < s.size(); ++d) r.inner *= s[d];
    return r;
}

std::size_t last_dim(const char* op, const Var& x) {
    if (x.shape().empty() || x.shape().back() == 0) {
        throw ShapeError(std::string(op) + ": needs a nonempty last axis, got " +
                         shape_str(x.shape()));
    }
    return x.shape().back();
}

}  // namespace

Shape broadcast_shape(const Shape& a, const Shape& b) {
    const std::size_t r = std::max(a.size(), b.size());
    Shape out(r);
    for (std::size_t i = 0; i < r; ++i) {
        const std::size_t da = i < r - a.size() ? 1 : a[i - (r - a.size())];
        const std::size_t db = i < r - b.size() ? 1 : b[i - (r - b.size())];
        if (da != db && da != 1 && db != 1) shape_fail("broadcast", a, b);
        out[i] = da == 1 ? db : da;
    }
    return out;
}

Var add(const Var& a, const Var& b) {
    return binary(
        a, b, [](double x, double y) { return x + y; },
        [](double, double, double g) { return g; }, [](double, double, double g) { return g; });
}

Var sub(const Var& a, const Var& b) {
    return binary(
        a, b, [](double x, double y) { return x - y; },
        [](double, double, double g) { return g; }, [](double, double, double g) { return -g; });
}

Var mul(const Var& a, const Var& b) {
    return binary(
        a, b, [](double x, double y) { return x * y; },
        [](double, double y, double g) { return g * y; },
        [](double x, double, double g) { return g * x; });
}

Var div(const Var& a, const Var& b) {
    return binary(
        a, b, [](double x, double y) { return x / y; },
        [](double, double y, double g) { return g / y; },
        [](double x, double y, double g) { return -g * x / (y * y); });
}

Var scale(const Var& x, double c) {
    return unary(x, [c](double v) { return c * v; }, [c](double, double) { return c; });
}

Var add_scalar(const Var& x, double c) {
    return unary(x, [c](double v) { return v + c; }, [](double, double) { return 1.0; });
}

Var neg(const Var& x) { return scale(x, -1.0); }

Var exp(const Var& x) {
    return unary(x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Var log(const Var& x) {
    return unary(x, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Var square(const Var& x) {
    return unary(x, [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}

Var gelu(const Var& x) {
    constexpr double inv_sqrt2 = 0.70710678118654752440;
    constexpr double inv_sqrt2pi = 0.39894228040143267794;
    return unary(
        x, [](double v) { return 0.5 * v * (1.0 + std::erf(v * inv_sqrt2)); },
        [](double v, double) {
            const double cdf = 0.5 * (1.0 + std::erf(v * inv_sqrt2));
            return cdf + v * inv_sqrt2pi * std::exp(-0.5 * v * v);
        });
}

Var sigmoid(const Var& x) {
    return unary(
        x,
        [](double v) {
            if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
            const double e = std::exp(v);
            return e / (1.0 + e);
        },
        [](double, double y) { return y * (1.0 - y); });
}

Var softplus(const Var& x) {
    return unary(
        x, [](double v) { return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v))); },
        [](double v, double) {
            if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
            const double e = std::exp(v);
            return e / (1.0 + e);
        });
}

Var matmul(const Var& a, const Var& b) {
    require_rank("matmul", a, 2);
    require_rank("matmul", b, 2);
    const std::size_t n = a.dim(0), k = a.dim(1), m = b.dim(1);
    if (b.dim(0) != k) shape_fail("matmul", a.shape(), b.shape());
    std::vector<double> out(n * m);
    kernels::matmul(a.value().data(), b.value().data(), out.data(), n, k, m, false);
    return make_result({n, m}, std::move(out), {a, b}, [n, k, m](Node& self) {
        Node& A = *self.parents[0];
        Node& B = *self.parents[1];
        const double* g = self.grad.data();
        if (A.requires_grad) kernels::matmul_nt(g, B.value.data(), A.grad_buffer(), n, m, k, true);
        if (B.requires_grad) kernels::matmul_tn(A.value.data(), g, B.grad_buffer(), n, k, m, true);
    });
}

Var transpose(const Var& x) {
    require_rank("transpose", x, 2);
    return transpose(x, 0, 1);
}

Var transpose(const Var& x, std::size_t dim0, std::size_t dim1) {
    const Shape& in = x.shape();
    if (dim0 >= in.size() || dim1 >= in.size()) {
        throw ShapeError("transpose: axes out of range for " + shape_str(in));
    }
    Shape out_shape = in;
    std::swap(out_shape[dim0], out_shape[dim1]);
    // Reading the input through swapped strides yields the output in order.
    auto in_strides = strides_of(in);
    std::swap(in_strides[dim0], in_strides[dim1]);
    const std::size_t n = numel(in);
    auto map = std::make_shared<std::vector<std::size_t>>(n);
    std::vector<std::size_t> coord(in.size(), 0);
    std::size_t off = 0;
    for (std::size_t i = 0; i < n; ++i) {
        (*map)[i] = off;
        for (std::size_t d = out_shape.size(); d-- > 0;) {
            ++coord[d];
            off += in_strides[d];
            if (coord[d] < out_shape[d]) break;
            off -= in_strides[d] * coord[d];
            coord[d] = 0;
        }
    }
    const auto xv = x.value();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = xv[(*map)[i]];
    return make_result(std::move(out_shape), std::move(out), {x}, [map](Node& self) {
        double* gx = self.parents[0]->grad_buffer();
        for (std::size_t i = 0; i < map->size(); ++i) gx[(*map)[i]] += self.grad[i];
    });
}

Var reshape(const Var& x, Shape shape) {
    if (numel(shape) != x.size()) shape_fail("reshape", x.shape(), shape);
    std::vector<double> out(x.value().begin(), x.value().end());
    return make_result(std::move(shape), std::move(out), {x}, [](Node& self) {
        double* gx = self.parents[0]->grad_buffer();
        for (std::size_t i = 0; i < self.grad.size(); ++i) gx[i] += self.grad[i];
    });
}

Var broadcast_to(const Var& x, const Shape& shape) {
    if (broadcast_shape(x.shape(), shape) != shape) shape_fail("broadcast_to", x.shape(), shape);
    IndexMap map = broadcast_map(shape, x.shape());
    const auto xv = x.value();
    std::vector<double> out(map->size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[(*map)[i]];
    return make_result(shape, std::move(out), {x}, [map](Node& self) {
        double* gx = self.parents[0]->grad_buffer();
        for (std::size_t i = 0; i < map->size(); ++i) gx[(*map)[i]] += self.grad[i];
    });
}

Var sum(const Var& x) {
    double s = 0.0;
    for (double v : x.value()) s += v;
    return make_result({1}, {s}, {x}, [](Node& self) {
        Node& X = *self.parents[0];
        double* gx = X.grad_buffer();
        const double g = self.grad[0];
        for (std::size_t i = 0; i < X.value.size(); ++i) gx[i] += g;
    });
}

Var sum(const Var& x, std::size_t axis, bool keepdim) {
    if (axis >= x.shape().size()) throw ShapeError("sum: axis out of range for " + shape_str(x.shape()));
    const AxisSplit s = split_axis(x.shape(), axis);
    Shape out_shape = x.shape();
    if (keepdim) {
        out_shape[axis] = 1;
    } else {
        out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
        if (out_shape.empty()) out_shape = {1};
    }
    const auto xv = x.value();
    std::vector<double> out(s.outer * s.inner, 0.0);
    for (std::size_t o = 0; o < s.outer; ++o) {
        for (std::size_t l = 0; l < s.len; ++l) {
            const double* src = xv.data() + (o * s.len + l) * s.inner;
            double* dst = out.data() + o * s.inner;
            for (std::size_t i = 0; i < s.inner; ++i) dst[i] += src[i];
        }
    }
    return make_result(std::move(out_shape), std::move(out), {x}, [s](Node& self) {
        double* gx = self.parents[0]->grad_buffer();
        for (std::size_t o = 0; o < s.outer; ++o) {
            const double* g = self.grad.data() + o * s.inner;
            for (std::size_t l = 0; l < s.len; ++l) {
                double* dst = gx + (o * s.len + l) * s.inner;
                for (std::size_t i = 0; i < s.inner; ++i) dst[i] += g[i];
            }
        }
    });
}

Var mean(const Var& x) { return scale(sum(x), 1.0 / static_cast<double>(x.size())); }

Var mean(const Var& x, std::size_t axis, bool keepdim) {
    if (axis >= x.shape().size()) throw ShapeError("mean: axis out of range for " + shape_str(x.shape()));
    return scale(sum(x, axis, keepdim), 1.0 / static_cast<double>(x.shape()[axis]));
}

Var softmax(const Var& x) {
    const std::size_t n = last_dim("softmax", x);
    const std::size_t rows = x.size() / n;
    const auto xv = x.value();
    std::vector<double> out(x.size());
    for (std::size_t r = 0; r < rows; ++r) {
        const double* in = xv.data() + r * n;
        double* y = out.data() + r * n;
        const double mx = *std::max_element(in, in + n);
        double z = 0.0;
        for (std::size_t j = 0; j < n; ++j) z += (y[j] = std::exp(in[j] - mx));
        for (std::size_t j = 0; j < n; ++j) y[j] /= z;
    }
    return make_result(x.shape(), std::move(out), {x}, [n, rows](Node& self) {
        double* gx = self.parents[0]->grad_buffer();
        for (std::size_t r = 0; r < rows; ++r) {
            const double* y = self.value.data() + r * n;
            const double* g = self.grad.data() + r * n;
            double dot = 0.0;
            for (std::size_t j = 0; j < n; ++j) dot += g[j] * y[j];
            for (std::size_t j = 0; j < n; ++j) gx[r * n + j] += y[j] * (g[j] - dot);
        }
    });
}

Var log_softmax(const Var& x) {
    const std::size_t n = last_dim("log_softmax", x);
    const std::size_t rows = x.size() / n;
    const auto xv = x.value();
    std::vector<double> out(x.size());
    for (std::size_t r = 0; r < rows; ++r) {
        const double* in = xv.data() + r * n;
        const double mx = *std::max_element(in, in + n);
        double z = 0.0;
        for (std::size_t j = 0; j < n; ++j) z += std::exp(in[j] - mx);
        const double lse = mx + std::log(z);
        for (std::size_t j = 0; j < n; ++j) out[r * n + j] = in[j] - lse;
    }
    return make_result(x.shape(), std::move(out), {x}, [n, rows](Node& self) {
        double* gx = self.parents[0]->grad_buffer();
        for (std::size_t r = 0; r < rows; ++r) {
            const double* y = self.value.data() + r * n;
            const double* g = self.grad.data() + r * n;
            double gs = 0.0;
            for (std::size_t j = 0; j < n; ++j) gs += g[j];
            for (std::size_t j = 0; j < n; ++j) gx[r * n + j] += g[j] - std::exp(y[j]) * gs;
        }
    });
}

Var layer_norm(const Var& x, double eps) {
    const std::size_t n = last_dim("layer_norm", x);
    const std::size_t rows = x.size() / n;
    const auto xv = x.value();
    std::vector<double> out(x.size());
    auto inv_std = std::make_shared<std::vector<double>>(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* in = xv.data() + r * n;
        double mu = 0.0;
        for (std::size_t j = 0; j < n; ++j) mu += in[j];
        mu /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t j = 0; j < n; ++j) var += (in[j] - mu) * (in[j] - mu);
        var /= static_cast<double>(n);
        const double is = 1.0 / std::sqrt(var + eps);
        (*inv_std)[r] = is;
        for (std::size_t j = 0; j < n; ++j) out[r * n + j] = (in[j] - mu) * is;
    }
    return make_result(x.shape(), std::move(out), {x}, [n, rows, inv_std](Node& self) {
        double* gx = self.parents[0]->grad_buffer();
        const double inv_n = 1.0 / static_cast<double>(n);
        for (std::size_t r = 0; r < rows; ++r) {
            const double* y = self.value.data() + r * n;
            const double* g = self.grad.data() + r * n;
            double gm = 0.0, gy = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                gm += g[j];
                gy += g[j] * y[j];
            }
            gm *= inv_n;
            gy *= inv_n;
            const double is = (*inv_std)[r];
            for (std::size_t j = 0; j < n; ++j) gx[r * n + j] += is * (g[j] - gm - y[j] * gy);
        }
    });
}

Var gather_rows(const Var& table, std::span<const std::size_t> rows) {
    require_rank("gather_rows", table, 2);
    const std::size_t v = table.dim(0), d = table.dim(1);
    auto idx = std::make_shared<std::vector<std::size_t>>(rows.begin(), rows.end());
    const auto tv = table.value();
    std::vector<double> out(idx->size() * d);
    for (std::size_t i = 0; i < idx->size(); ++i) {
        const std::size_t r = (*idx)[i];
        if (r >= v) {
            throw ShapeError("gather_rows: index " + std::to_string(r) + " out of range for " +
                             shape_str(table.shape()));
        }
        std::copy_n(tv.data() + r * d, d, out.data() + i * d);
    }
    return make_result({idx->size(), d}, std::move(out), {table}, [idx, d](Node& self) {
        double* gt = self.parents[0]->grad_buffer();
        for (std::size_t i = 0; i < idx->size(); ++i) {
            double* dst = gt + (*idx)[i] * d;
            const double* g = self.grad.data() + i * d;
            for (std::size_t j = 0; j < d; ++j) dst[j] += g[j];
        }
    });
}

Var concat(std::span<const Var> parts, std::size_t axis) {
    if (parts.empty()) throw ShapeError("concat: no operands");
    const Shape& first = parts[0].shape();
    if (axis >= first.size()) throw ShapeError("concat: axis out of range for " + shape_str(first));
    Shape out_shape = first;
    out_shape[axis] = 0;
    for (const Var& p : parts) {
        const Shape& s = p.shape();
        if (s.size() != first.size()) shape_fail("concat", first, s);
        for (std::size_t d = 0; d < s.size(); ++d) {
            if (d != axis && s[d] != first[d]) shape_fail("concat", first, s);
        }
        out_shape[axis] += s[axis];
    }
    const AxisSplit total = split_axis(out_shape, axis);
    auto widths = std::make_shared<std::vector<std::size_t>>();
    for (const Var& p : parts) widths->push_back(p.shape()[axis] * total.inner);
    const std::size_t row = total.len * total.inner;
    std::vector<double> out(numel(out_shape));
    std::size_t col = 0;
    for (std::size_t k = 0; k < parts.size(); ++k) {
        const auto pv = parts[k].value();
        const std::size_t w = (*widths)[k];
        for (std::size_t o = 0; o < total.outer; ++o) {
            std::copy_n(pv.data() + o * w, w, out.data() + o * row + col);
        }
        col += w;
    }
    std::vector<Var> ops(parts.begin(), parts.end());
    const std::size_t outer = total.outer;
    return make_result(std::move(out_shape), std::move(out), std::move(ops),
                       [widths, row, outer](Node& self) {
                           std::size_t c = 0;
                           for (std::size_t k = 0; k < self.parents.size(); ++k) {
                               Node& P = *self.parents[k];
                               const std::size_t w = (*widths)[k];
                               if (P.requires_grad) {
                                   double* gp = P.grad_buffer();
                                   for (std::size_t o = 0; o < outer; ++o) {
                                       const double* g = self.grad.data() + o * row + c;
                                       for (std::size_t j = 0; j < w; ++j) gp[o * w + j] += g[j];
                                   }
                               }
                               c += w;
                           }
                       });
}

Var slice(const Var& x, std::size_t axis, std::size_t begin, std::size_t end) {
    const Shape& in = x.shape();
    if (axis >= in.size() || begin > end || end > in[axis]) {
        throw ShapeError("slice: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") on axis " + std::to_string(axis) + " invalid for " + shape_str(in));
    }
    const AxisSplit s = split_axis(in, axis);
    Shape out_shape = in;
    out_shape[axis] = end - begin;
    const std::size_t w = (end - begin) * s.inner;
    const std::size_t row = s.len * s.inner;
    const std::size_t off = begin * s.inner;
    const auto xv = x.value();
    std::vector<double> out(s.outer * w);
    for (std::size_t o = 0; o < s.outer; ++o) {
        std::copy_n(xv.data() + o * row + off, w, out.data() + o * w);
    }
    const std::size_t outer = s.outer;
    return make_result(std::move(out_shape), std::move(out), {x}, [outer, w, row, off](Node& self) {
        double* gx = self.parents[0]->grad_buffer();
        for (std::size_t o = 0; o < outer; ++o) {
            const double* g = self.grad.data() + o * w;
            double* dst = gx + o * row + off;
            for (std::size_t j = 0; j < w; ++j) dst[j] += g[j];
        }
    });
}

}  // namespace mvmae::ad

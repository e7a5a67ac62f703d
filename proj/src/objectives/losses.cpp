#include "mvmae/objectives/losses.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <nlohmann/json.hpp>

#include "mvmae/autodiff/ops.hpp"
#include "mvmae/errors.hpp"

namespace mvmae::objectives {

using ad::Var;

namespace {

Tensor standardize_rows(const Tensor& x) {
    Tensor out = x;
    const std::size_t n = x.shape[0], d = x.shape[1];
    for (std::size_t r = 0; r < n; ++r) {
        double* row = out.data.data() + r * d;
        double mean = 0.0;
        for (std::size_t c = 0; c < d; ++c) mean += row[c];
        mean /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t c = 0; c < d; ++c) var += (row[c] - mean) * (row[c] - mean);
        var /= static_cast<double>(d);
        const double inv = 1.0 / std::sqrt(var + 1e-6);
        for (std::size_t c = 0; c < d; ++c) row[c] = (row[c] - mean) * inv;
    }
    return out;
}

Var accumulate(const Var& total, const Var& term) { return total.defined() ? ad::add(total, term) : term; }

// sum over `rows` of mean_D (a_t - b_t)^2
Var row_mse_sum(const Var& a, const Var& b, std::span<const std::size_t> rows_a,
                std::span<const std::size_t> rows_b) {
    const Var diff = ad::sub(ad::gather_rows(a, rows_a), ad::gather_rows(b, rows_b));
    return ad::scale(ad::sum(ad::square(diff)), 1.0 / static_cast<double>(a.dim(1)));
}

}  // namespace

Var loss_rec(std::span<const Tensor> originals, std::span<const Var> reconstructions,
             const model::MaskSpec& mask, const RecOptions& opt) {
    if (originals.empty()) throw ValidationError("loss_rec: study has no views");
    if (originals.size() != reconstructions.size()) {
        throw ShapeError("loss_rec: " + std::to_string(originals.size()) + " originals vs " +
                         std::to_string(reconstructions.size()) + " reconstructions");
    }
    if (!(mask.alpha > 0.0)) throw ValidationError("loss_rec: mask ratio must be positive");
    Var total;
    for (std::size_t v = 0; v < originals.size(); ++v) {
        if (originals[v].shape != reconstructions[v].shape()) {
            throw ShapeError("loss_rec: original " + shape_str(originals[v].shape) + " vs reconstruction " +
                             shape_str(reconstructions[v].shape()));
        }
        if (originals[v].shape[0] != mask.total) throw ShapeError("loss_rec: mask does not match token count");
        if (mask.masked.empty()) continue;
        const Tensor target = opt.normalized_target ? standardize_rows(originals[v]) : originals[v];
        const Var pred = ad::gather_rows(reconstructions[v], mask.masked);
        const Var tgt = ad::gather_rows(Var::constant(target), mask.masked);
        Var sq = ad::sum(ad::square(ad::sub(pred, tgt)));
        if (opt.per_token_mean) sq = ad::scale(sq, 1.0 / static_cast<double>(target.shape[1]));
        total = accumulate(total, sq);
    }
    if (!total.defined()) return Var::scalar(0.0);
    return ad::scale(total, 1.0 / (mask.alpha * static_cast<double>(originals.size())));
}

Var loss_align(std::span<const Var> encodings, const model::MaskSpec& mask, bool include_cls) {
    if (encodings.empty()) throw ValidationError("loss_align: no encodings");
    const Shape& s0 = encodings[0].shape();
    for (const auto& z : encodings) {
        if (z.shape() != s0) {
            throw ShapeError("loss_align: encoding " + shape_str(z.shape()) + " vs " + shape_str(s0));
        }
    }
    const std::size_t n = encodings.size();
    if (n == 1) return Var::scalar(0.0);
    std::vector<std::size_t> rows;
    for (std::size_t r = include_cls ? 0 : 1; r < s0[0]; ++r) rows.push_back(r);
    Var total;
    for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t v = 0; v < n; ++v) {
            if (u != v) total = accumulate(total, row_mse_sum(encodings[u], encodings[v], rows, rows));
        }
    }
    const double pairs = static_cast<double>(n * (n - 1));
    return ad::scale(total, 1.0 / ((1.0 - mask.alpha) * pairs));
}

Var loss_align_intersection(std::span<const Var> encodings, std::span<const model::MaskSpec> masks,
                            bool include_cls) {
    if (encodings.empty()) throw ValidationError("loss_align: no encodings");
    if (encodings.size() != masks.size()) throw ShapeError("loss_align: encodings and masks differ in count");
    for (std::size_t i = 0; i < masks.size(); ++i) {
        if (encodings[i].dim(0) != masks[i].visible.size() + 1) {
            throw ShapeError("loss_align: encoding " + shape_str(encodings[i].shape()) +
                             " does not match its mask");
        }
    }
    const std::size_t n = encodings.size();
    if (n == 1) return Var::scalar(0.0);
    Var total;
    for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t v = 0; v < n; ++v) {
            if (u == v) continue;
            std::vector<std::size_t> ru, rv;
            if (include_cls) {
                ru.push_back(0);
                rv.push_back(0);
            }
            const auto& a = masks[u].visible;
            const auto& b = masks[v].visible;
            for (std::size_t i = 0, j = 0; i < a.size() && j < b.size();) {
                if (a[i] < b[j]) {
                    ++i;
                } else if (b[j] < a[i]) {
                    ++j;
                } else {
                    ru.push_back(1 + i++);
                    rv.push_back(1 + j++);
                }
            }
            if (!ru.empty()) total = accumulate(total, row_mse_sum(encodings[u], encodings[v], ru, rv));
        }
    }
    if (!total.defined()) return Var::scalar(0.0);
    const double pairs = static_cast<double>(n * (n - 1));
    return ad::scale(total, 1.0 / ((1.0 - masks[0].alpha) * pairs));
}

double beta_at(const LossWeights& w, std::size_t step) {
    if (w.anneal_steps == 0) return w.beta_target;
    const double frac = std::min(1.0, static_cast<double>(step) / static_cast<double>(w.anneal_steps));
    return w.beta_target * frac;
}

LossBundle loss_total(double l_rec, double l_align, double beta, std::optional<double> l_ce) {
    auto check = [](const char* name, double v) {
        if (!std::isfinite(v)) throw NumericalError(std::string("non-finite ") + name + " (" + std::to_string(v) + ")");
    };
    check("l_rec", l_rec);
    check("l_align", l_align);
    check("beta", beta);
    if (l_ce) check("l_ce", *l_ce);
    LossBundle b;
    b.l_rec = l_rec;
    b.l_align = l_align;
    b.l_ce = l_ce;
    b.beta_used = beta;
    b.total = l_rec + beta * l_align + (l_ce ? *l_ce : 0.0);
    check("total", b.total);
    return b;
}

std::string loss_json_line(std::size_t step, const LossBundle& b) {
    nlohmann::ordered_json j;
    j["step"] = step;
    j["l_rec"] = b.l_rec;
    j["l_align"] = b.l_align;
    j["l_ce"] = b.l_ce ? nlohmann::ordered_json(*b.l_ce) : nlohmann::ordered_json(nullptr);
    j["beta"] = b.beta_used;
    j["total"] = b.total;
    return j.dump();
}

}  // namespace mvmae::objectives

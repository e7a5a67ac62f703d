#include "mvmae/autodiff/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "mvmae/errors.hpp"
#include "mvmae/rng.hpp"

namespace mvmae::ad {

namespace {

double evaluate(const ScalarFn& f, std::span<const Tensor> point) {
    std::vector<Var> leaves;
    leaves.reserve(point.size());
    for (const Tensor& t : point) leaves.push_back(Var::constant(t));
    return f(leaves).item();
}

struct Probe {
    std::size_t input;
    std::size_t index;
};

}  // namespace

GradCheckReport grad_check(const ScalarFn& f, std::span<const Tensor> point,
                           const GradCheckOptions& options) {
    if (!(options.epsilon > 0.0)) throw ValidationError("grad_check: epsilon must be positive");

    std::vector<Var> leaves;
    for (const Tensor& t : point) leaves.push_back(Var::leaf(t, true));
    const Var out = f(leaves);
    if (!std::isfinite(out.item())) throw NumericalError("grad_check: f is not finite at the point");
    out.backward();

    std::vector<Probe> probes;
    Rng rng(options.probe_seed);
    for (std::size_t k = 0; k < point.size(); ++k) {
        std::vector<std::size_t> idx(point[k].size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        if (options.max_probes_per_input != 0 && idx.size() > options.max_probes_per_input) {
            rng.shuffle(std::span<std::size_t>(idx));
            idx.resize(options.max_probes_per_input);
            std::sort(idx.begin(), idx.end());
        }
        for (std::size_t i : idx) probes.push_back({k, i});
    }

    std::vector<double> numeric(probes.size());
    std::vector<char> finite(probes.size(), 1);
    const auto count = static_cast<std::ptrdiff_t>(probes.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t p = 0; p < count; ++p) {
        const Probe pr = probes[static_cast<std::size_t>(p)];
        std::vector<Tensor> local(point.begin(), point.end());
        double& x = local[pr.input].data[pr.index];
        const double x0 = x;
        x = x0 + options.epsilon;
        const double up = evaluate(f, local);
        x = x0 - options.epsilon;
        const double down = evaluate(f, local);
        if (!std::isfinite(up) || !std::isfinite(down)) finite[static_cast<std::size_t>(p)] = 0;
        numeric[static_cast<std::size_t>(p)] = (up - down) / (2.0 * options.epsilon);
    }

    GradCheckReport report;
    report.probes = probes.size();
    double floor = options.floor;
    if (options.roundoff_floor) {
        const double noise = 10.0 * std::numeric_limits<double>::epsilon() * std::abs(out.item()) / options.epsilon;
        floor = std::max(floor, noise / options.tolerance);
    }
    report.floor_used = floor;
    for (std::size_t p = 0; p < probes.size(); ++p) {
        if (!finite[p]) {
            throw NumericalError("grad_check: f not finite at probe of input " +
                                 std::to_string(probes[p].input) + " index " +
                                 std::to_string(probes[p].index));
        }
        const auto g = leaves[probes[p].input].grad();
        const double a = g.empty() ? 0.0 : g[probes[p].index];
        const double n = numeric[p];
        const double abs_err = std::abs(a - n);
        const double rel = abs_err / std::max({std::abs(a), std::abs(n), floor});
        report.max_abs_error = std::max(report.max_abs_error, abs_err);
        if (rel > report.max_rel_error || p == 0) {
            report.max_rel_error = std::max(report.max_rel_error, rel);
            if (rel >= report.max_rel_error) {
                report.worst_input = probes[p].input;
                report.worst_index = probes[p].index;
                report.worst_analytic = a;
                report.worst_numeric = n;
            }
        }
    }
    report.passed = report.max_rel_error <= options.tolerance;
    return report;
}

}  // namespace mvmae::ad

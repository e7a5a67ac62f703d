#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mvmae/autodiff/var.hpp"

namespace mvmae::ad {

struct GradCheckOptions {
    double epsilon = 1e-4;
    double tolerance = 1e-3;
    // Denominator floor of the relative error |a - n| / max(|a|, |n|, floor).
    double floor = 1e-6;
    // Raise the floor to the central-difference roundoff level,
    // 10 * DBL_EPSILON * |f| / (epsilon * tolerance), so that a gradient that
    // is exactly zero is not failed on cancellation noise alone.
    bool roundoff_floor = true;
    // 0 probes every component; otherwise that many components per input,
    // chosen by probe_seed.
    std::size_t max_probes_per_input = 0;
    std::uint64_t probe_seed = 0;
};

struct GradCheckReport {
    double max_rel_error = 0.0;
    double max_abs_error = 0.0;
    std::size_t probes = 0;
    std::size_t worst_input = 0;
    std::size_t worst_index = 0;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
    double floor_used = 0.0;
    bool passed = false;
};

// f maps leaf Vars (one per entry of `point`, in order) to a single-element
// Var. It is called once for the reverse-mode gradient and twice per probed
// component for central differences; it must be pure, because probes are
// evaluated concurrently on private copies of the point.
using ScalarFn = std::function<Var(std::span<const Var>)>;

GradCheckReport grad_check(const ScalarFn& f, std::span<const Tensor> point,
                           const GradCheckOptions& options = {});

}  // namespace mvmae::ad

#include "mvmae/eval/experiments.hpp"

#include <cmath>

#include "mvmae/errors.hpp"
#include "mvmae/eval/metrics.hpp"
#include "mvmae/train/trainer.hpp"

namespace mvmae::eval {

std::vector<LabelEfficiencyRow> label_efficiency(std::span<const data::Study> train,
                                                 std::span<const data::Study> val,
                                                 std::span<const data::Study> test, const ExperimentConfig& cfg,
                                                 const train::Checkpoint* encoder,
                                                 std::span<const std::size_t> sizes) {
    if (sizes.empty()) throw ValidationError("label_efficiency: no subset sizes");
    std::size_t pool = 0;
    for (const auto& s : train) pool += s.labels ? 1 : 0;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        if (sizes[i] == 0) throw ValidationError("label_efficiency: subset size 0");
        if (i > 0 && sizes[i] <= sizes[i - 1]) {
            throw ValidationError("label_efficiency: sizes must be strictly ascending (got " +
                                  std::to_string(sizes[i - 1]) + " then " + std::to_string(sizes[i]) + ")");
        }
    }
    if (sizes.back() > pool) {
        throw ValidationError("label_efficiency: size " + std::to_string(sizes.back()) + " exceeds the " +
                              std::to_string(pool) + " labeled studies available");
    }
    std::vector<LabelEfficiencyRow> rows;
    for (std::size_t n : sizes) {
        ExperimentConfig c = cfg;
        c.train.subset_size = n;
        const auto fit = train::train_classifier(train, val, c, encoder);
        const auto scores = train::predict(fit.checkpoint, test, c.train.threads);
        LabelEfficiencyRow row;
        row.size = n;
        row.macro_auroc = compute_report(scores, "test").macro_auroc;
        row.val_auroc = fit.selected_val_auroc;
        row.selected_step = fit.selected_step;
        rows.push_back(row);
    }
    return rows;
}

std::vector<data::Study> two_view_studies(std::span<const data::Study> studies) {
    std::vector<data::Study> out;
    for (const auto& s : studies) {
        if (s.views.size() == 2) out.push_back(s);
    }
    return out;
}

std::vector<AblationRow> two_view_ablation(const train::Checkpoint& mvmae, const train::Checkpoint& independent,
                                           std::span<const data::Study> studies, bool prefer_frontal,
                                           std::size_t threads) {
    std::vector<data::Study> pairs;
    for (const auto& s : two_view_studies(studies)) {
        if (s.labels) pairs.push_back(s);
    }
    if (pairs.empty()) throw ValidationError("two_view_ablation: no labeled studies with exactly two views");
    const auto a = train::predict(mvmae, pairs, threads);
    const auto b = train::predict(independent, pairs, threads);
    std::vector<AblationRow> rows;
    for (const auto& [views, sel] : {std::pair{std::size_t{1}, ViewSelection::first},
                                     std::pair{std::size_t{2}, ViewSelection::first_two}}) {
        const auto ra = compute_reports(a, sel, 0.5, prefer_frontal);
        const auto rb = compute_reports(b, sel, 0.5, prefer_frontal);
        for (std::size_t i = 0; i < ra.size(); ++i) {
            AblationRow row;
            row.dataset = ra[i].dataset_tag;
            row.views = views;
            row.mvmae = ra[i].macro_auroc;
            row.independent = rb[i].macro_auroc;
            if (row.mvmae && row.independent) row.delta = *row.mvmae - *row.independent;
            rows.push_back(row);
        }
    }
    return rows;
}

Summary summarize(std::span<const double> values) {
    Summary s;
    s.n = values.size();
    if (values.empty()) return s;
    for (double v : values) s.mean += v;
    s.mean /= static_cast<double>(s.n);
    if (s.n > 1) {
        double sq = 0.0;
        for (double v : values) sq += (v - s.mean) * (v - s.mean);
        s.sd = std::sqrt(sq / static_cast<double>(s.n - 1));
    }
    return s;
}

}  // namespace mvmae::eval

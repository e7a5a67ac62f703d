#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mvmae/data/study.hpp"

namespace mvmae::eval {

using ScoreVector = std::array<double, data::kNumLabels>;

// Elementwise mean; ValidationError on empty input.
ScoreVector fuse(std::span<const ScoreVector> views);

// Mann-Whitney AUROC with ties counted one half; nullopt when only one class
// is present.
std::optional<double> auroc(std::span<const double> scores, std::span<const std::uint8_t> labels);

// F1 at `threshold` (score >= threshold predicts positive); nullopt when
// there are neither predicted nor true positives.
std::optional<double> f1(std::span<const double> scores, std::span<const std::uint8_t> labels,
                         double threshold = 0.5);

// Mean of (p - y)^2.
double brier(std::span<const double> scores, std::span<const std::uint8_t> labels);

// Mean of the five largest defined values; nullopt with fewer than five.
std::optional<double> top5(std::span<const std::optional<double>> values);

enum class ViewSelection { first, first_two, all };

struct StudyScores {
    std::string study_id;
    std::string dataset_tag;
    std::vector<ScoreVector> views;
    std::vector<data::ProjectionFamily> families;
    data::LabelVector labels{};

    // Score vector under a view policy. `first` uses the first-listed view,
    // or the first frontal one with prefer_frontal.
    ScoreVector select(ViewSelection sel, bool prefer_frontal = false) const;
};

struct MetricReport {
    std::string dataset_tag;
    std::size_t n_studies = 0;
    std::array<std::optional<double>, data::kNumLabels> auroc{};
    std::array<std::optional<double>, data::kNumLabels> f1{};
    std::array<double, data::kNumLabels> brier{};
    std::optional<double> macro_auroc;
    std::optional<double> macro_f1;
    std::optional<double> top5_auroc;
    std::optional<double> top5_f1;
    double macro_brier = 0.0;
    double micro_brier = 0.0;
    std::vector<std::string> excluded;  // labels with a single class in truth
    std::map<std::string, std::string> meta;
};

MetricReport compute_report(std::span<const StudyScores> studies, const std::string& dataset_tag,
                            ViewSelection sel = ViewSelection::all, double threshold = 0.5,
                            bool prefer_frontal = false);

// Per-dataset reports plus a "combined" report over everything (first).
std::vector<MetricReport> compute_reports(std::span<const StudyScores> studies, ViewSelection sel,
                                          double threshold, bool prefer_frontal = false);

std::string report_json(std::span<const MetricReport> reports);
// Columns: dataset,label,metric,value (one row per defined value).
std::string report_csv(std::span<const MetricReport> reports);

// study_id, dataset, view_index (-1 = fused over all views), family, 14 probabilities, 14 labels.
void write_score_dump(const std::filesystem::path& path, std::span<const StudyScores> studies);
std::vector<StudyScores> read_score_dump(const std::filesystem::path& path);

}  // namespace mvmae::eval

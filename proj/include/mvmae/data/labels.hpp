#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mvmae/data/study.hpp"

namespace mvmae::data {

// The 14-category CheXpert-labeler ontology, in canonical index order.
inline constexpr std::array<std::string_view, kNumLabels> kCategoryNames{
    "Atelectasis",      "Cardiomegaly",     "Consolidation",    "Edema",
    "Enlarged Cardiomediastinum", "Fracture", "Lung Lesion",   "Lung Opacity",
    "No Finding",       "Pleural Effusion", "Pleural Other",    "Pneumonia",
    "Pneumothorax",     "Support Devices"};

// Index of a category name; matching ignores case, and treats '_' as ' '.
std::optional<std::size_t> category_index(std::string_view name);

enum class LabelState { positive, negative, uncertain, not_mentioned };

// Accepts positive/negative/uncertain/not_mentioned and the CheXpert numeric
// encodings 1/0/-1/"" (blank = not mentioned).
std::optional<LabelState> parse_label_state(std::string_view token);

// Only explicit positives become 1.
LabelVector binarize_labels(std::span<const LabelState> states);
// Token form; throws ValidationError on an unknown token.
LabelVector binarize_labels(std::span<const std::string> tokens);

// Lowercase, trimmed, internal whitespace collapsed to one space.
std::string normalize_label(std::string_view label);

// Source-label vocabulary -> category mapping. A source label may target
// several categories; "drop" maps it to none.
class LabelSpace {
public:
    LabelSpace() = default;

    // Two-column CSV: source_label,target_category. A header row with exactly
    // those names is skipped; fields may be double-quoted.
    static LabelSpace load_csv(const std::filesystem::path& path);

    // Every category name mapped to itself.
    static LabelSpace identity();

    void add(std::string_view source, std::string_view target);
    bool contains(std::string_view source) const;
    std::size_t size() const { return targets_.size(); }

    // Throws ValidationError listing every unmapped source label.
    LabelVector harmonize(std::span<const std::string> source_labels) const;

private:
    std::map<std::string, std::vector<std::size_t>> targets_;
};

}  // namespace mvmae::data

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mvmae::data {

// Frontal-Lateral-Unknown families; the enumerator value is the modality
// embedding row.
enum class ProjectionFamily : std::uint8_t { frontal = 0, lateral = 1, unknown = 2 };

inline constexpr std::size_t kFamilyCount = 3;

// PA/AP/frontal -> frontal, LL/lateral -> lateral, anything else -> unknown.
ProjectionFamily family_from_token(std::string_view token);
std::string_view family_name(ProjectionFamily family);

// Single-channel image, row-major.
struct Image {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> pixels;

    Image() = default;
    Image(std::size_t h, std::size_t w, double fill = 0.0)
        : height(h), width(w), pixels(h * w, fill) {}

    double& at(std::size_t r, std::size_t c) { return pixels[r * width + c]; }
    double at(std::size_t r, std::size_t c) const { return pixels[r * width + c]; }

    bool operator==(const Image&) const = default;
};

inline constexpr std::size_t kNumLabels = 14;
using LabelVector = std::array<std::uint8_t, kNumLabels>;

struct View {
    Image image;
    ProjectionFamily family = ProjectionFamily::unknown;
    int instance_index = 0;

    bool operator==(const View&) const = default;
};

// One clinical exam. `report` holds normalized report text (lowercase,
// single-spaced); token ids are produced against a Vocabulary at training
// time.
struct Study {
    std::string study_id;
    std::string patient_id;
    std::string dataset_tag;
    std::vector<View> views;
    std::optional<std::string> report;
    std::optional<LabelVector> labels;

    bool operator==(const Study&) const = default;
};

}  // namespace mvmae::data

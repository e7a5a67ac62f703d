#pragma once

#include <cstddef>
#include <filesystem>
#include <ostream>
#include <vector>

#include "mvmae/data/labels.hpp"
#include "mvmae/data/study.hpp"

namespace mvmae::data {

// Tab-separated, one view per row, header required:
//
//   study_id patient_id dataset_tag family_token instance_index image_path
//   label_states report_path
//
// label_states is "-" (no labels), 14 semicolon-joined states, or a
// semicolon-joined list of source labels resolved through a LabelSpace.
// report_path is "-" when absent. Relative paths resolve against the
// manifest's directory.
inline constexpr const char* kManifestHeader =
    "study_id\tpatient_id\tdataset_tag\tfamily_token\tinstance_index\timage_path\t"
    "label_states\treport_path";

struct ManifestOptions {
    // Images whose shape differs from side x side go through
    // preprocess_image; images already at that shape are used as stored.
    std::size_t image_side = 224;
    // Needed only when some row carries source labels.
    const LabelSpace* mapping = nullptr;
};

std::vector<Study> load_manifest(const std::filesystem::path& path,
                                 const ManifestOptions& options = {});

// Lowercase and collapse whitespace.
std::string normalize_report(std::string_view text);

// Writes studies in manifest form under `dir`: images/<study>_<k>.pgm,
// reports/<study>.txt, and manifest.tsv. Labels are written as 14
// positive/negative states.
void write_dataset(const std::filesystem::path& dir, const std::vector<Study>& studies);

}  // namespace mvmae::data

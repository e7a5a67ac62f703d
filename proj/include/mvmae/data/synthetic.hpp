#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "mvmae/data/study.hpp"

namespace mvmae::data {

// Settings for the synthetic multi-view study generator.
//
// Each category owns one template per projection family, fixed by world_seed
// (so every dataset drawn from the same world agrees on what a finding looks
// like): either a compact blob or a diffuse plane wave whose frequency is a
// whole number of cycles per patch. A study draws 14 Bernoulli condition bits
// and a shared per-finding intensity; each view renders the active findings
// for its family on top of a view-local smooth background, nuisance blobs,
// decoys and pixel noise. Views of one study therefore share signal while
// differing in everything else.
enum class FindingShape {
    blob,     // compact Gaussian at a fixed location
    diffuse,  // whole-image low-frequency pattern
};

struct SyntheticConfig {
    std::size_t image_side = 32;
    FindingShape shape = FindingShape::diffuse;
    double prevalence = 0.3;
    double signal_amplitude = 0.05;
    double blob_sigma = 2.5;  // pixels at image_side 32; scales with the side
    double background_amplitude = 0.12;
    std::size_t nuisance_blobs = 2;
    double nuisance_amplitude = 0.25;
    // View-local bursts of finding-like texture under a compact envelope
    // (diffuse mode only): confounders that look like a finding in one place.
    std::size_t decoy_textures = 6;
    double decoy_amplitude = 0.4;
    double noise = 0.04;
    // Probabilities of 1, 2 and 3 views per study.
    double p_one_view = 0.3;
    double p_three_views = 0.15;
    double report_fraction = 1.0;
    double repeat_patient = 0.3;  // chance a patient contributes another study
    std::size_t datasets = 1;     // dataset tags synthA, synthB, ...
    std::uint64_t world_seed = 0x5eed;
};

std::vector<Study> generate_synthetic_studies(std::size_t count, const SyntheticConfig& config,
                                              std::uint64_t seed);

// Lowercase single-token name of a category as it appears in synthetic
// reports (e.g. "pleural_effusion").
std::string report_token(std::size_t category);

}  // namespace mvmae::data

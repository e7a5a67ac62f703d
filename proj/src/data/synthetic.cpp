#include "mvmae/data/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>

#include "mvmae/data/labels.hpp"
#include "mvmae/errors.hpp"
#include "mvmae/rng.hpp"

namespace mvmae::data {

namespace {

struct Blob {
    double cy = 0, cx = 0, sigma = 1, gain = 1;
};

struct Wave {
    double fy = 0, fx = 0, phase = 0, gain = 1;
};

// Per-category, per-family finding templates shared by every study of a world.
struct World {
    std::array<std::array<Blob, kFamilyCount>, kNumLabels> blobs;
    std::array<std::array<Wave, kFamilyCount>, kNumLabels> waves;
};

// Integer (rows, cols) cycles per image, one per category.
constexpr int kWaveFreq[kNumLabels][2] = {{0, 4}, {4, 0}, {4, 4}, {4, -4}, {0, 8},  {8, 0},  {8, 4},
                                          {4, 8}, {8, -4}, {4, -8}, {8, 8}, {8, -8}, {0, 12}, {12, 0}};

World make_world(const SyntheticConfig& cfg) {
    Rng rng(cfg.world_seed);
    const double side = static_cast<double>(cfg.image_side);
    const double sigma = cfg.blob_sigma * side / 32.0;
    World w;
    for (std::size_t k = 0; k < kNumLabels; ++k) {
        Blob frontal{rng.uniform(0.15, 0.85) * side, rng.uniform(0.15, 0.85) * side,
                     sigma * rng.uniform(0.8, 1.2), 1.0};
        // Lateral: same craniocaudal height, shifted across, wider and fainter.
        Blob lateral = frontal;
        lateral.cx = std::clamp(frontal.cx + (rng.bernoulli(0.5) ? 1.0 : -1.0) *
                                                 rng.uniform(0.5, 1.0) * frontal.sigma,
                                0.1 * side, 0.9 * side);
        lateral.sigma = frontal.sigma * 1.3;
        lateral.gain = 0.8;
        Blob unknown = frontal;
        unknown.gain = 0.6;
        w.blobs[k] = {frontal, lateral, unknown};
    }
    for (std::size_t k = 0; k < kNumLabels; ++k) {
        Wave frontal{static_cast<double>(kWaveFreq[k][0]), static_cast<double>(kWaveFreq[k][1]),
                     rng.uniform(0.0, 2.0 * std::numbers::pi), 1.0};
        // Lateral projections see the same finding at another phase, fainter.
        Wave lateral = frontal;
        lateral.phase += rng.uniform(0.5, 1.5) * std::numbers::pi / 2.0;
        lateral.gain = 0.8;
        Wave unknown = frontal;
        unknown.gain = 0.6;
        w.waves[k] = {frontal, lateral, unknown};
    }
    return w;
}

void add_wave(Image& img, const Wave& w, double amplitude) {
    const double step = 2.0 * std::numbers::pi / static_cast<double>(img.height);
    for (std::size_t r = 0; r < img.height; ++r) {
        for (std::size_t c = 0; c < img.width; ++c) {
            img.at(r, c) += amplitude * std::cos(step * (w.fy * static_cast<double>(r) + w.fx * static_cast<double>(c)) + w.phase);
        }
    }
}

void add_blob(Image& img, double cy, double cx, double sigma, double amplitude) {
    const double inv = 1.0 / (2.0 * sigma * sigma);
    for (std::size_t r = 0; r < img.height; ++r) {
        const double dy = static_cast<double>(r) + 0.5 - cy;
        for (std::size_t c = 0; c < img.width; ++c) {
            const double dx = static_cast<double>(c) + 0.5 - cx;
            img.at(r, c) += amplitude * std::exp(-(dy * dy + dx * dx) * inv);
        }
    }
}

ProjectionFamily draw_family(Rng& rng, std::size_t position) {
    switch (position) {
        case 0:
            return rng.bernoulli(0.85) ? ProjectionFamily::frontal : ProjectionFamily::unknown;
        case 1:
            return rng.bernoulli(0.8) ? ProjectionFamily::lateral : ProjectionFamily::frontal;
        default:
            return static_cast<ProjectionFamily>(rng.below(kFamilyCount));
    }
}

Image render_view(const World& world, const SyntheticConfig& cfg, const LabelVector& cond,
                  const std::array<double, kNumLabels>& intensity, ProjectionFamily family,
                  Rng& rng) {
    const std::size_t side = cfg.image_side;
    const double s = static_cast<double>(side);
    Image img(side, side);

    const bool diffuse = cfg.shape == FindingShape::diffuse;
    const double level = diffuse ? rng.uniform(0.45, 0.55) : rng.uniform(0.2, 0.3);
    const double fy = rng.uniform(0.5, 1.5), fx = rng.uniform(0.5, 1.5);
    const double py = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double px = rng.uniform(0.0, 2.0 * std::numbers::pi);
    for (std::size_t r = 0; r < side; ++r) {
        for (std::size_t c = 0; c < side; ++c) {
            img.at(r, c) = level + cfg.background_amplitude *
                                       std::cos(2.0 * std::numbers::pi * fy * static_cast<double>(r) / s + py) *
                                       std::cos(2.0 * std::numbers::pi * fx * static_cast<double>(c) / s + px);
        }
    }

    const auto m = static_cast<std::size_t>(family);
    for (std::size_t k = 0; k < kNumLabels; ++k) {
        if (!cond[k]) continue;
        if (diffuse) {
            const Wave& w = world.waves[k][m];
            add_wave(img, w, w.gain * intensity[k]);
        } else {
            const Blob& b = world.blobs[k][m];
            add_blob(img, b.cy, b.cx, b.sigma, b.gain * intensity[k]);
        }
    }

    const double sigma = cfg.blob_sigma * s / 32.0;
    for (std::size_t j = 0; j < cfg.nuisance_blobs; ++j) {
        const double cy = rng.uniform(0.0, s), cx = rng.uniform(0.0, s);
        const double amp = cfg.nuisance_amplitude * rng.uniform(-1.0, 1.0);
        add_blob(img, cy, cx, sigma * rng.uniform(0.6, 1.6), amp);
    }

    if (diffuse) {
        for (std::size_t j = 0; j < cfg.decoy_textures; ++j) {
            const Wave& w = world.waves[rng.below(kNumLabels)][m];
            const double cy = rng.uniform(0.0, s), cx = rng.uniform(0.0, s);
            const double amp = cfg.decoy_amplitude * rng.uniform(0.5, 1.0);
            const double inv = 1.0 / (2.0 * sigma * sigma);
            const double step = 2.0 * std::numbers::pi / s;
            for (std::size_t r = 0; r < side; ++r) {
                for (std::size_t c = 0; c < side; ++c) {
                    const double dy = static_cast<double>(r) + 0.5 - cy, dx = static_cast<double>(c) + 0.5 - cx;
                    img.at(r, c) += amp * std::exp(-(dy * dy + dx * dx) * inv) *
                                    std::cos(step * (w.fy * static_cast<double>(r) + w.fx * static_cast<double>(c)) + w.phase);
                }
            }
        }
    }

    for (double& v : img.pixels) v = std::clamp(v + cfg.noise * rng.normal(), 0.0, 1.0);
    return img;
}

std::string make_report(const LabelVector& cond) {
    std::string text = "findings :";
    bool any = false;
    for (std::size_t k = 0; k < kNumLabels; ++k) {
        if (!cond[k]) continue;
        text += " " + report_token(k) + " present";
        any = true;
    }
    if (!any) text += " no acute abnormality";
    return text;
}

std::string padded(const char* prefix, std::size_t n) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%06zu", prefix, n);
    return buf;
}

}  // namespace

std::string report_token(std::size_t category) {
    std::string s = normalize_label(kCategoryNames.at(category));
    std::replace(s.begin(), s.end(), ' ', '_');
    return s;
}

std::vector<Study> generate_synthetic_studies(std::size_t count, const SyntheticConfig& config,
                                              std::uint64_t seed) {
    if (count == 0) throw ValidationError("generate_synthetic_studies: count must be >= 1");
    if (config.image_side < 16) throw ValidationError("synthetic image_side must be >= 16");
    if (config.datasets == 0) throw ValidationError("synthetic datasets must be >= 1");
    const World world = make_world(config);

    Rng patients(Rng::derive(seed, {0x7061}));
    std::vector<Study> out;
    out.reserve(count);
    std::size_t patient = 0;
    for (std::size_t i = 0; i < count; ++i) {
        if (i > 0 && !patients.bernoulli(config.repeat_patient)) ++patient;
        Rng rng(Rng::derive(seed, {0x5354, i}));

        Study s;
        s.study_id = padded("S", i);
        s.patient_id = padded("P", patient);
        s.dataset_tag = config.datasets == 1
                            ? "synthetic"
                            : "synth" + std::string(1, static_cast<char>('A' + patient % config.datasets));

        LabelVector cond{};
        std::array<double, kNumLabels> intensity{};
        for (std::size_t k = 0; k < kNumLabels; ++k) {
            cond[k] = rng.bernoulli(config.prevalence) ? 1 : 0;
            intensity[k] = config.signal_amplitude * rng.uniform(0.7, 1.3);
        }
        const double u = rng.uniform();
        const std::size_t views = u < config.p_one_view ? 1
                                  : u < 1.0 - config.p_three_views ? 2
                                                                    : 3;
        for (std::size_t v = 0; v < views; ++v) {
            const ProjectionFamily family = draw_family(rng, v);
            s.views.push_back(
                View{render_view(world, config, cond, intensity, family, rng), family, static_cast<int>(v)});
        }
        if (rng.bernoulli(config.report_fraction)) s.report = make_report(cond);
        s.labels = cond;
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace mvmae::data

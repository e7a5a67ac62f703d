#pragma once

#include "mvmae/data/study.hpp"
#include "mvmae/rng.hpp"

namespace mvmae::data {

struct AugmentConfig {
    bool enabled = true;
    double crop_scale_min = 0.6;  // fraction of the image area kept by the crop
    double crop_ratio_max = 4.0 / 3.0;
    bool flip = true;
    double jitter = 0.1;  // brightness offset and contrast factor spread
};

// Random resized crop back to the input size, optional horizontal flip and
// brightness/contrast jitter; output clamped to [0, 1].
Image augment(const Image& in, const AugmentConfig& cfg, Rng& rng);

}  // namespace mvmae::data

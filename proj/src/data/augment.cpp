#include "mvmae/data/augment.hpp"

#include <algorithm>
#include <cmath>

namespace mvmae::data {

namespace {

double sample_bilinear(const Image& img, double y, double x) {
    y = std::clamp(y, 0.0, static_cast<double>(img.height - 1));
    x = std::clamp(x, 0.0, static_cast<double>(img.width - 1));
    const auto y0 = static_cast<std::size_t>(y), x0 = static_cast<std::size_t>(x);
    const std::size_t y1 = std::min(y0 + 1, img.height - 1), x1 = std::min(x0 + 1, img.width - 1);
    const double fy = y - static_cast<double>(y0), fx = x - static_cast<double>(x0);
    const double top = img.at(y0, x0) * (1 - fx) + img.at(y0, x1) * fx;
    const double bot = img.at(y1, x0) * (1 - fx) + img.at(y1, x1) * fx;
    return top * (1 - fy) + bot * fy;
}

}  // namespace

Image augment(const Image& in, const AugmentConfig& cfg, Rng& rng) {
    if (!cfg.enabled) return in;
    const double h = static_cast<double>(in.height), w = static_cast<double>(in.width);
    const double area = rng.uniform(cfg.crop_scale_min, 1.0);
    const double log_r = std::log(cfg.crop_ratio_max);
    const double ratio = std::exp(rng.uniform(-log_r, log_r));
    const double ch = std::min(h, std::sqrt(area * h * w / ratio));
    const double cw = std::min(w, std::sqrt(area * h * w * ratio));
    const double y0 = rng.uniform(0.0, h - ch);
    const double x0 = rng.uniform(0.0, w - cw);
    const bool flip = cfg.flip && rng.bernoulli(0.5);
    const double brightness = rng.uniform(-cfg.jitter, cfg.jitter);
    const double contrast = 1.0 + rng.uniform(-cfg.jitter, cfg.jitter);

    Image out(in.height, in.width);
    double mean = 0.0;
    for (std::size_t r = 0; r < in.height; ++r) {
        for (std::size_t c = 0; c < in.width; ++c) {
            const std::size_t cc = flip ? in.width - 1 - c : c;
            // pixel centers map through the crop box
            const double sy = y0 + (static_cast<double>(r) + 0.5) * ch / h - 0.5;
            const double sx = x0 + (static_cast<double>(cc) + 0.5) * cw / w - 0.5;
            out.at(r, c) = sample_bilinear(in, sy, sx);
            mean += out.at(r, c);
        }
    }
    mean /= h * w;
    for (double& v : out.pixels) v = std::clamp((v - mean) * contrast + mean + brightness, 0.0, 1.0);
    return out;
}

}  // namespace mvmae::data

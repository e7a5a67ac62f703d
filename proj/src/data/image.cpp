#include "mvmae/data/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>

#include "mvmae/errors.hpp"

namespace mvmae::data {

namespace {

// Reads the next header token, skipping whitespace and '#' comments.
std::string header_token(std::istream& in) {
    std::string tok;
    for (;;) {
        const int c = in.get();
        if (c == EOF) break;
        if (c == '#') {
            std::string skip;
            std::getline(in, skip);
            if (!tok.empty()) break;
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) break;
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    return tok;
}

std::size_t parse_dim(const std::string& tok, const std::filesystem::path& path) {
    try {
        std::size_t used = 0;
        const unsigned long v = std::stoul(tok, &used);
        if (used != tok.size() || v == 0) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw ParseError(path.string() + ": bad PGM header field '" + tok + "'");
    }
}

struct Taps {
    std::vector<std::size_t> first;
    std::vector<std::vector<double>> weights;
};

Taps triangle_taps(std::size_t n_in, std::size_t n_out) {
    Taps taps;
    const double scale = static_cast<double>(n_in) / static_cast<double>(n_out);
    const double support = std::max(1.0, scale);
    for (std::size_t i = 0; i < n_out; ++i) {
        const double center = (static_cast<double>(i) + 0.5) * scale;
        const auto lo = static_cast<std::ptrdiff_t>(std::floor(center - support));
        const auto hi = static_cast<std::ptrdiff_t>(std::ceil(center + support));
        const std::size_t begin = static_cast<std::size_t>(std::max<std::ptrdiff_t>(lo, 0));
        const std::size_t end =
            static_cast<std::size_t>(std::min<std::ptrdiff_t>(hi, static_cast<std::ptrdiff_t>(n_in)));
        std::vector<double> w;
        double total = 0.0;
        for (std::size_t j = begin; j < end; ++j) {
            const double d = std::abs((static_cast<double>(j) + 0.5 - center) / support);
            const double v = std::max(0.0, 1.0 - d);
            w.push_back(v);
            total += v;
        }
        if (total <= 0.0) {
            // Degenerate tap set: fall back to the nearest sample.
            const std::size_t nearest = std::min(n_in - 1, static_cast<std::size_t>(center));
            taps.first.push_back(nearest);
            taps.weights.push_back({1.0});
            continue;
        }
        for (double& v : w) v /= total;
        taps.first.push_back(begin);
        taps.weights.push_back(std::move(w));
    }
    return taps;
}

}  // namespace

Image read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open image " + path.string());
    const std::string magic = header_token(in);
    if (magic != "P5" && magic != "P2") {
        throw ParseError(path.string() + ": not a PGM file (magic '" + magic + "')");
    }
    const std::size_t width = parse_dim(header_token(in), path);
    const std::size_t height = parse_dim(header_token(in), path);
    const std::size_t maxval = parse_dim(header_token(in), path);
    if (maxval > 65535) throw ParseError(path.string() + ": PGM maxval above 65535");

    Image img(height, width);
    const double inv = 1.0 / static_cast<double>(maxval);
    if (magic == "P2") {
        for (double& px : img.pixels) {
            std::size_t v = 0;
            if (!(in >> v)) throw ParseError(path.string() + ": truncated PGM raster");
            px = static_cast<double>(std::min(v, maxval)) * inv;
        }
        return img;
    }
    const std::size_t bytes = maxval < 256 ? 1 : 2;
    std::vector<unsigned char> raw(width * height * bytes);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
        throw ParseError(path.string() + ": truncated PGM raster");
    }
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        std::size_t v = bytes == 1 ? raw[i] : (std::size_t{raw[2 * i]} << 8) | raw[2 * i + 1];
        img.pixels[i] = static_cast<double>(std::min(v, maxval)) * inv;
    }
    return img;
}

void write_pgm16(const std::filesystem::path& path, const Image& image) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write image " + path.string());
    out << "P5\n" << image.width << ' ' << image.height << "\n65535\n";
    std::vector<unsigned char> raw(image.pixels.size() * 2);
    for (std::size_t i = 0; i < image.pixels.size(); ++i) {
        const double v = std::clamp(image.pixels[i], 0.0, 1.0);
        const auto q = static_cast<std::uint16_t>(std::lround(v * 65535.0));
        raw[2 * i] = static_cast<unsigned char>(q >> 8);
        raw[2 * i + 1] = static_cast<unsigned char>(q & 0xff);
    }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) throw IoError("failed writing image " + path.string());
}

Image resize(const Image& src, std::size_t height, std::size_t width) {
    if (src.height == 0 || src.width == 0 || height == 0 || width == 0) {
        throw ValidationError("resize: empty image or target");
    }
    const Taps tx = triangle_taps(src.width, width);
    const Taps ty = triangle_taps(src.height, height);
    Image tmp(src.height, width);
    for (std::size_t r = 0; r < src.height; ++r) {
        for (std::size_t c = 0; c < width; ++c) {
            double s = 0.0;
            const auto& w = tx.weights[c];
            for (std::size_t k = 0; k < w.size(); ++k) s += w[k] * src.at(r, tx.first[c] + k);
            tmp.at(r, c) = s;
        }
    }
    Image out(height, width);
    for (std::size_t r = 0; r < height; ++r) {
        const auto& w = ty.weights[r];
        for (std::size_t c = 0; c < width; ++c) {
            double s = 0.0;
            for (std::size_t k = 0; k < w.size(); ++k) s += w[k] * tmp.at(ty.first[r] + k, c);
            out.at(r, c) = s;
        }
    }
    return out;
}

std::size_t resize_target(std::size_t side) {
    return static_cast<std::size_t>(std::lround(static_cast<double>(side) * 256.0 / 224.0));
}

Image preprocess_image(const Image& raw, std::size_t side) {
    if (raw.height < 2 || raw.width < 2) {
        throw ValidationError("preprocess_image: degenerate input " + std::to_string(raw.height) +
                              "x" + std::to_string(raw.width));
    }
    if (side < 16) throw ValidationError("preprocess_image: side must be at least 16");

    const std::size_t target = resize_target(side);
    const std::size_t shorter = std::min(raw.height, raw.width);
    const auto scaled = [&](std::size_t n) {
        return std::max(target, static_cast<std::size_t>(std::lround(
                                    static_cast<double>(n) * static_cast<double>(target) /
                                    static_cast<double>(shorter))));
    };
    const std::size_t h = raw.height == shorter ? target : scaled(raw.height);
    const std::size_t w = raw.width == shorter ? target : scaled(raw.width);
    const Image resized = resize(raw, h, w);

    const std::size_t top = (h - side) / 2;
    const std::size_t left = (w - side) / 2;
    Image out(side, side);
    for (std::size_t r = 0; r < side; ++r) {
        for (std::size_t c = 0; c < side; ++c) out.at(r, c) = resized.at(top + r, left + c);
    }

    const auto [lo, hi] = std::minmax_element(out.pixels.begin(), out.pixels.end());
    const double mn = *lo, mx = *hi;
    // Resampling can leave ulp-level ripple on a constant input; treat a range
    // that small as constant.
    if (!(mx - mn > 1e-9 * std::max({1.0, std::abs(mx), std::abs(mn)}))) {
        std::fill(out.pixels.begin(), out.pixels.end(), 0.0);
        return out;
    }
    const double inv = 1.0 / (mx - mn);
    for (double& v : out.pixels) v = std::clamp((v - mn) * inv, 0.0, 1.0);
    return out;
}

}  // namespace mvmae::data

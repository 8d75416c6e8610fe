#include "mhpsc/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <stdexcept>

#include "mhpsc/rng.hpp"

namespace mhpsc::corpus {
namespace {

// Separable box blur with clamped edges, one horizontal + one vertical pass.
void box_blur(std::vector<double>& f, int h, int w, int radius) {
    if (radius < 1) return;
    std::vector<double> tmp(f.size());
    double inv = 1.0 / (2 * radius + 1);
    for (int y = 0; y < h; ++y) {
        const double* row = f.data() + static_cast<size_t>(y) * w;
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k)
                acc += row[std::clamp(x + k, 0, w - 1)];
            tmp[static_cast<size_t>(y) * w + x] = acc * inv;
        }
    }
    for (int x = 0; x < w; ++x)
        for (int y = 0; y < h; ++y) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k)
                acc += tmp[static_cast<size_t>(std::clamp(y + k, 0, h - 1)) * w + x];
            f[static_cast<size_t>(y) * w + x] = acc * inv;
        }
}

void add_noise_octave(std::vector<double>& f, int h, int w, rng::Xoshiro256pp& r, int radius,
                      double amp) {
    std::vector<double> n(f.size());
    for (auto& v : n) v = r.normal();
    box_blur(n, h, w, radius);
    for (size_t i = 0; i < f.size(); ++i) f[i] += amp * n[i];
}

}  // namespace

image::ImageTensor synth_image(uint64_t seed, int index, int height, int width) {
    if (height < 4 || width < 4) throw std::invalid_argument("synth_image: size too small");
    rng::Xoshiro256pp r(rng::derive_stream(rng::derive_stream(seed, 0xC0DE), index));
    size_t plane = static_cast<size_t>(height) * width;

    // Shared luminance structure: three octaves of smoothed noise.
    std::vector<double> base(plane, 0.0);
    add_noise_octave(base, height, width, r, std::max(1, height / 8), 1.0);
    add_noise_octave(base, height, width, r, std::max(1, height / 24), 0.5);
    add_noise_octave(base, height, width, r, 1, 0.15);

    // Random step edges: a few half-plane steps and one rectangle.
    int n_lines = 2 + static_cast<int>(r.next() % 3);
    for (int e = 0; e < n_lines; ++e) {
        double cx = r.uniform01() * width, cy = r.uniform01() * height;
        double ang = r.uniform01() * 6.283185307179586;
        double nx = std::cos(ang), ny = std::sin(ang);
        double amp = (r.uniform01() - 0.5) * 1.2;
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x)
                if ((x - cx) * nx + (y - cy) * ny > 0.0) base[static_cast<size_t>(y) * width + x] += amp;
    }
    {
        int x0 = static_cast<int>(r.uniform01() * width * 0.7);
        int y0 = static_cast<int>(r.uniform01() * height * 0.7);
        int x1 = x0 + 2 + static_cast<int>(r.uniform01() * width * 0.3);
        int y1 = y0 + 2 + static_cast<int>(r.uniform01() * height * 0.3);
        double amp = (r.uniform01() - 0.5) * 1.0;
        for (int y = y0; y < std::min(y1, height); ++y)
            for (int x = x0; x < std::min(x1, width); ++x)
                base[static_cast<size_t>(y) * width + x] += amp;
    }

    // Per-channel tint fields keep the channels correlated but not identical.
    image::ImageTensor img = image::ImageTensor::zeros(height, width);
    for (int c = 0; c < 3; ++c) {
        std::vector<double> tint(plane, 0.0);
        add_noise_octave(tint, height, width, r, std::max(1, height / 12), 1.0);
        double bias = (r.uniform01() - 0.5) * 0.3;
        for (size_t i = 0; i < plane; ++i) img.data[c * plane + i] = base[i] + 0.18 * tint[i] + bias;
    }

    double lo = img.data[0], hi = img.data[0];
    for (double v : img.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    double span = hi - lo;
    if (span < 1e-12) {
        std::fill(img.data.begin(), img.data.end(), 0.5);
    } else {
        for (double& v : img.data) v = (v - lo) / span;
    }
    return img;
}

std::vector<image::ImageTensor> synth_corpus(uint64_t seed, int count, int height, int width) {
    if (count < 1) throw std::invalid_argument("synth_corpus: count must be >= 1");
    std::vector<image::ImageTensor> out;
    out.reserve(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i) out.push_back(synth_image(seed, i, height, width));
    return out;
}

std::vector<std::string> write_corpus(const std::string& dir, uint64_t seed, int count, int height,
                                      int width) {
    std::filesystem::create_directories(dir);
    std::vector<std::string> paths;
    for (int i = 0; i < count; ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "corpus_%04d.ppm", i);
        std::string p = (std::filesystem::path(dir) / name).string();
        image::save_ppm(synth_image(seed, i, height, width), p);
        paths.push_back(std::move(p));
    }
    return paths;
}

std::vector<image::ImageTensor> load_dataset(const std::string& path) {
    namespace fs = std::filesystem;
    std::vector<image::ImageTensor> out;
    if (fs::is_directory(path)) {
        std::vector<std::string> names;
        for (const auto& e : fs::directory_iterator(path))
            if (e.is_regular_file() && e.path().extension() == ".ppm")
                names.push_back(e.path().string());
        std::sort(names.begin(), names.end());
        for (const auto& n : names) out.push_back(image::load_image(n));
    } else if (fs::exists(path)) {
        out.push_back(image::load_image(path));
    }
    if (out.empty()) throw std::runtime_error("load_dataset: no images at " + path);
    return out;
}

}  // namespace mhpsc::corpus

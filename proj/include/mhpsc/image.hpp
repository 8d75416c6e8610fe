#pragma once

#include <string>
#include <vector>

namespace mhpsc::image {

// RGB image with values in [0,1], stored plane-major: data[c*H*W + u*W + v],
// c in {0,1,2}. ResidualTensor shares the layout with values in [-1,1].
struct ImageTensor {
    int height = 0;
    int width = 0;
    std::vector<double> data;

    static ImageTensor zeros(int h, int w) {
        ImageTensor t;
        t.height = h;
        t.width = w;
        t.data.assign(static_cast<size_t>(3) * h * w, 0.0);
        return t;
    }

    size_t plane() const { return static_cast<size_t>(height) * width; }
    double& at(int c, int u, int v) { return data[c * plane() + static_cast<size_t>(u) * width + v]; }
    double at(int c, int u, int v) const { return data[c * plane() + static_cast<size_t>(u) * width + v]; }
    bool same_shape(const ImageTensor& o) const { return height == o.height && width == o.width; }
};

using ResidualTensor = ImageTensor;

// r = target - recon, elementwise.
ResidualTensor residual(const ImageTensor& target, const ImageTensor& recon);

// clamp(recon + r, 0, 1), elementwise.
ImageTensor compensate(const ImageTensor& recon, const ResidualTensor& r);

// PPM (P6, maxval 255). Loading maps bytes to [0,1] via b/255; saving rounds
// half-up, so save(load(f)) reproduces f's pixel bytes exactly.
ImageTensor load_ppm(const std::string& path);
void save_ppm(const ImageTensor& img, const std::string& path);

// Extension-dispatching wrappers (only .ppm is built in).
ImageTensor load_image(const std::string& path);
void save_image(const ImageTensor& img, const std::string& path);

}  // namespace mhpsc::image

#include "mhpsc/image.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "mhpsc/kernels.hpp"

namespace mhpsc::image {

ResidualTensor residual(const ImageTensor& target, const ImageTensor& recon) {
    if (!target.same_shape(recon)) throw std::runtime_error("residual: image sizes differ");
    ResidualTensor r = target;
    kernels::active_kernels().sub(target.data.data(), recon.data.data(), r.data.data(),
                                  r.data.size());
    return r;
}

ImageTensor compensate(const ImageTensor& recon, const ResidualTensor& r) {
    if (!recon.same_shape(r)) throw std::runtime_error("compensate: image sizes differ");
    ImageTensor out = recon;
    kernels::active_kernels().add_clamp01(recon.data.data(), r.data.data(), out.data.data(),
                                          out.data.size());
    return out;
}

namespace {

[[noreturn]] void parse_fail(const std::string& path, size_t offset, const std::string& what) {
    throw std::runtime_error("ppm parse error in " + path + " at byte " + std::to_string(offset) +
                             ": " + what);
}

// Reads the next integer token, skipping whitespace and '#' comments.
long read_token(const std::string& buf, size_t& pos, const std::string& path) {
    while (pos < buf.size()) {
        if (std::isspace(static_cast<unsigned char>(buf[pos]))) {
            ++pos;
        } else if (buf[pos] == '#') {
            while (pos < buf.size() && buf[pos] != '\n') ++pos;
        } else {
            break;
        }
    }
    if (pos >= buf.size()) parse_fail(path, pos, "unexpected end of header");
    if (!std::isdigit(static_cast<unsigned char>(buf[pos])))
        parse_fail(path, pos, "expected integer");
    long v = 0;
    while (pos < buf.size() && std::isdigit(static_cast<unsigned char>(buf[pos]))) {
        v = v * 10 + (buf[pos] - '0');
        if (v > 1000000000L) parse_fail(path, pos, "integer out of range");
        ++pos;
    }
    return v;
}

}  // namespace

ImageTensor load_ppm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    if (buf.size() < 2 || buf[0] != 'P') parse_fail(path, 0, "not a PPM file");
    if (buf[1] != '6')
        throw std::runtime_error("unsupported format in " + path +
                                 ": only binary RGB PPM (P6) is supported");
    size_t pos = 2;
    const long w = read_token(buf, pos, path);
    const long h = read_token(buf, pos, path);
    const long maxval = read_token(buf, pos, path);
    if (w <= 0 || h <= 0) parse_fail(path, pos, "non-positive dimensions");
    if (maxval != 255)
        throw std::runtime_error("unsupported format in " + path + ": maxval must be 255");
    if (pos >= buf.size() || !std::isspace(static_cast<unsigned char>(buf[pos])))
        parse_fail(path, pos, "expected whitespace after maxval");
    ++pos;

    const size_t need = static_cast<size_t>(w) * h * 3;
    if (buf.size() - pos < need)
        parse_fail(path, buf.size(), "truncated pixel data (need " + std::to_string(need) +
                                         " bytes, have " + std::to_string(buf.size() - pos) + ")");

    ImageTensor img = ImageTensor::zeros(static_cast<int>(h), static_cast<int>(w));
    const size_t plane = img.plane();
    for (size_t p = 0; p < plane; ++p) {
        for (int c = 0; c < 3; ++c) {
            const auto b = static_cast<unsigned char>(buf[pos + 3 * p + c]);
            img.data[c * plane + p] = b / 255.0;
        }
    }
    return img;
}

void save_ppm(const ImageTensor& img, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    f << "P6\n" << img.width << " " << img.height << "\n255\n";
    const size_t plane = img.plane();
    std::string bytes(plane * 3, '\0');
    for (size_t p = 0; p < plane; ++p) {
        for (int c = 0; c < 3; ++c) {
            double v = img.data[c * plane + p];
            v = v > 0.0 ? v : 0.0;
            v = v < 1.0 ? v : 1.0;
            bytes[3 * p + c] = static_cast<char>(static_cast<int>(std::floor(v * 255.0 + 0.5)));
        }
    }
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw std::runtime_error("write failed: " + path);
}

namespace {
bool has_suffix(const std::string& s, const std::string& suf) {
    return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}
}  // namespace

ImageTensor load_image(const std::string& path) {
    if (has_suffix(path, ".ppm")) return load_ppm(path);
    throw std::runtime_error("unsupported format: " + path + " (supported: .ppm P6)");
}

void save_image(const ImageTensor& img, const std::string& path) {
    if (has_suffix(path, ".ppm")) return save_ppm(img, path);
    throw std::runtime_error("unsupported format: " + path + " (supported: .ppm P6)");
}

}  // namespace mhpsc::image

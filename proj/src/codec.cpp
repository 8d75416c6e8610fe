#include "mhpsc/codec.hpp"

#include <cmath>
#include <stdexcept>

#include "mhpsc/detail/wire.hpp"
#include "mhpsc/rng.hpp"

namespace mhpsc::codec {

namespace {

void check_geometry(int height, int width, int block, int l) {
    if (height < 1 || width < 1 || block < 1)
        throw std::runtime_error("codec: bad geometry " + std::to_string(height) + "x" +
                                 std::to_string(width) + " block " + std::to_string(block));
    if (l < 2 || l % 2 != 0)
        throw std::runtime_error("codec: code length must be even and positive, got " +
                                 std::to_string(l));
    if (l > 3 * height * width)
        throw std::runtime_error("codec: code length " + std::to_string(l) +
                                 " exceeds source dimension " + std::to_string(3 * height * width));
}

// Replicate-pad to whole blocks.
image::ImageTensor pad_to_blocks(const image::ImageTensor& img, int block) {
    const int hp = ((img.height + block - 1) / block) * block;
    const int wp = ((img.width + block - 1) / block) * block;
    if (hp == img.height && wp == img.width) return img;
    image::ImageTensor out = image::ImageTensor::zeros(hp, wp);
    for (int c = 0; c < 3; ++c)
        for (int r = 0; r < hp; ++r)
            for (int cc = 0; cc < wp; ++cc)
                out.at(c, r, cc) = img.at(c, std::min(r, img.height - 1), std::min(cc, img.width - 1));
    return out;
}

image::ImageTensor crop(const image::ImageTensor& img, int height, int width) {
    if (img.height == height && img.width == width) return img;
    image::ImageTensor out = image::ImageTensor::zeros(height, width);
    for (int c = 0; c < 3; ++c)
        for (int r = 0; r < height; ++r)
            for (int cc = 0; cc < width; ++cc) out.at(c, r, cc) = img.at(c, r, cc);
    return out;
}

// Orthonormal DCT-II matrix, row-major.
std::vector<double> dct_matrix(int n) {
    std::vector<double> c(static_cast<size_t>(n) * n);
    const double pi = 3.14159265358979323846;
    for (int i = 0; i < n; ++i) {
        const double a = std::sqrt((i == 0 ? 1.0 : 2.0) / n);
        for (int j = 0; j < n; ++j) c[i * n + j] = a * std::cos((2 * j + 1) * i * pi / (2.0 * n));
    }
    return c;
}

// Anti-diagonal traversal with the usual alternating direction; index 0 is DC.
std::vector<int> zigzag_order(int n) {
    std::vector<int> order;
    order.reserve(static_cast<size_t>(n) * n);
    for (int s = 0; s <= 2 * (n - 1); ++s) {
        const int ilo = std::max(0, s - n + 1), ihi = std::min(n - 1, s);
        if (s % 2 == 0) {
            for (int i = ihi; i >= ilo; --i) order.push_back(i * n + (s - i));
        } else {
            for (int i = ilo; i <= ihi; ++i) order.push_back(i * n + (s - i));
        }
    }
    return order;
}

// out = C * X * C^T (forward = true) or C^T * X * C (inverse), n x n blocks.
void dct2(const std::vector<double>& c, int n, const double* x, double* out, bool forward) {
    std::vector<double> tmp(static_cast<size_t>(n) * n);
    for (int i = 0; i < n; ++i) {  // tmp = M * x with M = C or C^T
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int t = 0; t < n; ++t) acc += (forward ? c[i * n + t] : c[t * n + i]) * x[t * n + j];
            tmp[i * n + j] = acc;
        }
    }
    for (int i = 0; i < n; ++i) {  // out = tmp * M^T
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int t = 0; t < n; ++t) acc += tmp[i * n + t] * (forward ? c[j * n + t] : c[t * n + j]);
            out[i * n + j] = acc;
        }
    }
}

void check_linear(const CodecDescriptor& desc) {
    if (desc.l % desc.blocks() != 0)
        throw std::runtime_error("trainable codec: code length " + std::to_string(desc.l) +
                                 " not divisible by " + std::to_string(desc.blocks()) + " blocks");
    if (desc.per_block() % 2 != 0)
        throw std::runtime_error("trainable codec: per-block code length must be even");
    const size_t dim = desc.block_dim();
    if (desc.w_enc.size() != static_cast<size_t>(desc.per_block()) * dim ||
        desc.w_dec.size() != static_cast<size_t>(desc.per_block()) * dim)
        throw std::runtime_error("trainable codec: weight shape mismatch");
}

// Flattened 3-channel block layout: ((c * block) + r) * block + col.
void gather_block(const image::ImageTensor& img, int block, int by, int bx, double* x) {
    for (int c = 0; c < 3; ++c)
        for (int r = 0; r < block; ++r)
            for (int cc = 0; cc < block; ++cc)
                x[(c * block + r) * block + cc] = img.at(c, by * block + r, bx * block + cc);
}

void scatter_block(image::ImageTensor& img, int block, int by, int bx, const double* x) {
    for (int c = 0; c < 3; ++c)
        for (int r = 0; r < block; ++r)
            for (int cc = 0; cc < block; ++cc)
                img.at(c, by * block + r, bx * block + cc) = x[(c * block + r) * block + cc];
}

}  // namespace

CodecDescriptor make_block_dct(int height, int width, int l, int block) {
    check_geometry(height, width, block, l);
    CodecDescriptor d;
    d.kind = CodecKind::block_dct;
    d.height = height;
    d.width = width;
    d.block = block;
    d.l = l;
    return d;
}

CodecDescriptor make_trainable_linear(int height, int width, int l, int block, uint64_t seed) {
    check_geometry(height, width, block, l);
    CodecDescriptor d;
    d.kind = CodecKind::trainable_linear;
    d.height = height;
    d.width = width;
    d.block = block;
    d.l = l;
    const size_t dim = d.block_dim();
    const int m = d.l / d.blocks();
    d.w_enc.resize(static_cast<size_t>(m) * dim);
    d.w_dec.resize(static_cast<size_t>(m) * dim);
    check_linear(d);
    rng::Xoshiro256pp g(seed);
    const double lim = std::sqrt(6.0 / (dim + m));
    for (double& w : d.w_enc) w = (2.0 * g.uniform01() - 1.0) * lim;
    for (double& w : d.w_dec) w = (2.0 * g.uniform01() - 1.0) * lim;
    return d;
}

std::vector<double> codec_encode(const CodecDescriptor& desc, const image::ImageTensor& img) {
    if (img.height != desc.height || img.width != desc.width)
        throw std::runtime_error("codec_encode: image is " + std::to_string(img.height) + "x" +
                                 std::to_string(img.width) + ", descriptor expects " +
                                 std::to_string(desc.height) + "x" + std::to_string(desc.width));
    const image::ImageTensor padded = pad_to_blocks(img, desc.block);
    const int nb = desc.blocks(), b = desc.block;
    std::vector<double> code;
    code.reserve(desc.l);

    if (desc.kind == CodecKind::block_dct) {
        const int b2 = b * b;
        const int kept = (desc.l + 3 * nb - 1) / (3 * nb);
        if (kept > b2)
            throw std::runtime_error("codec_encode: code length exceeds available coefficients");
        const std::vector<double> cm = dct_matrix(b);
        const std::vector<int> zz = zigzag_order(b);
        // coefZ[(c*nb + blk)*kept + j]
        std::vector<double> coef_z(static_cast<size_t>(3) * nb * kept);
        std::vector<double> blk(b2), out(b2);
        for (int c = 0; c < 3; ++c) {
            int bi = 0;
            for (int by = 0; by < desc.blocks_y(); ++by) {
                for (int bx = 0; bx < desc.blocks_x(); ++bx, ++bi) {
                    for (int r = 0; r < b; ++r)
                        for (int cc = 0; cc < b; ++cc)
                            blk[r * b + cc] = padded.at(c, by * b + r, bx * b + cc);
                    dct2(cm, b, blk.data(), out.data(), true);
                    for (int j = 0; j < kept; ++j)
                        coef_z[(static_cast<size_t>(c) * nb + bi) * kept + j] = out[zz[j]];
                }
            }
        }
        // Coefficient-major emission keeps every block's lowest frequencies.
        for (int j = 0; j < kept && static_cast<int>(code.size()) < desc.l; ++j)
            for (int c = 0; c < 3 && static_cast<int>(code.size()) < desc.l; ++c)
                for (int bi = 0; bi < nb && static_cast<int>(code.size()) < desc.l; ++bi)
                    code.push_back(coef_z[(static_cast<size_t>(c) * nb + bi) * kept + j]);
        return code;
    }

    check_linear(desc);
    const int m = desc.per_block();
    const size_t dim = desc.block_dim();
    std::vector<double> x(dim);
    for (int by = 0; by < desc.blocks_y(); ++by) {
        for (int bx = 0; bx < desc.blocks_x(); ++bx) {
            gather_block(padded, b, by, bx, x.data());
            for (int i = 0; i < m; ++i) {
                double acc = 0.0;
                const double* row = &desc.w_enc[static_cast<size_t>(i) * dim];
                for (size_t t = 0; t < dim; ++t) acc += row[t] * x[t];
                code.push_back(acc);
            }
        }
    }
    return code;
}

image::ImageTensor codec_decode_raw(const CodecDescriptor& desc, const std::vector<double>& code) {
    if (static_cast<int>(code.size()) != desc.l)
        throw std::runtime_error("codec_decode: expected " + std::to_string(desc.l) +
                                 " code values, got " + std::to_string(code.size()));
    const int nb = desc.blocks(), b = desc.block;
    const int hp = desc.blocks_y() * b, wp = desc.blocks_x() * b;
    image::ImageTensor padded = image::ImageTensor::zeros(hp, wp);

    if (desc.kind == CodecKind::block_dct) {
        const int b2 = b * b;
        const int kept = (desc.l + 3 * nb - 1) / (3 * nb);
        const std::vector<double> cm = dct_matrix(b);
        const std::vector<int> zz = zigzag_order(b);
        std::vector<double> coef_z(static_cast<size_t>(3) * nb * kept, 0.0);
        size_t pos = 0;
        for (int j = 0; j < kept && pos < code.size(); ++j)
            for (int c = 0; c < 3 && pos < code.size(); ++c)
                for (int bi = 0; bi < nb && pos < code.size(); ++bi)
                    coef_z[(static_cast<size_t>(c) * nb + bi) * kept + j] = code[pos++];
        std::vector<double> blk(b2), out(b2);
        for (int c = 0; c < 3; ++c) {
            int bi = 0;
            for (int by = 0; by < desc.blocks_y(); ++by) {
                for (int bx = 0; bx < desc.blocks_x(); ++bx, ++bi) {
                    std::fill(blk.begin(), blk.end(), 0.0);
                    for (int j = 0; j < kept; ++j)
                        blk[zz[j]] = coef_z[(static_cast<size_t>(c) * nb + bi) * kept + j];
                    dct2(cm, b, blk.data(), out.data(), false);
                    for (int r = 0; r < b; ++r)
                        for (int cc = 0; cc < b; ++cc)
                            padded.at(c, by * b + r, bx * b + cc) = out[r * b + cc];
                }
            }
        }
        return crop(padded, desc.height, desc.width);
    }

    check_linear(desc);
    const int m = desc.per_block();
    const size_t dim = desc.block_dim();
    std::vector<double> x(dim);
    size_t pos = 0;
    for (int by = 0; by < desc.blocks_y(); ++by) {
        for (int bx = 0; bx < desc.blocks_x(); ++bx) {
            const double* y = &code[pos];
            pos += m;
            for (size_t t = 0; t < dim; ++t) {
                double acc = 0.0;
                const double* row = &desc.w_dec[t * m];
                for (int i = 0; i < m; ++i) acc += row[i] * y[i];
                x[t] = acc;
            }
            scatter_block(padded, b, by, bx, x.data());
        }
    }
    return crop(padded, desc.height, desc.width);
}

image::ImageTensor codec_decode(const CodecDescriptor& desc, const std::vector<double>& code) {
    image::ImageTensor img = codec_decode_raw(desc, code);
    for (double& v : img.data) v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
    return img;
}

namespace {
constexpr uint32_t kCodecMagic = 0x4D484357u;  // "MHCW"
constexpr uint32_t kCompressorMagic = 0x4D485243u;  // "MHRC"
constexpr uint16_t kWeightVersion = 1;
}  // namespace

void save_codec(const CodecDescriptor& desc, const std::string& path) {
    if (desc.kind != CodecKind::trainable_linear)
        throw std::runtime_error("save_codec: only the trainable codec has weights");
    check_linear(desc);
    std::vector<uint8_t> buf;
    wire::put_u32(buf, kCodecMagic);
    wire::put_u16(buf, kWeightVersion);
    wire::put_u16(buf, static_cast<uint16_t>(desc.block));
    wire::put_u16(buf, static_cast<uint16_t>(desc.height));
    wire::put_u16(buf, static_cast<uint16_t>(desc.width));
    wire::put_u32(buf, static_cast<uint32_t>(desc.w_enc.size() + desc.w_dec.size()));
    for (double v : desc.w_enc) wire::put_f64(buf, v);
    for (double v : desc.w_dec) wire::put_f64(buf, v);
    wire::write_file(path, buf);
}

CodecDescriptor load_codec(const std::string& path) {
    using namespace wire;
    const std::vector<uint8_t> buf = read_file(path);
    if (buf.size() < 16) throw std::runtime_error("codec weights " + path + ": truncated header");
    if (get_u32(&buf[0]) != kCodecMagic)
        throw std::runtime_error("codec weights " + path + ": bad magic");
    if (get_u16(&buf[4]) != kWeightVersion)
        throw std::runtime_error("codec weights " + path + ": unsupported version");
    const int block = get_u16(&buf[6]);
    const int height = get_u16(&buf[8]);
    const int width = get_u16(&buf[10]);
    const uint32_t count = get_u32(&buf[12]);

    CodecDescriptor d;
    d.kind = CodecKind::trainable_linear;
    d.height = height;
    d.width = width;
    d.block = block;
    const size_t dim = static_cast<size_t>(3) * block * block;
    if (count == 0 || count % (2 * dim) != 0)
        throw std::runtime_error("codec weights " + path + ": weight count mismatch");
    const int m = static_cast<int>(count / (2 * dim));
    d.l = m * d.blocks();
    if (buf.size() != 16 + static_cast<size_t>(count) * 8)
        throw std::runtime_error("codec weights " + path + ": truncated payload");
    d.w_enc.resize(static_cast<size_t>(m) * dim);
    d.w_dec.resize(static_cast<size_t>(m) * dim);
    const uint8_t* p = &buf[16];
    for (double& v : d.w_enc) {
        v = get_f64(p);
        p += 8;
    }
    for (double& v : d.w_dec) {
        v = get_f64(p);
        p += 8;
    }
    check_linear(d);
    return d;
}

ResidualCompressorDescriptor make_residual_compressor(int height, int width, int block, int q,
                                                      double range) {
    if (height < 1 || width < 1 || block < 1)
        throw std::runtime_error("residual compressor: bad geometry");
    if (q < 2) throw std::runtime_error("residual compressor: alphabet size must be >= 2");
    if (!(range > 0.0)) throw std::runtime_error("residual compressor: range must be positive");
    ResidualCompressorDescriptor d;
    d.height = height;
    d.width = width;
    d.block = block;
    d.q = q;
    d.range = range;
    d.pre_w.assign(static_cast<size_t>(block) * block, 1.0 / (block * block));
    d.post_w.assign(static_cast<size_t>(block) * block, 1.0);
    return d;
}

int32_t quantize_level(double c, int q, double range) {
    double cl = c < -range ? -range : (c > range ? range : c);
    return static_cast<int32_t>(std::lround((cl / range + 1.0) * (q - 1) / 2.0));
}

double dequantize_level(int32_t s, int q, double range) {
    return range * (2.0 * s / (q - 1) - 1.0);
}

entropy::SymbolGrid residual_compress(const ResidualCompressorDescriptor& desc,
                                      const image::ResidualTensor& r) {
    if (r.height != desc.height || r.width != desc.width)
        throw std::runtime_error("residual_compress: shape mismatch");
    const int d = desc.block;
    entropy::SymbolGrid grid = entropy::SymbolGrid::zeros(desc.q, desc.gu(), desc.gv());
    for (int c = 0; c < 3; ++c) {
        for (int uu = 0; uu < grid.u; ++uu) {
            for (int vv = 0; vv < grid.v; ++vv) {
                const int r0 = uu * d, r1 = std::min(desc.height, r0 + d);
                const int c0 = vv * d, c1 = std::min(desc.width, c0 + d);
                double acc = 0.0;
                for (int rr = r0; rr < r1; ++rr)
                    for (int cc = c0; cc < c1; ++cc)
                        acc += desc.pre_w[(rr - r0) * d + (cc - c0)] * r.at(c, rr, cc);
                // Partial edge blocks keep mean semantics for the defaults.
                const double scale = static_cast<double>(d * d) / ((r1 - r0) * (c1 - c0));
                grid.at(c, uu, vv) = quantize_level(acc * scale, desc.q, desc.range);
            }
        }
    }
    return grid;
}

image::ResidualTensor residual_decompress(const ResidualCompressorDescriptor& desc,
                                          const entropy::SymbolGrid& grid) {
    if (grid.u != desc.gu() || grid.v != desc.gv() || grid.q != desc.q)
        throw std::runtime_error("residual_decompress: grid mismatch");
    const int d = desc.block;
    image::ResidualTensor out = image::ImageTensor::zeros(desc.height, desc.width);
    for (int c = 0; c < 3; ++c) {
        for (int uu = 0; uu < grid.u; ++uu) {
            for (int vv = 0; vv < grid.v; ++vv) {
                const double val = dequantize_level(grid.at(c, uu, vv), desc.q, desc.range);
                const int r0 = uu * d, r1 = std::min(desc.height, r0 + d);
                const int c0 = vv * d, c1 = std::min(desc.width, c0 + d);
                for (int rr = r0; rr < r1; ++rr)
                    for (int cc = c0; cc < c1; ++cc)
                        out.at(c, rr, cc) = desc.post_w[(rr - r0) * d + (cc - c0)] * val;
            }
        }
    }
    return out;
}

void save_compressor(const ResidualCompressorDescriptor& desc, const std::string& path) {
    std::vector<uint8_t> buf;
    wire::put_u32(buf, kCompressorMagic);
    wire::put_u16(buf, kWeightVersion);
    wire::put_u16(buf, static_cast<uint16_t>(desc.block));
    wire::put_u16(buf, static_cast<uint16_t>(desc.q));
    wire::put_u16(buf, 0);
    wire::put_u32(buf, static_cast<uint32_t>(1 + desc.pre_w.size() + desc.post_w.size()));
    wire::put_f64(buf, desc.range);
    for (double v : desc.pre_w) wire::put_f64(buf, v);
    for (double v : desc.post_w) wire::put_f64(buf, v);
    wire::write_file(path, buf);
}

ResidualCompressorDescriptor load_compressor(const std::string& path, int height, int width) {
    using namespace wire;
    const std::vector<uint8_t> buf = read_file(path);
    if (buf.size() < 16) throw std::runtime_error("compressor weights " + path + ": truncated header");
    if (get_u32(&buf[0]) != kCompressorMagic)
        throw std::runtime_error("compressor weights " + path + ": bad magic");
    if (get_u16(&buf[4]) != kWeightVersion)
        throw std::runtime_error("compressor weights " + path + ": unsupported version");
    const int block = get_u16(&buf[6]);
    const int q = get_u16(&buf[8]);
    const uint32_t count = get_u32(&buf[12]);
    const size_t d2 = static_cast<size_t>(block) * block;
    if (count != 1 + 2 * d2)
        throw std::runtime_error("compressor weights " + path + ": weight count mismatch");
    if (buf.size() != 16 + static_cast<size_t>(count) * 8)
        throw std::runtime_error("compressor weights " + path + ": truncated payload");

    const uint8_t* p = &buf[16];
    ResidualCompressorDescriptor desc = make_residual_compressor(height, width, block, q,
                                                                 get_f64(p));
    p += 8;
    for (double& v : desc.pre_w) {
        v = get_f64(p);
        p += 8;
    }
    for (double& v : desc.post_w) {
        v = get_f64(p);
        p += 8;
    }
    return desc;
}

}  // namespace mhpsc::codec

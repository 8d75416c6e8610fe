#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mhpsc/entropy_model.hpp"
#include "mhpsc/image.hpp"

namespace mhpsc::codec {

enum class CodecKind { block_dct, trainable_linear };

// Lossy semantic codec over fixed source geometry. The code is a real vector
// of length l; both kinds are linear maps. block_dct emits coefficient-major
// (every block's DC first, then the next zigzag coefficient of every block);
// trainable_linear emits block-major (per-block code vectors contiguous).
struct CodecDescriptor {
    CodecKind kind = CodecKind::block_dct;
    int height = 0;
    int width = 0;
    int block = 8;
    int l = 0;

    // trainable_linear only: per-block matrices over the 3-channel flattened
    // block (dim = 3*block*block), row-major. w_enc is (m x dim), w_dec is
    // (dim x m) with m = l / blocks.
    std::vector<double> w_enc;
    std::vector<double> w_dec;

    int blocks_y() const { return (height + block - 1) / block; }
    int blocks_x() const { return (width + block - 1) / block; }
    int blocks() const { return blocks_y() * blocks_x(); }
    int block_dim() const { return 3 * block * block; }
    // Per-block code length of the trainable kind.
    int per_block() const { return l / blocks(); }
};

CodecDescriptor make_block_dct(int height, int width, int l, int block = 8);
// Seeded symmetric-uniform initialization of the per-block matrices.
CodecDescriptor make_trainable_linear(int height, int width, int l, int block, uint64_t seed);

std::vector<double> codec_encode(const CodecDescriptor& desc, const image::ImageTensor& img);
// Linear inverse with zeros for dropped coefficients; no range clamp.
image::ImageTensor codec_decode_raw(const CodecDescriptor& desc, const std::vector<double>& code);
// codec_decode_raw followed by clamping to [0,1].
image::ImageTensor codec_decode(const CodecDescriptor& desc, const std::vector<double>& code);

void save_codec(const CodecDescriptor& desc, const std::string& path);
CodecDescriptor load_codec(const std::string& path);

// Residual compressor: trainable linear pre/post transforms around a fixed
// uniform quantizer. Defaults reduce to d x d block mean, symmetric quantizer
// on [-range, range], bin-center dequantization, nearest-neighbor upsample.
struct ResidualCompressorDescriptor {
    int height = 0;
    int width = 0;
    int block = 8;      // downsample factor d
    int q = 7;          // symbol alphabet size
    double range = 0.8; // quantizer saturation

    std::vector<double> pre_w;   // block*block, init 1/d^2
    std::vector<double> post_w;  // block*block, init 1

    int gu() const { return (height + block - 1) / block; }
    int gv() const { return (width + block - 1) / block; }
};

ResidualCompressorDescriptor make_residual_compressor(int height, int width, int block, int q,
                                                      double range);

// clamp to [-range, range], then round to the nearest of q uniform levels.
int32_t quantize_level(double c, int q, double range);
double dequantize_level(int32_t s, int q, double range);

entropy::SymbolGrid residual_compress(const ResidualCompressorDescriptor& desc,
                                      const image::ResidualTensor& r);
image::ResidualTensor residual_decompress(const ResidualCompressorDescriptor& desc,
                                          const entropy::SymbolGrid& grid);

void save_compressor(const ResidualCompressorDescriptor& desc, const std::string& path);
ResidualCompressorDescriptor load_compressor(const std::string& path, int height, int width);

}  // namespace mhpsc::codec

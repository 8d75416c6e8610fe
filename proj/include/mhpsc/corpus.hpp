#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mhpsc/image.hpp"

namespace mhpsc::corpus {

// One synthetic training texture: a smoothed Gaussian random field (a few
// octaves of low-pass filtered noise) overlaid with random step edges, then
// normalized to [0,1]. Fully determined by (seed, index, size).
image::ImageTensor synth_image(uint64_t seed, int index, int height, int width);

std::vector<image::ImageTensor> synth_corpus(uint64_t seed, int count, int height, int width);

// Writes count PPM files named corpus_%04d.ppm into dir (created if needed);
// returns the file paths in index order.
std::vector<std::string> write_corpus(const std::string& dir, uint64_t seed, int count, int height,
                                      int width);

// Loads every .ppm in a directory (sorted by name) or a single image file.
std::vector<image::ImageTensor> load_dataset(const std::string& path);

}  // namespace mhpsc::corpus

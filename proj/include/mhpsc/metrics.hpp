#pragma once

#include "mhpsc/image.hpp"

namespace mhpsc::metrics {

// Mean squared error over all 3*H*W samples.
double mse(const image::ImageTensor& a, const image::ImageTensor& b);

// PSNR with peak 1.0; returns +infinity for identical inputs.
double psnr(const image::ImageTensor& a, const image::ImageTensor& b);

// Multi-scale SSIM, up to 5 scales with the standard weights
// (0.0448, 0.2856, 0.3001, 0.2363, 0.1333), an 11x11 Gaussian window with
// sigma 1.5, and the luminance term applied at the coarsest scale only.
// Images too small for 5 scales use as many scales as fit an 11-tap window,
// with the weights renormalized; min(H, W) must be at least 11.
// Computed per channel and averaged.
double ms_ssim(const image::ImageTensor& a, const image::ImageTensor& b);

}  // namespace mhpsc::metrics

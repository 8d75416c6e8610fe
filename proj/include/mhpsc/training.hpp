#pragma once

#include <cstdint>
#include <vector>

#include "mhpsc/codec.hpp"
#include "mhpsc/entropy_model.hpp"
#include "mhpsc/image.hpp"

namespace mhpsc::train {

// Channel treatment during training: per sampled realization the faded,
// MMSE-equalized link is an affine map of the code (gain g per symbol plus
// an additive term), so gradients are exact per sample and averaged over
// `realizations` fixed draws. The normalization scale is held constant
// (stop-gradient).
struct ChannelTrainConfig {
    double snr_db = 10.0;
    bool noiseless = false;
    bool awgn = false;
    uint64_t seed = 0;
    int realizations = 4;
};

struct TrainConfig {
    int hops = 4;
    double gamma = 1.15;
    int steps = 100;
    double lr = 1e-2;
    uint64_t seed = 1;
};

// (1/N) * sum_n gamma^(N-n) * mse_n for per-hop distortions mse_1..mse_N.
double weighted_hop_loss(const std::vector<double>& per_hop_mse, double gamma);

// Hop-weighted multi-hop distortion of the real (clamped, noisy) chain,
// averaged over the dataset: hop n's distortion compares its input to its
// output, and the output feeds hop n+1.
double recursive_loss(const std::vector<image::ImageTensor>& images,
                      const codec::CodecDescriptor& cdc, const ChannelTrainConfig& ch, int hops,
                      double gamma);

// The deterministic training objectives (raw linear decode, fixed channel
// draws); exposed so tests can check monotone descent independently.
double stage1_objective(const codec::CodecDescriptor& cdc,
                        const std::vector<image::ImageTensor>& images, const TrainConfig& cfg,
                        const ChannelTrainConfig& ch);
double stage2_objective(const codec::CodecDescriptor& frozen,
                        const codec::ResidualCompressorDescriptor& rc,
                        const std::vector<image::ImageTensor>& images, const TrainConfig& cfg,
                        const ChannelTrainConfig& ch);
double stage3_objective(const entropy::ResidualEstimator& est,
                        const std::vector<image::ImageTensor>& conditions,
                        const std::vector<entropy::SymbolGrid>& grids);

// Full-batch gradient descent on the hop-weighted recursive loss with the
// codec weights shared across hops. Backtracking halves the step whenever the
// objective would increase; loss > 10x initial aborts. Appends one objective
// value per accepted step to loss_curve (index 0 = initial).
codec::CodecDescriptor train_stage1(const codec::CodecDescriptor& init,
                                    const std::vector<image::ImageTensor>& images,
                                    const TrainConfig& cfg, const ChannelTrainConfig& ch,
                                    std::vector<double>* loss_curve);

// Trains the residual pre/post transforms around the fixed quantizer
// (straight-through gradient) on compensated outputs; the codec stays frozen.
codec::ResidualCompressorDescriptor train_stage2(const codec::CodecDescriptor& frozen,
                                                 const codec::ResidualCompressorDescriptor& init,
                                                 const std::vector<image::ImageTensor>& images,
                                                 const TrainConfig& cfg,
                                                 const ChannelTrainConfig& ch,
                                                 std::vector<double>* loss_curve);

// Single-hop condition/symbol pairs for estimator training, built with the
// real pipeline (clamped reconstruction, actual quantizer).
void stage3_dataset(const codec::CodecDescriptor& frozen,
                    const codec::ResidualCompressorDescriptor& frozen_rc,
                    const std::vector<image::ImageTensor>& images, const ChannelTrainConfig& ch,
                    std::vector<image::ImageTensor>* conditions,
                    std::vector<entropy::SymbolGrid>* grids);

// Gradient descent on the mixture negative log-likelihood (per-symbol nats)
// over single-hop pairs; stages 1-2 artifacts are inputs and stay frozen.
entropy::ResidualEstimator train_stage3(const codec::CodecDescriptor& frozen,
                                        const codec::ResidualCompressorDescriptor& frozen_rc,
                                        const entropy::ResidualEstimator& init,
                                        const std::vector<image::ImageTensor>& images,
                                        const TrainConfig& cfg, const ChannelTrainConfig& ch,
                                        std::vector<double>* loss_curve);

}  // namespace mhpsc::train

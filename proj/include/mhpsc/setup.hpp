#pragma once

#include <vector>

#include "mhpsc/config.hpp"
#include "mhpsc/image.hpp"
#include "mhpsc/pipeline.hpp"

namespace mhpsc::setup {

// Config -> runtime objects. All throw config::ConfigError when a referenced
// file is missing or a descriptor is inconsistent, naming the path.

codec::CodecDescriptor build_codec(const config::Config& cfg);

pipeline::ResidualStack build_residual_stack(const config::Config& cfg);

pipeline::RunConfig build_run_config(const config::Config& cfg);

pipeline::SweepConfig build_sweep_config(const config::Config& cfg);

// cfg.input images (file or directory) or the synthetic corpus; every image
// validated against the configured geometry.
std::vector<image::ImageTensor> load_input_images(const config::Config& cfg);

}  // namespace mhpsc::setup

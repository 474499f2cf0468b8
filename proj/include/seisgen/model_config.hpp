#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace seisgen::nets {

// Architecture hyperparameters. Paper-pinned pieces (latent 64 channels,
// 11-dim condition input, spectrogram geometry) are not configurable here.
struct ModelConfig {
    int d_cond = 256;
    int cond_hidden = 256;

    int unet_base = 64;
    std::vector<int> unet_mults = {1, 2, 4};
    int unet_res_blocks = 1;
    std::vector<int> attn_levels = {1, 2};  // the two coarsest resolutions
    int heads = 4;

    int vae_base = 16;
    int latent_channels = 64;

    bool use_acm = true;
    int acm_blocks = 8;
    int acm_width = 16;
    int acm_kernel = 15;
    int acm_heads = 4;

    std::string unet_act = "silu";
    std::string cond_act = "gelu";

    std::int64_t param_budget = 100000000;

    void validate() const;

    // Tiny configuration used by gradient checks and fast unit tests.
    static ModelConfig micro();
};

std::string model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const std::string& json_text);

}  // namespace seisgen::nets

#pragma once

#include <map>
#include <string>
#include <vector>

#include "seisgen/model_config.hpp"
#include "seisgen/tensor.hpp"

namespace seisgen::nets {

// Named float32 tensor archive (single binary file, versioned magic).
using TensorMap = std::map<std::string, Tensor<float>>;

void write_tensor_archive(const std::string& path, const TensorMap& tensors);
TensorMap read_tensor_archive(const std::string& path);

struct CheckpointMeta {
    int format_version = 1;
    std::string config_hash;  // hash of the model-config JSON
    ModelConfig model;
    double log_epsilon = 1e-5;
    int schedule_T = 1000;
    double beta_min = 1e-4;
    double beta_max = 0.02;
    long step = 0;
    long adam_step = 0;
    std::string objective = "end_to_end";
    bool standardized = false;  // ablation path: spectrogram standardization
    double stats_mean = 0.0;
    double stats_std = 1.0;
};

std::string model_config_hash(const ModelConfig& cfg);

// Directory layout: manifest.json + model.bin (+ optimizer.bin when present).
void save_checkpoint_meta(const std::string& dir, const CheckpointMeta& meta);
CheckpointMeta load_checkpoint_meta(const std::string& dir);  // verifies version + hash

}  // namespace seisgen::nets

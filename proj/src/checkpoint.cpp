#include "seisgen/checkpoint.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "seisgen/common.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace seisgen::nets {

namespace {
constexpr char kMagic[8] = {'S', 'G', 'C', 'K', 'P', 'T', '0', '1'};

template <typename T>
void write_pod(std::ofstream& f, const T& v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& f, const std::string& path) {
    T v;
    f.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!f) throw data_error("truncated tensor archive " + path);
    return v;
}
}  // namespace

void write_tensor_archive(const std::string& path, const TensorMap& tensors) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw data_error("cannot write " + path);
    f.write(kMagic, sizeof(kMagic));
    write_pod<std::uint64_t>(f, tensors.size());
    for (const auto& [name, t] : tensors) {
        write_pod<std::uint32_t>(f, static_cast<std::uint32_t>(name.size()));
        f.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_pod<std::uint32_t>(f, static_cast<std::uint32_t>(t.rank()));
        for (Index d : t.shape()) write_pod<std::uint64_t>(f, static_cast<std::uint64_t>(d));
        f.write(reinterpret_cast<const char*>(t.data()),
                static_cast<std::streamsize>(sizeof(float) * t.size()));
    }
    if (!f) throw data_error("failed writing " + path);
}

TensorMap read_tensor_archive(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw data_error("cannot open " + path);
    char magic[8];
    f.read(magic, sizeof(magic));
    if (!f || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw data_error(path + ": not a seisgen tensor archive");
    const auto n = read_pod<std::uint64_t>(f, path);
    TensorMap out;
    for (std::uint64_t i = 0; i < n; ++i) {
        const auto name_len = read_pod<std::uint32_t>(f, path);
        std::string name(name_len, '\0');
        f.read(name.data(), name_len);
        const auto rank = read_pod<std::uint32_t>(f, path);
        Shape shape(rank);
        for (auto& d : shape) d = static_cast<Index>(read_pod<std::uint64_t>(f, path));
        Tensor<float> t(shape);
        f.read(reinterpret_cast<char*>(t.data()),
               static_cast<std::streamsize>(sizeof(float) * t.size()));
        if (!f) throw data_error("truncated tensor archive " + path);
        out.emplace(std::move(name), std::move(t));
    }
    return out;
}

std::string model_config_hash(const ModelConfig& cfg) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a(model_config_to_json(cfg))));
    return buf;
}

void save_checkpoint_meta(const std::string& dir, const CheckpointMeta& meta) {
    json j;
    j["format_version"] = meta.format_version;
    j["config_hash"] = model_config_hash(meta.model);
    j["model"] = json::parse(model_config_to_json(meta.model));
    j["log_epsilon"] = meta.log_epsilon;
    j["schedule"] = {{"T", meta.schedule_T}, {"beta_min", meta.beta_min}, {"beta_max", meta.beta_max}};
    j["step"] = meta.step;
    j["adam_step"] = meta.adam_step;
    j["objective"] = meta.objective;
    j["standardized"] = meta.standardized;
    j["stats_mean"] = meta.stats_mean;
    j["stats_std"] = meta.stats_std;
    std::ofstream f(fs::path(dir) / "manifest.json");
    if (!f) throw data_error("cannot write manifest.json in " + dir);
    f << j.dump(2) << "\n";
}

CheckpointMeta load_checkpoint_meta(const std::string& dir) {
    std::ifstream f(fs::path(dir) / "manifest.json");
    if (!f) throw data_error("checkpoint " + dir + ": missing manifest.json");
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw data_error("checkpoint " + dir + ": bad manifest: " + e.what());
    }
    CheckpointMeta meta;
    meta.format_version = j.value("format_version", 0);
    if (meta.format_version != 1)
        throw data_error("checkpoint " + dir + ": unsupported format_version " +
                         std::to_string(meta.format_version));
    meta.model = model_config_from_json(j.at("model").dump());
    meta.config_hash = j.value("config_hash", "");
    if (meta.config_hash != model_config_hash(meta.model))
        throw data_error("checkpoint " + dir + ": config hash mismatch");
    meta.log_epsilon = j.value("log_epsilon", 1e-5);
    meta.schedule_T = j.at("schedule").value("T", 1000);
    meta.beta_min = j.at("schedule").value("beta_min", 1e-4);
    meta.beta_max = j.at("schedule").value("beta_max", 0.02);
    meta.step = j.value("step", 0L);
    meta.adam_step = j.value("adam_step", 0L);
    meta.objective = j.value("objective", "end_to_end");
    meta.standardized = j.value("standardized", false);
    meta.stats_mean = j.value("stats_mean", 0.0);
    meta.stats_std = j.value("stats_std", 1.0);
    return meta;
}

}  // namespace seisgen::nets

#include "seisgen/model_config.hpp"

#include <json.hpp>

#include "seisgen/common.hpp"

namespace seisgen::nets {

using nlohmann::json;

void ModelConfig::validate() const {
    auto positive = [](int v, const char* name) {
        if (v <= 0) throw config_error(std::string("model config: ") + name + " must be > 0");
    };
    positive(d_cond, "d_cond");
    positive(cond_hidden, "cond_hidden");
    positive(unet_base, "unet_base");
    positive(unet_res_blocks, "unet_res_blocks");
    positive(heads, "heads");
    positive(vae_base, "vae_base");
    positive(latent_channels, "latent_channels");
    positive(acm_blocks, "acm_blocks");
    positive(acm_width, "acm_width");
    positive(acm_heads, "acm_heads");
    if (unet_mults.empty()) throw config_error("model config: unet_mults must be nonempty");
    for (int m : unet_mults) positive(m, "unet_mults entry");
    for (int a : attn_levels)
        if (a < 0 || a >= static_cast<int>(unet_mults.size()))
            throw config_error("model config: attn_levels entry out of range");
    if (acm_kernel < 1 || acm_kernel % 2 == 0)
        throw config_error("model config: acm_kernel must be odd >= 1");
    if (d_cond % heads != 0 || unet_base % heads != 0)
        throw config_error("model config: head count must divide unet widths");
    if (acm_width % acm_heads != 0)
        throw config_error("model config: acm_heads must divide acm_width");
    if (unet_act != "silu" || (cond_act != "gelu" && cond_act != "silu"))
        throw config_error("model config: unsupported activation choice");
    if (param_budget <= 0) throw config_error("model config: param_budget must be > 0");
}

ModelConfig ModelConfig::micro() {
    ModelConfig c;
    c.d_cond = 16;
    c.cond_hidden = 16;
    c.unet_base = 8;
    c.unet_mults = {1, 2};
    c.unet_res_blocks = 1;
    c.attn_levels = {1};
    c.heads = 2;
    c.vae_base = 4;
    c.acm_blocks = 1;
    c.acm_width = 8;
    c.acm_kernel = 7;
    c.acm_heads = 2;
    return c;
}

std::string model_config_to_json(const ModelConfig& c) {
    json j;
    j["d_cond"] = c.d_cond;
    j["cond_hidden"] = c.cond_hidden;
    j["unet_base"] = c.unet_base;
    j["unet_mults"] = c.unet_mults;
    j["unet_res_blocks"] = c.unet_res_blocks;
    j["attn_levels"] = c.attn_levels;
    j["heads"] = c.heads;
    j["vae_base"] = c.vae_base;
    j["latent_channels"] = c.latent_channels;
    j["use_acm"] = c.use_acm;
    j["acm_blocks"] = c.acm_blocks;
    j["acm_width"] = c.acm_width;
    j["acm_kernel"] = c.acm_kernel;
    j["acm_heads"] = c.acm_heads;
    j["unet_act"] = c.unet_act;
    j["cond_act"] = c.cond_act;
    j["param_budget"] = c.param_budget;
    return j.dump(2);
}

ModelConfig model_config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw config_error(std::string("model config: invalid JSON: ") + e.what());
    }
    ModelConfig c;
    try {
        c.d_cond = j.value("d_cond", c.d_cond);
        c.cond_hidden = j.value("cond_hidden", c.cond_hidden);
        c.unet_base = j.value("unet_base", c.unet_base);
        c.unet_mults = j.value("unet_mults", c.unet_mults);
        c.unet_res_blocks = j.value("unet_res_blocks", c.unet_res_blocks);
        c.attn_levels = j.value("attn_levels", c.attn_levels);
        c.heads = j.value("heads", c.heads);
        c.vae_base = j.value("vae_base", c.vae_base);
        c.latent_channels = j.value("latent_channels", c.latent_channels);
        c.use_acm = j.value("use_acm", c.use_acm);
        c.acm_blocks = j.value("acm_blocks", c.acm_blocks);
        c.acm_width = j.value("acm_width", c.acm_width);
        c.acm_kernel = j.value("acm_kernel", c.acm_kernel);
        c.acm_heads = j.value("acm_heads", c.acm_heads);
        c.unet_act = j.value("unet_act", c.unet_act);
        c.cond_act = j.value("cond_act", c.cond_act);
        c.param_budget = j.value("param_budget", c.param_budget);
    } catch (const json::exception& e) {
        throw config_error(std::string("model config: bad field type: ") + e.what());
    }
    c.validate();
    return c;
}

}  // namespace seisgen::nets

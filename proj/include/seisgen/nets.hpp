#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "seisgen/graph.hpp"
#include "seisgen/model_config.hpp"

namespace seisgen::nets {

using nn::Graph;
using nn::Param;
using nn::Var;
using seisgen::Index;
using seisgen::Shape;
using seisgen::Tensor;

// Spectrogram / latent geometry, fixed by the preprocessing recipe.
inline constexpr Index kSpecChannels = 3;
inline constexpr Index kSpecFreq = 64;
inline constexpr Index kSpecFrames = 376;
inline constexpr Index kLatentFreq = 16;   // kSpecFreq / 4
inline constexpr Index kLatentFrames = 94;  // kSpecFrames / 4
inline constexpr Index kCondDim = 11;

inline int pick_groups(Index channels) {
    for (int g = 32; g > 1; --g)
        if (channels % g == 0) return g;
    return 1;
}

inline double softplus_inverse(double y) { return std::log(std::exp(y) - 1.0); }

// ---------------------------------------------------------------------------
// Layers
// ---------------------------------------------------------------------------

template <typename S>
struct Dense {
    Param<S> w, b;  // y = x @ w + b, w: [in, out]

    Dense() = default;
    Dense(const std::string& name, Index in, Index out, std::uint64_t seed, double gain = 2.0) {
        Tensor<S> wv = Tensor<S>::randn({in, out}, derive_seed(seed, fnv1a(name)));
        const S std = S(std::sqrt(gain / static_cast<double>(in)));
        wv.flat() *= std;
        w = Param<S>(name + ".w", std::move(wv));
        b = Param<S>(name + ".b", Tensor<S>({out}));
    }
    void zero_init() { w.value.setZero(); }
    Var<S> forward(Graph<S>& g, Var<S> x) {
        const Shape& sh = g.value_of(x.id).shape();
        if (sh.size() == 3) {
            Var<S> flat = nn::reshape(x, {sh[0] * sh[1], sh[2]});
            Var<S> y = nn::add_row_bias(nn::matmul(flat, g.param(w)), g.param(b));
            return nn::reshape(y, {sh[0], sh[1], w.value.dim(1)});
        }
        return nn::add_row_bias(nn::matmul(x, g.param(w)), g.param(b));
    }
    void collect(std::vector<Param<S>*>& out) {
        out.push_back(&w);
        out.push_back(&b);
    }
};

template <typename S>
struct Conv2dLayer {
    Param<S> w, b;  // w: [out, in, k, k]
    int stride = 1, pad = 1;

    Conv2dLayer() = default;
    Conv2dLayer(const std::string& name, Index in, Index out, int k, int stride_, std::uint64_t seed)
        : stride(stride_), pad(k / 2) {
        Tensor<S> wv = Tensor<S>::randn({out, in, k, k}, derive_seed(seed, fnv1a(name)));
        const S std = S(std::sqrt(2.0 / static_cast<double>(in * k * k)));
        wv.flat() *= std;
        w = Param<S>(name + ".w", std::move(wv));
        b = Param<S>(name + ".b", Tensor<S>({out}));
    }
    void zero_init() { w.value.setZero(); }
    Var<S> forward(Graph<S>& g, Var<S> x) { return nn::conv2d(x, g.param(w), g.param(b), stride, pad); }
    void collect(std::vector<Param<S>*>& out) {
        out.push_back(&w);
        out.push_back(&b);
    }
};

template <typename S>
struct GroupNormLayer {
    Param<S> gamma, beta;
    int groups = 1;

    GroupNormLayer() = default;
    GroupNormLayer(const std::string& name, Index channels)
        : gamma(name + ".gamma", Tensor<S>::ones({channels})),
          beta(name + ".beta", Tensor<S>({channels})),
          groups(pick_groups(channels)) {}
    Var<S> forward(Graph<S>& g, Var<S> x) {
        return nn::group_norm(x, g.param(gamma), g.param(beta), groups);
    }
    void collect(std::vector<Param<S>*>& out) {
        out.push_back(&gamma);
        out.push_back(&beta);
    }
};

template <typename S>
struct LayerNormLayer {
    Param<S> gamma, beta;

    LayerNormLayer() = default;
    LayerNormLayer(const std::string& name, Index dim)
        : gamma(name + ".gamma", Tensor<S>::ones({dim})), beta(name + ".beta", Tensor<S>({dim})) {}
    Var<S> forward(Graph<S>& g, Var<S> x) {
        return nn::layer_norm(x, g.param(gamma), g.param(beta));
    }
    void collect(std::vector<Param<S>*>& out) {
        out.push_back(&gamma);
        out.push_back(&beta);
    }
};

// Multi-head attention over rank-3 sequences [B, T, C]; keys/values may come
// from a different source (cross attention) with its own feature width.
template <typename S>
struct MultiheadAttention {
    Dense<S> q, k, v, o;
    int heads = 1;

    MultiheadAttention() = default;
    MultiheadAttention(const std::string& name, Index dim, Index kv_dim, int heads_,
                       std::uint64_t seed)
        : q(name + ".q", dim, dim, seed, 1.0),
          k(name + ".k", kv_dim, dim, seed, 1.0),
          v(name + ".v", kv_dim, dim, seed, 1.0),
          o(name + ".o", dim, dim, seed, 1.0),
          heads(heads_) {}

    Var<S> forward(Graph<S>& g, Var<S> xq, Var<S> xkv) {
        const Shape& qs = g.value_of(xq.id).shape();
        const Shape& ks = g.value_of(xkv.id).shape();
        const Index bsz = qs[0], tq = qs[1], c = q.w.value.dim(1);
        const Index tk = ks[1];
        const Index dh = c / heads;
        auto split = [&](Var<S> t, Index tt) {
            // [B,T,C] -> [B*h, T, dh]
            Var<S> r = nn::reshape(t, {bsz, tt, heads, dh});
            r = nn::permute(r, {0, 2, 1, 3});
            return nn::reshape(r, {bsz * heads, tt, dh});
        };
        Var<S> qq = split(q.forward(g, xq), tq);
        Var<S> kk = split(k.forward(g, xkv), tk);
        Var<S> vv = split(v.forward(g, xkv), tk);
        Var<S> scores = nn::scale(nn::bmm(qq, nn::permute(kk, {0, 2, 1})),
                                  S(1.0 / std::sqrt(static_cast<double>(dh))));
        Var<S> attn = nn::softmax_last(scores);
        Var<S> ctx = nn::bmm(attn, vv);  // [B*h, T, dh]
        ctx = nn::reshape(ctx, {bsz, heads, tq, dh});
        ctx = nn::permute(ctx, {0, 2, 1, 3});
        ctx = nn::reshape(ctx, {bsz, tq, c});
        return o.forward(g, ctx);
    }
    void collect(std::vector<Param<S>*>& out) {
        q.collect(out);
        k.collect(out);
        v.collect(out);
        o.collect(out);
    }
};

template <typename S>
struct FeedForward {
    Dense<S> in, out;

    FeedForward() = default;
    FeedForward(const std::string& name, Index dim, Index hidden, std::uint64_t seed)
        : in(name + ".in", dim, hidden, seed), out(name + ".out", hidden, dim, seed) {}
    Var<S> forward(Graph<S>& g, Var<S> x) { return out.forward(g, nn::gelu(in.forward(g, x))); }
    void collect(std::vector<Param<S>*>& p) {
        in.collect(p);
        out.collect(p);
    }
};

// Self-attention + cross-attention + feed-forward over flattened feature-map
// tokens; the conditioning embedding enters as the key/value sequence.
template <typename S>
struct TransformerBlock {
    LayerNormLayer<S> ln1, ln2, ln3;
    MultiheadAttention<S> self_attn, cross_attn;
    FeedForward<S> ff;

    TransformerBlock() = default;
    TransformerBlock(const std::string& name, Index dim, Index d_cond, int heads,
                     std::uint64_t seed)
        : ln1(name + ".ln1", dim),
          ln2(name + ".ln2", dim),
          ln3(name + ".ln3", dim),
          self_attn(name + ".sa", dim, dim, heads, seed),
          cross_attn(name + ".ca", dim, d_cond, heads, seed),
          ff(name + ".ff", dim, 4 * dim, seed) {}

    Var<S> forward(Graph<S>& g, Var<S> x, Var<S> cond) {
        Var<S> h = ln1.forward(g, x);
        x = nn::add(x, self_attn.forward(g, h, h));
        x = nn::add(x, cross_attn.forward(g, ln2.forward(g, x), cond));
        x = nn::add(x, ff.forward(g, ln3.forward(g, x)));
        return x;
    }
    void collect(std::vector<Param<S>*>& p) {
        ln1.collect(p);
        ln2.collect(p);
        ln3.collect(p);
        self_attn.collect(p);
        cross_attn.collect(p);
        ff.collect(p);
    }
};

// Feature-map wrapper around TransformerBlock: [C,H,W] <-> [1,HW,C] tokens,
// with a zero-initialized output projection so the block starts as identity.
template <typename S>
struct AttnBlock {
    GroupNormLayer<S> gn;
    Dense<S> proj_in, proj_out;
    TransformerBlock<S> block;

    AttnBlock() = default;
    AttnBlock(const std::string& name, Index channels, Index d_cond, int heads, std::uint64_t seed)
        : gn(name + ".gn", channels),
          proj_in(name + ".proj_in", channels, channels, seed, 1.0),
          proj_out(name + ".proj_out", channels, channels, seed, 1.0),
          block(name + ".tb", channels, d_cond, heads, seed) {
        proj_out.zero_init();
    }

    Var<S> forward(Graph<S>& g, Var<S> x, Var<S> cond) {
        const Shape& sh = g.value_of(x.id).shape();
        const Index c = sh[0], h = sh[1], w = sh[2];
        Var<S> t = gn.forward(g, x);
        t = nn::reshape(t, {c, h * w});
        t = nn::permute(t, {1, 0});
        t = nn::reshape(t, {Index(1), h * w, c});
        t = proj_in.forward(g, t);
        t = block.forward(g, t, cond);
        t = proj_out.forward(g, t);
        t = nn::reshape(t, {h * w, c});
        t = nn::permute(t, {1, 0});
        t = nn::reshape(t, {c, h, w});
        return nn::add(x, t);
    }
    void collect(std::vector<Param<S>*>& p) {
        gn.collect(p);
        proj_in.collect(p);
        proj_out.collect(p);
        block.collect(p);
    }
};

template <typename S>
struct ResBlock {
    GroupNormLayer<S> gn1, gn2;
    Conv2dLayer<S> conv1, conv2;
    Dense<S> emb_proj;           // optional time-embedding injection
    Conv2dLayer<S> skip;         // 1x1 when channel count changes
    bool has_emb = false, has_skip = false;

    ResBlock() = default;
    ResBlock(const std::string& name, Index in, Index out, Index time_dim, std::uint64_t seed)
        : gn1(name + ".gn1", in),
          gn2(name + ".gn2", out),
          conv1(name + ".conv1", in, out, 3, 1, seed),
          conv2(name + ".conv2", out, out, 3, 1, seed),
          has_emb(time_dim > 0),
          has_skip(in != out) {
        if (has_emb) emb_proj = Dense<S>(name + ".emb", time_dim, out, seed);
        if (has_skip) skip = Conv2dLayer<S>(name + ".skip", in, out, 1, 1, seed);
    }

    Var<S> forward(Graph<S>& g, Var<S> x, std::optional<Var<S>> emb = std::nullopt) {
        Var<S> h = conv1.forward(g, nn::silu(gn1.forward(g, x)));
        if (has_emb && emb) {
            Var<S> e = emb_proj.forward(g, nn::silu(*emb));  // [1, out]
            e = nn::reshape(e, {emb_proj.w.value.dim(1)});
            h = nn::add_chan_bias(h, e);
        }
        h = conv2.forward(g, nn::silu(gn2.forward(g, h)));
        Var<S> s = has_skip ? skip.forward(g, x) : x;
        return nn::add(s, h);
    }
    void collect(std::vector<Param<S>*>& p) {
        gn1.collect(p);
        gn2.collect(p);
        conv1.collect(p);
        conv2.collect(p);
        if (has_emb) emb_proj.collect(p);
        if (has_skip) skip.collect(p);
    }
};

// ---------------------------------------------------------------------------
// Condition encoder tau_theta: 11 -> d_cond through a 5-layer FFN.
// ---------------------------------------------------------------------------

template <typename S>
struct CondEncoder {
    std::vector<Dense<S>> layers;

    CondEncoder() = default;
    CondEncoder(const ModelConfig& cfg, std::uint64_t seed) {
        const Index h = cfg.cond_hidden;
        const std::vector<std::pair<Index, Index>> dims = {
            {kCondDim, h}, {h, h}, {h, h}, {h, h}, {h, cfg.d_cond}};
        for (size_t i = 0; i < dims.size(); ++i)
            layers.emplace_back("tau.fc" + std::to_string(i), dims[i].first, dims[i].second, seed);
    }
    // c: [1, 11] -> [1, d_cond]
    Var<S> forward(Graph<S>& g, Var<S> c) {
        Var<S> h = c;
        for (size_t i = 0; i < layers.size(); ++i) {
            h = layers[i].forward(g, h);
            if (i + 1 < layers.size()) h = nn::gelu(h);
        }
        return h;
    }
    void collect(std::vector<Param<S>*>& p) {
        for (auto& l : layers) l.collect(p);
    }
};

// ---------------------------------------------------------------------------
// Autoencoder
// ---------------------------------------------------------------------------

template <typename S>
struct VaeEncoder {
    Conv2dLayer<S> conv_in, down1, down2, head_mean, head_logvar;
    ResBlock<S> res1, res2;
    GroupNormLayer<S> gn_out;

    VaeEncoder() = default;
    VaeEncoder(const ModelConfig& cfg, std::uint64_t seed) {
        const Index w = cfg.vae_base;
        conv_in = Conv2dLayer<S>("enc.conv_in", kSpecChannels, w, 3, 1, seed);
        down1 = Conv2dLayer<S>("enc.down1", w, 2 * w, 3, 2, seed);
        res1 = ResBlock<S>("enc.res1", 2 * w, 2 * w, 0, seed);
        down2 = Conv2dLayer<S>("enc.down2", 2 * w, 4 * w, 3, 2, seed);
        res2 = ResBlock<S>("enc.res2", 4 * w, 4 * w, 0, seed);
        gn_out = GroupNormLayer<S>("enc.gn_out", 4 * w);
        head_mean = Conv2dLayer<S>("enc.mean", 4 * w, cfg.latent_channels, 3, 1, seed);
        head_logvar = Conv2dLayer<S>("enc.logvar", 4 * w, cfg.latent_channels, 3, 1, seed);
    }

    std::pair<Var<S>, Var<S>> forward(Graph<S>& g, Var<S> spec) {
        Var<S> h = conv_in.forward(g, spec);
        h = down1.forward(g, h);
        h = res1.forward(g, h);
        h = down2.forward(g, h);
        h = res2.forward(g, h);
        h = nn::silu(gn_out.forward(g, h));
        return {head_mean.forward(g, h), head_logvar.forward(g, h)};
    }
    void collect(std::vector<Param<S>*>& p) {
        conv_in.collect(p);
        down1.collect(p);
        res1.collect(p);
        down2.collect(p);
        res2.collect(p);
        gn_out.collect(p);
        head_mean.collect(p);
        head_logvar.collect(p);
    }
};

template <typename S>
struct VaeDecoder {
    Conv2dLayer<S> conv_in, up1_conv, up2_conv, conv_out;
    ResBlock<S> res1, res2, res3;
    GroupNormLayer<S> gn_out;

    VaeDecoder() = default;
    VaeDecoder(const ModelConfig& cfg, std::uint64_t seed) {
        const Index w = cfg.vae_base;
        conv_in = Conv2dLayer<S>("dec.conv_in", cfg.latent_channels, 4 * w, 3, 1, seed);
        res1 = ResBlock<S>("dec.res1", 4 * w, 4 * w, 0, seed);
        up1_conv = Conv2dLayer<S>("dec.up1", 4 * w, 2 * w, 3, 1, seed);
        res2 = ResBlock<S>("dec.res2", 2 * w, 2 * w, 0, seed);
        up2_conv = Conv2dLayer<S>("dec.up2", 2 * w, w, 3, 1, seed);
        res3 = ResBlock<S>("dec.res3", w, w, 0, seed);
        gn_out = GroupNormLayer<S>("dec.gn_out", w);
        conv_out = Conv2dLayer<S>("dec.conv_out", w, kSpecChannels, 3, 1, seed);
    }

    Var<S> forward(Graph<S>& g, Var<S> z) {
        Var<S> h = conv_in.forward(g, z);
        h = res1.forward(g, h);
        h = up1_conv.forward(g, nn::upsample_nearest2x(h));
        h = res2.forward(g, h);
        h = up2_conv.forward(g, nn::upsample_nearest2x(h));
        h = res3.forward(g, h);
        h = nn::silu(gn_out.forward(g, h));
        return conv_out.forward(g, h);
    }
    void collect(std::vector<Param<S>*>& p) {
        conv_in.collect(p);
        res1.collect(p);
        up1_conv.collect(p);
        res2.collect(p);
        up2_conv.collect(p);
        res3.collect(p);
        gn_out.collect(p);
        conv_out.collect(p);
    }
};

// ---------------------------------------------------------------------------
// U-Net denoiser body of m_theta (x0-prediction in latent space)
// ---------------------------------------------------------------------------

template <typename S>
Tensor<S> timestep_embedding(int t, Index dim) {
    Tensor<S> e({Index(1), dim});
    const Index half = dim / 2;
    for (Index i = 0; i < half; ++i) {
        const double freq = std::exp(-std::log(10000.0) * static_cast<double>(i) /
                                     static_cast<double>(half));
        e[i] = S(std::cos(t * freq));
        e[half + i] = S(std::sin(t * freq));
    }
    return e;
}

template <typename S>
struct UNet {
    ModelConfig cfg;
    Dense<S> time_fc1, time_fc2;
    Conv2dLayer<S> conv_in, conv_out;
    GroupNormLayer<S> gn_out;
    std::vector<ResBlock<S>> down_res;              // levels x res_blocks
    std::vector<AttnBlock<S>> down_attn;            // one per attn level
    std::vector<Conv2dLayer<S>> downsample;         // levels-1
    ResBlock<S> mid1, mid2;
    AttnBlock<S> mid_attn;
    std::vector<ResBlock<S>> up_res;
    std::vector<AttnBlock<S>> up_attn;
    std::vector<Conv2dLayer<S>> upsample;
    std::vector<int> down_attn_at, up_attn_at;  // level index -> attn array slot or -1

    UNet() = default;
    UNet(const ModelConfig& cfg_, std::uint64_t seed) : cfg(cfg_) {
        const Index base = cfg.unet_base;
        const Index tdim = 4 * base;
        const int levels = static_cast<int>(cfg.unet_mults.size());
        time_fc1 = Dense<S>("unet.time1", base, tdim, seed);
        time_fc2 = Dense<S>("unet.time2", tdim, tdim, seed);
        conv_in = Conv2dLayer<S>("unet.conv_in", cfg.latent_channels, base, 3, 1, seed);

        auto has_attn = [&](int l) {
            for (int a : cfg.attn_levels)
                if (a == l) return true;
            return false;
        };

        Index ch = base;
        down_attn_at.assign(levels, -1);
        up_attn_at.assign(levels, -1);
        for (int l = 0; l < levels; ++l) {
            const Index out = base * cfg.unet_mults[static_cast<size_t>(l)];
            for (int rbi = 0; rbi < cfg.unet_res_blocks; ++rbi) {
                down_res.emplace_back("unet.down" + std::to_string(l) + ".res" + std::to_string(rbi),
                                      rbi == 0 ? ch : out, out, tdim, seed);
            }
            ch = out;
            if (has_attn(l)) {
                down_attn_at[static_cast<size_t>(l)] = static_cast<int>(down_attn.size());
                down_attn.emplace_back("unet.down" + std::to_string(l) + ".attn", ch, cfg.d_cond,
                                       cfg.heads, seed);
            }
            if (l + 1 < levels)
                downsample.emplace_back("unet.down" + std::to_string(l) + ".ds", ch, ch, 3, 2, seed);
        }
        mid1 = ResBlock<S>("unet.mid.res1", ch, ch, tdim, seed);
        mid_attn = AttnBlock<S>("unet.mid.attn", ch, cfg.d_cond, cfg.heads, seed);
        mid2 = ResBlock<S>("unet.mid.res2", ch, ch, tdim, seed);

        for (int l = levels - 1; l >= 0; --l) {
            const Index out = base * cfg.unet_mults[static_cast<size_t>(l)];
            for (int rbi = 0; rbi < cfg.unet_res_blocks; ++rbi) {
                const Index in = rbi == 0 ? ch + out : out;  // first block eats the skip concat
                up_res.emplace_back("unet.up" + std::to_string(l) + ".res" + std::to_string(rbi), in,
                                    out, tdim, seed);
            }
            ch = out;
            if (has_attn(l)) {
                up_attn_at[static_cast<size_t>(l)] = static_cast<int>(up_attn.size());
                up_attn.emplace_back("unet.up" + std::to_string(l) + ".attn", ch, cfg.d_cond,
                                     cfg.heads, seed);
            }
            if (l > 0)
                upsample.emplace_back("unet.up" + std::to_string(l) + ".us", ch, ch, 3, 1, seed);
        }
        gn_out = GroupNormLayer<S>("unet.gn_out", ch);
        conv_out = Conv2dLayer<S>("unet.conv_out", ch, cfg.latent_channels, 3, 1, seed);
        conv_out.zero_init();
    }

    // z: [latent_channels, 16, 94], cond tokens: [1, 1, d_cond], 1 <= t <= T.
    Var<S> forward(Graph<S>& g, Var<S> z, Var<S> cond, int t) {
        const int levels = static_cast<int>(cfg.unet_mults.size());
        Var<S> emb = g.constant(timestep_embedding<S>(t, cfg.unet_base));
        emb = time_fc2.forward(g, nn::silu(time_fc1.forward(g, emb)));

        Var<S> h = conv_in.forward(g, z);
        std::vector<Var<S>> skips;
        std::vector<std::pair<Index, Index>> sizes;
        int dri = 0;
        for (int l = 0; l < levels; ++l) {
            for (int rbi = 0; rbi < cfg.unet_res_blocks; ++rbi)
                h = down_res[static_cast<size_t>(dri++)].forward(g, h, emb);
            if (down_attn_at[static_cast<size_t>(l)] >= 0)
                h = down_attn[static_cast<size_t>(down_attn_at[static_cast<size_t>(l)])].forward(
                    g, h, cond);
            skips.push_back(h);
            sizes.emplace_back(g.value_of(h.id).dim(1), g.value_of(h.id).dim(2));
            if (l + 1 < levels) h = downsample[static_cast<size_t>(l)].forward(g, h);
        }

        h = mid1.forward(g, h, emb);
        h = mid_attn.forward(g, h, cond);
        h = mid2.forward(g, h, emb);

        int uri = 0, usi = 0;
        for (int l = levels - 1; l >= 0; --l) {
            h = nn::concat_ch(h, skips[static_cast<size_t>(l)]);
            for (int rbi = 0; rbi < cfg.unet_res_blocks; ++rbi)
                h = up_res[static_cast<size_t>(uri++)].forward(g, h, emb);
            if (up_attn_at[static_cast<size_t>(l)] >= 0)
                h = up_attn[static_cast<size_t>(up_attn_at[static_cast<size_t>(l)])].forward(g, h,
                                                                                             cond);
            if (l > 0) {
                h = upsample[static_cast<size_t>(usi++)].forward(g, nn::upsample_nearest2x(h));
                h = nn::crop_hw(h, sizes[static_cast<size_t>(l - 1)].first,
                                sizes[static_cast<size_t>(l - 1)].second);
            }
        }
        h = nn::silu(gn_out.forward(g, h));
        return conv_out.forward(g, h);
    }

    void collect(std::vector<Param<S>*>& p) {
        time_fc1.collect(p);
        time_fc2.collect(p);
        conv_in.collect(p);
        for (auto& m : down_res) m.collect(p);
        for (auto& m : down_attn) m.collect(p);
        for (auto& m : downsample) m.collect(p);
        mid1.collect(p);
        mid_attn.collect(p);
        mid2.collect(p);
        for (auto& m : up_res) m.collect(p);
        for (auto& m : up_attn) m.collect(p);
        for (auto& m : upsample) m.collect(p);
        gn_out.collect(p);
        conv_out.collect(p);
    }
};

// ---------------------------------------------------------------------------
// Amplitude correction module (ACM)
// ---------------------------------------------------------------------------

// One conformer pass over sequences [B, T, C].
template <typename S>
struct ConformerStage {
    LayerNormLayer<S> ln_ff1, ln_attn, ln_conv, ln_ff2, ln_out;
    FeedForward<S> ff1, ff2;
    MultiheadAttention<S> attn;
    Dense<S> conv_pw1, conv_gate, conv_pw2;
    Param<S> dw_w, dw_b;
    int kernel = 15;

    ConformerStage() = default;
    ConformerStage(const std::string& name, Index dim, int heads, int kernel_, std::uint64_t seed)
        : ln_ff1(name + ".ln_ff1", dim),
          ln_attn(name + ".ln_attn", dim),
          ln_conv(name + ".ln_conv", dim),
          ln_ff2(name + ".ln_ff2", dim),
          ln_out(name + ".ln_out", dim),
          ff1(name + ".ff1", dim, 4 * dim, seed),
          ff2(name + ".ff2", dim, 4 * dim, seed),
          attn(name + ".attn", dim, dim, heads, seed),
          conv_pw1(name + ".pw1", dim, dim, seed),
          conv_gate(name + ".gate", dim, dim, seed),
          conv_pw2(name + ".pw2", dim, dim, seed),
          kernel(kernel_) {
        Tensor<S> w = Tensor<S>::randn({Index(kernel_), dim}, derive_seed(seed, fnv1a(name + ".dw")));
        w.flat() *= S(std::sqrt(2.0 / kernel_));
        dw_w = Param<S>(name + ".dw.w", std::move(w));
        dw_b = Param<S>(name + ".dw.b", Tensor<S>({dim}));
    }

    Var<S> forward(Graph<S>& g, Var<S> x) {
        x = nn::add(x, nn::scale(ff1.forward(g, ln_ff1.forward(g, x)), S(0.5)));
        Var<S> a = ln_attn.forward(g, x);
        x = nn::add(x, attn.forward(g, a, a));
        // conv module: gated pointwise -> depthwise -> pointwise
        Var<S> c = ln_conv.forward(g, x);
        c = nn::mul(conv_pw1.forward(g, c), nn::sigmoid(conv_gate.forward(g, c)));
        c = nn::depthwise_conv1d(c, g.param(dw_w), g.param(dw_b));
        c = conv_pw2.forward(g, nn::silu(c));
        x = nn::add(x, c);
        x = nn::add(x, nn::scale(ff2.forward(g, ln_ff2.forward(g, x)), S(0.5)));
        return ln_out.forward(g, x);
    }
    void collect(std::vector<Param<S>*>& p) {
        ln_ff1.collect(p);
        ln_attn.collect(p);
        ln_conv.collect(p);
        ln_ff2.collect(p);
        ln_out.collect(p);
        ff1.collect(p);
        ff2.collect(p);
        attn.collect(p);
        conv_pw1.collect(p);
        conv_gate.collect(p);
        conv_pw2.collect(p);
        p.push_back(&dw_w);
        p.push_back(&dw_b);
    }
};

// Two-stage block: conformer along time for every frequency row, then along
// frequency for every frame.
template <typename S>
struct TsConformerBlock {
    ConformerStage<S> time_stage, freq_stage;

    TsConformerBlock() = default;
    TsConformerBlock(const std::string& name, Index dim, int heads, int kernel, std::uint64_t seed)
        : time_stage(name + ".time", dim, heads, kernel, seed),
          freq_stage(name + ".freq", dim, heads, kernel, seed) {}

    // x: [C, F, T]
    Var<S> forward(Graph<S>& g, Var<S> x) {
        Var<S> t = nn::permute(x, {1, 2, 0});  // [F, T, C]
        t = time_stage.forward(g, t);
        Var<S> f = nn::permute(t, {1, 0, 2});  // [T, F, C]
        f = freq_stage.forward(g, f);
        return nn::permute(f, {2, 1, 0});  // [C, F, T]
    }
    void collect(std::vector<Param<S>*>& p) {
        time_stage.collect(p);
        freq_stage.collect(p);
    }
};

// Predicts a strictly positive multiplicative amplitude mask from the decoded
// log-amplitude spectrogram and an auxiliary phase spectrogram; Softplus lets
// the mask exceed 1 so amplitudes can be amplified, not only reduced.
template <typename S>
struct Acm {
    Conv2dLayer<S> enc1, enc2, dec1, mask_head;
    GroupNormLayer<S> gn1, gn2, gn3;
    std::vector<TsConformerBlock<S>> blocks;
    double log_epsilon = 1e-5;

    Acm() = default;
    Acm(const ModelConfig& cfg, double log_eps, std::uint64_t seed) : log_epsilon(log_eps) {
        const Index d = cfg.acm_width;
        enc1 = Conv2dLayer<S>("acm.enc1", 2 * kSpecChannels, d, 3, 1, seed);
        gn1 = GroupNormLayer<S>("acm.gn1", d);
        enc2 = Conv2dLayer<S>("acm.enc2", d, d, 3, 1, seed);
        gn2 = GroupNormLayer<S>("acm.gn2", d);
        for (int i = 0; i < cfg.acm_blocks; ++i)
            blocks.emplace_back("acm.block" + std::to_string(i), d, cfg.acm_heads, cfg.acm_kernel,
                                seed);
        dec1 = Conv2dLayer<S>("acm.dec1", d, d, 3, 1, seed);
        gn3 = GroupNormLayer<S>("acm.gn3", d);
        mask_head = Conv2dLayer<S>("acm.mask", d, kSpecChannels, 1, 1, seed);
        // identity start: softplus(bias) == 1 with zero weights
        mask_head.zero_init();
        mask_head.b.value.flat().setConstant(S(softplus_inverse(1.0)));
    }

    Var<S> mask(Graph<S>& g, Var<S> log_amp, Var<S> phase) {
        Var<S> h = nn::concat_ch(log_amp, phase);
        h = nn::silu(gn1.forward(g, enc1.forward(g, h)));
        h = nn::silu(gn2.forward(g, enc2.forward(g, h)));
        for (auto& b : blocks) h = b.forward(g, h);
        h = nn::silu(gn3.forward(g, dec1.forward(g, h)));
        return nn::softplus(mask_head.forward(g, h));
    }

    // log(|S|+eps) -> log(|S|*mask + eps)
    Var<S> forward(Graph<S>& g, Var<S> log_amp, Var<S> phase) {
        Var<S> m = mask(g, log_amp, phase);
        Var<S> amp = nn::clamp_min(nn::add_scalar(nn::exp_(log_amp), S(-log_epsilon)), S(0));
        return nn::log_offset(nn::mul(amp, m), S(log_epsilon));
    }
    void collect(std::vector<Param<S>*>& p) {
        enc1.collect(p);
        gn1.collect(p);
        enc2.collect(p);
        gn2.collect(p);
        for (auto& b : blocks) b.collect(p);
        dec1.collect(p);
        gn3.collect(p);
        mask_head.collect(p);
    }
};

// Small hinge-loss patch critic for the VAE-pretraining (ablation) objective.
template <typename S>
struct PatchDiscriminator {
    Conv2dLayer<S> c1, c2, c3, head;
    GroupNormLayer<S> gn2, gn3;

    PatchDiscriminator() = default;
    PatchDiscriminator(int width, std::uint64_t seed)
        : c1("disc.c1", kSpecChannels, width, 3, 2, seed),
          c2("disc.c2", width, 2 * width, 3, 2, seed),
          c3("disc.c3", 2 * width, 2 * width, 3, 2, seed),
          head("disc.head", 2 * width, 1, 1, 1, seed),
          gn2("disc.gn2", 2 * width),
          gn3("disc.gn3", 2 * width) {}

    // per-patch logits
    Var<S> forward(Graph<S>& g, Var<S> x) {
        Var<S> h = nn::silu(c1.forward(g, x));
        h = nn::silu(gn2.forward(g, c2.forward(g, h)));
        h = nn::silu(gn3.forward(g, c3.forward(g, h)));
        return head.forward(g, h);
    }
    void collect(std::vector<Param<S>*>& p) {
        c1.collect(p);
        c2.collect(p);
        c3.collect(p);
        head.collect(p);
        gn2.collect(p);
        gn3.collect(p);
    }
    std::vector<Param<S>*> params() {
        std::vector<Param<S>*> p;
        collect(p);
        return p;
    }
    void zero_grad() {
        for (Param<S>* p : params()) p->zero_grad();
    }
};

// ---------------------------------------------------------------------------
// Aggregate
// ---------------------------------------------------------------------------

template <typename S>
struct SeisNets {
    ModelConfig cfg;
    double log_epsilon = 1e-5;
    CondEncoder<S> tau;
    VaeEncoder<S> encoder;
    VaeDecoder<S> decoder;
    UNet<S> unet;
    Acm<S> acm;

    SeisNets() = default;
    SeisNets(const ModelConfig& cfg_, std::uint64_t seed, double log_eps = 1e-5)
        : cfg(cfg_),
          log_epsilon(log_eps),
          tau(cfg_, derive_seed(seed, "tau")),
          encoder(cfg_, derive_seed(seed, "enc")),
          decoder(cfg_, derive_seed(seed, "dec")),
          unet(cfg_, derive_seed(seed, "unet")),
          acm(cfg_, log_eps, derive_seed(seed, "acm")) {
        cfg.validate();
        const std::int64_t n = param_count();
        if (n > cfg.param_budget)
            throw seisgen::config_error("model has " + std::to_string(n) +
                                        " parameters, over budget " +
                                        std::to_string(cfg.param_budget));
    }

    std::vector<Param<S>*> params() {
        std::vector<Param<S>*> p;
        tau.collect(p);
        encoder.collect(p);
        decoder.collect(p);
        unet.collect(p);
        if (cfg.use_acm) acm.collect(p);
        return p;
    }
    std::int64_t param_count() {
        std::int64_t n = 0;
        for (Param<S>* p : params()) n += p->value.size();
        return n;
    }
    void zero_grad() {
        for (Param<S>* p : params()) p->zero_grad();
    }
};

}  // namespace seisgen::nets

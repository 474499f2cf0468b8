#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "seisgen/checkpoint.hpp"
#include "seisgen/features.hpp"
#include "seisgen/nets.hpp"
#include "seisgen/seisdata.hpp"

namespace seisgen::diffusion {

using features::Spectrogram;
using nets::SeisNets;
using nn::Graph;
using nn::Param;
using nn::Var;

// ---------------------------------------------------------------------------
// Noise schedule (DDPM, linear betas)
// ---------------------------------------------------------------------------

struct NoiseSchedule {
    int T = 1000;
    std::vector<double> beta;       // beta[t-1], t in 1..T
    std::vector<double> alpha_bar;  // running product of (1 - beta)
    std::vector<double> sigma;      // posterior std of q(x_{t-1} | x_t, x_0)

    double beta_at(int t) const { return beta.at(static_cast<size_t>(t - 1)); }
    double alpha_bar_at(int t) const {  // alpha_bar_at(0) == 1
        return t == 0 ? 1.0 : alpha_bar.at(static_cast<size_t>(t - 1));
    }
    double sigma_at(int t) const { return sigma.at(static_cast<size_t>(t - 1)); }
    void check_t(int t) const {
        if (t < 1 || t > T)
            throw std::invalid_argument("timestep " + std::to_string(t) + " outside [1, " +
                                        std::to_string(T) + "]");
    }
};

NoiseSchedule make_schedule(int T, double beta_min = 1e-4, double beta_max = 0.02);

double snr(const NoiseSchedule& ns, int t);  // alpha_bar / (1 - alpha_bar)
// min(SNR(t), gamma) / SNR(t)
double snr_weight(const NoiseSchedule& ns, int t, double gamma);

// z_t = sqrt(alpha_bar_t) z0 + sqrt(1 - alpha_bar_t) * noise
template <typename S>
Tensor<S> q_sample(const Tensor<S>& z0, int t, const Tensor<S>& noise, const NoiseSchedule& ns) {
    ns.check_t(t);
    if (!z0.same_shape(noise)) throw std::invalid_argument("q_sample: noise shape mismatch");
    const double ab = ns.alpha_bar_at(t);
    Tensor<S> out = z0;
    out.flat() = z0.flat() * S(std::sqrt(ab)) + noise.flat() * S(std::sqrt(1.0 - ab));
    return out;
}

template <typename S>
Var<S> q_sample_graph(Graph<S>& g, Var<S> z0, int t, Var<S> noise, const NoiseSchedule& ns) {
    ns.check_t(t);
    const double ab = ns.alpha_bar_at(t);
    return nn::add(nn::scale(z0, S(std::sqrt(ab))), nn::scale(noise, S(std::sqrt(1.0 - ab))));
}

// ---------------------------------------------------------------------------
// Loss builders. The network pieces are injected as graph-building callables
// so oracle/stub networks can stand in for the real modules in tests.
// ---------------------------------------------------------------------------

template <typename S>
struct LossNets {
    std::function<Var<S>(Graph<S>&, Var<S>)> encode_mean;  // [3,64,376] -> latent
    std::function<Var<S>(Graph<S>&, Var<S>)> decode;       // latent -> [3,64,376]
    std::function<Var<S>(Graph<S>&, Var<S>)> cond_embed;   // [1,11] -> [1,1,d_cond]
    std::function<Var<S>(Graph<S>&, Var<S>, Var<S>, int)> denoise;  // (z_t, emb, t)
    // optional amplitude correction: (log-amp, phase) -> log-amp
    std::function<Var<S>(Graph<S>&, Var<S>, Var<S>)> acm;
    double log_epsilon = 1e-5;
    int gl_iterations = 4;  // Griffin-Lim depth for the ACM phase input
};

template <typename S>
LossNets<S> loss_nets_view(SeisNets<S>& n, int gl_train_iterations = 4);

struct LossOptions {
    double snr_gamma = 5.0;
    bool source_is_noise = false;  // substitute pure noise for z_t^src
};

// End-to-end paired loss: decode(m_theta(q_sample(E(X_src), t), tau(c), t))
// against X_tgt, min-SNR weighted; the ACM (when present) is trained through
// the same objective with a stop-gradient Griffin-Lim phase input.
template <typename S>
Var<S> loss_end_to_end_graph(Graph<S>& g, LossNets<S>& nets, const Tensor<S>& x_src,
                             const Tensor<S>& x_tgt, const Tensor<S>& cond11, int t,
                             const Tensor<S>& noise, const NoiseSchedule& ns,
                             const LossOptions& opt = {});

// Latent-space paired loss (pretrained/frozen autoencoder path).
template <typename S>
Var<S> loss_latent_graph(Graph<S>& g, LossNets<S>& nets, const Tensor<S>& x_src,
                         const Tensor<S>& x_tgt, const Tensor<S>& cond11, int t,
                         const Tensor<S>& noise, const NoiseSchedule& ns,
                         const LossOptions& opt = {});

// Conventional single-trace diffusion loss (no pairing); the reference side
// of the src==tgt equivalence check.
template <typename S>
Var<S> loss_dm_conventional_graph(Graph<S>& g, LossNets<S>& nets, const Tensor<S>& x_tgt,
                                  const Tensor<S>& cond11, int t, const Tensor<S>& noise,
                                  const NoiseSchedule& ns, const LossOptions& opt = {});

// Scalar-value convenience wrappers over the graph builders.
double loss_end_to_end(SeisNets<float>& nets, const data::PairedSample& pair, int t,
                       const Tensor<float>& noise, const NoiseSchedule& ns,
                       const LossOptions& opt = {});
double loss_latent(SeisNets<float>& nets, const data::PairedSample& pair, int t,
                   const Tensor<float>& noise, const NoiseSchedule& ns,
                   const LossOptions& opt = {});
double loss_dm_conventional(SeisNets<float>& nets, const data::Trace& trace,
                            const features::ConditionVector& cond, int t,
                            const Tensor<float>& noise, const NoiseSchedule& ns,
                            const LossOptions& opt = {});

// ---------------------------------------------------------------------------
// Reverse process
// ---------------------------------------------------------------------------

template <typename S>
using DenoisePredictor = std::function<Tensor<S>(const Tensor<S>& z_t, int t)>;

// One ancestral step t -> t_prev using the q(x_{t-1}|x_t,x_0) posterior of the
// x0 prediction; no noise is injected on the final step (t_prev == 0).
template <typename S>
Tensor<S> p_sample_step(const Tensor<S>& z_t, int t, int t_prev,
                        const DenoisePredictor<S>& predict_x0, const NoiseSchedule& ns,
                        const Tensor<S>& noise);

struct SamplerConfig {
    int steps = 1000;        // <= T; the reverse chain is strided when smaller
    bool with_source = true;
    std::uint64_t seed = 0;
    int gl_iterations = 64;
    bool debug_no_init_noise = false;  // start from the clean source latent
    int start_t = -1;                  // default T
};

struct SampleResult {
    data::Trace trace;
    Spectrogram decoded;    // D_AE output
    Spectrogram corrected;  // after amplitude correction
    Tensor<float> z0;
};

// Full conditional synthesis: reverse loop in latent space, decode, amplitude
// correction with Griffin-Lim phase, then phase-retrieval inversion.
SampleResult sample(SeisNets<float>& nets, const features::ConditionVector& cond,
                    const SamplerConfig& cfg, const NoiseSchedule& ns,
                    const data::Trace* source = nullptr,
                    const std::optional<features::SpecStats>& standardize_stats = std::nullopt);

// Latent-space reverse loop with an arbitrary predictor (oracle-friendly).
template <typename S>
Tensor<S> reverse_loop(Tensor<S> z, const std::vector<int>& timesteps,
                       const DenoisePredictor<S>& predict_x0, const NoiseSchedule& ns,
                       std::uint64_t seed);

std::vector<int> sampler_timesteps(int steps, int start_t, int T);

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

template <typename S>
struct AdamW {
    double lr = 1e-5, beta1 = 0.9, beta2 = 0.999, eps = 1e-8, weight_decay = 1e-2;
    long step_count = 0;
    std::vector<Tensor<S>> m, v;

    void init(const std::vector<Param<S>*>& params) {
        m.clear();
        v.clear();
        for (const Param<S>* p : params) {
            m.emplace_back(p->value.shape());
            v.emplace_back(p->value.shape());
        }
    }
    // lr_now: current (decayed) learning rate
    void step(const std::vector<Param<S>*>& params, double lr_now) {
        ++step_count;
        const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
        const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
        for (size_t i = 0; i < params.size(); ++i) {
            auto pv = params[i]->value.flat();
            auto gv = params[i]->grad.flat();
            auto mv = m[i].flat();
            auto vv = v[i].flat();
            mv = S(beta1) * mv + S(1.0 - beta1) * gv;
            vv = S(beta2) * vv + S(1.0 - beta2) * gv * gv;
            pv -= S(lr_now) *
                  ((mv / S(bc1)) / ((vv / S(bc2)).sqrt() + S(eps)) + S(weight_decay) * pv);
        }
    }
};

struct TrainConfig {
    std::string objective = "end_to_end";  // end_to_end | latent | vae_pretrain
    int batch = 4;
    int accumulation = 4;
    int epochs = 500;
    int max_steps = -1;  // when > 0, overrides the epoch count
    double lr = 1e-5;
    double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8, weight_decay = 1e-2;
    double snr_gamma = 5.0;
    double source_noise_prob = 0.1;
    int gl_train_iterations = 4;
    int schedule_T = 1000;
    double beta_min = 1e-4, beta_max = 0.02;
    std::uint64_t seed = 0;
    int checkpoint_every = 0;  // 0 = final only
    bool standardize = false;  // VAE-pretraining/latent (ablation) path only
    double vae_kl_weight = 1e-6;
    double vae_adv_weight = 0.05;
    std::string init_from;  // checkpoint dir providing pretrained weights

    void validate() const;
};

struct LossLogRow {
    long step;
    double loss;
    double lr;
};

struct TrainResult {
    std::string checkpoint_dir;
    std::vector<LossLogRow> log;
    long steps_run = 0;
};

// Runs the training loop and writes checkpoints + loss log under out_dir.
// Deterministic for a fixed seed; resuming from a saved checkpoint reproduces
// the unbroken trajectory.
TrainResult train(const data::Catalog& catalog, const nets::ModelConfig& model,
                  const TrainConfig& config, const features::RegionNormalization& region,
                  const std::string& out_dir, const std::string& resume_from = "");

// Checkpoint <-> nets plumbing shared by the trainer, sampler and CLI.
void save_model_checkpoint(const std::string& dir, SeisNets<float>& nets,
                           const nets::CheckpointMeta& meta, const AdamW<float>* opt,
                           const std::optional<features::SpecStats>& stats = std::nullopt);
struct LoadedModel {
    SeisNets<float> nets;
    nets::CheckpointMeta meta;
    NoiseSchedule schedule;
    std::optional<features::SpecStats> stats;
};
LoadedModel load_model_checkpoint(const std::string& dir);

// ---------------------------------------------------------------------------
// Template implementations
// ---------------------------------------------------------------------------

template <typename S>
LossNets<S> loss_nets_view(SeisNets<S>& n, int gl_train_iterations) {
    LossNets<S> v;
    v.log_epsilon = n.log_epsilon;
    v.gl_iterations = gl_train_iterations;
    v.encode_mean = [&n](Graph<S>& g, Var<S> spec) { return n.encoder.forward(g, spec).first; };
    v.decode = [&n](Graph<S>& g, Var<S> z) { return n.decoder.forward(g, z); };
    const Index d_cond = n.cfg.d_cond;
    v.cond_embed = [&n, d_cond](Graph<S>& g, Var<S> c) {
        return nn::reshape(n.tau.forward(g, c), {Index(1), Index(1), d_cond});
    };
    v.denoise = [&n](Graph<S>& g, Var<S> z, Var<S> emb, int t) {
        return n.unet.forward(g, z, emb, t);
    };
    if (n.cfg.use_acm)
        v.acm = [&n](Graph<S>& g, Var<S> la, Var<S> ph) { return n.acm.forward(g, la, ph); };
    return v;
}

namespace detail {

// Griffin-Lim phase of a (possibly raw network output) log-amplitude map;
// used as a stop-gradient auxiliary input, so precision of the cast does not
// affect gradients.
template <typename S>
Tensor<S> gl_phase_of(const Tensor<S>& log_amp, double log_epsilon, int iterations) {
    features::Spectrogram spec;
    spec.params.log_epsilon = log_epsilon;
    spec.values = log_amp.template cast<float>();
    const float floor = static_cast<float>(std::log(log_epsilon));
    for (Index i = 0; i < spec.values.size(); ++i)
        if (spec.values[i] < floor) spec.values[i] = floor;
    Tensor<float> phase = features::griffin_lim_phase(spec, iterations);
    return phase.template cast<S>();
}

template <typename S>
Tensor<S> cond_tensor(const Tensor<S>& cond11) {
    if (cond11.size() != nets::kCondDim)
        throw std::invalid_argument("condition vector must have 11 entries");
    return cond11.reshaped({Index(1), nets::kCondDim});
}

}  // namespace detail

template <typename S>
Var<S> loss_end_to_end_graph(Graph<S>& g, LossNets<S>& nets, const Tensor<S>& x_src,
                             const Tensor<S>& x_tgt, const Tensor<S>& cond11, int t,
                             const Tensor<S>& noise, const NoiseSchedule& ns,
                             const LossOptions& opt) {
    ns.check_t(t);
    Var<S> noise_in = g.constant(noise);
    Var<S> z_t = noise_in;
    if (!opt.source_is_noise) {
        Var<S> z0_src = nets.encode_mean(g, g.constant(x_src));
        z_t = q_sample_graph(g, z0_src, t, noise_in, ns);
    }
    Var<S> emb = nets.cond_embed(g, g.constant(detail::cond_tensor(cond11)));
    Var<S> x0_hat = nets.denoise(g, z_t, emb, t);
    Var<S> dec = nets.decode(g, x0_hat);
    if (nets.acm) {
        Tensor<S> phase = detail::gl_phase_of(g.value_of(dec.id), nets.log_epsilon,
                                              nets.gl_iterations);
        dec = nets.acm(g, dec, g.constant(std::move(phase)));
    }
    Var<S> err = nn::mse(dec, g.constant(x_tgt));
    const double w = snr_weight(ns, t, opt.snr_gamma);
    if (!std::isfinite(g.value_of(err.id)[0]))
        throw runtime_failure("end-to-end loss non-finite at t=" + std::to_string(t));
    return nn::scale(err, S(w));
}

template <typename S>
Var<S> loss_latent_graph(Graph<S>& g, LossNets<S>& nets, const Tensor<S>& x_src,
                         const Tensor<S>& x_tgt, const Tensor<S>& cond11, int t,
                         const Tensor<S>& noise, const NoiseSchedule& ns, const LossOptions& opt) {
    ns.check_t(t);
    // frozen autoencoder: gradients stop at the latents
    Var<S> z_src = nn::stop_grad(nets.encode_mean(g, g.constant(x_src)));
    Var<S> z_tgt = nn::stop_grad(nets.encode_mean(g, g.constant(x_tgt)));
    Var<S> noise_in = g.constant(noise);
    Var<S> z_t = opt.source_is_noise ? noise_in : q_sample_graph(g, z_src, t, noise_in, ns);
    Var<S> emb = nets.cond_embed(g, g.constant(detail::cond_tensor(cond11)));
    Var<S> pred = nets.denoise(g, z_t, emb, t);
    Var<S> err = nn::mse(z_tgt, pred);
    const double w = snr_weight(ns, t, opt.snr_gamma);
    if (!std::isfinite(g.value_of(err.id)[0]))
        throw runtime_failure("latent loss non-finite at t=" + std::to_string(t));
    return nn::scale(err, S(w));
}

template <typename S>
Var<S> loss_dm_conventional_graph(Graph<S>& g, LossNets<S>& nets, const Tensor<S>& x_tgt,
                                  const Tensor<S>& cond11, int t, const Tensor<S>& noise,
                                  const NoiseSchedule& ns, const LossOptions& opt) {
    ns.check_t(t);
    Var<S> z_tgt = nn::stop_grad(nets.encode_mean(g, g.constant(x_tgt)));
    Var<S> noise_in = g.constant(noise);
    Var<S> z_t = q_sample_graph(g, z_tgt, t, noise_in, ns);
    Var<S> emb = nets.cond_embed(g, g.constant(detail::cond_tensor(cond11)));
    Var<S> pred = nets.denoise(g, z_t, emb, t);
    Var<S> err = nn::mse(z_tgt, pred);
    const double w = snr_weight(ns, t, opt.snr_gamma);
    return nn::scale(err, S(w));
}

template <typename S>
Tensor<S> p_sample_step(const Tensor<S>& z_t, int t, int t_prev,
                        const DenoisePredictor<S>& predict_x0, const NoiseSchedule& ns,
                        const Tensor<S>& noise) {
    ns.check_t(t);
    if (t_prev < 0 || t_prev >= t)
        throw std::invalid_argument("p_sample_step: need 0 <= t_prev < t");
    if (!z_t.all_finite())
        throw runtime_failure("sampler state non-finite entering t=" + std::to_string(t));
    Tensor<S> x0 = predict_x0(z_t, t);
    const double ab_t = ns.alpha_bar_at(t);
    const double ab_p = ns.alpha_bar_at(t_prev);
    const double alpha_eff = ab_t / ab_p;
    const double beta_eff = 1.0 - alpha_eff;
    const double denom = 1.0 - ab_t;
    const double c0 = std::sqrt(ab_p) * beta_eff / denom;
    const double ct = std::sqrt(alpha_eff) * (1.0 - ab_p) / denom;
    const double sig = std::sqrt(std::max(0.0, beta_eff * (1.0 - ab_p) / denom));
    Tensor<S> out = z_t;
    out.flat() = S(c0) * x0.flat() + S(ct) * z_t.flat();
    if (t_prev >= 1 && sig > 0) out.flat() += S(sig) * noise.flat();
    if (!out.all_finite()) throw runtime_failure("sampler diverged at t=" + std::to_string(t));
    return out;
}

template <typename S>
Tensor<S> reverse_loop(Tensor<S> z, const std::vector<int>& timesteps,
                       const DenoisePredictor<S>& predict_x0, const NoiseSchedule& ns,
                       std::uint64_t seed) {
    for (size_t i = 0; i < timesteps.size(); ++i) {
        const int t = timesteps[i];
        const int t_prev = i + 1 < timesteps.size() ? timesteps[i + 1] : 0;
        Tensor<S> noise = Tensor<S>::randn(z.shape(), derive_seed(seed, fnv1a("step"),
                                                                   static_cast<std::uint64_t>(t)));
        z = p_sample_step(z, t, t_prev, predict_x0, ns, noise);
    }
    return z;
}

}  // namespace seisgen::diffusion

#pragma once

#include <Eigen/Dense>
#include <complex>

#include "seisgen/condition.hpp"
#include "seisgen/records.hpp"
#include "seisgen/seisdata.hpp"
#include "seisgen/tensor.hpp"

namespace seisgen::features {

// STFT recipe: 128-point Hann frames every 16 samples, centered with reflect
// padding; 3x6000 waveforms map to 3x64x376 log-amplitude images after the
// Nyquist row is dropped.
struct StftParams {
    int n_fft = 128;
    int win_length = 128;
    int hop = 16;
    double log_epsilon = 1e-5;

    bool operator==(const StftParams&) const = default;
};

inline constexpr Index kFreqBins = 64;
inline constexpr Index kFrames = 376;

struct Spectrogram {
    Tensor<float> values;  // [3, 64, 376], entries >= log(log_epsilon)
    StftParams params;
};

void check_spectrogram(const Spectrogram& s);

using ComplexMat = Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic>;

// Full 65-bin complex STFT of one channel (before the Nyquist drop).
ComplexMat stft_full(const Eigen::ArrayXd& x, const StftParams& params = {});
Eigen::ArrayXd istft_full(const ComplexMat& spec, int out_len = data::kSamples,
                          const StftParams& params = {});

Spectrogram waveform_to_spectrogram(const data::Waveform& w, const StftParams& params = {});
Spectrogram waveform_to_spectrogram(const data::Trace& t, const StftParams& params = {});

struct GriffinLimResult {
    data::Waveform waveform;   // 3 x 6000
    Tensor<float> phase;       // [3, 64, 376] recovered phase angles (radians)
};

GriffinLimResult griffin_lim(const Spectrogram& spec, int iterations = 64, double momentum = 0.99);

data::Waveform spectrogram_to_waveform(const Spectrogram& spec, int iterations = 64);

// Phase of the Griffin-Lim reconstruction, the ACM's auxiliary input.
Tensor<float> griffin_lim_phase(const Spectrogram& spec, int iterations = 64);

// Standardization is used only on the VAE-pretraining (ablation) path.
struct SpecStats {
    double mean = 0.0;
    double stddev = 1.0;
};

Spectrogram standardize(const Spectrogram& s, const SpecStats& stats);
Spectrogram destandardize(const Spectrogram& s, const SpecStats& stats);
SpecStats compute_spectrogram_stats(const data::Catalog& catalog);  // training split

}  // namespace seisgen::features

#include "seisgen/features.hpp"

#include <unsupported/Eigen/FFT>

#include "seisgen/common.hpp"
#include "seisgen/signal.hpp"

namespace seisgen::features {

using Complex = std::complex<double>;

namespace {

Eigen::Index reflect_index(Eigen::Index i, Eigen::Index n) {
    while (i < 0 || i >= n) {
        if (i < 0) i = -i;
        if (i >= n) i = 2 * (n - 1) - i;
    }
    return i;
}

int frame_count(int n, int hop) { return n / hop + 1; }

}  // namespace

void check_spectrogram(const Spectrogram& s) {
    check_shape(s.values, {data::kChannels, kFreqBins, kFrames}, "spectrogram");
    if (!s.values.all_finite()) throw data_error("spectrogram has non-finite values");
    const float floor = static_cast<float>(std::log(s.params.log_epsilon));
    if ((s.values.flat() < floor - 1e-4f).any())
        throw data_error("spectrogram has values below log(log_epsilon)");
}

ComplexMat stft_full(const Eigen::ArrayXd& x, const StftParams& p) {
    const Eigen::Index n = x.size();
    const int half = p.n_fft / 2;
    const int frames = frame_count(static_cast<int>(n), p.hop);
    const Eigen::ArrayXd win = signal::hann_periodic(p.win_length);

    Eigen::FFT<double> fft;
    std::vector<Complex> frame(static_cast<size_t>(p.n_fft));
    std::vector<Complex> out;
    ComplexMat spec(half + 1, frames);
    for (int f = 0; f < frames; ++f) {
        const Eigen::Index start = static_cast<Eigen::Index>(f) * p.hop - half;
        for (int i = 0; i < p.n_fft; ++i) {
            const Eigen::Index src = reflect_index(start + i, n);
            frame[static_cast<size_t>(i)] = Complex(x[src] * win[i], 0.0);
        }
        fft.fwd(out, frame);
        for (int b = 0; b <= half; ++b) spec(b, f) = out[static_cast<size_t>(b)];
    }
    return spec;
}

Eigen::ArrayXd istft_full(const ComplexMat& spec, int out_len, const StftParams& p) {
    const int half = p.n_fft / 2;
    if (spec.rows() != half + 1) throw data_error("istft: expected " + std::to_string(half + 1) + " bins");
    const int frames = static_cast<int>(spec.cols());
    const Eigen::ArrayXd win = signal::hann_periodic(p.win_length);

    const Eigen::Index padded = static_cast<Eigen::Index>(frames - 1) * p.hop + p.n_fft;
    Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(padded);
    Eigen::ArrayXd winsq = Eigen::ArrayXd::Zero(padded);

    Eigen::FFT<double> fft;
    std::vector<Complex> full(static_cast<size_t>(p.n_fft));
    std::vector<Complex> time;
    for (int f = 0; f < frames; ++f) {
        for (int b = 0; b <= half; ++b) full[static_cast<size_t>(b)] = spec(b, f);
        for (int b = half + 1; b < p.n_fft; ++b)
            full[static_cast<size_t>(b)] = std::conj(spec(p.n_fft - b, f));
        fft.inv(time, full);
        const Eigen::Index off = static_cast<Eigen::Index>(f) * p.hop;
        for (int i = 0; i < p.n_fft; ++i) {
            acc[off + i] += time[static_cast<size_t>(i)].real() * win[i];
            winsq[off + i] += win[i] * win[i];
        }
    }
    // The analysis centered frames with half a window of padding.
    Eigen::ArrayXd y = Eigen::ArrayXd::Zero(out_len);
    for (int i = 0; i < out_len; ++i) {
        const Eigen::Index j = i + half;
        y[i] = winsq[j] > 1e-10 ? acc[j] / winsq[j] : 0.0;
    }
    return y;
}

Spectrogram waveform_to_spectrogram(const data::Waveform& w, const StftParams& p) {
    if (w.rows() != data::kChannels || w.cols() != data::kSamples)
        throw data_error("waveform_to_spectrogram: expected 3x6000 input");
    Spectrogram s;
    s.params = p;
    s.values = Tensor<float>({data::kChannels, kFreqBins, kFrames});
    for (int c = 0; c < data::kChannels; ++c) {
        Eigen::ArrayXd x = w.row(c).cast<double>().transpose().array();
        ComplexMat spec = stft_full(x, p);
        for (Index b = 0; b < kFreqBins; ++b)  // Nyquist row dropped
            for (Index f = 0; f < kFrames; ++f)
                s.values.at(c, b, f) =
                    static_cast<float>(std::log(std::abs(spec(b, f)) + p.log_epsilon));
    }
    return s;
}

Spectrogram waveform_to_spectrogram(const data::Trace& t, const StftParams& p) {
    return waveform_to_spectrogram(t.samples, p);
}

GriffinLimResult griffin_lim(const Spectrogram& spec, int iterations, double momentum) {
    if (iterations < 1) throw config_error("griffin_lim: iterations must be >= 1");
    check_spectrogram(spec);
    const StftParams& p = spec.params;
    const int half = p.n_fft / 2;

    GriffinLimResult out;
    out.waveform = data::Waveform::Zero(data::kChannels, data::kSamples);
    out.phase = Tensor<float>({data::kChannels, kFreqBins, kFrames});

    for (int c = 0; c < data::kChannels; ++c) {
        // Target magnitudes with a zero Nyquist row reinserted.
        Eigen::MatrixXd mag = Eigen::MatrixXd::Zero(half + 1, kFrames);
        for (Index b = 0; b < kFreqBins; ++b)
            for (Index f = 0; f < kFrames; ++f)
                mag(b, f) = std::max(
                    0.0, std::exp(static_cast<double>(spec.values.at(c, b, f))) - p.log_epsilon);

        ComplexMat angles = ComplexMat::Constant(half + 1, kFrames, Complex(1.0, 0.0));
        ComplexMat prev = ComplexMat::Zero(half + 1, kFrames);
        const double alpha = momentum / (1.0 + momentum);
        for (int it = 0; it < iterations; ++it) {
            ComplexMat stamped = mag.cast<Complex>().cwiseProduct(angles);
            Eigen::ArrayXd x = istft_full(stamped, data::kSamples, p);
            ComplexMat rebuilt = stft_full(x, p);
            ComplexMat tmp = rebuilt - alpha * prev;
            prev = rebuilt;
            for (Eigen::Index i = 0; i < tmp.size(); ++i) {
                const double a = std::abs(tmp.data()[i]);
                angles.data()[i] = a > 1e-16 ? tmp.data()[i] / a : Complex(1.0, 0.0);
            }
        }
        ComplexMat stamped = mag.cast<Complex>().cwiseProduct(angles);
        Eigen::ArrayXd x = istft_full(stamped, data::kSamples, p);
        for (int i = 0; i < data::kSamples; ++i) out.waveform(c, i) = static_cast<float>(x[i]);
        for (Index b = 0; b < kFreqBins; ++b)
            for (Index f = 0; f < kFrames; ++f)
                out.phase.at(c, b, f) = static_cast<float>(std::arg(angles(b, f)));
    }
    return out;
}

data::Waveform spectrogram_to_waveform(const Spectrogram& spec, int iterations) {
    return griffin_lim(spec, iterations).waveform;
}

Tensor<float> griffin_lim_phase(const Spectrogram& spec, int iterations) {
    return griffin_lim(spec, iterations).phase;
}

Spectrogram standardize(const Spectrogram& s, const SpecStats& stats) {
    if (!(stats.stddev > 0)) throw config_error("standardize: stddev must be > 0");
    Spectrogram out = s;
    out.values.flat() =
        (s.values.flat() - static_cast<float>(stats.mean)) / static_cast<float>(stats.stddev);
    return out;
}

Spectrogram destandardize(const Spectrogram& s, const SpecStats& stats) {
    if (!(stats.stddev > 0)) throw config_error("destandardize: stddev must be > 0");
    Spectrogram out = s;
    out.values.flat() =
        s.values.flat() * static_cast<float>(stats.stddev) + static_cast<float>(stats.mean);
    return out;
}

SpecStats compute_spectrogram_stats(const data::Catalog& catalog) {
    double sum = 0.0, sumsq = 0.0;
    std::int64_t n = 0;
    for (const auto& [key, trace] : catalog.traces) {
        if (catalog.split_of(key.event_id) != data::Split::train) continue;
        Spectrogram s = waveform_to_spectrogram(trace);
        for (Index i = 0; i < s.values.size(); ++i) {
            const double v = s.values[i];
            sum += v;
            sumsq += v * v;
        }
        n += s.values.size();
    }
    if (n == 0) throw data_error("compute_spectrogram_stats: no training traces");
    SpecStats st;
    st.mean = sum / static_cast<double>(n);
    const double var = sumsq / static_cast<double>(n) - st.mean * st.mean;
    st.stddev = std::sqrt(std::max(var, 1e-12));
    return st;
}

}  // namespace seisgen::features

#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

namespace seisgen::signal {

using Eigen::ArrayXd;
using ComplexVec = std::vector<std::complex<double>>;

// Second-order section of a digital IIR filter, b = (b0,b1,b2), a = (1,a1,a2).
struct Sos {
    double b0, b1, b2;
    double a1, a2;
};

// Butterworth bandpass of the given (even) analog prototype order, bilinear
// transform, unit gain at the geometric center frequency.
std::vector<Sos> butterworth_bandpass(int order, double low_hz, double high_hz, double fs);

ArrayXd sosfilt(const std::vector<Sos>& sos, const ArrayXd& x);

// Forward-backward (zero phase) application with odd-symmetric edge extension.
ArrayXd sosfiltfilt(const std::vector<Sos>& sos, const ArrayXd& x, Eigen::Index padlen = 1000);

// Removes the least-squares straight line.
ArrayXd detrend_linear(const ArrayXd& x);

// Rational-rate polyphase resampling by up/down with a windowed-sinc lowpass.
ArrayXd resample_poly(const ArrayXd& x, int up, int down);

// Magnitude of the analytic signal.
ArrayXd hilbert_envelope(const ArrayXd& x);

// Savitzky-Golay smoothing, mirror-padded edges.
ArrayXd savgol_smooth(const ArrayXd& x, int window, int polyorder);

ComplexVec fft(const ComplexVec& x);
ComplexVec ifft(const ComplexVec& x);
ComplexVec fft_real(const ArrayXd& x);

ArrayXd hann_periodic(int n);

}  // namespace seisgen::signal

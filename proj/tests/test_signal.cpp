#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <complex>

#include "seisgen/signal.hpp"

using namespace seisgen;
using namespace seisgen::signal;

namespace {

// Independent magnitude response of an SOS cascade at normalized frequency.
double cascade_gain(const std::vector<Sos>& sos, double freq_hz, double fs) {
    const std::complex<double> jj(0, 1);
    const std::complex<double> zi = std::exp(-2.0 * M_PI * freq_hz / fs * jj);
    std::complex<double> h(1.0, 0.0);
    for (const Sos& s : sos)
        h *= (s.b0 + s.b1 * zi + s.b2 * zi * zi) / (1.0 + s.a1 * zi + s.a2 * zi * zi);
    return std::abs(h);
}

ArrayXd sine(double freq_hz, double fs, int n, double amp = 1.0) {
    ArrayXd x(n);
    for (int i = 0; i < n; ++i) x[i] = amp * std::sin(2.0 * M_PI * freq_hz * i / fs);
    return x;
}

double rms(const ArrayXd& x) { return std::sqrt((x * x).mean()); }

}  // namespace

TEST_CASE("bandpass preserves zero input") {
    auto sos = butterworth_bandpass(4, 1.0, 45.0, 100.0);
    ArrayXd z = ArrayXd::Zero(6000);
    CHECK(sosfiltfilt(sos, z).abs().maxCoeff() == 0.0);
}

TEST_CASE("bandpass response matches direct frequency-response oracle") {
    auto sos = butterworth_bandpass(4, 1.0, 45.0, 100.0);

    // zero-phase application squares the magnitude response
    for (double f : {0.1, 0.5, 2.0, 10.0, 30.0, 44.0}) {
        ArrayXd x = sine(f, 100.0, 6000);
        ArrayXd y = sosfiltfilt(sos, x);
        // discard 10 s of edges to measure the steady state
        const int cut = 1000;
        const double measured = rms(y.segment(cut, 4000)) / rms(x.segment(cut, 4000));
        const double expected = std::pow(cascade_gain(sos, f, 100.0), 2);
        CHECK(measured == doctest::Approx(expected).epsilon(0.02));
    }
}

TEST_CASE("bandpass rejects 0.1 Hz and passes 10 Hz") {
    auto sos = butterworth_bandpass(4, 1.0, 45.0, 100.0);
    ArrayXd lo = sine(0.1, 100.0, 6000);
    CHECK(rms(sosfiltfilt(sos, lo)) < 0.05 * rms(lo));

    ArrayXd mid = sine(10.0, 100.0, 6000);
    ArrayXd y = sosfiltfilt(sos, mid);
    // skip 2 s edge transients
    const double r = rms(y.segment(200, 5600)) / rms(mid.segment(200, 5600));
    CHECK(r > 0.9);
    CHECK(r < 1.1);
}

TEST_CASE("unit gain at the designed band center") {
    auto sos = butterworth_bandpass(4, 1.0, 45.0, 100.0);
    // the bilinear design normalizes at the digital image of the prewarped
    // geometric center
    const double fs = 100.0;
    const double wl = 2 * fs * std::tan(M_PI * 1.0 / fs);
    const double wh = 2 * fs * std::tan(M_PI * 45.0 / fs);
    const double fc = std::atan(std::sqrt(wl * wh) / (2 * fs)) * fs / M_PI;
    CHECK(cascade_gain(sos, fc, 100.0) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(cascade_gain(sos, std::sqrt(45.0), 100.0) == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("detrend removes straight lines exactly") {
    ArrayXd t = ArrayXd::LinSpaced(500, 0.0, 499.0);
    ArrayXd x = 3.5 * t - 120.0;
    CHECK(detrend_linear(x).abs().maxCoeff() < 1e-9);

    ArrayXd noise = sine(7.0, 100.0, 500) + 0.4 * t;
    ArrayXd d = detrend_linear(noise);
    CHECK(std::abs(d.mean()) < 1e-10);
}

TEST_CASE("polyphase resampling preserves a mid-band tone") {
    // 5 Hz tone at 50 Hz, resampled to 100 Hz
    ArrayXd x = sine(5.0, 50.0, 3000);
    ArrayXd y = resample_poly(x, 2, 1);
    CHECK(y.size() == 6000);
    ArrayXd ref = sine(5.0, 100.0, 6000);
    double err = 0;
    for (int i = 500; i < 5500; ++i) err = std::max(err, std::abs(y[i] - ref[i]));
    CHECK(err < 0.02);

    // downsample back
    ArrayXd z = resample_poly(y, 1, 2);
    CHECK(z.size() == 3000);
    err = 0;
    for (int i = 250; i < 2750; ++i) err = std::max(err, std::abs(z[i] - x[i]));
    CHECK(err < 0.03);
}

TEST_CASE("hilbert envelope recovers an amplitude modulation") {
    const int n = 4000;
    ArrayXd carrier = sine(10.0, 100.0, n);
    ArrayXd env(n);
    for (int i = 0; i < n; ++i) env[i] = 1.0 + 0.5 * std::sin(2.0 * M_PI * 0.2 * i / 100.0);
    ArrayXd x = env * carrier;
    ArrayXd e = hilbert_envelope(x);
    double err = 0;
    for (int i = 200; i < n - 200; ++i) err = std::max(err, std::abs(e[i] - env[i]));
    CHECK(err < 0.05);
}

TEST_CASE("savgol with polyorder 3 reproduces cubics exactly") {
    const int n = 400;
    ArrayXd x(n);
    for (int i = 0; i < n; ++i) {
        const double t = (i - 200.0) / 50.0;
        x[i] = 0.3 * t * t * t - t * t + 2.0 * t - 5.0;
    }
    ArrayXd y = savgol_smooth(x, 101, 3);
    // interior points: the LS fit of a cubic is the cubic itself
    for (int i = 60; i < n - 60; ++i) CHECK(y[i] == doctest::Approx(x[i]).epsilon(1e-9));
}

TEST_CASE("savgol smooths noise") {
    auto rngval = [](int i) { return std::sin(12345.6789 * (i + 1)); };
    ArrayXd x(1000);
    for (int i = 0; i < 1000; ++i) x[i] = rngval(i);
    ArrayXd y = savgol_smooth(x, 101, 3);
    CHECK(rms(y) < 0.5 * rms(x));
}

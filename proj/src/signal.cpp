#include "seisgen/signal.hpp"

#include <unsupported/Eigen/FFT>
#include <numeric>
#include <stdexcept>

#include "seisgen/common.hpp"

namespace seisgen::signal {

namespace {

using Complex = std::complex<double>;

// Bilinear transform s -> z at sample rate fs.
Complex bilinear(Complex s, double fs) {
    return (2.0 * fs + s) / (2.0 * fs - s);
}

Complex sos_response(const Sos& s, Complex z) {
    Complex zi = 1.0 / z;
    return (s.b0 + s.b1 * zi + s.b2 * zi * zi) / (1.0 + s.a1 * zi + s.a2 * zi * zi);
}

}  // namespace

std::vector<Sos> butterworth_bandpass(int order, double low_hz, double high_hz, double fs) {
    if (order < 2 || order % 2 != 0) throw std::invalid_argument("bandpass order must be even >= 2");
    if (!(0.0 < low_hz && low_hz < high_hz && high_hz < fs / 2.0))
        throw std::invalid_argument("bandpass corners must satisfy 0 < low < high < fs/2");

    const double wl = 2.0 * fs * std::tan(M_PI * low_hz / fs);
    const double wh = 2.0 * fs * std::tan(M_PI * high_hz / fs);
    const double bw = wh - wl;
    const double w0 = std::sqrt(wl * wh);

    std::vector<Sos> sections;
    for (int k = 0; k < order; ++k) {
        const double theta = M_PI * (2.0 * k + order + 1.0) / (2.0 * order);
        Complex p = std::polar(1.0, theta);
        if (p.imag() <= 0.0) continue;  // conjugates handled implicitly per section
        // Lowpass prototype pole -> two bandpass poles.
        Complex pb = p * bw;
        Complex disc = std::sqrt(pb * pb - 4.0 * w0 * w0);
        for (Complex s : {(pb + disc) / 2.0, (pb - disc) / 2.0}) {
            Complex zp = bilinear(s, fs);
            Sos sec;
            sec.b0 = 1.0;
            sec.b1 = 0.0;
            sec.b2 = -1.0;  // zeros at z = +1 and z = -1
            sec.a1 = -2.0 * zp.real();
            sec.a2 = std::norm(zp);
            sections.push_back(sec);
        }
    }

    // Normalize to unit gain at the digital image of the center frequency.
    const double theta0 = 2.0 * std::atan(w0 / (2.0 * fs));
    Complex z0 = std::polar(1.0, theta0);
    Complex h = 1.0;
    for (const Sos& s : sections) h *= sos_response(s, z0);
    const double g = std::pow(1.0 / std::abs(h), 1.0 / static_cast<double>(sections.size()));
    for (Sos& s : sections) {
        s.b0 *= g;
        s.b1 *= g;
        s.b2 *= g;
    }
    return sections;
}

ArrayXd sosfilt(const std::vector<Sos>& sos, const ArrayXd& x) {
    ArrayXd y = x;
    for (const Sos& s : sos) {
        double s1 = 0.0, s2 = 0.0;
        for (Eigen::Index n = 0; n < y.size(); ++n) {
            const double xn = y[n];
            const double yn = s.b0 * xn + s1;
            s1 = s.b1 * xn - s.a1 * yn + s2;
            s2 = s.b2 * xn - s.a2 * yn;
            y[n] = yn;
        }
    }
    return y;
}

ArrayXd sosfiltfilt(const std::vector<Sos>& sos, const ArrayXd& x, Eigen::Index padlen) {
    const Eigen::Index n = x.size();
    if (n < 2) return x;
    const Eigen::Index pad = std::min(padlen, n - 1);

    ArrayXd ext(n + 2 * pad);
    for (Eigen::Index i = 0; i < pad; ++i) ext[i] = 2.0 * x[0] - x[pad - i];
    ext.segment(pad, n) = x;
    for (Eigen::Index i = 0; i < pad; ++i) ext[pad + n + i] = 2.0 * x[n - 1] - x[n - 2 - i];

    ArrayXd fwd = sosfilt(sos, ext);
    ArrayXd bwd = sosfilt(sos, fwd.reverse().eval()).reverse();
    return bwd.segment(pad, n);
}

ArrayXd detrend_linear(const ArrayXd& x) {
    const Eigen::Index n = x.size();
    if (n < 2) return ArrayXd::Zero(n);
    ArrayXd t = ArrayXd::LinSpaced(n, 0.0, static_cast<double>(n - 1));
    const double tm = t.mean();
    const double xm = x.mean();
    const double denom = ((t - tm) * (t - tm)).sum();
    const double slope = ((t - tm) * (x - xm)).sum() / denom;
    return x - (xm + slope * (t - tm));
}

ArrayXd resample_poly(const ArrayXd& x, int up, int down) {
    if (up <= 0 || down <= 0) throw std::invalid_argument("resample factors must be positive");
    const int g = std::gcd(up, down);
    up /= g;
    down /= g;
    if (up == 1 && down == 1) return x;

    const int half_width = 10 * std::max(up, down);
    const int taps = 2 * half_width + 1;
    const double fc = 0.5 / std::max(up, down);  // cycles/sample at the upsampled rate
    ArrayXd h(taps);
    for (int i = 0; i < taps; ++i) {
        const int m = i - half_width;
        const double sinc = (m == 0) ? 2.0 * fc : std::sin(2.0 * M_PI * fc * m) / (M_PI * m);
        // Blackman window
        const double w = 0.42 - 0.5 * std::cos(2.0 * M_PI * i / (taps - 1)) +
                         0.08 * std::cos(4.0 * M_PI * i / (taps - 1));
        h[i] = sinc * w * up;
    }

    const Eigen::Index n_in = x.size();
    const Eigen::Index n_out = (n_in * up + down - 1) / down;
    ArrayXd y = ArrayXd::Zero(n_out);
    for (Eigen::Index m = 0; m < n_out; ++m) {
        // Output sample m sits at position m*down on the up-rate grid; the
        // filter is centered there so input/output timelines stay aligned.
        const Eigen::Index center = m * down;
        double acc = 0.0;
        for (Eigen::Index j = center - half_width; j <= center + half_width; ++j) {
            if (j % up != 0) continue;
            const Eigen::Index k = j / up;
            if (k < 0 || k >= n_in) continue;
            acc += x[k] * h[j - (center - half_width)];
        }
        y[m] = acc;
    }
    return y;
}

ComplexVec fft(const ComplexVec& x) {
    Eigen::FFT<double> f;
    ComplexVec out;
    f.fwd(out, x);
    return out;
}

ComplexVec ifft(const ComplexVec& x) {
    Eigen::FFT<double> f;
    ComplexVec out;
    f.inv(out, x);
    return out;
}

ComplexVec fft_real(const ArrayXd& x) {
    ComplexVec cx(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) cx[static_cast<size_t>(i)] = Complex(x[i], 0.0);
    return fft(cx);
}

ArrayXd hilbert_envelope(const ArrayXd& x) {
    const Eigen::Index n = x.size();
    ComplexVec spec = fft_real(x);
    for (Eigen::Index i = 1; i < n; ++i) {
        if (2 * i < n)
            spec[static_cast<size_t>(i)] *= 2.0;
        else if (2 * i > n)
            spec[static_cast<size_t>(i)] = 0.0;
        // i == n/2 (Nyquist, even n): unchanged
    }
    ComplexVec analytic = ifft(spec);
    ArrayXd env(n);
    for (Eigen::Index i = 0; i < n; ++i) env[i] = std::abs(analytic[static_cast<size_t>(i)]);
    return env;
}

ArrayXd savgol_smooth(const ArrayXd& x, int window, int polyorder) {
    if (window % 2 == 0 || window < 3) throw std::invalid_argument("savgol window must be odd >= 3");
    if (polyorder >= window) throw std::invalid_argument("savgol polyorder must be < window");
    const int m = window / 2;
    const int d = polyorder + 1;

    // Least-squares fit evaluated at the window center: c = e0^T (A^T A)^-1 A^T.
    Eigen::MatrixXd a(window, d);
    for (int i = 0; i < window; ++i) {
        double v = 1.0;
        for (int j = 0; j < d; ++j) {
            a(i, j) = v;
            v *= static_cast<double>(i - m);
        }
    }
    Eigen::MatrixXd ata = a.transpose() * a;
    Eigen::VectorXd e0 = Eigen::VectorXd::Zero(d);
    e0[0] = 1.0;
    Eigen::VectorXd c = a * ata.ldlt().solve(e0);

    const Eigen::Index n = x.size();
    ArrayXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int j = -m; j <= m; ++j) {
            Eigen::Index k = i + j;
            if (k < 0) k = -k;                      // mirror
            if (k >= n) k = 2 * (n - 1) - k;
            acc += c[j + m] * x[k];
        }
        y[i] = acc;
    }
    return y;
}

ArrayXd hann_periodic(int n) {
    ArrayXd w(n);
    for (int i = 0; i < n; ++i) w[i] = 0.5 * (1.0 - std::cos(2.0 * M_PI * i / n));
    return w;
}

}  // namespace seisgen::signal

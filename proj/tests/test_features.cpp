#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "seisgen/features.hpp"
#include "seisgen/signal.hpp"

using namespace seisgen;
using namespace seisgen::features;

namespace {

// ---- independent brute-force oracle coded straight from the preprocessing
// ---- recipe: normalization, polar encoding, back azimuth, scalar normalizers.
struct OracleCondition {
    std::array<double, 11> v;
};

OracleCondition oracle_encode(double s_lat, double s_lon, double e_lat, double e_lon, double e_dep,
                              double e_m, const RegionNormalization& n) {
    auto d2r = [](double d) { return d * M_PI / 180.0; };
    const double slat = (s_lat - n.l_lat) / (n.u_lat - n.l_lat);
    const double slon = (s_lon - n.l_lon) / (n.u_lon - n.l_lon);
    const double elat = (e_lat - n.l_lat) / (n.u_lat - n.l_lat);
    const double elon = (e_lon - n.l_lon) / (n.u_lon - n.l_lon);
    // spherical law of cosines distance
    const double p1 = d2r(e_lat), p2 = d2r(s_lat);
    double arg = std::sin(p1) * std::sin(p2) + std::cos(p1) * std::cos(p2) * std::cos(d2r(s_lon - e_lon));
    arg = std::clamp(arg, -1.0, 1.0);
    const double r_epi = 6371.0 * std::acos(arg);
    // forward azimuth station -> epicenter
    const double sp = d2r(s_lat), ep = d2r(e_lat), dl = d2r(e_lon - s_lon);
    const double y = std::sin(dl) * std::cos(ep);
    const double x = std::cos(sp) * std::sin(ep) - std::sin(sp) * std::cos(ep) * std::cos(dl);
    const double azi = std::atan2(y, x);

    OracleCondition o;
    o.v = {std::cos(slat) * std::cos(slon),
           std::sin(slat) * std::cos(slon),
           std::sin(slon),
           std::cos(elat) * std::cos(elon),
           std::sin(elat) * std::cos(elon),
           std::sin(elon),
           std::cos(azi),
           std::sin(azi),
           (r_epi - n.r_mean) / n.r_scale,
           (e_dep - n.d_mean) / n.d_scale,
           (e_m - n.m_offset) / n.m_scale};
    return o;
}

data::EventRecord event(double lat, double lon, double dep, double m) {
    return {"ev", lat, lon, dep, m, 0.0};
}
data::StationRecord station(double lat, double lon) { return {"st", lat, lon}; }

}  // namespace

TEST_CASE("condition encoding at the lower region bounds") {
    RegionNormalization n;
    auto c = encode_condition(event(34.0, -118.0, 8.0, 3.0), station(n.l_lat, n.l_lon), n);
    CHECK(c.c_sta[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(c.c_sta[1] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(c.c_sta[2] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("normalizer zero points") {
    RegionNormalization n;
    // place the station due north so the great-circle distance is exactly
    // R * delta_lat; solve for delta giving R_epi = r_mean
    const double e_lat = 32.5, e_lon = -118.0;
    const double dlat = n.r_mean / 6371.0 * 180.0 / M_PI;
    auto c = encode_condition(event(e_lat, e_lon, 8.0, 2.0), station(e_lat + dlat, e_lon), n);
    CHECK(c.r_norm == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(c.m_norm == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("azimuth encoding at 90 degrees") {
    RegionNormalization n;
    // choose the epicenter latitude so the initial bearing is exactly 90 deg:
    // tan(e_lat) = tan(s_lat) * cos(dlon)
    const double s_lat = 34.0, s_lon = -118.5, dlon = 1.0;
    const double e_lat = std::atan(std::tan(s_lat * M_PI / 180.0) * std::cos(dlon * M_PI / 180.0)) *
                         180.0 / M_PI;
    auto c = encode_condition(event(e_lat, s_lon + dlon, 8.0, 3.0), station(s_lat, s_lon), n);
    CHECK(std::abs(c.c_azi[0]) < 1e-12);
    CHECK(c.c_azi[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("condition vector invariants") {
    RegionNormalization n;
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> ulat(n.l_lat, n.u_lat), ulon(n.l_lon, n.u_lon);
    std::uniform_real_distribution<double> udep(0.0, 20.0), umag(2.0, 6.0);
    for (int i = 0; i < 200; ++i) {
        auto c = encode_condition(event(ulat(rng), ulon(rng), udep(rng), umag(rng)),
                                  station(ulat(rng), ulon(rng)), n);
        auto arr = c.to_array();
        CHECK(arr.size() == 11);
        CHECK(std::hypot(c.c_azi[0], c.c_azi[1]) == doctest::Approx(1.0).epsilon(1e-9));
        for (int k = 0; k < 3; ++k) {
            CHECK(std::abs(c.c_sta[k]) <= 1.0 + 1e-12);
            CHECK(std::abs(c.c_epi[k]) <= 1.0 + 1e-12);
        }
    }
}

TEST_CASE("monotonicity of the magnitude normalizer") {
    RegionNormalization n;
    double prev = -1e9;
    for (double m = 2.0; m <= 6.0; m += 0.25) {
        auto c = encode_condition(event(34.0, -118.0, 8.0, m), station(34.5, -117.5), n);
        CHECK(c.m_norm > prev);
        prev = c.m_norm;
    }
}

TEST_CASE("encoding matches the brute-force oracle") {
    RegionNormalization n;
    std::mt19937_64 rng(123);
    std::uniform_real_distribution<double> ulat(n.l_lat, n.u_lat), ulon(n.l_lon, n.u_lon);
    std::uniform_real_distribution<double> udep(0.0, 25.0), umag(2.0, 7.0);
    for (int i = 0; i < 1000; ++i) {
        const double slat = ulat(rng), slon = ulon(rng);
        const double elat = ulat(rng), elon = ulon(rng);
        const double dep = udep(rng), m = umag(rng);
        auto impl = encode_condition(event(elat, elon, dep, m), station(slat, slon), n).to_array();
        auto oracle = oracle_encode(slat, slon, elat, elon, dep, m, n).v;
        for (int k = 0; k < 11; ++k) CHECK(std::abs(impl[k] - oracle[k]) < 1e-9);
    }
}

TEST_CASE("out-of-region coordinates raise a range error naming the coordinate") {
    RegionNormalization n;
    CHECK_THROWS_WITH_AS(encode_condition(event(34.0, -118.0, 8, 3), station(40.0, -118.0), n),
                         doctest::Contains("s_lat"), std::range_error);
    CHECK_THROWS_WITH_AS(encode_condition(event(34.0, -100.0, 8, 3), station(34.0, -118.0), n),
                         doctest::Contains("e_lon"), std::range_error);
}

TEST_CASE("distances") {
    auto e = event(34.0, -118.0, 40.0, 3.0);
    CHECK(epicentral_distance_km(e, station(34.0, -118.0)) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(hypocentral_distance_km(e, station(34.0, -118.0)) == doctest::Approx(40.0));

    // one degree of latitude
    auto e2 = event(33.0, -118.0, 0.0, 3.0);
    CHECK(std::abs(epicentral_distance_km(e2, station(34.0, -118.0)) - 111.19) < 0.2);

    // 3-4-5 triangle: R_epi = 30 exactly due north
    const double dlat = 30.0 / 6371.0 * 180.0 / M_PI;
    auto e3 = event(33.0, -118.0, 40.0, 3.0);
    CHECK(hypocentral_distance_km(e3, station(33.0 + dlat, -118.0)) ==
          doctest::Approx(50.0).epsilon(1e-9));
}

TEST_CASE("spectrogram shape contract and zero floor") {
    data::Waveform w = data::zero_waveform();
    Spectrogram s = waveform_to_spectrogram(w);
    CHECK(s.values.shape() == Shape{3, 64, 376});
    const float floor = static_cast<float>(std::log(s.params.log_epsilon));
    for (Index i = 0; i < s.values.size(); ++i) CHECK(s.values[i] == floor);
}

TEST_CASE("pure 10 Hz tone peaks at frequency bin 13") {
    data::Waveform w(3, data::kSamples);
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < data::kSamples; ++i)
            w(c, i) = static_cast<float>(std::sin(2.0 * M_PI * 10.0 * i / 100.0));
    Spectrogram s = waveform_to_spectrogram(w);
    for (Index f = 10; f < kFrames; f += 37) {
        Index argmax = 0;
        for (Index b = 1; b < kFreqBins; ++b)
            if (s.values.at(0, b, f) > s.values.at(0, argmax, f)) argmax = b;
        CHECK(argmax == 13);
    }

    // direct DFT oracle on one frame: windowed frame -> naive DFT magnitudes
    const StftParams p;
    const int frame = 100;
    const int half = p.n_fft / 2;
    Eigen::ArrayXd win = signal::hann_periodic(p.win_length);
    std::vector<double> mags(static_cast<size_t>(half));
    for (int b = 0; b < half; ++b) {
        std::complex<double> acc(0, 0);
        for (int i = 0; i < p.n_fft; ++i) {
            const int src = frame * p.hop - half + i;  // inside the signal, no padding needed
            const double v = src >= 0 && src < data::kSamples ? w(0, src) : 0.0;
            acc += v * win[i] * std::exp(std::complex<double>(0, -2.0 * M_PI * b * i / p.n_fft));
        }
        mags[static_cast<size_t>(b)] = std::abs(acc);
    }
    for (int b = 0; b < half; ++b) {
        const double expected = std::log(mags[static_cast<size_t>(b)] + p.log_epsilon);
        CHECK(s.values.at(0, b, frame) == doctest::Approx(expected).epsilon(1e-4));
    }
}

TEST_CASE("zero spectrogram inverts to a zero waveform") {
    Spectrogram s;
    s.values = Tensor<float>::constant({3, 64, 376}, std::log(1e-5f));
    data::Waveform w = spectrogram_to_waveform(s, 4);
    double r = std::sqrt(w.cast<double>().array().square().mean());
    CHECK(r < 1e-6);
}

TEST_CASE("griffin-lim round trip on a band-limited synthetic trace") {
    auto cat = data::make_synthetic_catalog(1, 1, 2024, 0.0);
    const data::Trace& t = cat.traces.begin()->second;
    Spectrogram s = waveform_to_spectrogram(t);
    data::Waveform rec = spectrogram_to_waveform(s, 64);

    for (int c = 0; c < 3; ++c) {
        Eigen::ArrayXd a = t.samples.row(c).cast<double>().transpose().array();
        Eigen::ArrayXd b = rec.row(c).cast<double>().transpose().array();
        Eigen::ArrayXd ea = signal::savgol_smooth(signal::hilbert_envelope(a), 101, 3);
        Eigen::ArrayXd eb = signal::savgol_smooth(signal::hilbert_envelope(b), 101, 3);
        const double ca = ((ea - ea.mean()) * (eb - eb.mean())).sum() /
                          std::sqrt(((ea - ea.mean()).square().sum()) *
                                    ((eb - eb.mean()).square().sum()));
        CHECK(ca >= 0.95);
        const double pa = a.abs().maxCoeff(), pb = b.abs().maxCoeff();
        CHECK(pb > 0.8 * pa);
        CHECK(pb < 1.2 * pa);
    }
}

TEST_CASE("standardize round trip and constant input") {
    auto cat = data::make_synthetic_catalog(2, 2, 5, 0.5);
    SpecStats st = compute_spectrogram_stats(cat);
    SpecStats st2 = compute_spectrogram_stats(cat);
    CHECK(st.mean == st2.mean);  // deterministic recomputation
    CHECK(st.stddev == st2.stddev);

    const data::Trace& t = cat.traces.begin()->second;
    Spectrogram s = waveform_to_spectrogram(t);
    Spectrogram back = destandardize(standardize(s, st), st);
    for (Index i = 0; i < s.values.size(); ++i)
        CHECK(std::abs(back.values[i] - s.values[i]) < 1e-6f);

    Spectrogram c;
    c.values = Tensor<float>::constant({3, 64, 376}, 2.5f);
    SpecStats cs{2.5, 1.0};
    Spectrogram z = standardize(c, cs);
    CHECK(z.values.max_abs() == 0.0f);

    CHECK_THROWS_AS(standardize(s, SpecStats{0.0, 0.0}), config_error);
}

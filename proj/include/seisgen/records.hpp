#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>

namespace seisgen::data {

inline constexpr int kChannels = 3;   // E, N, Z acceleration
inline constexpr int kSamples = 6000;  // 60 s at 100 Hz
inline constexpr double kSampleRateHz = 100.0;

// Channel-major 3 x 6000 window, row-major so the buffer matches the on-disk
// float32 layout byte for byte.
using Waveform = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct StationRecord {
    std::string station_id;
    double s_lat = 0.0;
    double s_lon = 0.0;
};

struct EventRecord {
    std::string event_id;
    double e_lat = 0.0;
    double e_lon = 0.0;
    double e_dep = 0.0;  // hypocenter depth, km, >= 0
    double e_m = 0.0;    // magnitude
    double origin_time = 0.0;  // seconds since epoch
};

struct Trace {
    std::string event_id;
    std::string station_id;
    Waveform samples;  // 3 x 6000
    std::optional<int> p_arrival;  // sample index into the 60 s window
    std::optional<int> s_arrival;
    bool padded = false;  // input was shorter than the window (session metadata)

    bool labeled() const { return p_arrival.has_value() || s_arrival.has_value(); }
};

inline Waveform zero_waveform() { return Waveform::Zero(kChannels, kSamples); }

}  // namespace seisgen::data

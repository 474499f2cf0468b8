#pragma once

#include <array>

#include "seisgen/records.hpp"

namespace seisgen::features {

// Region-of-interest bounds and scalar normalizers; the defaults are the
// Southern California values the dataset recipe is anchored to.
struct RegionNormalization {
    double l_lat = 32.024809, u_lat = 36.151200;
    double l_lon = -120.444000, u_lon = -115.222300;
    double r_mean = 125.542401, r_scale = 55.810322;
    double d_mean = 8.564146, d_scale = 4.658161;
    double m_offset = 2.0, m_scale = 6.4;

    void validate() const;
};

// 11-dimensional conditioning input: station and epicenter direction vectors,
// back-azimuth encoding, then normalized distance / depth / magnitude.
struct ConditionVector {
    std::array<double, 3> c_sta{};
    std::array<double, 3> c_epi{};
    std::array<double, 2> c_azi{};
    double r_norm = 0.0;
    double d_norm = 0.0;
    double m_norm = 0.0;

    std::array<double, 11> to_array() const;
};

double epicentral_distance_km(const data::EventRecord& e, const data::StationRecord& s);
double hypocentral_distance_km(const data::EventRecord& e, const data::StationRecord& s);

// Back-azimuth (station -> epicenter bearing, clockwise from north), radians.
double back_azimuth_rad(const data::EventRecord& e, const data::StationRecord& s);

ConditionVector encode_condition(const data::EventRecord& e, const data::StationRecord& s,
                                 const RegionNormalization& norms = RegionNormalization());

}  // namespace seisgen::features

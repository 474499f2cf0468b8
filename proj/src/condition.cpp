#include "seisgen/condition.hpp"

#include <cmath>
#include <stdexcept>

#include "seisgen/common.hpp"
#include "seisgen/geo.hpp"

namespace seisgen::features {

void RegionNormalization::validate() const {
    if (!(u_lat > l_lat) || !(u_lon > l_lon))
        throw config_error("region bounds: upper must exceed lower");
    if (r_scale <= 0 || d_scale <= 0 || m_scale <= 0)
        throw config_error("region normalization scales must be > 0");
}

std::array<double, 11> ConditionVector::to_array() const {
    return {c_sta[0], c_sta[1], c_sta[2], c_epi[0], c_epi[1], c_epi[2],
            c_azi[0], c_azi[1], r_norm,   d_norm,   m_norm};
}

double epicentral_distance_km(const data::EventRecord& e, const data::StationRecord& s) {
    return geo::great_circle_km(e.e_lat, e.e_lon, s.s_lat, s.s_lon);
}

double hypocentral_distance_km(const data::EventRecord& e, const data::StationRecord& s) {
    const double r = epicentral_distance_km(e, s);
    return std::sqrt(r * r + e.e_dep * e.e_dep);
}

double back_azimuth_rad(const data::EventRecord& e, const data::StationRecord& s) {
    return geo::bearing_rad(s.s_lat, s.s_lon, e.e_lat, e.e_lon);
}

namespace {
void check_in_region(double v, double lo, double hi, const char* name) {
    if (!(v >= lo && v <= hi))
        throw std::range_error(std::string(name) + " = " + std::to_string(v) +
                               " outside region bounds [" + std::to_string(lo) + ", " +
                               std::to_string(hi) + "]");
}
}  // namespace

ConditionVector encode_condition(const data::EventRecord& e, const data::StationRecord& s,
                                 const RegionNormalization& n) {
    n.validate();
    check_in_region(s.s_lat, n.l_lat, n.u_lat, "s_lat");
    check_in_region(e.e_lat, n.l_lat, n.u_lat, "e_lat");
    check_in_region(s.s_lon, n.l_lon, n.u_lon, "s_lon");
    check_in_region(e.e_lon, n.l_lon, n.u_lon, "e_lon");

    // Normalized coordinates in [0,1] feed cos/sin directly (as radians).
    const double slat = (s.s_lat - n.l_lat) / (n.u_lat - n.l_lat);
    const double slon = (s.s_lon - n.l_lon) / (n.u_lon - n.l_lon);
    const double elat = (e.e_lat - n.l_lat) / (n.u_lat - n.l_lat);
    const double elon = (e.e_lon - n.l_lon) / (n.u_lon - n.l_lon);

    ConditionVector c;
    c.c_sta = {std::cos(slat) * std::cos(slon), std::sin(slat) * std::cos(slon), std::sin(slon)};
    c.c_epi = {std::cos(elat) * std::cos(elon), std::sin(elat) * std::cos(elon), std::sin(elon)};
    const double azi = back_azimuth_rad(e, s);
    c.c_azi = {std::cos(azi), std::sin(azi)};
    c.r_norm = (epicentral_distance_km(e, s) - n.r_mean) / n.r_scale;
    c.d_norm = (e.e_dep - n.d_mean) / n.d_scale;
    c.m_norm = (e.e_m - n.m_offset) / n.m_scale;
    return c;
}

}  // namespace seisgen::features

#include "seisgen/geo.hpp"

#include <cmath>

namespace seisgen::geo {

namespace {
constexpr double deg2rad(double d) { return d * M_PI / 180.0; }
}

double great_circle_km(double lat1_deg, double lon1_deg, double lat2_deg, double lon2_deg) {
    const double p1 = deg2rad(lat1_deg), p2 = deg2rad(lat2_deg);
    const double dp = deg2rad(lat2_deg - lat1_deg);
    const double dl = deg2rad(lon2_deg - lon1_deg);
    const double a = std::sin(dp / 2) * std::sin(dp / 2) +
                     std::cos(p1) * std::cos(p2) * std::sin(dl / 2) * std::sin(dl / 2);
    return kEarthRadiusKm * 2.0 * std::atan2(std::sqrt(a), std::sqrt(1.0 - a));
}

double bearing_rad(double lat1_deg, double lon1_deg, double lat2_deg, double lon2_deg) {
    const double p1 = deg2rad(lat1_deg), p2 = deg2rad(lat2_deg);
    const double dl = deg2rad(lon2_deg - lon1_deg);
    const double y = std::sin(dl) * std::cos(p2);
    const double x = std::cos(p1) * std::sin(p2) - std::sin(p1) * std::cos(p2) * std::cos(dl);
    double b = std::atan2(y, x);
    if (b < 0) b += 2.0 * M_PI;
    return b;
}

}  // namespace seisgen::geo

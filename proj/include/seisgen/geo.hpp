#pragma once

namespace seisgen::geo {

inline constexpr double kEarthRadiusKm = 6371.0;

// Great-circle distance in kilometers on a spherical Earth (haversine form).
double great_circle_km(double lat1_deg, double lon1_deg, double lat2_deg, double lon2_deg);

// Initial bearing from (lat1,lon1) toward (lat2,lon2), clockwise from north,
// in radians within [0, 2*pi).
double bearing_rad(double lat1_deg, double lon1_deg, double lat2_deg, double lon2_deg);

}  // namespace seisgen::geo

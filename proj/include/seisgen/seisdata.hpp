#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "seisgen/common.hpp"
#include "seisgen/condition.hpp"
#include "seisgen/records.hpp"

namespace seisgen::data {

enum class Split { train, test };

std::string to_string(Split s);
Split split_from_string(const std::string& s);

struct TraceKey {
    std::string event_id;
    std::string station_id;
    auto operator<=>(const TraceKey&) const = default;
};

// In-memory catalog; read-only after load, safe for concurrent readers.
struct Catalog {
    std::vector<EventRecord> events;      // sorted by event_id
    std::vector<StationRecord> stations;  // sorted by station_id
    std::set<std::string> train_events;
    std::set<std::string> test_events;
    std::map<TraceKey, Trace> traces;

    const EventRecord* find_event(const std::string& event_id) const;
    const StationRecord* find_station(const std::string& station_id) const;
    std::vector<const Trace*> traces_of(const std::string& event_id) const;  // sorted by station
    Split split_of(const std::string& event_id) const;

    void add_event(EventRecord e, Split split);
    void add_station(StationRecord s);
    void add_trace(Trace t);

    // Enforces referential integrity, id uniqueness and split disjointness.
    void validate() const;

    std::size_t trace_count() const { return traces.size(); }
};

bool catalog_equal(const Catalog& a, const Catalog& b);  // trace floats byte-exact

// ---------------------------------------------------------------------------
// Signal conditioning
// ---------------------------------------------------------------------------

struct ConditionedTrace {
    Waveform samples;  // 3 x 6000
    bool padded = false;
};

// Resample to 100 Hz if needed, linear detrend, 1-45 Hz zero-phase
// 4th-order Butterworth, then trim or zero-pad to exactly 6000 samples.
ConditionedTrace condition_trace(const Eigen::MatrixXd& raw, double sample_rate_hz);

inline constexpr double kBandLowHz = 1.0;
inline constexpr double kBandHighHz = 45.0;
inline constexpr int kBandOrder = 4;

// ---------------------------------------------------------------------------
// Pair sampling
// ---------------------------------------------------------------------------

struct PairedSample {
    Trace source;
    Trace target;
    features::ConditionVector condition;  // for the target station
    bool degenerate = false;              // single-observation self pair
};

// The per-event fixed source: lexicographically first labeled trace, falling
// back to the first trace when none carry labels.
TraceKey fixed_source_key(const Catalog& catalog, const std::string& event_id);

PairedSample sample_pair(const Catalog& catalog, const std::string& event_id,
                         std::uint64_t rng_seed,
                         const features::RegionNormalization& norms = {});

// ---------------------------------------------------------------------------
// Synthetic events (desk-scale test data with exact ground truth)
// ---------------------------------------------------------------------------

inline constexpr double kVpKmS = 6.0;
inline constexpr double kVsKmS = 3.5;

struct SyntheticEventParams {
    std::string event_id = "ev0";
    double magnitude = 3.0;  // [2, 6]
    double e_lat = 34.0;
    double e_lon = -118.0;
    double e_dep = 8.0;
    double origin_time = 0.0;
    std::vector<StationRecord> stations;
    std::uint64_t seed = 0;
    double noise_level = 0.01;    // noise floor relative to the amplitude scale
    double label_fraction = 1.0;  // fraction of traces carrying P/S labels
};

struct SyntheticEvent {
    EventRecord event;
    std::vector<Trace> traces;
    int excluded = 0;  // stations beyond the 59 s S travel-time horizon
};

SyntheticEvent generate_synthetic_event(const SyntheticEventParams& params);

// Random compact-region catalog: n_events, up to n_stations observations each.
Catalog make_synthetic_catalog(int n_events, int n_stations, std::uint64_t seed,
                               double test_fraction = 0.25, double label_fraction = 1.0);

// ---------------------------------------------------------------------------
// Persistence (catalog/*.csv + traces/*.f32)
// ---------------------------------------------------------------------------

void export_catalog(const Catalog& catalog, const std::string& root_path);
Catalog import_catalog(const std::string& root_path);

}  // namespace seisgen::data

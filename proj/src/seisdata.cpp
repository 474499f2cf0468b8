#include "seisgen/seisdata.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "seisgen/common.hpp"
#include "seisgen/csv.hpp"
#include "seisgen/geo.hpp"
#include "seisgen/signal.hpp"

namespace fs = std::filesystem;

namespace seisgen::data {

std::string to_string(Split s) { return s == Split::train ? "train" : "test"; }

Split split_from_string(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "test") return Split::test;
    throw data_error("unknown split '" + s + "' (expected train|test)");
}

// ---------------------------------------------------------------------------
// Catalog
// ---------------------------------------------------------------------------

const EventRecord* Catalog::find_event(const std::string& event_id) const {
    auto it = std::lower_bound(events.begin(), events.end(), event_id,
                               [](const EventRecord& e, const std::string& id) { return e.event_id < id; });
    if (it != events.end() && it->event_id == event_id) return &*it;
    return nullptr;
}

const StationRecord* Catalog::find_station(const std::string& station_id) const {
    auto it = std::lower_bound(stations.begin(), stations.end(), station_id,
                               [](const StationRecord& s, const std::string& id) { return s.station_id < id; });
    if (it != stations.end() && it->station_id == station_id) return &*it;
    return nullptr;
}

std::vector<const Trace*> Catalog::traces_of(const std::string& event_id) const {
    std::vector<const Trace*> out;
    for (auto it = traces.lower_bound(TraceKey{event_id, ""});
         it != traces.end() && it->first.event_id == event_id; ++it)
        out.push_back(&it->second);
    return out;
}

Split Catalog::split_of(const std::string& event_id) const {
    if (train_events.count(event_id)) return Split::train;
    if (test_events.count(event_id)) return Split::test;
    throw data_error("event '" + event_id + "' has no split assignment");
}

void Catalog::add_event(EventRecord e, Split split) {
    (split == Split::train ? train_events : test_events).insert(e.event_id);
    events.push_back(std::move(e));
    std::sort(events.begin(), events.end(),
              [](const EventRecord& a, const EventRecord& b) { return a.event_id < b.event_id; });
}

void Catalog::add_station(StationRecord s) {
    stations.push_back(std::move(s));
    std::sort(stations.begin(), stations.end(),
              [](const StationRecord& a, const StationRecord& b) { return a.station_id < b.station_id; });
}

void Catalog::add_trace(Trace t) {
    TraceKey key{t.event_id, t.station_id};
    traces[key] = std::move(t);
}

namespace {

void check_id(const std::string& id, const std::string& what) {
    if (id.empty()) throw data_error(what + ": empty id");
    for (char c : id) {
        const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-';
        if (!ok) throw data_error(what + ": id '" + id + "' contains invalid character '" + c + "'");
    }
}

}  // namespace

void Catalog::validate() const {
    for (size_t i = 0; i < events.size(); ++i) {
        const EventRecord& e = events[i];
        check_id(e.event_id, "event");
        if (i > 0 && events[i - 1].event_id == e.event_id)
            throw data_error("duplicate event_id '" + e.event_id + "'");
        if (e.e_dep < 0) throw data_error("event '" + e.event_id + "': depth must be >= 0");
        if (!std::isfinite(e.e_m) || !std::isfinite(e.e_lat) || !std::isfinite(e.e_lon))
            throw data_error("event '" + e.event_id + "': non-finite fields");
    }
    for (size_t i = 0; i < stations.size(); ++i) {
        check_id(stations[i].station_id, "station");
        if (i > 0 && stations[i - 1].station_id == stations[i].station_id)
            throw data_error("duplicate station_id '" + stations[i].station_id + "'");
    }
    for (const std::string& id : train_events)
        if (test_events.count(id))
            throw data_error("event '" + id + "' appears in both train and test splits");
    for (const EventRecord& e : events)
        if (!train_events.count(e.event_id) && !test_events.count(e.event_id))
            throw data_error("event '" + e.event_id + "' has no split assignment");
    for (const std::string& id : train_events)
        if (!find_event(id)) throw data_error("split references unknown event '" + id + "'");
    for (const std::string& id : test_events)
        if (!find_event(id)) throw data_error("split references unknown event '" + id + "'");

    for (const auto& [key, t] : traces) {
        if (key.event_id != t.event_id || key.station_id != t.station_id)
            throw data_error("trace index key mismatch for event '" + key.event_id + "'");
        if (!find_event(t.event_id))
            throw data_error("trace references unknown event '" + t.event_id + "'");
        if (!find_station(t.station_id))
            throw data_error("trace references unknown station '" + t.station_id + "'");
        if (t.samples.rows() != kChannels || t.samples.cols() != kSamples)
            throw data_error("trace " + t.event_id + "/" + t.station_id + ": bad shape");
        if (!t.samples.allFinite())
            throw data_error("trace " + t.event_id + "/" + t.station_id + ": non-finite samples");
        if (t.p_arrival && (*t.p_arrival < 0 || *t.p_arrival >= kSamples))
            throw data_error("trace " + t.event_id + "/" + t.station_id + ": p_arrival out of range");
        if (t.s_arrival && (*t.s_arrival < 0 || *t.s_arrival >= kSamples))
            throw data_error("trace " + t.event_id + "/" + t.station_id + ": s_arrival out of range");
        if (t.p_arrival && t.s_arrival && !(*t.p_arrival < *t.s_arrival))
            throw data_error("trace " + t.event_id + "/" + t.station_id + ": requires p < s");
    }
}

bool catalog_equal(const Catalog& a, const Catalog& b) {
    if (a.events.size() != b.events.size() || a.stations.size() != b.stations.size() ||
        a.traces.size() != b.traces.size())
        return false;
    for (size_t i = 0; i < a.events.size(); ++i) {
        const EventRecord &x = a.events[i], &y = b.events[i];
        if (x.event_id != y.event_id || x.e_lat != y.e_lat || x.e_lon != y.e_lon ||
            x.e_dep != y.e_dep || x.e_m != y.e_m || x.origin_time != y.origin_time)
            return false;
    }
    for (size_t i = 0; i < a.stations.size(); ++i) {
        const StationRecord &x = a.stations[i], &y = b.stations[i];
        if (x.station_id != y.station_id || x.s_lat != y.s_lat || x.s_lon != y.s_lon) return false;
    }
    if (a.train_events != b.train_events || a.test_events != b.test_events) return false;
    auto ita = a.traces.begin();
    auto itb = b.traces.begin();
    for (; ita != a.traces.end(); ++ita, ++itb) {
        if (ita->first != itb->first) return false;
        const Trace &x = ita->second, &y = itb->second;
        if (x.p_arrival != y.p_arrival || x.s_arrival != y.s_arrival) return false;
        if (std::memcmp(x.samples.data(), y.samples.data(), sizeof(float) * kChannels * kSamples) != 0)
            return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Conditioning
// ---------------------------------------------------------------------------

namespace {

// Best rational approximation p/q of x with q <= max_den (continued fractions).
std::pair<int, int> rationalize(double x, int max_den) {
    long p0 = 0, q0 = 1, p1 = 1, q1 = 0;
    double v = x;
    for (int i = 0; i < 64; ++i) {
        const long a = static_cast<long>(std::floor(v));
        long p2 = a * p1 + p0, q2 = a * q1 + q0;
        if (q2 > max_den) break;
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        const double rem = v - static_cast<double>(a);
        if (rem < 1e-12) break;
        v = 1.0 / rem;
    }
    return {static_cast<int>(p1), static_cast<int>(q1)};
}

}  // namespace

ConditionedTrace condition_trace(const Eigen::MatrixXd& raw, double sample_rate_hz) {
    if (raw.rows() != kChannels)
        throw data_error("condition_trace: expected 3 channels, got " + std::to_string(raw.rows()));
    if (raw.cols() < 1) throw data_error("condition_trace: empty input");
    if (!raw.allFinite()) throw data_error("condition_trace: non-finite input samples");
    if (!(sample_rate_hz > 0)) throw data_error("condition_trace: sample rate must be > 0");

    const auto sos = signal::butterworth_bandpass(kBandOrder, kBandLowHz, kBandHighHz, kSampleRateHz);

    ConditionedTrace out;
    out.samples = Waveform::Zero(kChannels, kSamples);
    for (int c = 0; c < kChannels; ++c) {
        signal::ArrayXd x = raw.row(c).transpose().array();
        if (sample_rate_hz != kSampleRateHz) {
            auto [up, down] = rationalize(kSampleRateHz / sample_rate_hz, 4096);
            if (up <= 0 || down <= 0)
                throw data_error("condition_trace: cannot resample from " +
                                 std::to_string(sample_rate_hz) + " Hz");
            x = signal::resample_poly(x, up, down);
        }
        x = signal::detrend_linear(x);
        x = signal::sosfiltfilt(sos, x);
        if (c == 0 && x.size() < kSamples) {
            out.padded = true;
            warn("condition_trace: input shorter than 60 s (" + std::to_string(x.size()) +
                 " samples), zero-padding");
        }
        const Eigen::Index n = std::min<Eigen::Index>(x.size(), kSamples);
        for (Eigen::Index i = 0; i < n; ++i) out.samples(c, i) = static_cast<float>(x[i]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Pair sampling
// ---------------------------------------------------------------------------

TraceKey fixed_source_key(const Catalog& catalog, const std::string& event_id) {
    auto list = catalog.traces_of(event_id);
    if (list.empty()) throw data_error("event '" + event_id + "' has no traces");
    for (const Trace* t : list)
        if (t->labeled()) return {t->event_id, t->station_id};
    return {list.front()->event_id, list.front()->station_id};
}

PairedSample sample_pair(const Catalog& catalog, const std::string& event_id,
                         std::uint64_t rng_seed, const features::RegionNormalization& norms) {
    const EventRecord* event = catalog.find_event(event_id);
    if (!event) throw data_error("sample_pair: unknown event_id '" + event_id + "'");
    if (catalog.split_of(event_id) != Split::train)
        throw data_error("sample_pair: event '" + event_id + "' is not in the training split");
    auto list = catalog.traces_of(event_id);
    if (list.empty()) throw data_error("sample_pair: event '" + event_id + "' has no traces");

    const TraceKey src_key = fixed_source_key(catalog, event_id);
    const Trace* source = &catalog.traces.at(src_key);

    // Prefer labeled traces; never self-pair unless the event has a single
    // observation.
    std::vector<const Trace*> pool;
    for (const Trace* t : list)
        if (t->labeled() && t->station_id != src_key.station_id) pool.push_back(t);
    if (pool.empty())
        for (const Trace* t : list)
            if (t->station_id != src_key.station_id) pool.push_back(t);

    PairedSample out;
    out.source = *source;
    if (pool.empty()) {
        out.target = *source;
        out.degenerate = true;
    } else {
        auto rng = make_rng(rng_seed);
        std::uniform_int_distribution<size_t> pick(0, pool.size() - 1);
        out.target = *pool[pick(rng)];
    }
    const StationRecord* st = catalog.find_station(out.target.station_id);
    if (!st) throw data_error("sample_pair: unknown station '" + out.target.station_id + "'");
    out.condition = features::encode_condition(*event, *st, norms);
    return out;
}

// ---------------------------------------------------------------------------
// Synthetic generator
// ---------------------------------------------------------------------------

namespace {

// Unit-RMS band-limited gaussian noise.
signal::ArrayXd band_noise(std::uint64_t seed, double lo, double hi, int n) {
    auto rng = make_rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    signal::ArrayXd x(n);
    for (int i = 0; i < n; ++i) x[i] = nd(rng);
    const auto sos = signal::butterworth_bandpass(4, lo, hi, kSampleRateHz);
    x = signal::sosfiltfilt(sos, x);
    const double rms = std::sqrt((x * x).mean());
    return rms > 0 ? signal::ArrayXd(x / rms) : x;
}

// Linear attack then exponential decay, zero before the onset sample.
signal::ArrayXd onset_envelope(int onset, int rise, double decay_s, int n) {
    signal::ArrayXd env = signal::ArrayXd::Zero(n);
    for (int i = onset; i < n; ++i) {
        const int k = i - onset;
        const double a = rise > 0 ? std::min(1.0, static_cast<double>(k) / rise) : 1.0;
        const double d = k > rise ? std::exp(-(k - rise) / (decay_s * kSampleRateHz)) : 1.0;
        env[i] = a * d;
    }
    return env;
}

// Calibration constant putting the generator's Wood-Anderson magnitudes in the
// neighborhood of the nominal event magnitude.
constexpr double kAmpScale = 2.0e-5;

}  // namespace

SyntheticEvent generate_synthetic_event(const SyntheticEventParams& p) {
    if (p.stations.empty() || p.stations.size() > 64)
        throw data_error("generate_synthetic_event: need 1..64 stations");
    if (p.magnitude < 2.0 || p.magnitude > 6.0)
        throw data_error("generate_synthetic_event: magnitude must be in [2, 6]");
    if (p.e_dep < 0) throw data_error("generate_synthetic_event: depth must be >= 0");

    SyntheticEvent out;
    out.event = EventRecord{p.event_id, p.e_lat, p.e_lon, p.e_dep, p.magnitude, p.origin_time};

    const int n = kSamples;
    for (const StationRecord& st : p.stations) {
        const double r_epi = geo::great_circle_km(p.e_lat, p.e_lon, st.s_lat, st.s_lon);
        const double r_hypo = std::sqrt(r_epi * r_epi + p.e_dep * p.e_dep);
        const double t_p = r_hypo / kVpKmS;
        const double t_s = r_hypo / kVsKmS;
        if (t_s > 59.0) {
            warn("synthetic event " + p.event_id + ": station " + st.station_id +
                 " beyond the 59 s S travel-time horizon, excluded");
            ++out.excluded;
            continue;
        }
        const int ip = static_cast<int>(std::lround(t_p * kSampleRateHz));
        const int is = static_cast<int>(std::lround(t_s * kSampleRateHz));
        const double amp = kAmpScale * std::pow(10.0, p.magnitude) / std::max(r_hypo, 1.0);

        const std::uint64_t base =
            derive_seed(p.seed, fnv1a(p.event_id), fnv1a(st.station_id));
        const signal::ArrayXd p_env = onset_envelope(ip, 12, 1.2, n);
        const signal::ArrayXd s_env = onset_envelope(is, 20, 3.5, n);

        Trace tr;
        tr.event_id = p.event_id;
        tr.station_id = st.station_id;
        tr.samples = Waveform::Zero(kChannels, n);
        for (int c = 0; c < kChannels; ++c) {
            const double p_w = (c == 2) ? 1.0 : 0.4;   // P strongest on vertical
            const double s_w = (c == 2) ? 0.45 : 1.0;  // S strongest on horizontals
            signal::ArrayXd x =
                p.noise_level * amp * band_noise(derive_seed(base, 1, c), 1.0, 45.0, n) +
                0.35 * amp * p_w * p_env * band_noise(derive_seed(base, 2, c), 2.0, 25.0, n) +
                amp * s_w * s_env * band_noise(derive_seed(base, 3, c), 1.0, 12.0, n);
            for (int i = 0; i < n; ++i) tr.samples(c, i) = static_cast<float>(x[i]);
        }
        auto label_rng = make_rng(derive_seed(base, "label"));
        if (std::uniform_real_distribution<double>(0.0, 1.0)(label_rng) < p.label_fraction &&
            ip < is && is < n) {
            tr.p_arrival = ip;
            tr.s_arrival = is;
        }
        out.traces.push_back(std::move(tr));
    }
    return out;
}

Catalog make_synthetic_catalog(int n_events, int n_stations, std::uint64_t seed,
                               double test_fraction, double label_fraction) {
    if (n_events < 1 || n_stations < 1 || n_stations > 64)
        throw config_error("make_synthetic_catalog: need n_events >= 1 and 1 <= n_stations <= 64");

    // Compact box keeps every station inside the 59 s S horizon.
    const double lat_lo = 33.6, lat_hi = 34.4, lon_lo = -118.4, lon_hi = -117.6;
    auto rng = make_rng(derive_seed(seed, "catalog"));
    std::uniform_real_distribution<double> ulat(lat_lo, lat_hi), ulon(lon_lo, lon_hi);
    std::uniform_real_distribution<double> udep(4.0, 14.0), umag(2.5, 4.5);

    Catalog cat;
    std::vector<StationRecord> stations;
    for (int s = 0; s < n_stations; ++s) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "ST%02d", s);
        StationRecord st{buf, ulat(rng), ulon(rng)};
        stations.push_back(st);
        cat.add_station(st);
    }
    const int n_test = std::min(n_events - 1, static_cast<int>(std::lround(test_fraction * n_events)));
    for (int e = 0; e < n_events; ++e) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "ev%03d", e);
        SyntheticEventParams p;
        p.event_id = buf;
        p.magnitude = umag(rng);
        p.e_lat = ulat(rng);
        p.e_lon = ulon(rng);
        p.e_dep = udep(rng);
        p.origin_time = 1600000000.0 + 3600.0 * e;
        p.stations = stations;
        p.seed = derive_seed(derive_seed(seed, "event"), static_cast<std::uint64_t>(e));
        p.label_fraction = label_fraction;
        SyntheticEvent ev = generate_synthetic_event(p);
        cat.add_event(ev.event, e >= n_events - n_test ? Split::test : Split::train);
        for (Trace& t : ev.traces) cat.add_trace(std::move(t));
    }
    cat.validate();
    return cat;
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

namespace {

double parse_double(const std::string& s, const std::string& where) {
    try {
        size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw data_error(where + ": invalid number '" + s + "'");
    }
}

int parse_int(const std::string& s, const std::string& where) {
    try {
        size_t pos = 0;
        const int v = std::stoi(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw data_error(where + ": invalid integer '" + s + "'");
    }
}

int require_column(const csv::Table& t, const std::string& name, const std::string& path) {
    const int c = t.column(name);
    if (c < 0) throw data_error(path + ": missing required column '" + name + "'");
    return c;
}

}  // namespace

void export_catalog(const Catalog& catalog, const std::string& root_path) {
    catalog.validate();
    static_assert(std::endian::native == std::endian::little,
                  "trace files are little-endian float32");
    fs::create_directories(fs::path(root_path) / "catalog");
    fs::create_directories(fs::path(root_path) / "traces");

    {
        std::ofstream f(fs::path(root_path) / "catalog" / "events.csv");
        f << "event_id,e_lat,e_lon,e_dep,e_m,origin_time,split\n";
        for (const EventRecord& e : catalog.events) {
            const Split sp = catalog.split_of(e.event_id);
            f << csv::escape_field(e.event_id) << ',' << csv::format_double(e.e_lat) << ','
              << csv::format_double(e.e_lon) << ',' << csv::format_double(e.e_dep) << ','
              << csv::format_double(e.e_m) << ',' << csv::format_double(e.origin_time) << ','
              << to_string(sp) << '\n';
        }
    }
    {
        std::ofstream f(fs::path(root_path) / "catalog" / "stations.csv");
        f << "station_id,s_lat,s_lon\n";
        for (const StationRecord& s : catalog.stations)
            f << csv::escape_field(s.station_id) << ',' << csv::format_double(s.s_lat) << ','
              << csv::format_double(s.s_lon) << '\n';
    }
    {
        std::ofstream f(fs::path(root_path) / "catalog" / "traces.csv");
        f << "event_id,station_id,file,p_arrival,s_arrival\n";
        for (const auto& [key, t] : catalog.traces) {
            const std::string file = "traces/" + key.event_id + "__" + key.station_id + ".f32";
            f << csv::escape_field(key.event_id) << ',' << csv::escape_field(key.station_id) << ','
              << file << ',' << (t.p_arrival ? std::to_string(*t.p_arrival) : "") << ','
              << (t.s_arrival ? std::to_string(*t.s_arrival) : "") << '\n';
            std::ofstream bin(fs::path(root_path) / file, std::ios::binary);
            bin.write(reinterpret_cast<const char*>(t.samples.data()),
                      sizeof(float) * kChannels * kSamples);
            if (!bin) throw data_error("failed to write " + file);
        }
    }
}

Catalog import_catalog(const std::string& root_path) {
    const fs::path root(root_path);
    Catalog cat;

    const std::string events_path = (root / "catalog" / "events.csv").string();
    csv::Table events = csv::read_file(events_path);
    {
        const int c_id = require_column(events, "event_id", events_path);
        const int c_lat = require_column(events, "e_lat", events_path);
        const int c_lon = require_column(events, "e_lon", events_path);
        const int c_dep = require_column(events, "e_dep", events_path);
        const int c_m = require_column(events, "e_m", events_path);
        const int c_ot = require_column(events, "origin_time", events_path);
        const int c_sp = require_column(events, "split", events_path);
        for (size_t r = 0; r < events.rows.size(); ++r) {
            const auto& row = events.rows[r];
            const std::string where = events_path + " row " + std::to_string(r + 2);
            EventRecord e;
            e.event_id = row[c_id];
            if (cat.find_event(e.event_id))
                throw data_error(where + ": duplicate event_id '" + e.event_id + "'");
            e.e_lat = parse_double(row[c_lat], where);
            e.e_lon = parse_double(row[c_lon], where);
            e.e_dep = parse_double(row[c_dep], where);
            e.e_m = parse_double(row[c_m], where);
            e.origin_time = parse_double(row[c_ot], where);
            Split sp;
            try {
                sp = split_from_string(row[c_sp]);
            } catch (const data_error& err) {
                throw data_error(where + ": " + err.what());
            }
            cat.add_event(std::move(e), sp);
        }
    }

    const std::string stations_path = (root / "catalog" / "stations.csv").string();
    csv::Table stations = csv::read_file(stations_path);
    {
        const int c_id = require_column(stations, "station_id", stations_path);
        const int c_lat = require_column(stations, "s_lat", stations_path);
        const int c_lon = require_column(stations, "s_lon", stations_path);
        for (size_t r = 0; r < stations.rows.size(); ++r) {
            const auto& row = stations.rows[r];
            const std::string where = stations_path + " row " + std::to_string(r + 2);
            if (cat.find_station(row[c_id]))
                throw data_error(where + ": duplicate station_id '" + row[c_id] + "'");
            cat.add_station(StationRecord{row[c_id], parse_double(row[c_lat], where),
                                          parse_double(row[c_lon], where)});
        }
    }

    const std::string traces_path = (root / "catalog" / "traces.csv").string();
    csv::Table traces = csv::read_file(traces_path);
    {
        const int c_eid = require_column(traces, "event_id", traces_path);
        const int c_sid = require_column(traces, "station_id", traces_path);
        const int c_file = require_column(traces, "file", traces_path);
        const int c_p = require_column(traces, "p_arrival", traces_path);
        const int c_s = require_column(traces, "s_arrival", traces_path);
        for (size_t r = 0; r < traces.rows.size(); ++r) {
            const auto& row = traces.rows[r];
            const std::string where = traces_path + " row " + std::to_string(r + 2);
            Trace t;
            t.event_id = row[c_eid];
            t.station_id = row[c_sid];
            if (!cat.find_event(t.event_id))
                throw data_error(where + ": unknown event_id '" + t.event_id + "'");
            if (!cat.find_station(t.station_id))
                throw data_error(where + ": unknown station_id '" + t.station_id + "'");
            if (cat.traces.count(TraceKey{t.event_id, t.station_id}))
                throw data_error(where + ": duplicate trace for event '" + t.event_id +
                                 "' station '" + t.station_id + "'");
            if (!row[c_p].empty()) t.p_arrival = parse_int(row[c_p], where);
            if (!row[c_s].empty()) t.s_arrival = parse_int(row[c_s], where);

            const fs::path file = root / row[c_file];
            std::ifstream bin(file, std::ios::binary | std::ios::ate);
            if (!bin) throw data_error(where + ": cannot open trace file " + file.string());
            const auto bytes = static_cast<std::size_t>(bin.tellg());
            const std::size_t expect = sizeof(float) * kChannels * kSamples;
            if (bytes != expect)
                throw data_error(where + ": trace file " + file.string() + " has " +
                                 std::to_string(bytes) + " bytes, expected " + std::to_string(expect));
            bin.seekg(0);
            t.samples = Waveform::Zero(kChannels, kSamples);
            bin.read(reinterpret_cast<char*>(t.samples.data()), expect);
            if (!bin) throw data_error(where + ": failed reading " + file.string());
            cat.add_trace(std::move(t));
        }
    }

    cat.validate();
    return cat;
}

}  // namespace seisgen::data

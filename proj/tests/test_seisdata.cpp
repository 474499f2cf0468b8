#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "seisgen/seisdata.hpp"
#include "seisgen/signal.hpp"

using namespace seisgen;
using namespace seisgen::data;

namespace {

Eigen::MatrixXd sine_matrix(double freq_hz, double fs, int n, double amp = 1.0) {
    Eigen::MatrixXd m(3, n);
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < n; ++i) m(c, i) = amp * std::sin(2.0 * M_PI * freq_hz * i / fs);
    return m;
}

double rms(const Eigen::VectorXf& v) { return std::sqrt(v.cast<double>().array().square().mean()); }

std::filesystem::path temp_dir(const std::string& tag) {
    auto p = std::filesystem::temp_directory_path() / ("seisgen_test_" + tag);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace

TEST_CASE("condition_trace: zero in, zero out") {
    auto out = condition_trace(Eigen::MatrixXd::Zero(3, 6000), 100.0);
    CHECK(out.samples.cwiseAbs().maxCoeff() == 0.0f);
    CHECK_FALSE(out.padded);
}

TEST_CASE("condition_trace: 0.1 Hz sinusoid is rejected by the band") {
    auto raw = sine_matrix(0.1, 100.0, 6000);
    auto out = condition_trace(raw, 100.0);
    const double in_rms = std::sqrt(raw.row(0).array().square().mean());
    CHECK(rms(out.samples.row(0).transpose()) < 0.05 * in_rms);
}

TEST_CASE("condition_trace: 10 Hz sinusoid passes") {
    auto raw = sine_matrix(10.0, 100.0, 6000);
    auto out = condition_trace(raw, 100.0);
    // discard 2 s of edge transients
    const int cut = 200;
    const double in_rms = std::sqrt(raw.row(0).segment(cut, 5600).array().square().mean());
    const double out_rms =
        std::sqrt(out.samples.row(0).segment(cut, 5600).cast<double>().array().square().mean());
    CHECK(out_rms > 0.9 * in_rms);
    CHECK(out_rms < 1.1 * in_rms);
}

TEST_CASE("condition_trace: approximate idempotence") {
    auto cat = make_synthetic_catalog(1, 2, 99);
    const Trace& t = cat.traces.begin()->second;
    Eigen::MatrixXd raw = t.samples.cast<double>();
    auto once = condition_trace(raw, 100.0);
    auto twice = condition_trace(once.samples.cast<double>(), 100.0);
    const double r1 = rms(Eigen::VectorXf(once.samples.reshaped()));
    const double r2 = rms(Eigen::VectorXf(twice.samples.reshaped()));
    CHECK(std::abs(r2 - r1) / r1 < 0.01);
}

TEST_CASE("condition_trace: resampling from 50 Hz") {
    auto raw = sine_matrix(5.0, 50.0, 3000);
    auto out = condition_trace(raw, 50.0);
    CHECK(out.samples.cols() == 6000);
    CHECK_FALSE(out.padded);
    // mid-band tone should survive with roughly unit gain
    const double out_rms =
        std::sqrt(out.samples.row(0).segment(200, 5600).cast<double>().array().square().mean());
    CHECK(out_rms == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(0.05));
}

TEST_CASE("condition_trace: short input pads with zeros and flags it") {
    auto raw = sine_matrix(10.0, 100.0, 4000);
    auto out = condition_trace(raw, 100.0);
    CHECK(out.padded);
    CHECK(out.samples.cols() == 6000);
    CHECK(out.samples.row(0).tail(1500).cwiseAbs().maxCoeff() == 0.0f);
}

TEST_CASE("condition_trace: non-finite input rejected") {
    Eigen::MatrixXd raw = Eigen::MatrixXd::Zero(3, 6000);
    raw(1, 17) = std::nan("");
    CHECK_THROWS_AS(condition_trace(raw, 100.0), data_error);
}

TEST_CASE("synthetic event: exact travel-time arrivals") {
    // station at the epicenter, depth 60 km -> R_hypo exactly 60
    SyntheticEventParams p;
    p.event_id = "evA";
    p.magnitude = 3.0;
    p.e_lat = 34.0;
    p.e_lon = -118.0;
    p.e_dep = 60.0;
    p.stations = {{"S1", 34.0, -118.0}};
    p.seed = 7;
    auto ev = generate_synthetic_event(p);
    REQUIRE(ev.traces.size() == 1);
    REQUIRE(ev.traces[0].p_arrival.has_value());
    CHECK(*ev.traces[0].p_arrival == 1000);  // 10.0 s
    CHECK(*ev.traces[0].s_arrival == 1714);  // 17.14 s
}

TEST_CASE("synthetic event: magnitude +1 scales peaks by 10") {
    SyntheticEventParams p;
    p.e_dep = 60.0;
    p.stations = {{"S1", 34.0, -118.0}};
    p.seed = 11;
    p.magnitude = 3.0;
    auto a = generate_synthetic_event(p);
    p.magnitude = 4.0;
    auto b = generate_synthetic_event(p);
    const double pa = a.traces[0].samples.cwiseAbs().maxCoeff();
    const double pb = b.traces[0].samples.cwiseAbs().maxCoeff();
    CHECK(pb / pa == doctest::Approx(10.0).epsilon(1e-5));
}

TEST_CASE("synthetic event: equal distance means equal amplitude scale") {
    SyntheticEventParams p;
    p.e_lat = 34.0;
    p.e_lon = -118.0;
    p.e_dep = 10.0;
    // two stations symmetric about the epicenter
    p.stations = {{"SN", 34.3, -118.0}, {"SS", 33.7, -118.0}};
    p.seed = 13;
    auto ev = generate_synthetic_event(p);
    REQUIRE(ev.traces.size() == 2);
    // energy scale is a stable statistic of the shared amplitude law
    const double a = std::sqrt(ev.traces[0].samples.cast<double>().array().square().mean());
    const double b = std::sqrt(ev.traces[1].samples.cast<double>().array().square().mean());
    CHECK(a / b > 0.75);
    CHECK(a / b < 1.33);
}

TEST_CASE("synthetic event: stations beyond 59 s of S travel time are excluded") {
    SyntheticEventParams p;
    p.e_lat = 33.0;
    p.e_lon = -120.0;
    p.e_dep = 5.0;
    p.stations = {{"FAR", 35.9, -115.4}, {"NEAR", 33.1, -120.0}};  // ~460 km vs ~11 km
    auto ev = generate_synthetic_event(p);
    CHECK(ev.excluded == 1);
    REQUIRE(ev.traces.size() == 1);
    CHECK(ev.traces[0].station_id == "NEAR");
}

TEST_CASE("sample_pair: labeled targets preferred, source excluded") {
    Catalog cat;
    cat.add_station({"A", 34.0, -118.0});
    cat.add_station({"B", 34.1, -118.0});
    cat.add_station({"C", 34.2, -118.0});
    SyntheticEventParams p;
    p.event_id = "ev1";
    p.stations = {{"A", 34.0, -118.0}, {"B", 34.1, -118.0}, {"C", 34.2, -118.0}};
    p.seed = 3;
    auto ev = generate_synthetic_event(p);
    ev.traces[2].p_arrival.reset();  // station C unlabeled
    ev.traces[2].s_arrival.reset();
    cat.add_event(ev.event, Split::train);
    for (auto& t : ev.traces) cat.add_trace(t);
    cat.validate();

    // fixed source is the lexicographically first labeled trace: A
    CHECK(fixed_source_key(cat, "ev1").station_id == "A");

    std::set<std::string> seen;
    for (int s = 0; s < 1000; ++s) {
        auto pair = sample_pair(cat, "ev1", s);
        CHECK(pair.source.station_id == "A");
        CHECK(pair.source.event_id == pair.target.event_id);
        CHECK_FALSE(pair.degenerate);
        seen.insert(pair.target.station_id);
        CHECK(pair.target.labeled());  // only labeled candidates
    }
    CHECK(seen == std::set<std::string>{"B"});  // labeled pool minus the source
}

TEST_CASE("sample_pair: determinism and degenerate single-trace events") {
    Catalog cat;
    cat.add_station({"A", 34.0, -118.0});
    SyntheticEventParams p;
    p.event_id = "solo";
    p.stations = {{"A", 34.0, -118.0}};
    auto ev = generate_synthetic_event(p);
    cat.add_event(ev.event, Split::train);
    cat.add_trace(ev.traces[0]);
    cat.validate();

    auto a = sample_pair(cat, "solo", 42);
    auto b = sample_pair(cat, "solo", 42);
    CHECK(a.degenerate);
    CHECK(a.source.station_id == a.target.station_id);
    CHECK(a.target.station_id == b.target.station_id);
    CHECK_THROWS_AS(sample_pair(cat, "nope", 1), data_error);
}

TEST_CASE("catalog round trip is bit exact") {
    auto dir = temp_dir("roundtrip");
    Catalog cat = make_synthetic_catalog(10, 3, 123, 0.3, 0.7);
    export_catalog(cat, dir.string());
    Catalog back = import_catalog(dir.string());
    CHECK(catalog_equal(cat, back));

    // second round trip stays identical
    auto dir2 = temp_dir("roundtrip2");
    export_catalog(back, dir2.string());
    CHECK(catalog_equal(back, import_catalog(dir2.string())));
    std::filesystem::remove_all(dir);
    std::filesystem::remove_all(dir2);
}

TEST_CASE("empty catalog exports header-only files") {
    auto dir = temp_dir("empty");
    export_catalog(Catalog{}, dir.string());
    Catalog back = import_catalog(dir.string());
    CHECK(back.events.empty());
    CHECK(back.traces.empty());
    std::ifstream f(dir / "catalog" / "events.csv");
    std::string line;
    REQUIRE(std::getline(f, line));
    CHECK(line == "event_id,e_lat,e_lon,e_dep,e_m,origin_time,split");
    CHECK_FALSE(std::getline(f, line));
    std::filesystem::remove_all(dir);
}

TEST_CASE("import rejects duplicate and dangling rows with row numbers") {
    auto dir = temp_dir("badcsv");
    Catalog cat = make_synthetic_catalog(2, 2, 5);
    export_catalog(cat, dir.string());

    SUBCASE("duplicate event_id") {
        std::ofstream f(dir / "catalog" / "events.csv", std::ios::app);
        f << "ev000,34.0,-118.0,5.0,3.0,0.0,train\n";
        f.close();
        CHECK_THROWS_WITH_AS(import_catalog(dir.string()),
                             doctest::Contains("duplicate event_id"), data_error);
    }
    SUBCASE("dangling trace reference") {
        std::ofstream f(dir / "catalog" / "traces.csv", std::ios::app);
        f << "evXXX,ST00,traces/ev000__ST00.f32,,\n";
        f.close();
        CHECK_THROWS_WITH_AS(import_catalog(dir.string()),
                             doctest::Contains("unknown event_id 'evXXX'"), data_error);
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("overlapping train/test splits are rejected") {
    Catalog cat = make_synthetic_catalog(3, 2, 6);
    cat.test_events.insert(*cat.train_events.begin());
    CHECK_THROWS_WITH_AS(cat.validate(), doctest::Contains("both train and test"), data_error);
}

TEST_CASE("pair symmetry property over a sampled batch") {
    Catalog cat = make_synthetic_catalog(6, 4, 21, 0.0);
    for (const EventRecord& e : cat.events) {
        for (int s = 0; s < 20; ++s) {
            auto pair = sample_pair(cat, e.event_id, s);
            CHECK(pair.source.event_id == pair.target.event_id);
        }
    }
}

TEST_CASE("split hygiene on generated catalogs") {
    Catalog cat = make_synthetic_catalog(8, 3, 31, 0.25);
    CHECK(cat.train_events.size() == 6);
    CHECK(cat.test_events.size() == 2);
    for (const auto& id : cat.train_events) CHECK(cat.test_events.count(id) == 0);
}

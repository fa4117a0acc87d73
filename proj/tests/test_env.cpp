#include <cstdio>
#include <filesystem>
#include <map>

#include "advgen/env.hpp"
#include "doctest.h"

using namespace advgen;

namespace {

Trace one_interval(std::int64_t bw, std::int64_t lat, std::int64_t dur, std::int64_t buffer) {
    Trace t;
    t.intervals = {{bw, lat, dur}};
    t.buffer_packets = buffer;
    return t;
}

Bounds random_bounds(Rng& rng, int intervals, bool data) {
    auto range = [&](std::int64_t lo, std::int64_t hi) {
        const auto a = uniform_int(rng, lo, hi);
        const auto b = uniform_int(rng, lo, hi);
        return Range{std::min(a, b), std::max(a, b)};
    };
    std::optional<Range> d;
    if (data) d = range(1, 5000);
    return Bounds::per_interval(intervals, range(1, 200), range(0, 200), range(1, 3000), range(1, 20000), d);
}

}  // namespace

TEST_CASE("validate accepts a trace inside the default bounds") {
    const auto r = validate(one_interval(50, 20, 1000, 1000), Bounds::defaults(1));
    CHECK(r.ok());
    CHECK(r.violations.empty());
}

TEST_CASE("validate reports the position of each violation") {
    const auto bounds = Bounds::defaults(1);
    auto low = validate(one_interval(0, 20, 1000, 1000), bounds);
    REQUIRE(low.violations.size() == 1);
    CHECK(low.violations[0].position == 0);
    CHECK(low.violations[0].slot.field == Field::Bandwidth);
    CHECK(low.violations[0].value == 0);
    CHECK(low.violations[0].lower == 1);

    auto high = validate(one_interval(101, 20, 1000, 1000), bounds);
    REQUIRE(high.violations.size() == 1);
    CHECK(high.violations[0].upper == 100);

    auto many = validate(one_interval(101, 200, 1, 20000), bounds);
    CHECK(many.violations.size() == 4);
}

TEST_CASE("validate separates shape mismatch from bound violations") {
    Trace t = one_interval(50, 20, 1000, 1000);
    t.intervals.push_back({50, 20, 1000});
    const auto r = validate(t, Bounds::defaults(1));
    CHECK_FALSE(r.ok());
    CHECK(r.shape_error.has_value());
    CHECK(r.violations.empty());

    Trace with_data = one_interval(50, 20, 1000, 1000);
    with_data.data_kb = 10;
    CHECK(validate(with_data, Bounds::defaults(1)).shape_error.has_value());
}

TEST_CASE("validate is pure") {
    const Trace t = one_interval(101, 3, 1000, 1000);
    const Bounds b = Bounds::defaults(1);
    const auto first = validate(t, b);
    const auto second = validate(t, b);
    CHECK(first.describe() == second.describe());
    CHECK(t == one_interval(101, 3, 1000, 1000));
}

TEST_CASE("bounds reject lower above upper") {
    Bounds b = Bounds::defaults(2);
    b.lower[3] = b.upper[3] + 1;
    CHECK_THROWS_AS(b.check(), BoundsError);
    CHECK(b.size() == 7);
    CHECK(Bounds::defaults(3).size() == 10);
}

TEST_CASE("sample_uniform with degenerate bounds yields the constant trace") {
    const auto b = Bounds::per_interval(3, {7, 7}, {9, 9}, {600, 600}, {800, 800});
    Rng rng = make_rng(5);
    const Trace t = sample_uniform(b, rng);
    for (const auto& iv : t.intervals) {
        CHECK(iv.bandwidth_mbps == 7);
        CHECK(iv.latency_ms == 9);
        CHECK(iv.duration_ms == 600);
    }
    CHECK(t.buffer_packets == 800);
}

TEST_CASE("sample_uniform is deterministic per seed") {
    const auto b = Bounds::defaults(5);
    Rng a = make_rng(42), c = make_rng(42), d = make_rng(43);
    const auto x = sample_uniform(b, a);
    CHECK(x == sample_uniform(b, c));
    CHECK_FALSE(x == sample_uniform(b, d));
}

TEST_CASE("sample_uniform is uniform over a small range") {
    const auto b = Bounds::per_interval(1, {1, 4}, {5, 5}, {500, 500}, {500, 500});
    Rng rng = make_rng(9);
    std::map<std::int64_t, int> freq;
    const int n = 10000;
    for (int i = 0; i < n; ++i) ++freq[sample_uniform_vector(b, rng)[0]];
    CHECK(freq.size() == 4);
    for (const auto& [value, count] : freq) {
        const double f = static_cast<double>(count) / n;
        CHECK(f >= 0.20);
        CHECK(f <= 0.30);
    }
}

TEST_CASE("sample_uniform output validates over random bounds") {
    Rng meta = make_rng(1234);
    for (int trial = 0; trial < 500; ++trial) {
        const int k = static_cast<int>(uniform_int(meta, 1, 12));
        const auto b = random_bounds(meta, k, trial % 3 == 0);
        const Trace t = sample_uniform(b, meta);
        REQUIRE(validate(t, b).ok());
        REQUIRE(b.contains(encode(t, b.layout)));
    }
}

TEST_CASE("encode follows the documented layout") {
    const Trace t = one_interval(50, 20, 1000, 1000);
    CHECK(encode(t, Layout(1, false)) == TraceVector{50, 20, 1000, 1000});

    Trace two;
    two.intervals = {{1, 2, 3}, {4, 5, 6}};
    two.buffer_packets = 7;
    two.data_kb = 8;
    CHECK(encode(two, Layout(2, true)) == TraceVector{1, 2, 3, 4, 5, 6, 7, 8});
    const Layout l(2, true);
    CHECK(l.slot(4).field == Field::Latency);
    CHECK(l.slot(4).interval == 1);
    CHECK(l.slot(6).field == Field::Buffer);
    CHECK(l.slot(7).field == Field::DataSize);
    for (std::size_t i = 0; i < l.size(); ++i) CHECK(l.position(l.slot(i)) == i);
}

TEST_CASE("encode and decode round trip") {
    Rng rng = make_rng(77);
    for (int trial = 0; trial < 200; ++trial) {
        const auto b = random_bounds(rng, 10, trial % 2 == 0);
        const Trace t = sample_uniform(b, rng);
        const auto v = encode(t, b.layout);
        CHECK(decode(v, b.layout) == t);
        CHECK(encode(decode(v, b.layout), b.layout) == v);
    }
}

TEST_CASE("decode rejects a vector of the wrong length") {
    CHECK_THROWS_AS(decode(TraceVector{1, 2, 3}, Layout(1, false)), ShapeError);
    CHECK_THROWS_AS(decode(TraceVector{1, 2, 3, 4, 5}, Layout(1, false)), ShapeError);
    CHECK_THROWS_AS(encode(one_interval(1, 2, 3, 4), Layout(2, false)), ShapeError);
}

TEST_CASE("trace file format is bit-exact") {
    Trace t;
    t.intervals = {{12, 20, 1000}, {100, 5, 500}};
    t.buffer_packets = 1000;
    CHECK(format_trace(t) == "duration_ms,bandwidth_mbps,latency_ms\n1000,12,20\n500,100,5\nbuffer_packets=1000\n");
    t.data_kb = 250;
    const std::string text = format_trace(t);
    CHECK(text == "duration_ms,bandwidth_mbps,latency_ms\n1000,12,20\n500,100,5\nbuffer_packets=1000\ndata_kb=250\n");
    CHECK(parse_trace(text) == t);
}

TEST_CASE("trace parser is strict") {
    const std::string good = "duration_ms,bandwidth_mbps,latency_ms\n1000,12,20\nbuffer_packets=1000\n";
    CHECK_NOTHROW(parse_trace(good));
    CHECK_THROWS_AS(parse_trace("duration_ms,bandwidth_mbps,latency_ms\r\n1000,12,20\r\nbuffer_packets=1000\r\n"),
                    TraceFormatError);
    CHECK_THROWS_AS(parse_trace("duration_ms,bandwidth_mbps,latency_ms\n1000,12,20 \nbuffer_packets=1000\n"),
                    TraceFormatError);
    CHECK_THROWS_AS(parse_trace("bandwidth_mbps,duration_ms,latency_ms\n1000,12,20\nbuffer_packets=1000\n"),
                    TraceFormatError);
    CHECK_THROWS_AS(parse_trace("duration_ms,bandwidth_mbps,latency_ms\n1000,12\nbuffer_packets=1000\n"),
                    TraceFormatError);
    CHECK_THROWS_AS(parse_trace("duration_ms,bandwidth_mbps,latency_ms\n1000,12,20\n"), TraceFormatError);
    CHECK_THROWS_AS(parse_trace("duration_ms,bandwidth_mbps,latency_ms\n1000,1.5,20\nbuffer_packets=1000\n"),
                    TraceFormatError);
    CHECK_THROWS_AS(parse_trace("duration_ms,bandwidth_mbps,latency_ms\nbuffer_packets=1000\n"), TraceFormatError);
    CHECK_THROWS_AS(parse_trace(good + "extra=1\n"), TraceFormatError);
    try {
        parse_trace("duration_ms,bandwidth_mbps,latency_ms\n1000,12,20\n1000,x,20\nbuffer_packets=1000\n");
        FAIL("expected a format error");
    } catch (const TraceFormatError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
}

TEST_CASE("trace files round trip through disk") {
    const auto path = (std::filesystem::temp_directory_path() / "advgen_env_roundtrip.trace").string();
    Rng rng = make_rng(3);
    const Trace t = sample_uniform(Bounds::defaults(6), rng);
    write_trace_file(path, t);
    CHECK(read_trace_file(path) == t);
    CHECK(validate(read_trace_file(path), Bounds::defaults(6)).ok());
    std::filesystem::remove(path);
    CHECK_THROWS_AS(read_trace_file(path), TraceFormatError);
}

TEST_CASE("trace summary statistics") {
    Trace t;
    t.intervals = {{100, 10, 500}, {1, 30, 1500}};
    t.buffer_packets = 100;
    CHECK(t.total_duration_ms() == 2000);
    CHECK(t.mean_bandwidth_mbps() == doctest::Approx(25.75));
    CHECK(t.mean_latency_ms() == doctest::Approx(25.0));
    CHECK(t.min_latency_ms() == 10);
    CHECK(t.interval_at(0) == 0);
    CHECK(t.interval_at(499) == 0);
    CHECK(t.interval_at(500) == 1);
    CHECK(t.interval_at(5000) == 1);
}

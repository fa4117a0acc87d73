#include <algorithm>

#include "advgen/sim.hpp"
#include "doctest.h"
#include "sim_checks.hpp"

using namespace advgen;

namespace {

Trace constant(std::int64_t bw, std::int64_t lat, std::int64_t dur, std::int64_t buffer) {
    Trace t;
    t.intervals = {{bw, lat, dur}};
    t.buffer_packets = buffer;
    return t;
}

double mbps_after(const SimResult& r, std::int64_t from_ms, std::int64_t end_ms, int flow = 0) {
    std::int64_t n = 0;
    for (const auto& e : r.events)
        if (e.kind == EventKind::Deliver && e.flow == flow && e.time_ms >= from_ms) ++n;
    return static_cast<double>(n * kMtuBytes) * 8.0 / (static_cast<double>(end_ms - from_ms) * 1000.0);
}

}  // namespace

TEST_CASE("a saturated 12 Mbps link carries 1.5 MB per second") {
    const auto r = simulate(constant(12, 0, 1000, 1000000), *reno(1e5));
    CHECK(r.link.dequeued == 1000);
    CHECK(std::abs(r.flows[0].perf.bytes_delivered - 1500000) <= kMtuBytes);
    CHECK(r.link.tokens_granted == doctest::Approx(1000.0));
}

TEST_CASE("a one-packet buffer drops most of a burst") {
    SimOptions o;
    o.record_events = true;
    const auto r = simulate(constant(12, 20, 100, 1), *reno(10), o);
    const auto drops_at_zero = std::count_if(r.events.begin(), r.events.end(), [](const Event& e) {
        return e.kind == EventKind::Drop && e.time_ms == 0;
    });
    CHECK(drops_at_zero >= 8);
    CHECK(r.link.max_queue == 1);
}

TEST_CASE("simulation is deterministic per seed") {
    Rng rng = make_rng(5);
    const Trace t = testing::random_trace(rng);
    SimOptions o;
    o.record_events = true;
    o.seed = 77;
    o.jitter_sigma_ms = 3.0;
    for (const char* model : {"reno", "vegas", "bbr"}) {
        const auto cc = make_cc(model);
        CHECK(testing::same_events(simulate(t, *cc, o), simulate(t, *cc, o)));
    }
    const auto a = simulate(t, *make_cc("reno"), o);
    o.seed = 78;
    CHECK_FALSE(testing::same_events(a, simulate(t, *make_cc("reno"), o)));
}

TEST_CASE("capacity oracle arithmetic") {
    const auto one = capacity_oracle(constant(10, 20, 2000, 100));
    CHECK(one.throughput_mbps == doctest::Approx(10.0));
    CHECK(one.bytes_delivered == 2500000);

    Trace two;
    two.intervals = {{100, 10, 500}, {1, 10, 1500}};
    two.buffer_packets = 100;
    CHECK(capacity_oracle(two).throughput_mbps == doctest::Approx(25.75));
}

TEST_CASE("reno doubles its window every round trip in slow start") {
    SimOptions o;
    o.record_cwnd = true;
    const auto r = simulate(constant(100, 50, 1000, 100000), *reno(), o);
    const auto& cwnd = r.flows[0].cwnd_per_ms;
    double expected = 10.0;
    for (int k = 0; k < 6; ++k) {
        CHECK(cwnd[static_cast<std::size_t>(k * 100 + 50)] == doctest::Approx(expected));
        expected *= 2.0;
    }
    CHECK(r.flows[0].counters.retransmits == 0);
}

TEST_CASE("vegas holds a steady window on a constant link") {
    SimOptions o;
    o.record_cwnd = true;
    const auto r = simulate(constant(12, 20, 10000, 1000), *vegas(), o);
    const auto& cwnd = r.flows[0].cwnd_per_ms;
    const auto [lo, hi] = std::minmax_element(cwnd.begin() + 7500, cwnd.end());
    CHECK(*hi - *lo <= 2.0);
    // the standing queue stays near the alpha..beta band: window close to the path BDP (12 Mbps x 40 ms = 40 packets)
    CHECK(*lo >= 40.0);
    CHECK(*hi <= 40.0 + 4.0 + 1.0);
}

TEST_CASE("bbr-like sender fills a 50 Mbps link after warm-up") {
    SimOptions o;
    o.record_events = true;
    const Trace t = constant(50, 20, 10000, 1000);
    const auto r = simulate(t, *bbr_like(), o);
    CHECK(mbps_after(r, 3000, 10000) >= 0.8 * capacity_oracle(t).throughput_mbps);
}

TEST_CASE("two flows share the bottleneck") {
    const Trace t = constant(20, 20, 10000, 500);
    const auto a = reno();
    const auto b = reno();
    const auto r = simulate(t, {a.get(), b.get()});
    REQUIRE(r.flows.size() == 2);
    const double total = r.flows[0].perf.throughput_mbps + r.flows[1].perf.throughput_mbps;
    CHECK(total <= 20.0);
    CHECK(total >= 14.0);
    CHECK(r.flows[0].perf.throughput_mbps >= 0.2 * total);
    CHECK(r.flows[1].perf.throughput_mbps >= 0.2 * total);
}

TEST_CASE("data size mode reports a completion time") {
    Trace t = constant(10, 20, 1000, 1000);
    t.data_kb = 500;
    const auto r = simulate(t, *reno());
    REQUIRE(r.flows[0].perf.completion_time_ms.has_value());
    // 500 kB at 10 Mbps needs at least 400 ms plus one latency
    CHECK(*r.flows[0].perf.completion_time_ms >= 420.0);
    CHECK(r.flows[0].perf.bytes_delivered == 500000);
}

TEST_CASE("simulator invariants hold on random traces") {
    Rng rng = make_rng(99);
    SimOptions o;
    o.record_events = true;
    for (int trial = 0; trial < 30; ++trial) {
        const Trace t = testing::random_trace(rng, 4, 1500);
        o.jitter_sigma_ms = trial % 2 ? 2.0 : 0.0;
        o.seed = static_cast<std::uint64_t>(trial);
        for (const char* model : {"reno", "vegas", "bbr"}) {
            const auto r = simulate(t, *make_cc(model), o);
            const auto failure = testing::check_invariants(t, r);
            INFO(model, " trial ", trial);
            REQUIRE(failure.empty());
        }
    }
}

TEST_CASE("event log CSV format") {
    SimOptions o;
    o.record_events = true;
    const auto r = simulate(constant(12, 5, 20, 10), *reno(2), o);
    const auto csv = format_events_csv(r.events);
    CHECK(csv.rfind("time_ms,event,packet_id,flow_id\n0,send,1,0\n", 0) == 0);
    CHECK_THROWS_AS(make_cc("cubic"), std::invalid_argument);
}

TEST_CASE("jitter delays packets without reordering a constant-latency link") {
    SimOptions o;
    o.record_events = true;
    o.jitter_sigma_ms = 8.0;
    o.seed = 3;
    const auto r = simulate(constant(30, 20, 3000, 300), *reno(), o);
    std::vector<std::uint64_t> dequeued, delivered;
    for (const auto& e : r.events) {
        if (e.kind == EventKind::Dequeue) dequeued.push_back(e.packet_id);
        if (e.kind == EventKind::Deliver) delivered.push_back(e.packet_id);
    }
    REQUIRE(delivered.size() > 1000);
    CHECK(std::equal(delivered.begin(), delivered.end(), dequeued.begin()));
    SimOptions quiet = o;
    quiet.jitter_sigma_ms = 0.0;
    CHECK(r.flows[0].perf.mean_delay_ms > simulate(constant(30, 20, 3000, 300), *reno(), quiet).flows[0].perf.mean_delay_ms);
}

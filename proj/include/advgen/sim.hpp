#pragma once

// Packet-level single-bottleneck simulator at 1 ms granularity.
//
// Link model: every millisecond the bottleneck earns bandwidth/12 packet
// slots (1500-byte packets) into a fractional token accumulator and serves
// its drop-tail FIFO from those tokens. A dequeued packet arrives after the
// one-way latency of the interval active at dequeue time. ACKs return on an
// uncongested reverse path with the latency current at send time.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "advgen/env.hpp"
#include "advgen/score.hpp"

namespace advgen {

inline constexpr std::int64_t kMtuBytes = 1500;

enum class EventKind { Send, Enqueue, Drop, Dequeue, Deliver, Ack, Rto, Dupack };

const char* event_name(EventKind k);

struct Event {
    std::int64_t time_ms;
    EventKind kind;
    std::uint64_t packet_id;
    int flow;
};

struct AckSample {
    std::int64_t now_ms = 0;
    std::int64_t newly_acked = 0;      // packets
    std::optional<double> rtt_ms;      // absent for retransmitted packets (Karn)
    std::optional<double> delivery_rate;  // packets per ms
    std::int64_t inflight = 0;
    std::int64_t cum_ack = 0;          // next sequence the receiver expects
    std::int64_t next_seq = 0;         // sender's next new sequence number
};

/// Congestion-control behaviour: owns cwnd (packets) and an optional pacing rate.
class CongestionControl {
public:
    virtual ~CongestionControl() = default;
    virtual std::string name() const = 0;
    virtual double cwnd() const = 0;
    /// Packets per millisecond, or nullopt for pure window-limited sending.
    virtual std::optional<double> pacing_rate() const { return std::nullopt; }
    virtual void on_ack(const AckSample& s) = 0;
    virtual void on_fast_retransmit(std::int64_t now_ms) = 0;
    virtual void on_rto(std::int64_t now_ms) = 0;
    virtual std::unique_ptr<CongestionControl> clone() const = 0;
};

std::unique_ptr<CongestionControl> reno(double initial_cwnd = 10.0, double max_cwnd = 1e5);
std::unique_ptr<CongestionControl> vegas(double alpha = 2.0, double beta = 4.0);
std::unique_ptr<CongestionControl> bbr_like();

/// "reno", "vegas" or "bbr"; throws std::invalid_argument otherwise.
std::unique_ptr<CongestionControl> make_cc(std::string_view name);
bool is_cc_name(std::string_view name);

struct SimOptions {
    std::uint64_t seed = 0;
    bool record_events = false;
    bool record_cwnd = false;
    /// Standard deviation of the extra per-packet delivery delay (ms); 0 disables noise.
    double jitter_sigma_ms = 0.0;
    /// With data_kb set, keep simulating past the trace end (last interval persists) for this long.
    std::int64_t completion_grace_ms = 60000;
    std::int64_t min_rto_ms = 200;
    std::int64_t initial_rto_ms = 1000;
};

struct FlowCounters {
    std::int64_t sent = 0;           // transmissions including retransmits
    std::int64_t retransmits = 0;
    std::int64_t delivered = 0;      // arrivals at the receiver, duplicates included
    std::int64_t unique_delivered = 0;
    std::int64_t rtos = 0;
    std::int64_t fast_retransmits = 0;
};

struct LinkCounters {
    std::int64_t enqueue_attempts = 0;
    std::int64_t enqueued = 0;
    std::int64_t dropped = 0;
    std::int64_t dequeued = 0;
    std::int64_t delivered = 0;
    std::int64_t max_queue = 0;
    double tokens_granted = 0.0;
};

struct FlowResult {
    std::string model;
    PerfSummary perf;
    FlowCounters counters;
    std::vector<double> cwnd_per_ms;  // filled when record_cwnd is set
};

struct SimResult {
    std::vector<FlowResult> flows;
    LinkCounters link;
    std::vector<Event> events;
    std::int64_t end_ms = 0;
};

/// One or two flows sharing the bottleneck. Models are cloned, so callers keep theirs.
SimResult simulate(const Trace& trace, const std::vector<const CongestionControl*>& models,
                   const SimOptions& options = {});
SimResult simulate(const Trace& trace, const CongestionControl& model, const SimOptions& options = {});

/// The link's own limit: duration-weighted mean bandwidth and latency, and the
/// bytes the bottleneck could carry over the whole trace.
PerfSummary capacity_oracle(const Trace& trace);

std::string format_events_csv(const std::vector<Event>& events);
void write_events_csv(const std::string& path, const std::vector<Event>& events);

}  // namespace advgen

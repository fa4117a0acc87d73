#pragma once

// Network environment model: a trace is a fixed number of
// (bandwidth, latency, duration) intervals plus time-invariant parameters.
// Optimizers never touch Trace directly; they work on the flat integer
// vector produced by encode() under a Layout.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "advgen/random.hpp"

namespace advgen {

struct Interval {
    std::int64_t bandwidth_mbps = 1;
    std::int64_t latency_ms = 0;
    std::int64_t duration_ms = 1;

    bool operator==(const Interval&) const = default;
};

struct Trace {
    std::vector<Interval> intervals;
    std::int64_t buffer_packets = 1;
    std::optional<std::int64_t> data_kb;

    std::int64_t total_duration_ms() const;
    /// Index of the interval active at `t_ms`; times past the end map to the last interval.
    std::size_t interval_at(std::int64_t t_ms) const;
    /// Duration-weighted mean bandwidth in Mbps.
    double mean_bandwidth_mbps() const;
    double mean_latency_ms() const;
    std::int64_t min_latency_ms() const;

    bool operator==(const Trace&) const = default;
};

using TraceVector = std::vector<std::int64_t>;

enum class Field { Bandwidth, Latency, Duration, Buffer, DataSize };

const char* field_name(Field f);

struct Slot {
    Field field;
    int interval;  // -1 for time-invariant parameters

    bool operator==(const Slot&) const = default;
};

/// Maps vector positions to trace fields. Order is
/// (bw_1, lat_1, dur_1, ..., bw_K, lat_K, dur_K, buffer[, data_kb]).
class Layout {
public:
    Layout() = default;
    Layout(int intervals, bool has_data_size);

    int intervals() const { return intervals_; }
    bool has_data_size() const { return has_data_size_; }
    std::size_t size() const;
    Slot slot(std::size_t position) const;
    std::size_t position(Slot s) const;

    bool operator==(const Layout&) const = default;

private:
    int intervals_ = 0;
    bool has_data_size_ = false;
};

class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class BoundsError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct Range {
    std::int64_t lower;
    std::int64_t upper;
};

struct Bounds {
    TraceVector lower;
    TraceVector upper;
    Layout layout;

    std::size_t size() const { return lower.size(); }
    /// Throws BoundsError if lengths disagree with the layout or lower > upper anywhere.
    void check() const;
    bool contains(const TraceVector& v) const;

    /// The same range for every interval; defaults follow the usual TCP experiment bounds.
    static Bounds per_interval(int intervals, Range bandwidth, Range latency, Range duration,
                               Range buffer, std::optional<Range> data_kb = std::nullopt);
    static Bounds defaults(int intervals);
};

inline constexpr Range kDefaultBandwidth{1, 100};
inline constexpr Range kDefaultLatency{5, 100};
inline constexpr Range kDefaultDuration{500, 2500};
inline constexpr Range kDefaultBuffer{500, 10000};

struct Violation {
    std::size_t position;
    Slot slot;
    std::int64_t value;
    std::int64_t lower;
    std::int64_t upper;
};

struct ValidationResult {
    std::optional<std::string> shape_error;
    std::vector<Violation> violations;

    bool ok() const { return !shape_error && violations.empty(); }
    std::string describe() const;
};

ValidationResult validate(const Trace& trace, const Bounds& bounds);

TraceVector encode(const Trace& trace, const Layout& layout);
Trace decode(const TraceVector& v, const Layout& layout);

Trace sample_uniform(const Bounds& bounds, Rng& rng);
TraceVector sample_uniform_vector(const Bounds& bounds, Rng& rng);

// Text trace format:
//   duration_ms,bandwidth_mbps,latency_ms
//   <dur>,<bw>,<lat>          (one row per interval)
//   buffer_packets=<int>
//   [data_kb=<int>]
class TraceFormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string format_trace(const Trace& trace);
Trace parse_trace(const std::string& text);
void write_trace_file(const std::string& path, const Trace& trace);
Trace read_trace_file(const std::string& path);

}  // namespace advgen

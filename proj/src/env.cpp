#include "advgen/env.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace advgen {

std::int64_t Trace::total_duration_ms() const {
    std::int64_t total = 0;
    for (const auto& iv : intervals) total += iv.duration_ms;
    return total;
}

std::size_t Trace::interval_at(std::int64_t t_ms) const {
    std::int64_t end = 0;
    for (std::size_t i = 0; i < intervals.size(); ++i) {
        end += intervals[i].duration_ms;
        if (t_ms < end) return i;
    }
    return intervals.empty() ? 0 : intervals.size() - 1;
}

double Trace::mean_bandwidth_mbps() const {
    double weighted = 0.0;
    for (const auto& iv : intervals)
        weighted += static_cast<double>(iv.bandwidth_mbps) * static_cast<double>(iv.duration_ms);
    return weighted / static_cast<double>(total_duration_ms());
}

double Trace::mean_latency_ms() const {
    double weighted = 0.0;
    for (const auto& iv : intervals)
        weighted += static_cast<double>(iv.latency_ms) * static_cast<double>(iv.duration_ms);
    return weighted / static_cast<double>(total_duration_ms());
}

std::int64_t Trace::min_latency_ms() const {
    std::int64_t m = intervals.front().latency_ms;
    for (const auto& iv : intervals) m = std::min(m, iv.latency_ms);
    return m;
}

const char* field_name(Field f) {
    switch (f) {
        case Field::Bandwidth: return "bandwidth_mbps";
        case Field::Latency: return "latency_ms";
        case Field::Duration: return "duration_ms";
        case Field::Buffer: return "buffer_packets";
        case Field::DataSize: return "data_kb";
    }
    return "?";
}

Layout::Layout(int intervals, bool has_data_size)
    : intervals_(intervals), has_data_size_(has_data_size) {
    if (intervals < 1) throw ShapeError("layout needs at least one interval");
}

std::size_t Layout::size() const {
    return 3 * static_cast<std::size_t>(intervals_) + 1 + (has_data_size_ ? 1 : 0);
}

Slot Layout::slot(std::size_t position) const {
    const auto per = 3 * static_cast<std::size_t>(intervals_);
    if (position < per) {
        static constexpr Field kOrder[] = {Field::Bandwidth, Field::Latency, Field::Duration};
        return {kOrder[position % 3], static_cast<int>(position / 3)};
    }
    if (position == per) return {Field::Buffer, -1};
    if (position == per + 1 && has_data_size_) return {Field::DataSize, -1};
    throw ShapeError("position " + std::to_string(position) + " outside layout of size " +
                     std::to_string(size()));
}

std::size_t Layout::position(Slot s) const {
    switch (s.field) {
        case Field::Bandwidth: return 3 * static_cast<std::size_t>(s.interval);
        case Field::Latency: return 3 * static_cast<std::size_t>(s.interval) + 1;
        case Field::Duration: return 3 * static_cast<std::size_t>(s.interval) + 2;
        case Field::Buffer: return 3 * static_cast<std::size_t>(intervals_);
        case Field::DataSize:
            if (!has_data_size_) throw ShapeError("layout has no data_kb slot");
            return 3 * static_cast<std::size_t>(intervals_) + 1;
    }
    throw ShapeError("unknown field");
}

void Bounds::check() const {
    if (lower.size() != layout.size() || upper.size() != layout.size())
        throw BoundsError("bounds length " + std::to_string(lower.size()) + "/" +
                          std::to_string(upper.size()) + " does not match layout size " +
                          std::to_string(layout.size()));
    for (std::size_t i = 0; i < lower.size(); ++i) {
        if (lower[i] > upper[i])
            throw BoundsError("lower bound exceeds upper bound at position " + std::to_string(i));
    }
}

bool Bounds::contains(const TraceVector& v) const {
    if (v.size() != lower.size()) return false;
    for (std::size_t i = 0; i < v.size(); ++i)
        if (v[i] < lower[i] || v[i] > upper[i]) return false;
    return true;
}

Bounds Bounds::per_interval(int intervals, Range bandwidth, Range latency, Range duration,
                            Range buffer, std::optional<Range> data_kb) {
    Bounds b;
    b.layout = Layout(intervals, data_kb.has_value());
    for (int k = 0; k < intervals; ++k) {
        for (const Range& r : {bandwidth, latency, duration}) {
            b.lower.push_back(r.lower);
            b.upper.push_back(r.upper);
        }
    }
    b.lower.push_back(buffer.lower);
    b.upper.push_back(buffer.upper);
    if (data_kb) {
        b.lower.push_back(data_kb->lower);
        b.upper.push_back(data_kb->upper);
    }
    b.check();
    return b;
}

Bounds Bounds::defaults(int intervals) {
    return per_interval(intervals, kDefaultBandwidth, kDefaultLatency, kDefaultDuration,
                        kDefaultBuffer);
}

std::string ValidationResult::describe() const {
    if (ok()) return "ok";
    std::ostringstream os;
    if (shape_error) os << "shape mismatch: " << *shape_error << '\n';
    for (const auto& v : violations) {
        os << "position " << v.position << " (" << field_name(v.slot.field);
        if (v.slot.interval >= 0) os << ", interval " << v.slot.interval;
        os << "): " << v.value << " not in [" << v.lower << ", " << v.upper << "]\n";
    }
    return os.str();
}

namespace {

std::optional<std::string> shape_mismatch(const Trace& trace, const Layout& layout) {
    if (static_cast<int>(trace.intervals.size()) != layout.intervals())
        return "trace has " + std::to_string(trace.intervals.size()) +
               " intervals, layout expects " + std::to_string(layout.intervals());
    if (trace.data_kb.has_value() != layout.has_data_size())
        return std::string(layout.has_data_size() ? "layout expects data_kb, trace has none"
                                                  : "trace has data_kb, layout has no slot");
    return std::nullopt;
}

}  // namespace

ValidationResult validate(const Trace& trace, const Bounds& bounds) {
    ValidationResult result;
    if (auto err = shape_mismatch(trace, bounds.layout)) {
        result.shape_error = std::move(err);
        return result;
    }
    const TraceVector v = encode(trace, bounds.layout);
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] < bounds.lower[i] || v[i] > bounds.upper[i])
            result.violations.push_back(
                {i, bounds.layout.slot(i), v[i], bounds.lower[i], bounds.upper[i]});
    }
    return result;
}

TraceVector encode(const Trace& trace, const Layout& layout) {
    if (auto err = shape_mismatch(trace, layout)) throw ShapeError(*err);
    TraceVector v;
    v.reserve(layout.size());
    for (const auto& iv : trace.intervals) {
        v.push_back(iv.bandwidth_mbps);
        v.push_back(iv.latency_ms);
        v.push_back(iv.duration_ms);
    }
    v.push_back(trace.buffer_packets);
    if (trace.data_kb) v.push_back(*trace.data_kb);
    return v;
}

Trace decode(const TraceVector& v, const Layout& layout) {
    if (v.size() != layout.size())
        throw ShapeError("vector length " + std::to_string(v.size()) +
                         " does not match layout size " + std::to_string(layout.size()));
    Trace t;
    t.intervals.reserve(static_cast<std::size_t>(layout.intervals()));
    for (int k = 0; k < layout.intervals(); ++k) {
        const auto base = 3 * static_cast<std::size_t>(k);
        t.intervals.push_back({v[base], v[base + 1], v[base + 2]});
    }
    const auto tail = 3 * static_cast<std::size_t>(layout.intervals());
    t.buffer_packets = v[tail];
    if (layout.has_data_size()) t.data_kb = v[tail + 1];
    return t;
}

TraceVector sample_uniform_vector(const Bounds& bounds, Rng& rng) {
    bounds.check();
    TraceVector v(bounds.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = uniform_int(rng, bounds.lower[i], bounds.upper[i]);
    return v;
}

Trace sample_uniform(const Bounds& bounds, Rng& rng) {
    return decode(sample_uniform_vector(bounds, rng), bounds.layout);
}

// ---- text format ----

namespace {

constexpr std::string_view kHeader = "duration_ms,bandwidth_mbps,latency_ms";

std::int64_t parse_int(std::string_view s, std::size_t line_no) {
    std::int64_t value = 0;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, value);
    if (s.empty() || ec != std::errc() || ptr != end)
        throw TraceFormatError("line " + std::to_string(line_no) + ": expected integer, got '" +
                               std::string(s) + "'");
    return value;
}

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        auto nl = text.find('\n', start);
        if (nl == std::string_view::npos) nl = text.size();
        lines.push_back(text.substr(start, nl - start));
        start = nl + 1;
    }
    return lines;
}

}  // namespace

std::string format_trace(const Trace& trace) {
    std::ostringstream os;
    os << kHeader << '\n';
    for (const auto& iv : trace.intervals)
        os << iv.duration_ms << ',' << iv.bandwidth_mbps << ',' << iv.latency_ms << '\n';
    os << "buffer_packets=" << trace.buffer_packets << '\n';
    if (trace.data_kb) os << "data_kb=" << *trace.data_kb << '\n';
    return os.str();
}

Trace parse_trace(const std::string& text) {
    const auto lines = split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto& l = lines[i];
        if (!l.empty() && (l.back() == ' ' || l.back() == '\t' || l.back() == '\r'))
            throw TraceFormatError("line " + std::to_string(i + 1) + ": trailing whitespace");
    }
    if (lines.empty() || lines[0] != kHeader)
        throw TraceFormatError("line 1: expected header '" + std::string(kHeader) + "'");

    Trace t;
    std::size_t i = 1;
    for (; i < lines.size() && lines[i].find('=') == std::string_view::npos; ++i) {
        const auto row = lines[i];
        const auto c1 = row.find(',');
        const auto c2 = c1 == std::string_view::npos ? c1 : row.find(',', c1 + 1);
        if (c2 == std::string_view::npos || row.find(',', c2 + 1) != std::string_view::npos)
            throw TraceFormatError("line " + std::to_string(i + 1) + ": expected 3 columns");
        Interval iv;
        iv.duration_ms = parse_int(row.substr(0, c1), i + 1);
        iv.bandwidth_mbps = parse_int(row.substr(c1 + 1, c2 - c1 - 1), i + 1);
        iv.latency_ms = parse_int(row.substr(c2 + 1), i + 1);
        if (iv.bandwidth_mbps < 1 || iv.latency_ms < 0 || iv.duration_ms < 1)
            throw TraceFormatError("line " + std::to_string(i + 1) +
                                   ": need bandwidth >= 1, latency >= 0, duration >= 1");
        t.intervals.push_back(iv);
    }
    if (t.intervals.empty()) throw TraceFormatError("trace has no intervals");

    auto key_value = [&](std::string_view key) -> std::optional<std::int64_t> {
        if (i >= lines.size()) return std::nullopt;
        const auto line = lines[i];
        const std::string prefix = std::string(key) + "=";
        if (line.substr(0, prefix.size()) != prefix) return std::nullopt;
        auto value = parse_int(line.substr(prefix.size()), i + 1);
        ++i;
        return value;
    };
    auto buffer = key_value("buffer_packets");
    if (!buffer) throw TraceFormatError("line " + std::to_string(i + 1) + ": expected buffer_packets=<int>");
    if (*buffer < 1) throw TraceFormatError("buffer_packets must be >= 1");
    t.buffer_packets = *buffer;
    t.data_kb = key_value("data_kb");
    if (t.data_kb && *t.data_kb < 1) throw TraceFormatError("data_kb must be >= 1");
    if (i != lines.size())
        throw TraceFormatError("line " + std::to_string(i + 1) + ": unexpected content");
    return t;
}

void write_trace_file(const std::string& path, const Trace& trace) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << format_trace(trace);
}

Trace read_trace_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw TraceFormatError("cannot open trace file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_trace(ss.str());
}

}  // namespace advgen

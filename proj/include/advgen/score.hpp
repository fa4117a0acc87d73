#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>

#include "advgen/env.hpp"

namespace advgen {

/// Measured behaviour of one protocol in one execution.
struct PerfSummary {
    double throughput_mbps = 0.0;
    double mean_delay_ms = 0.0;
    std::optional<double> completion_time_ms;
    std::int64_t bytes_delivered = 0;
};

enum class Direction { HigherBetter, LowerBetter };

enum class UseCase { Uc1Capacity, Uc1Fairness, Uc2Weighted, Uc2Fairness, Uc3Multipath };

const char* use_case_name(UseCase uc);
UseCase parse_use_case(const std::string& name);

class ScoreError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct ScoreSpec {
    UseCase use_case = UseCase::Uc1Capacity;
    Direction direction = Direction::HigherBetter;
    std::optional<double> t_coeff;  // UC2-weighted only
    std::optional<double> tau_max;  // override of the trace-derived normalizer
    std::optional<double> d_min;    // override of the trace-derived normalizer
    /// Whether the executor reports round-trip delays; selects the d_min default.
    bool rtt_delays = false;

    /// Throws ScoreError when fields are inconsistent with the use case.
    void check() const;

    static ScoreSpec uc1_capacity();
    static ScoreSpec uc2_weighted(double t_coeff);
};

/// Relative gap between the two scores, sign-adjusted so that a worse target is positive.
/// Both-zero inputs score 0.
double eq1_score(double reference_score, double target_score, Direction direction);

/// t_coeff * min(tau/tau_max, 1) + (1 - t_coeff) * min(d_min/d, 1).
double weighted_perf(const PerfSummary& p, double t_coeff, double tau_max, double d_min);

/// The roles a use case needs executed. Reference/target roles are always solo
/// runs of the respective protocol; the "with" roles are two-flow runs.
struct RunOutputs {
    std::optional<PerfSummary> reference;              // reference alone (UC3: single link)
    std::optional<PerfSummary> target;                 // target alone (UC3: dual link)
    std::optional<PerfSummary> reference_with_target;  // reference's flow when sharing with target
    std::optional<PerfSummary> competitor_with_reference;
    std::optional<PerfSummary> competitor_with_target;
};

struct Normalizers {
    double tau_max;
    double d_min;
};

/// tau_max = duration-weighted mean bandwidth; d_min = min one-way latency (doubled for RTT delays).
Normalizers trace_normalizers(const Trace& trace, const ScoreSpec& spec);

/// Maps execution outputs to (reference_score, target_score) for the configured use case.
std::pair<double, double> uc_scores(const ScoreSpec& spec, const Trace& trace, const RunOutputs& outputs);

/// Standard median; mean of the two central values for even counts.
double median(std::span<const double> values);

}  // namespace advgen

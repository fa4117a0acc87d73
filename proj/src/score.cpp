#include "advgen/score.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace advgen {

const char* use_case_name(UseCase uc) {
    switch (uc) {
        case UseCase::Uc1Capacity: return "uc1-capacity";
        case UseCase::Uc1Fairness: return "uc1-fairness";
        case UseCase::Uc2Weighted: return "uc2-weighted";
        case UseCase::Uc2Fairness: return "uc2-fairness";
        case UseCase::Uc3Multipath: return "uc3-multipath";
    }
    return "?";
}

UseCase parse_use_case(const std::string& name) {
    for (auto uc : {UseCase::Uc1Capacity, UseCase::Uc1Fairness, UseCase::Uc2Weighted,
                    UseCase::Uc2Fairness, UseCase::Uc3Multipath}) {
        if (name == use_case_name(uc)) return uc;
    }
    throw ScoreError("unknown use case '" + name + "'");
}

void ScoreSpec::check() const {
    const bool weighted = use_case == UseCase::Uc2Weighted;
    if (weighted != t_coeff.has_value())
        throw ScoreError(weighted ? "uc2-weighted requires t_coeff"
                                  : "t_coeff only applies to uc2-weighted");
    if (t_coeff && (*t_coeff < 0.0 || *t_coeff > 1.0)) throw ScoreError("t_coeff must lie in [0, 1]");
    if (tau_max && *tau_max <= 0.0) throw ScoreError("tau_max must be positive");
    if (d_min && *d_min <= 0.0) throw ScoreError("d_min must be positive");
    if (use_case != UseCase::Uc3Multipath && direction != Direction::HigherBetter)
        throw ScoreError(std::string(use_case_name(use_case)) + " scores are higher-is-better");
}

ScoreSpec ScoreSpec::uc1_capacity() { return {}; }

ScoreSpec ScoreSpec::uc2_weighted(double t_coeff) {
    ScoreSpec s;
    s.use_case = UseCase::Uc2Weighted;
    s.t_coeff = t_coeff;
    return s;
}

double eq1_score(double reference_score, double target_score, Direction direction) {
    if (reference_score < 0.0 || target_score < 0.0)
        throw ScoreError("eq1_score expects nonnegative scores");
    const double denom = std::max(reference_score, target_score);
    if (denom == 0.0) return 0.0;
    const double gap = direction == Direction::HigherBetter ? reference_score - target_score
                                                            : target_score - reference_score;
    return gap / denom;
}

double weighted_perf(const PerfSummary& p, double t_coeff, double tau_max, double d_min) {
    if (tau_max <= 0.0 || d_min <= 0.0) throw ScoreError("tau_max and d_min must be positive");
    const double tau_rel = std::min(p.throughput_mbps / tau_max, 1.0);
    if (t_coeff >= 1.0) return tau_rel;
    if (p.mean_delay_ms <= 0.0) throw ScoreError("zero delay with t_coeff < 1");
    const double d_rel = std::min(d_min / p.mean_delay_ms, 1.0);
    return t_coeff * tau_rel + (1.0 - t_coeff) * d_rel;
}

Normalizers trace_normalizers(const Trace& trace, const ScoreSpec& spec) {
    Normalizers n{};
    n.tau_max = spec.tau_max.value_or(trace.mean_bandwidth_mbps());
    if (spec.d_min) {
        n.d_min = *spec.d_min;
    } else {
        const double one_way = static_cast<double>(trace.min_latency_ms());
        // zero-latency traces would make every delay ratio degenerate
        n.d_min = std::max(spec.rtt_delays ? 2.0 * one_way : one_way, 1.0);
    }
    return n;
}

namespace {

const PerfSummary& need(const std::optional<PerfSummary>& p, const char* role) {
    if (!p) throw ScoreError(std::string("missing required run: ") + role);
    return *p;
}

}  // namespace

std::pair<double, double> uc_scores(const ScoreSpec& spec, const Trace& trace, const RunOutputs& out) {
    switch (spec.use_case) {
        case UseCase::Uc1Capacity:
            return {trace.mean_bandwidth_mbps(), need(out.target, "target").throughput_mbps};
        case UseCase::Uc1Fairness:
            return {need(out.reference, "reference").throughput_mbps,
                    need(out.reference_with_target, "reference_with_target").throughput_mbps};
        case UseCase::Uc2Weighted: {
            const auto n = trace_normalizers(trace, spec);
            const double t = spec.t_coeff.value_or(1.0);
            return {weighted_perf(need(out.reference, "reference"), t, n.tau_max, n.d_min),
                    weighted_perf(need(out.target, "target"), t, n.tau_max, n.d_min)};
        }
        case UseCase::Uc2Fairness:
            return {need(out.competitor_with_reference, "competitor_with_reference").throughput_mbps,
                    need(out.competitor_with_target, "competitor_with_target").throughput_mbps};
        case UseCase::Uc3Multipath: {
            const auto& single = need(out.reference, "reference");
            const auto& dual = need(out.target, "target");
            if (spec.direction == Direction::HigherBetter) return {single.throughput_mbps, dual.throughput_mbps};
            if (!single.completion_time_ms || !dual.completion_time_ms)
                throw ScoreError("uc3 with lower-is-better needs completion times");
            return {*single.completion_time_ms, *dual.completion_time_ms};
        }
    }
    throw ScoreError("unknown use case");
}

double median(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("median of an empty list");
    std::vector<double> v(values.begin(), values.end());
    const auto mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double upper = v[mid];
    if (v.size() % 2 == 1) return upper;
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

}  // namespace advgen

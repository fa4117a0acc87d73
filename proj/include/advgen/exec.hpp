#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "advgen/env.hpp"
#include "advgen/score.hpp"
#include "advgen/sim.hpp"

namespace advgen {

/// Protocols run together on one link; the PerfSummary reported is that of `measured`.
struct RunSpec {
    std::vector<std::string> flows;
    std::size_t measured = 0;

    std::string label() const;
};

enum class ExecErrorKind { NonzeroExit, Timeout, Parse, Spawn, Unsupported };

class ExecutorError : public std::runtime_error {
public:
    ExecutorError(ExecErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ExecErrorKind kind() const { return kind_; }

private:
    ExecErrorKind kind_;
};

/// Runs one protocol configuration on one trace. Implementations must be safe to call concurrently.
class Executor {
public:
    virtual ~Executor() = default;
    virtual PerfSummary run(const Trace& trace, const RunSpec& spec, std::uint64_t seed) const = 0;
    /// True when results do not depend on the seed.
    virtual bool deterministic() const { return false; }
};

/// Built-in packet simulator. The protocol name "oracle" yields capacity_oracle().
class SimulatorExecutor final : public Executor {
public:
    explicit SimulatorExecutor(SimOptions options = {}) : options_(options) {}
    PerfSummary run(const Trace& trace, const RunSpec& spec, std::uint64_t seed) const override;
    bool deterministic() const override { return options_.jitter_sigma_ms == 0.0; }
    const SimOptions& options() const { return options_; }

    /// Full simulator output for the run, with the requested logging options.
    SimResult simulate_run(const Trace& trace, const RunSpec& spec, std::uint64_t seed, bool record_events) const;

private:
    SimOptions options_;
};

/// Parses `throughput_mbps=<real>\nmean_delay_ms=<real>\n[fct_ms=<real>\n]`.
PerfSummary parse_result_file(const std::string& text);

/// Substitutes {trace}, {output} and any extra {key} placeholders into the
/// template, runs it through /bin/sh, and parses the result file. The process
/// group is killed once `timeout` elapses.
PerfSummary external_executor(const std::string& command_template, const std::string& trace_file_path,
                              std::chrono::milliseconds timeout,
                              const std::map<std::string, std::string>& extra = {});

/// Executor that writes each trace to `work_dir` and defers to a user command.
/// Placeholders: {trace} {output} {protocol} {flows} {measured} {seed}.
class ExternalExecutor final : public Executor {
public:
    ExternalExecutor(std::string command_template, std::chrono::milliseconds timeout, std::string work_dir);
    PerfSummary run(const Trace& trace, const RunSpec& spec, std::uint64_t seed) const override;

private:
    std::string command_;
    std::chrono::milliseconds timeout_;
    std::string work_dir_;
    mutable std::atomic<std::uint64_t> counter_{0};
};

/// Wraps an executor and counts its runs.
class CountingExecutor final : public Executor {
public:
    explicit CountingExecutor(const Executor& inner) : inner_(inner) {}
    PerfSummary run(const Trace& trace, const RunSpec& spec, std::uint64_t seed) const override {
        runs_.fetch_add(1, std::memory_order_relaxed);
        return inner_.run(trace, spec, seed);
    }
    bool deterministic() const override { return inner_.deterministic(); }
    std::uint64_t runs() const { return runs_.load(); }

private:
    const Executor& inner_;
    mutable std::atomic<std::uint64_t> runs_{0};
};

struct Roles {
    std::string reference = "oracle";
    std::string target = "reno";
    std::optional<std::string> competitor;  // UC2-fairness
};

struct EvalConfig {
    int repetitions = 5;
    int max_concurrent = 1;
    ScoreSpec score;
    Roles roles;
    /// A deterministic executor gives identical repetitions, so run just one.
    bool collapse_deterministic = true;

    void check() const;
    int effective_repetitions(const Executor& ex) const;
};

/// Seed namespaces. A run's seed is master + stream offset + call * repetitions + repetition,
/// so streams never overlap while fewer than 2^40 runs are drawn from each.
enum class SeedStream : std::uint64_t { Learning = 0, Selection = 1, Final = 2 };

inline constexpr std::uint64_t kSeedStreamStride = std::uint64_t{1} << 40;

std::uint64_t run_seed(std::uint64_t master, SeedStream stream, std::uint64_t call, int repetitions, int repetition);

/// What each repetition needs executed for a use case, keyed by RunOutputs role name.
std::vector<std::pair<std::string, RunSpec>> required_runs(const ScoreSpec& spec, const Roles& roles);

struct RepetitionRecord {
    int repetition = 0;
    std::uint64_t seed = 0;
    std::map<std::string, PerfSummary> runs;
    std::optional<double> reference_score;
    std::optional<double> target_score;
    std::string error;  // empty when the repetition succeeded
};

struct EvalReport {
    double score = 0.0;
    double reference_score = 0.0;  // median across repetitions
    double target_score = 0.0;     // median across repetitions
    int repetitions = 0;           // successful repetitions
    int failed = 0;
    std::vector<RepetitionRecord> records;
};

class EvaluationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Runs every repetition (concurrently up to max_concurrent), takes the median
/// reference and target scores, then applies the gap score. Repetitions whose
/// runs throw are discarded; losing more than half of them is an EvaluationError.
EvalReport evaluate(const Trace& trace, const EvalConfig& cfg, const Executor& executor, std::uint64_t master_seed,
                    SeedStream stream = SeedStream::Learning, std::uint64_t call = 0);

struct FinalReport {
    double mean = 0.0;
    double stddev = 0.0;
    std::vector<double> scores;
    std::vector<std::uint64_t> seeds;
};

/// Independent re-evaluation on the Final seed stream.
FinalReport reevaluate_final(const Trace& trace, const EvalConfig& cfg, const Executor& executor, int rounds,
                             std::uint64_t master_seed);

}  // namespace advgen

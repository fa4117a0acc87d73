#pragma once

// End-to-end pipeline: optimizer -> post-learning selection -> final
// re-evaluation, plus the selection benchmark and trace replay used by the CLI.

#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "advgen/env.hpp"
#include "advgen/exec.hpp"
#include "advgen/optim.hpp"
#include "advgen/pls.hpp"
#include "advgen/score.hpp"

namespace advgen {

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class OptimizerKind { Ga, Bo, Eps, Rg };

const char* optimizer_name(OptimizerKind k);

struct PlsConfig {
    PlsAlgorithm algorithm = PlsAlgorithm::Mre;
    std::size_t top_n = 25;
    double budget_fraction = 0.10;
    std::size_t ocba_delta = 10;
};

struct ExecutorConfig {
    enum class Kind { Simulator, External } kind = Kind::Simulator;
    double jitter_sigma_ms = 0.0;
    std::string command;
    std::int64_t timeout_ms = 60000;
};

struct ExperimentConfig {
    int intervals = 5;
    Bounds bounds = Bounds::defaults(5);
    OptimizerKind optimizer = OptimizerKind::Ga;
    GAConfig ga;
    BOConfig bo;
    EPSConfig eps;
    std::optional<std::size_t> budget_evaluations = 300;
    std::optional<std::int64_t> budget_wall_clock_ms;
    PlsConfig pls;
    ScoreSpec score;
    Roles roles;
    ExecutorConfig executor;
    int repetitions = 5;
    bool collapse_deterministic = true;
    int max_concurrent = 1;
    int final_rounds = 5;
    std::uint64_t seed = 1;
    std::string output_dir = "advgen-out";

    void check() const;
    EvalConfig eval_config() const;
};

/// Parses the JSON config schema; unknown keys and wrong types raise ConfigError.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
/// Canonical JSON rendering (the config echo in report.json).
std::string config_to_json(const ExperimentConfig& cfg);

/// Per-subsystem offsets added to the master seed.
namespace seed_offset {
inline constexpr std::uint64_t kOptimizer = 101;
}

struct HistoryRow {
    std::size_t iteration;
    double score;
    int repetitions;
    std::string trace_file;
    double reference_score;
    double target_score;
};

struct ExperimentReport {
    std::size_t optimizer_budget = 0;
    std::size_t pls_budget = 0;
    std::size_t optimizer_evaluations = 0;  // evaluator calls
    std::size_t optimizer_skipped = 0;
    std::size_t pls_evaluations = 0;        // selection samples, one repetition each
    std::size_t final_evaluations = 0;
    std::uint64_t executor_runs = 0;
    double best_observed_score = 0.0;
    std::size_t winner_iteration = 0;
    double winner_observed_score = 0.0;
    std::optional<double> winner_pls_mean;
    std::size_t pls_candidates = 0;
    FinalReport reevaluated;
    Trace winner;
    std::vector<HistoryRow> history;
    std::string history_csv_path;
    std::string winner_trace_path;
    std::string report_json_path;
};

/// Runs the whole pipeline and writes history.csv, winner.trace, report.json
/// and one trace per evaluation under traces/ in cfg.output_dir.
ExperimentReport run_experiment(const ExperimentConfig& cfg, std::ostream* log = nullptr);

std::unique_ptr<Executor> make_executor(const ExperimentConfig& cfg);

struct BenchRow {
    std::size_t budget;
    std::string algorithm;
    double mean_true_score;
    double std_error;
    std::vector<double> picks;
};

std::vector<BenchRow> bench_pls(const std::vector<std::size_t>& budgets, const StudyConfig& study);
std::string format_bench_csv(const std::vector<BenchRow>& rows);

struct ReplayResult {
    std::vector<FlowResult> flows;  // the run that involves the target
    RunSpec spec;
    FinalReport score;
    std::optional<std::string> events_path;
};

/// Re-runs a saved trace: prints nothing itself; events go to events.csv in output_dir when requested.
ReplayResult replay(const Trace& trace, const ExperimentConfig& cfg, bool write_events);

}  // namespace advgen

// advgen: search for adversarial network traces against a congestion-control model.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include "CLI11.hpp"
#include "advgen/experiment.hpp"

using namespace advgen;

namespace {

enum Exit { kOk = 0, kConfigError = 1, kRuntimeError = 2 };

ExperimentConfig config_or_default(const std::string& path) {
    return path.empty() ? ExperimentConfig{} : load_config(path);
}

void print_flow(const FlowResult& f) {
    std::printf("  %-8s throughput=%.4f Mbps  mean_delay=%.3f ms  delivered=%lld B", f.model.c_str(),
                f.perf.throughput_mbps, f.perf.mean_delay_ms, static_cast<long long>(f.perf.bytes_delivered));
    if (f.perf.completion_time_ms) std::printf("  fct=%.1f ms", *f.perf.completion_time_ms);
    std::printf("\n");
}

int cmd_run(const std::string& config_path, std::optional<int> jobs, const std::string& out_override) {
    ExperimentConfig cfg = load_config(config_path);
    if (jobs) cfg.max_concurrent = *jobs;
    if (!out_override.empty()) cfg.output_dir = out_override;
    cfg.check();
    const auto report = run_experiment(cfg, &std::cerr);
    std::printf("best observed score   %.6f\n", report.best_observed_score);
    std::printf("winner iteration      %zu\n", report.winner_iteration);
    std::printf("reevaluated score     %.6f +- %.6f\n", report.reevaluated.mean, report.reevaluated.stddev);
    std::printf("outputs               %s\n", cfg.output_dir.c_str());
    return kOk;
}

int cmd_bench(const std::vector<std::size_t>& budgets, std::size_t trials, double sigma, std::uint64_t seed,
              const std::string& out_path) {
    StudyConfig study;
    study.trials = trials;
    study.sigma = sigma;
    study.seed = seed;
    const std::string csv = format_bench_csv(bench_pls(budgets, study));
    if (out_path.empty()) {
        std::cout << csv;
    } else {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + out_path);
        out << csv;
    }
    return kOk;
}

int cmd_replay(const std::string& trace_path, const std::string& config_path, bool events,
               const std::string& out_override) {
    ExperimentConfig cfg = config_or_default(config_path);
    if (!out_override.empty()) cfg.output_dir = out_override;
    const Trace trace = read_trace_file(trace_path);
    const auto r = replay(trace, cfg, events);
    if (!r.flows.empty()) {
        std::printf("run %s\n", r.spec.label().c_str());
        for (const auto& f : r.flows) print_flow(f);
    }
    std::printf("score %.17g +- %.17g over %zu rounds\n", r.score.mean, r.score.stddev, r.score.scores.size());
    if (r.events_path) std::printf("events %s\n", r.events_path->c_str());
    return kOk;
}

int cmd_validate(const std::string& trace_path, const std::string& config_path) {
    const Trace trace = read_trace_file(trace_path);
    Bounds bounds;
    if (config_path.empty()) {
        // Default bounds; the data size, when present, only has to be positive.
        std::optional<Range> data;
        if (trace.data_kb) data = Range{1, std::numeric_limits<std::int64_t>::max()};
        bounds = Bounds::per_interval(static_cast<int>(trace.intervals.size()), kDefaultBandwidth, kDefaultLatency,
                                      kDefaultDuration, kDefaultBuffer, data);
    } else {
        bounds = load_config(config_path).bounds;
    }
    const auto result = validate(trace, bounds);
    std::cout << result.describe() << '\n';
    return result.ok() ? kOk : kConfigError;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adversarial network trace generation"};
    app.require_subcommand(1);

    std::string config_path, trace_path, out_dir, bench_out;
    std::optional<int> jobs;
    bool events = false;
    std::vector<std::size_t> budgets{50, 100, 150, 200, 250};
    std::size_t trials = 2000;
    double sigma = 20.0;
    std::uint64_t seed = 1;

    auto* run = app.add_subcommand("run", "Run the search pipeline from a JSON config");
    run->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);
    run->add_option("--jobs", jobs, "Executor runs in flight at once")->check(CLI::PositiveNumber);
    run->add_option("--output-dir", out_dir, "Override the configured output directory");

    auto* bench = app.add_subcommand("bench-pls", "Gaussian study of the selection algorithms (CSV)");
    bench->add_option("--budgets", budgets, "Selection budgets")->delimiter(',');
    bench->add_option("--trials", trials, "Trials per budget")->check(CLI::PositiveNumber);
    bench->add_option("--sigma", sigma, "Noise standard deviation")->check(CLI::NonNegativeNumber);
    bench->add_option("--seed", seed, "Study seed");
    bench->add_option("--out", bench_out, "Write the CSV here instead of stdout");

    auto* rep = app.add_subcommand("replay", "Re-run a saved trace and print per-flow results");
    rep->add_option("trace", trace_path, "Trace file")->required();
    rep->add_option("--config", config_path, "Config file (defaults apply otherwise)");
    rep->add_flag("--events", events, "Write events.csv to the output directory");
    rep->add_option("--output-dir", out_dir, "Override the configured output directory");

    auto* val = app.add_subcommand("validate", "Check a trace file against bounds");
    val->add_option("trace", trace_path, "Trace file")->required();
    val->add_option("--config", config_path, "Config file supplying bounds");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kConfigError;
    }

    try {
        if (*run) return cmd_run(config_path, jobs, out_dir);
        if (*bench) return cmd_bench(budgets, trials, sigma, seed, bench_out);
        if (*rep) return cmd_replay(trace_path, config_path, events, out_dir);
        if (*val) return cmd_validate(trace_path, config_path);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const TraceFormatError& e) {
        std::cerr << "invalid trace: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
    return kOk;
}

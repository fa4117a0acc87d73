#include "advgen/exec.hpp"

#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

extern char** environ;

namespace advgen {

std::string RunSpec::label() const {
    std::string s;
    for (std::size_t i = 0; i < flows.size(); ++i) {
        if (i) s += '+';
        s += flows[i];
    }
    return s;
}

// ---- simulator executor ----

SimResult SimulatorExecutor::simulate_run(const Trace& trace, const RunSpec& spec, std::uint64_t seed,
                                          bool record_events) const {
    std::vector<std::unique_ptr<CongestionControl>> owned;
    std::vector<const CongestionControl*> models;
    for (const auto& name : spec.flows) {
        if (name == "oracle")
            throw ExecutorError(ExecErrorKind::Unsupported, "the capacity oracle cannot share a link");
        owned.push_back(make_cc(name));
        models.push_back(owned.back().get());
    }
    SimOptions opt = options_;
    opt.seed = seed;
    opt.record_events = record_events;
    return simulate(trace, models, opt);
}

PerfSummary SimulatorExecutor::run(const Trace& trace, const RunSpec& spec, std::uint64_t seed) const {
    if (spec.flows.empty() || spec.measured >= spec.flows.size())
        throw ExecutorError(ExecErrorKind::Unsupported, "run spec names no measured flow");
    if (spec.flows.size() == 1 && spec.flows.front() == "oracle") return capacity_oracle(trace);
    return simulate_run(trace, spec, seed, false).flows[spec.measured].perf;
}

// ---- external executor ----

PerfSummary parse_result_file(const std::string& text) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        auto nl = text.find('\n', start);
        if (nl == std::string::npos) nl = text.size();
        lines.push_back(text.substr(start, nl - start));
        start = nl + 1;
    }
    auto field = [&](std::size_t i, std::string_view key) -> double {
        if (i >= lines.size())
            throw ExecutorError(ExecErrorKind::Parse, "result file: missing line " + std::to_string(i + 1) + " (" +
                                                          std::string(key) + ")");
        const std::string& line = lines[i];
        const std::string prefix = std::string(key) + "=";
        double value = 0.0;
        const char* first = line.data() + prefix.size();
        const char* last = line.data() + line.size();
        if (line.compare(0, prefix.size(), prefix) != 0 || first == last ||
            std::from_chars(first, last, value).ptr != last || !std::isfinite(value) || value < 0.0)
            throw ExecutorError(ExecErrorKind::Parse,
                                "result file line " + std::to_string(i + 1) + ": malformed '" + line + "'");
        return value;
    };
    PerfSummary p;
    p.throughput_mbps = field(0, "throughput_mbps");
    p.mean_delay_ms = field(1, "mean_delay_ms");
    if (lines.size() > 2) p.completion_time_ms = field(2, "fct_ms");
    if (lines.size() > 3)
        throw ExecutorError(ExecErrorKind::Parse, "result file line 4: unexpected '" + lines[3] + "'");
    return p;
}

namespace {

std::string substitute(std::string text, const std::map<std::string, std::string>& values) {
    for (const auto& [key, value] : values) {
        const std::string token = "{" + key + "}";
        for (auto pos = text.find(token); pos != std::string::npos; pos = text.find(token, pos + value.size()))
            text.replace(pos, token.size(), value);
    }
    return text;
}

int run_shell(const std::string& command, std::chrono::milliseconds timeout) {
    posix_spawnattr_t attr;
    posix_spawnattr_init(&attr);
    posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETPGROUP);
    posix_spawnattr_setpgroup(&attr, 0);
    pid_t pid = 0;
    const char* argv[] = {"/bin/sh", "-c", command.c_str(), nullptr};
    const int rc = posix_spawn(&pid, "/bin/sh", nullptr, &attr, const_cast<char* const*>(argv), environ);
    posix_spawnattr_destroy(&attr);
    if (rc != 0) throw ExecutorError(ExecErrorKind::Spawn, "cannot spawn /bin/sh: " + std::to_string(rc));

    const auto deadline = std::chrono::steady_clock::now() + timeout;
    int status = 0;
    while (true) {
        const pid_t done = waitpid(pid, &status, WNOHANG);
        if (done == pid) break;
        if (std::chrono::steady_clock::now() >= deadline) {
            kill(-pid, SIGKILL);
            waitpid(pid, &status, 0);
            throw ExecutorError(ExecErrorKind::Timeout,
                                "command timed out after " + std::to_string(timeout.count()) + " ms: " + command);
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
    if (WIFEXITED(status)) return WEXITSTATUS(status);
    return 128 + (WIFSIGNALED(status) ? WTERMSIG(status) : 0);
}

}  // namespace

PerfSummary external_executor(const std::string& command_template, const std::string& trace_file_path,
                              std::chrono::milliseconds timeout, const std::map<std::string, std::string>& extra) {
    if (command_template.find("{trace}") == std::string::npos || command_template.find("{output}") == std::string::npos)
        throw ExecutorError(ExecErrorKind::Unsupported, "command template needs {trace} and {output} placeholders");
    const std::string output = trace_file_path + ".result";
    std::filesystem::remove(output);
    auto values = extra;
    values["trace"] = trace_file_path;
    values["output"] = output;
    const std::string command = substitute(command_template, values);
    const int code = run_shell(command, timeout);
    if (code != 0)
        throw ExecutorError(ExecErrorKind::NonzeroExit, "command exited with status " + std::to_string(code) + ": " + command);
    std::ifstream in(output, std::ios::binary);
    if (!in) throw ExecutorError(ExecErrorKind::Parse, "command produced no result file " + output);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_result_file(ss.str());
}

ExternalExecutor::ExternalExecutor(std::string command_template, std::chrono::milliseconds timeout, std::string work_dir)
    : command_(std::move(command_template)), timeout_(timeout), work_dir_(std::move(work_dir)) {
    std::filesystem::create_directories(work_dir_);
}

PerfSummary ExternalExecutor::run(const Trace& trace, const RunSpec& spec, std::uint64_t seed) const {
    const auto n = counter_.fetch_add(1);
    const std::string path = (std::filesystem::path(work_dir_) /
                              ("run_" + std::to_string(::getpid()) + "_" + std::to_string(n) + ".trace"))
                                 .string();
    write_trace_file(path, trace);
    std::string protocol = spec.flows.empty() ? "" : spec.flows[spec.measured];
    auto p = external_executor(command_, path, timeout_,
                               {{"protocol", protocol},
                                {"flows", spec.label()},
                                {"measured", std::to_string(spec.measured)},
                                {"seed", std::to_string(seed)}});
    std::filesystem::remove(path);
    std::filesystem::remove(path + ".result");
    const double seconds = static_cast<double>(p.completion_time_ms.value_or(static_cast<double>(trace.total_duration_ms()))) / 1000.0;
    p.bytes_delivered = static_cast<std::int64_t>(p.throughput_mbps * 1e6 / 8.0 * seconds);
    return p;
}

// ---- evaluation ----

void EvalConfig::check() const {
    if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
    if (max_concurrent < 1) throw std::invalid_argument("max_concurrent must be >= 1");
    score.check();
    if (score.use_case == UseCase::Uc2Fairness && !roles.competitor)
        throw std::invalid_argument("uc2-fairness needs a competitor protocol");
}

int EvalConfig::effective_repetitions(const Executor& ex) const {
    return collapse_deterministic && ex.deterministic() ? 1 : repetitions;
}

std::uint64_t run_seed(std::uint64_t master, SeedStream stream, std::uint64_t call, int repetitions, int repetition) {
    return master + static_cast<std::uint64_t>(stream) * kSeedStreamStride +
           call * static_cast<std::uint64_t>(repetitions) + static_cast<std::uint64_t>(repetition);
}

std::vector<std::pair<std::string, RunSpec>> required_runs(const ScoreSpec& spec, const Roles& roles) {
    switch (spec.use_case) {
        case UseCase::Uc1Capacity: return {{"target", RunSpec{{roles.target}, 0}}};
        case UseCase::Uc1Fairness:
            return {{"reference", RunSpec{{roles.reference}, 0}},
                    {"reference_with_target", RunSpec{{roles.reference, roles.target}, 0}}};
        case UseCase::Uc2Weighted:
        case UseCase::Uc3Multipath:
            return {{"reference", RunSpec{{roles.reference}, 0}}, {"target", RunSpec{{roles.target}, 0}}};
        case UseCase::Uc2Fairness: {
            const std::string competitor = roles.competitor.value_or(roles.reference);
            return {{"competitor_with_reference", RunSpec{{competitor, roles.reference}, 0}},
                    {"competitor_with_target", RunSpec{{competitor, roles.target}, 0}}};
        }
    }
    return {};
}

namespace {

RunOutputs to_outputs(const std::map<std::string, PerfSummary>& runs) {
    RunOutputs out;
    auto take = [&](const char* key, std::optional<PerfSummary>& slot) {
        if (auto it = runs.find(key); it != runs.end()) slot = it->second;
    };
    take("reference", out.reference);
    take("target", out.target);
    take("reference_with_target", out.reference_with_target);
    take("competitor_with_reference", out.competitor_with_reference);
    take("competitor_with_target", out.competitor_with_target);
    return out;
}

}  // namespace

EvalReport evaluate(const Trace& trace, const EvalConfig& cfg, const Executor& executor, std::uint64_t master_seed,
                    SeedStream stream, std::uint64_t call) {
    cfg.check();
    const int reps = cfg.effective_repetitions(executor);
    const auto roles = required_runs(cfg.score, cfg.roles);

    struct Job {
        int rep;
        std::size_t role;
        std::optional<PerfSummary> result;
        std::string error;
    };
    std::vector<Job> jobs;
    for (int r = 0; r < reps; ++r)
        for (std::size_t k = 0; k < roles.size(); ++k) jobs.push_back({r, k, std::nullopt, {}});

    auto work = [&](Job& job) {
        try {
            job.result = executor.run(trace, roles[job.role].second, run_seed(master_seed, stream, call, reps, job.rep));
        } catch (const std::exception& e) {
            job.error = roles[job.role].first + ": " + e.what();
        }
    };
    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(cfg.max_concurrent), jobs.size());
    if (workers <= 1) {
        for (auto& j : jobs) work(j);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t i; (i = next.fetch_add(1)) < jobs.size();) work(jobs[i]);
            });
    }

    EvalReport report;
    std::vector<double> refs;
    std::vector<double> tgts;
    for (int r = 0; r < reps; ++r) {
        RepetitionRecord rec;
        rec.repetition = r;
        rec.seed = run_seed(master_seed, stream, call, reps, r);
        for (const auto& j : jobs) {
            if (j.rep != r) continue;
            if (j.result)
                rec.runs[roles[j.role].first] = *j.result;
            else if (rec.error.empty())
                rec.error = j.error;
        }
        if (rec.error.empty()) {
            try {
                const auto [ref, tgt] = uc_scores(cfg.score, trace, to_outputs(rec.runs));
                rec.reference_score = ref;
                rec.target_score = tgt;
                refs.push_back(ref);
                tgts.push_back(tgt);
            } catch (const std::exception& e) {
                rec.error = e.what();
            }
        }
        if (!rec.error.empty()) ++report.failed;
        report.records.push_back(std::move(rec));
    }
    if (2 * report.failed > reps || refs.empty()) {
        std::string first;
        for (const auto& rec : report.records)
            if (!rec.error.empty()) {
                first = rec.error;
                break;
            }
        throw EvaluationError(std::to_string(report.failed) + " of " + std::to_string(reps) +
                              " repetitions failed; first error: " + first);
    }
    report.repetitions = static_cast<int>(refs.size());
    // Medians per role first, then the gap score.
    report.reference_score = median(refs);
    report.target_score = median(tgts);
    report.score = eq1_score(report.reference_score, report.target_score, cfg.score.direction);
    return report;
}

FinalReport reevaluate_final(const Trace& trace, const EvalConfig& cfg, const Executor& executor, int rounds,
                             std::uint64_t master_seed) {
    if (rounds < 1) throw std::invalid_argument("reevaluate_final needs rounds >= 1");
    FinalReport out;
    for (int k = 0; k < rounds; ++k) {
        const auto rep = evaluate(trace, cfg, executor, master_seed, SeedStream::Final, static_cast<std::uint64_t>(k));
        out.scores.push_back(rep.score);
        for (const auto& rec : rep.records) out.seeds.push_back(rec.seed);
    }
    double sum = 0.0;
    for (double s : out.scores) sum += s;
    out.mean = sum / static_cast<double>(rounds);
    double ss = 0.0;
    for (double s : out.scores) ss += (s - out.mean) * (s - out.mean);
    out.stddev = rounds > 1 ? std::sqrt(ss / static_cast<double>(rounds - 1)) : 0.0;
    return out;
}

}  // namespace advgen

#include "advgen/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <set>
#include <sstream>

#include "json.hpp"

namespace advgen {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

const char* optimizer_name(OptimizerKind k) {
    switch (k) {
        case OptimizerKind::Ga: return "ga";
        case OptimizerKind::Bo: return "bo";
        case OptimizerKind::Eps: return "eps";
        case OptimizerKind::Rg: return "rg";
    }
    return "?";
}

namespace {

OptimizerKind parse_optimizer(const std::string& s) {
    for (auto k : {OptimizerKind::Ga, OptimizerKind::Bo, OptimizerKind::Eps, OptimizerKind::Rg})
        if (s == optimizer_name(k)) return k;
    throw ConfigError("unknown optimizer '" + s + "' (expected ga, bo, eps or rg)");
}

bool valid_protocol(const std::string& p) { return p == "oracle" || is_cc_name(p); }

// ---- strict JSON object reader ----

class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
    }

    ~Reader() noexcept(false) {
        if (std::uncaught_exceptions()) return;
        for (const auto& [key, _] : j_.items())
            if (!seen_.count(key)) throw ConfigError(where(key) + ": unknown key");
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key);
    }

    template <typename T>
    void get(const std::string& key, T& out) {
        if (!has(key)) return;
        out = value<T>(key);
    }

    template <typename T>
    void get(const std::string& key, std::optional<T>& out) {
        if (!has(key)) return;
        out = value<T>(key);
    }

    const json& object(const std::string& key) {
        seen_.insert(key);
        return j_.at(key);
    }

    std::string where(const std::string& key) const { return path_ + "." + key; }

private:
    template <typename T>
    T value(const std::string& key) {
        const json& v = j_.at(key);
        try {
            if constexpr (std::is_same_v<T, bool>) {
                if (!v.is_boolean()) throw ConfigError(where(key) + ": expected a boolean");
            } else if constexpr (std::is_integral_v<T>) {
                if (!v.is_number_integer()) throw ConfigError(where(key) + ": expected an integer");
                if constexpr (std::is_unsigned_v<T>)
                    if (v.get<std::int64_t>() < 0) throw ConfigError(where(key) + ": must be nonnegative");
            } else if constexpr (std::is_floating_point_v<T>) {
                if (!v.is_number()) throw ConfigError(where(key) + ": expected a number");
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (!v.is_string()) throw ConfigError(where(key) + ": expected a string");
            }
            return v.get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(where(key) + ": " + e.what());
        }
    }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

std::optional<Range> read_range(Reader& r, const std::string& key) {
    if (!r.has(key)) return std::nullopt;
    const json& v = r.object(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer())
        throw ConfigError(r.where(key) + ": expected [lower, upper] integers");
    return Range{v[0].get<std::int64_t>(), v[1].get<std::int64_t>()};
}

}  // namespace

void ExperimentConfig::check() const {
    if (intervals < 1) throw ConfigError("intervals must be >= 1");
    try {
        bounds.check();
    } catch (const BoundsError& e) {
        throw ConfigError(std::string("bounds: ") + e.what());
    }
    if (bounds.layout.intervals() != intervals) throw ConfigError("bounds layout does not match intervals");
    for (std::size_t i = 0; i < bounds.size(); ++i) {
        const auto slot = bounds.layout.slot(i);
        const std::int64_t floor = slot.field == Field::Latency ? 0 : 1;
        if (bounds.lower[i] < floor)
            throw ConfigError(std::string("bounds: ") + field_name(slot.field) + " lower bound must be >= " +
                              std::to_string(floor));
    }
    if (budget_evaluations.has_value() == budget_wall_clock_ms.has_value())
        throw ConfigError("budget: set exactly one of evaluations or wall_clock_ms");
    if (budget_evaluations && *budget_evaluations < 1) throw ConfigError("budget.evaluations must be positive");
    if (budget_wall_clock_ms && *budget_wall_clock_ms < 1) throw ConfigError("budget.wall_clock_ms must be positive");
    if (pls.top_n < 1) throw ConfigError("pls.top_n must be >= 1");
    if (pls.ocba_delta < 1) throw ConfigError("pls.ocba_delta must be >= 1");
    if (pls.algorithm != PlsAlgorithm::SimpleMax && !(pls.budget_fraction > 0.0 && pls.budget_fraction < 1.0))
        throw ConfigError("pls.budget_fraction must lie in (0, 1)");
    try {
        ga.check();
        bo.check();
        eps.check();
        eval_config().check();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (executor.kind == ExecutorConfig::Kind::Simulator) {
        for (const auto* p : {&roles.reference, &roles.target})
            if (!valid_protocol(*p)) throw ConfigError("unknown protocol '" + *p + "'");
        if (roles.competitor && !is_cc_name(*roles.competitor))
            throw ConfigError("unknown competitor protocol '" + *roles.competitor + "'");
        if (roles.target == "oracle") throw ConfigError("the target must be a congestion-control model");
        if (score.use_case != UseCase::Uc1Capacity && roles.reference == "oracle" &&
            score.use_case != UseCase::Uc2Weighted && score.use_case != UseCase::Uc3Multipath)
            throw ConfigError(std::string(use_case_name(score.use_case)) + " needs a model as reference");
        if (executor.jitter_sigma_ms < 0.0) throw ConfigError("executor.jitter_sigma_ms must be >= 0");
    } else {
        if (executor.command.empty()) throw ConfigError("executor.command is required for the external executor");
        if (executor.timeout_ms < 1) throw ConfigError("executor.timeout_ms must be positive");
    }
    if (final_rounds < 1) throw ConfigError("final_rounds must be >= 1");
    if (output_dir.empty()) throw ConfigError("output_dir must be set");
}

EvalConfig ExperimentConfig::eval_config() const {
    EvalConfig ec;
    ec.repetitions = repetitions;
    ec.max_concurrent = max_concurrent;
    ec.score = score;
    ec.roles = roles;
    ec.collapse_deterministic = collapse_deterministic;
    return ec;
}

ExperimentConfig parse_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    ExperimentConfig cfg;
    {
        Reader r(root, "config");
        r.get("intervals", cfg.intervals);
        if (cfg.intervals < 1) throw ConfigError("intervals must be >= 1");

        Range bw = kDefaultBandwidth, lat = kDefaultLatency, dur = kDefaultDuration, buf = kDefaultBuffer;
        std::optional<Range> data;
        if (r.has("bounds")) {
            Reader b(r.object("bounds"), "config.bounds");
            if (auto v = read_range(b, "bandwidth_mbps")) bw = *v;
            if (auto v = read_range(b, "latency_ms")) lat = *v;
            if (auto v = read_range(b, "duration_ms")) dur = *v;
            if (auto v = read_range(b, "buffer_packets")) buf = *v;
            data = read_range(b, "data_kb");
        }
        try {
            cfg.bounds = Bounds::per_interval(cfg.intervals, bw, lat, dur, buf, data);
        } catch (const BoundsError& e) {
            throw ConfigError(std::string("bounds: ") + e.what());
        }

        if (r.has("optimizer")) {
            Reader o(r.object("optimizer"), "config.optimizer");
            std::string name = "ga";
            o.get("name", name);
            cfg.optimizer = parse_optimizer(name);
            switch (cfg.optimizer) {
                case OptimizerKind::Ga:
                    o.get("population_size", cfg.ga.population_size);
                    o.get("mut_prob", cfg.ga.mut_prob);
                    o.get("elitism_count", cfg.ga.elitism_count);
                    o.get("tournament_size", cfg.ga.tournament_size);
                    break;
                case OptimizerKind::Eps:
                    o.get("epsilon", cfg.eps.epsilon);
                    o.get("elite_capacity", cfg.eps.elite_capacity);
                    o.get("mutation_prob", cfg.eps.mutation_prob);
                    break;
                case OptimizerKind::Bo:
                    o.get("surrogate_trees", cfg.bo.surrogate_trees);
                    o.get("lcb_kappa", cfg.bo.lcb_kappa);
                    o.get("warmup_samples", cfg.bo.warmup_samples);
                    o.get("candidate_pool", cfg.bo.candidate_pool);
                    o.get("min_leaf", cfg.bo.min_leaf);
                    break;
                case OptimizerKind::Rg: break;
            }
        }

        if (r.has("budget")) {
            Reader b(r.object("budget"), "config.budget");
            cfg.budget_evaluations.reset();
            b.get("evaluations", cfg.budget_evaluations);
            b.get("wall_clock_ms", cfg.budget_wall_clock_ms);
        }

        if (r.has("pls")) {
            Reader p(r.object("pls"), "config.pls");
            std::string algorithm = pls_name(cfg.pls.algorithm);
            p.get("algorithm", algorithm);
            try {
                cfg.pls.algorithm = parse_pls(algorithm);
            } catch (const SelectionError& e) {
                throw ConfigError(e.what());
            }
            p.get("top_n", cfg.pls.top_n);
            p.get("budget_fraction", cfg.pls.budget_fraction);
            p.get("ocba_delta", cfg.pls.ocba_delta);
        }

        if (r.has("score")) {
            Reader s(r.object("score"), "config.score");
            std::string use_case = use_case_name(cfg.score.use_case);
            s.get("use_case", use_case);
            try {
                cfg.score.use_case = parse_use_case(use_case);
            } catch (const ScoreError& e) {
                throw ConfigError(e.what());
            }
            std::string direction = "higher";
            s.get("direction", direction);
            if (direction != "higher" && direction != "lower")
                throw ConfigError("config.score.direction: expected 'higher' or 'lower'");
            cfg.score.direction = direction == "higher" ? Direction::HigherBetter : Direction::LowerBetter;
            s.get("t_coeff", cfg.score.t_coeff);
            s.get("tau_max", cfg.score.tau_max);
            s.get("d_min", cfg.score.d_min);
            s.get("rtt_delays", cfg.score.rtt_delays);
        }

        if (r.has("protocols")) {
            Reader p(r.object("protocols"), "config.protocols");
            p.get("reference", cfg.roles.reference);
            p.get("target", cfg.roles.target);
            p.get("competitor", cfg.roles.competitor);
        }

        if (r.has("executor")) {
            Reader e(r.object("executor"), "config.executor");
            std::string kind = "simulator";
            e.get("kind", kind);
            if (kind == "simulator") {
                cfg.executor.kind = ExecutorConfig::Kind::Simulator;
                e.get("jitter_sigma_ms", cfg.executor.jitter_sigma_ms);
            } else if (kind == "external") {
                cfg.executor.kind = ExecutorConfig::Kind::External;
                e.get("command", cfg.executor.command);
                e.get("timeout_ms", cfg.executor.timeout_ms);
            } else {
                throw ConfigError("config.executor.kind: expected 'simulator' or 'external'");
            }
        }

        r.get("repetitions", cfg.repetitions);
        r.get("collapse_deterministic", cfg.collapse_deterministic);
        r.get("max_concurrent", cfg.max_concurrent);
        r.get("final_rounds", cfg.final_rounds);
        r.get("seed", cfg.seed);
        r.get("output_dir", cfg.output_dir);
    }
    cfg.check();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string config_to_json(const ExperimentConfig& cfg) {
    ordered_json j;
    j["intervals"] = cfg.intervals;
    auto range = [&](Field f) {
        const auto pos = cfg.bounds.layout.position({f, f == Field::Buffer || f == Field::DataSize ? -1 : 0});
        return ordered_json::array({cfg.bounds.lower[pos], cfg.bounds.upper[pos]});
    };
    j["bounds"]["bandwidth_mbps"] = range(Field::Bandwidth);
    j["bounds"]["latency_ms"] = range(Field::Latency);
    j["bounds"]["duration_ms"] = range(Field::Duration);
    j["bounds"]["buffer_packets"] = range(Field::Buffer);
    if (cfg.bounds.layout.has_data_size()) j["bounds"]["data_kb"] = range(Field::DataSize);

    auto& opt = j["optimizer"];
    opt["name"] = optimizer_name(cfg.optimizer);
    switch (cfg.optimizer) {
        case OptimizerKind::Ga:
            opt["population_size"] = cfg.ga.population_size;
            opt["mut_prob"] = cfg.ga.mut_prob;
            opt["elitism_count"] = cfg.ga.elitism_count;
            opt["tournament_size"] = cfg.ga.tournament_size;
            break;
        case OptimizerKind::Eps:
            opt["epsilon"] = cfg.eps.epsilon;
            opt["elite_capacity"] = cfg.eps.elite_capacity;
            opt["mutation_prob"] = cfg.eps.mutation_prob;
            break;
        case OptimizerKind::Bo:
            opt["surrogate_trees"] = cfg.bo.surrogate_trees;
            opt["lcb_kappa"] = cfg.bo.lcb_kappa;
            opt["warmup_samples"] = cfg.bo.warmup_samples;
            opt["candidate_pool"] = cfg.bo.candidate_pool;
            opt["min_leaf"] = cfg.bo.min_leaf;
            break;
        case OptimizerKind::Rg: break;
    }
    if (cfg.budget_evaluations) j["budget"]["evaluations"] = *cfg.budget_evaluations;
    if (cfg.budget_wall_clock_ms) j["budget"]["wall_clock_ms"] = *cfg.budget_wall_clock_ms;
    j["pls"] = {{"algorithm", pls_name(cfg.pls.algorithm)},
                {"top_n", cfg.pls.top_n},
                {"budget_fraction", cfg.pls.budget_fraction},
                {"ocba_delta", cfg.pls.ocba_delta}};
    auto& s = j["score"];
    s["use_case"] = use_case_name(cfg.score.use_case);
    s["direction"] = cfg.score.direction == Direction::HigherBetter ? "higher" : "lower";
    if (cfg.score.t_coeff) s["t_coeff"] = *cfg.score.t_coeff;
    if (cfg.score.tau_max) s["tau_max"] = *cfg.score.tau_max;
    if (cfg.score.d_min) s["d_min"] = *cfg.score.d_min;
    s["rtt_delays"] = cfg.score.rtt_delays;
    j["protocols"]["reference"] = cfg.roles.reference;
    j["protocols"]["target"] = cfg.roles.target;
    if (cfg.roles.competitor) j["protocols"]["competitor"] = *cfg.roles.competitor;
    if (cfg.executor.kind == ExecutorConfig::Kind::Simulator) {
        j["executor"] = {{"kind", "simulator"}, {"jitter_sigma_ms", cfg.executor.jitter_sigma_ms}};
    } else {
        j["executor"] = {{"kind", "external"}, {"command", cfg.executor.command}, {"timeout_ms", cfg.executor.timeout_ms}};
    }
    j["repetitions"] = cfg.repetitions;
    j["collapse_deterministic"] = cfg.collapse_deterministic;
    j["max_concurrent"] = cfg.max_concurrent;
    j["final_rounds"] = cfg.final_rounds;
    j["seed"] = cfg.seed;
    j["output_dir"] = cfg.output_dir;
    return j.dump(2);
}

std::unique_ptr<Executor> make_executor(const ExperimentConfig& cfg) {
    if (cfg.executor.kind == ExecutorConfig::Kind::External)
        return std::make_unique<ExternalExecutor>(cfg.executor.command, std::chrono::milliseconds(cfg.executor.timeout_ms),
                                                  (fs::path(cfg.output_dir) / "work").string());
    SimOptions opt;
    opt.jitter_sigma_ms = cfg.executor.jitter_sigma_ms;
    return std::make_unique<SimulatorExecutor>(opt);
}

namespace {

std::string fmt_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::unique_ptr<Optimizer> make_optimizer(const ExperimentConfig& cfg) {
    const std::uint64_t seed = cfg.seed + seed_offset::kOptimizer;
    switch (cfg.optimizer) {
        case OptimizerKind::Ga: return make_genetic(cfg.bounds, cfg.ga, seed);
        case OptimizerKind::Bo: return make_bayesian(cfg.bounds, cfg.bo, seed);
        case OptimizerKind::Eps: return make_epsilon_greedy(cfg.bounds, cfg.eps, seed);
        case OptimizerKind::Rg: return make_random_search(cfg.bounds, seed);
    }
    throw ConfigError("unknown optimizer");
}

/// Largest candidate count the selection algorithm's precondition admits for `budget`.
std::size_t admissible_candidates(PlsAlgorithm a, std::size_t budget) {
    switch (a) {
        case PlsAlgorithm::Tre:
        case PlsAlgorithm::Ocba: return budget / 2;
        default: return budget;
    }
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& cfg, std::ostream* log) {
    cfg.check();
    const fs::path out_dir(cfg.output_dir);
    fs::create_directories(out_dir / "traces");

    const auto base = make_executor(cfg);
    CountingExecutor executor(*base);
    const EvalConfig ec = cfg.eval_config();
    const bool simple = cfg.pls.algorithm == PlsAlgorithm::SimpleMax;
    const double fraction = simple ? 0.0 : cfg.pls.budget_fraction;

    ExperimentReport report;
    OptimizerBudget budget = OptimizerBudget::evaluations(1);
    if (cfg.budget_evaluations) {
        report.pls_budget = static_cast<std::size_t>(std::llround(static_cast<double>(*cfg.budget_evaluations) * fraction));
        report.optimizer_budget = *cfg.budget_evaluations - report.pls_budget;
        if (report.optimizer_budget == 0) throw ConfigError("budget leaves no evaluations for the optimizer");
        budget = OptimizerBudget::evaluations(report.optimizer_budget);
    } else {
        const auto ms = static_cast<std::int64_t>(std::llround(static_cast<double>(*cfg.budget_wall_clock_ms) * (1.0 - fraction)));
        budget = OptimizerBudget::wall_clock(std::chrono::milliseconds(std::max<std::int64_t>(1, ms)));
    }

    std::size_t calls = 0;
    const Evaluator evaluator = [&](const TraceVector& v) -> std::optional<EvalOutcome> {
        const std::size_t iteration = calls++;
        const Trace trace = decode(v, cfg.bounds.layout);
        try {
            const auto r = evaluate(trace, ec, executor, cfg.seed, SeedStream::Learning, iteration);
            char name[40];
            std::snprintf(name, sizeof name, "traces/iter_%05zu.trace", iteration);
            write_trace_file((out_dir / name).string(), trace);
            report.history.push_back({iteration, r.score, r.repetitions, name, r.reference_score, r.target_score});
            return EvalOutcome{r.score, r.repetitions};
        } catch (const EvaluationError& e) {
            if (log) *log << "iteration " << iteration << " skipped: " << e.what() << '\n';
            return std::nullopt;
        }
    };

    auto optimizer = make_optimizer(cfg);
    const History history = run_optimizer(*optimizer, evaluator, budget);
    report.optimizer_evaluations = history.evaluator_calls;
    report.optimizer_skipped = history.skipped;
    if (history.evaluations.empty()) throw std::runtime_error("the optimizer produced no successful evaluation");
    if (cfg.budget_wall_clock_ms && !simple)
        report.pls_budget = static_cast<std::size_t>(
            std::llround(static_cast<double>(history.evaluator_calls) * fraction / (1.0 - fraction)));
    report.best_observed_score = history.best().score;
    if (log)
        *log << optimizer->name() << ": " << history.evaluator_calls << " evaluations, best observed "
             << report.best_observed_score << '\n';

    std::size_t winner = simple_max(history.evaluations);
    const std::size_t n = std::min({cfg.pls.top_n, history.evaluations.size(),
                                    admissible_candidates(cfg.pls.algorithm, report.pls_budget)});
    if (!simple && n > 0) {
        std::size_t pls_calls = 0;
        EvalConfig single = ec;
        single.repetitions = 1;
        const SampleFn sample = [&](const Candidate& c) -> std::optional<double> {
            const std::size_t call = pls_calls++;
            try {
                return evaluate(decode(c.vector, cfg.bounds.layout), single, executor, cfg.seed, SeedStream::Selection, call)
                    .score;
            } catch (const EvaluationError& e) {
                if (log) *log << "selection sample " << call << " failed: " << e.what() << '\n';
                return std::nullopt;
            }
        };
        OcbaOptions ocba;
        ocba.delta_budget = cfg.pls.ocba_delta;
        const auto selection = run_selection(cfg.pls.algorithm, top_candidates(history.evaluations, n),
                                             report.pls_budget, sample, ocba);
        winner = selection.winner().id;
        report.winner_pls_mean = selection.winner().stats.mean();
        report.pls_evaluations = selection.evaluations;
        report.pls_candidates = n;
        if (log)
            *log << pls_name(cfg.pls.algorithm) << ": " << selection.evaluations << " samples over " << n
                 << " candidates\n";
    } else if (!simple && log) {
        *log << "selection budget " << report.pls_budget << " too small; falling back to simple_max\n";
    }

    const Evaluation& chosen = history.evaluations[winner];
    report.winner_iteration = chosen.iteration;
    report.winner_observed_score = chosen.score;
    report.winner = decode(chosen.vector, cfg.bounds.layout);
    const auto before_final = executor.runs();
    report.reevaluated = reevaluate_final(report.winner, ec, executor, cfg.final_rounds, cfg.seed);
    report.final_evaluations = static_cast<std::size_t>(cfg.final_rounds);
    report.executor_runs = executor.runs();
    if (log)
        *log << "winner iteration " << report.winner_iteration << ": observed " << report.winner_observed_score
             << ", reevaluated " << report.reevaluated.mean << " +- " << report.reevaluated.stddev << " ("
             << executor.runs() - before_final << " runs)\n";

    // ---- outputs ----
    report.history_csv_path = (out_dir / "history.csv").string();
    {
        std::ofstream csv(report.history_csv_path, std::ios::binary);
        csv << "iteration,score,repetitions,trace_file,reference_score,target_score,eq1_score,use_case\n";
        for (const auto& row : report.history)
            csv << row.iteration << ',' << fmt_double(row.score) << ',' << row.repetitions << ',' << row.trace_file << ','
                << fmt_double(row.reference_score) << ',' << fmt_double(row.target_score) << ','
                << fmt_double(row.score) << ',' << use_case_name(cfg.score.use_case) << '\n';
    }
    report.winner_trace_path = (out_dir / "winner.trace").string();
    write_trace_file(report.winner_trace_path, report.winner);

    ordered_json j;
    j["best_observed_score"] = report.best_observed_score;
    j["winner"] = {{"iteration", report.winner_iteration},
                   {"observed_score", report.winner_observed_score},
                   {"trace_file", "winner.trace"}};
    if (report.winner_pls_mean) j["winner"]["selection_mean"] = *report.winner_pls_mean;
    j["reevaluated"] = {{"mean", report.reevaluated.mean},
                        {"std", report.reevaluated.stddev},
                        {"rounds", cfg.final_rounds},
                        {"scores", report.reevaluated.scores}};
    j["counts"] = {{"optimizer_budget", report.optimizer_budget},
                   {"optimizer_evaluations", report.optimizer_evaluations},
                   {"optimizer_skipped", report.optimizer_skipped},
                   {"pls_budget", report.pls_budget},
                   {"pls_candidates", report.pls_candidates},
                   {"pls_evaluations", report.pls_evaluations},
                   {"final_evaluations", report.final_evaluations},
                   {"executor_runs", report.executor_runs}};
    j["seeds"] = {{"master", cfg.seed},
                  {"optimizer", cfg.seed + seed_offset::kOptimizer},
                  {"learning_stream_base", run_seed(cfg.seed, SeedStream::Learning, 0, 1, 0)},
                  {"selection_stream_base", run_seed(cfg.seed, SeedStream::Selection, 0, 1, 0)},
                  {"final_stream_base", run_seed(cfg.seed, SeedStream::Final, 0, 1, 0)}};
    j["config"] = ordered_json::parse(config_to_json(cfg));
    report.report_json_path = (out_dir / "report.json").string();
    std::ofstream(report.report_json_path, std::ios::binary) << j.dump(2) << '\n';
    return report;
}

// ---- selection benchmark ----

std::vector<BenchRow> bench_pls(const std::vector<std::size_t>& budgets, const StudyConfig& study) {
    static constexpr StudyAlgorithm kAlgorithms[] = {StudyAlgorithm::Oracle, StudyAlgorithm::SimpleMax,
                                                     StudyAlgorithm::RoundRobin, StudyAlgorithm::Ocba,
                                                     StudyAlgorithm::Tre, StudyAlgorithm::Mre};
    std::vector<std::future<BenchRow>> jobs;
    for (auto budget : budgets)
        for (auto a : kAlgorithms)
            jobs.push_back(std::async(std::launch::async, [=] {
                auto r = gaussian_study(study, budget, a);
                return BenchRow{budget, study_name(a), r.mean, r.std_error, std::move(r.picks)};
            }));
    std::vector<BenchRow> rows;
    for (auto& f : jobs) rows.push_back(f.get());
    return rows;
}

std::string format_bench_csv(const std::vector<BenchRow>& rows) {
    std::ostringstream os;
    os << "budget,algorithm,mean_true_score,stderr\n";
    for (const auto& r : rows)
        os << r.budget << ',' << r.algorithm << ',' << fmt_double(r.mean_true_score) << ',' << fmt_double(r.std_error)
           << '\n';
    return os.str();
}

// ---- replay ----

ReplayResult replay(const Trace& trace, const ExperimentConfig& cfg, bool write_events) {
    const auto executor = make_executor(cfg);
    const EvalConfig ec = cfg.eval_config();
    ReplayResult out;
    out.score = reevaluate_final(trace, ec, *executor, cfg.final_rounds, cfg.seed);

    const auto* sim = dynamic_cast<const SimulatorExecutor*>(executor.get());
    if (!sim) return out;
    for (const auto& [role, spec] : required_runs(ec.score, ec.roles)) {
        if (std::find(spec.flows.begin(), spec.flows.end(), ec.roles.target) == spec.flows.end()) continue;
        out.spec = spec;
        const int reps = ec.effective_repetitions(*sim);
        auto result = sim->simulate_run(trace, spec, run_seed(cfg.seed, SeedStream::Final, 0, reps, 0), write_events);
        out.flows = std::move(result.flows);
        if (write_events) {
            fs::create_directories(cfg.output_dir);
            const auto path = (fs::path(cfg.output_dir) / "events.csv").string();
            write_events_csv(path, result.events);
            out.events_path = path;
        }
        break;
    }
    return out;
}

}  // namespace advgen

#include <pybind11/functional.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "advgen/experiment.hpp"

namespace py = pybind11;
using namespace advgen;

namespace {

py::dict perf_dict(const PerfSummary& p) {
    py::dict d;
    d["throughput_mbps"] = p.throughput_mbps;
    d["mean_delay_ms"] = p.mean_delay_ms;
    d["bytes_delivered"] = p.bytes_delivered;
    d["completion_time_ms"] = p.completion_time_ms ? py::cast(*p.completion_time_ms) : py::none();
    return d;
}

Range as_range(const std::pair<std::int64_t, std::int64_t>& r) { return {r.first, r.second}; }

StudyAlgorithm study_algorithm(const std::string& name) {
    for (auto a : {StudyAlgorithm::Oracle, StudyAlgorithm::SimpleMax, StudyAlgorithm::RoundRobin, StudyAlgorithm::Ocba,
                   StudyAlgorithm::Tre, StudyAlgorithm::Mre})
        if (name == study_name(a)) return a;
    throw std::invalid_argument("unknown study algorithm '" + name + "'");
}

ExperimentConfig config_from(const std::string& json_text, const std::optional<std::string>& output_dir) {
    ExperimentConfig cfg = parse_config(json_text);
    if (output_dir) cfg.output_dir = *output_dir;
    return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "advgen core bindings";

    py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
    py::register_exception<BoundsError>(m, "BoundsError", PyExc_ValueError);
    py::register_exception<TraceFormatError>(m, "TraceFormatError", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

    py::class_<Interval>(m, "Interval")
        .def(py::init([](std::int64_t bw, std::int64_t lat, std::int64_t dur) { return Interval{bw, lat, dur}; }),
             py::arg("bandwidth_mbps"), py::arg("latency_ms"), py::arg("duration_ms"))
        .def_readwrite("bandwidth_mbps", &Interval::bandwidth_mbps)
        .def_readwrite("latency_ms", &Interval::latency_ms)
        .def_readwrite("duration_ms", &Interval::duration_ms)
        .def(py::self == py::self)
        .def("__repr__", [](const Interval& i) {
            return "Interval(" + std::to_string(i.bandwidth_mbps) + ", " + std::to_string(i.latency_ms) + ", " +
                   std::to_string(i.duration_ms) + ")";
        });

    py::class_<Trace>(m, "Trace")
        .def(py::init([](std::vector<Interval> intervals, std::int64_t buffer, std::optional<std::int64_t> data_kb) {
                 return Trace{std::move(intervals), buffer, data_kb};
             }),
             py::arg("intervals"), py::arg("buffer_packets"), py::arg("data_kb") = py::none())
        .def_readwrite("intervals", &Trace::intervals)
        .def_readwrite("buffer_packets", &Trace::buffer_packets)
        .def_readwrite("data_kb", &Trace::data_kb)
        .def_property_readonly("total_duration_ms", &Trace::total_duration_ms)
        .def_property_readonly("mean_bandwidth_mbps", &Trace::mean_bandwidth_mbps)
        .def(py::self == py::self)
        .def("__repr__", [](const Trace& t) { return "Trace(" + format_trace(t) + ")"; });

    py::class_<Bounds>(m, "Bounds")
        .def_static("defaults", &Bounds::defaults, py::arg("intervals"))
        .def_static(
            "per_interval",
            [](int k, std::pair<std::int64_t, std::int64_t> bw, std::pair<std::int64_t, std::int64_t> lat,
               std::pair<std::int64_t, std::int64_t> dur, std::pair<std::int64_t, std::int64_t> buf,
               std::optional<std::pair<std::int64_t, std::int64_t>> data) {
                std::optional<Range> d;
                if (data) d = as_range(*data);
                auto b = Bounds::per_interval(k, as_range(bw), as_range(lat), as_range(dur), as_range(buf), d);
                b.check();
                return b;
            },
            py::arg("intervals"), py::arg("bandwidth_mbps"), py::arg("latency_ms"), py::arg("duration_ms"),
            py::arg("buffer_packets"), py::arg("data_kb") = py::none())
        .def_readonly("lower", &Bounds::lower)
        .def_readonly("upper", &Bounds::upper)
        .def("__len__", &Bounds::size)
        .def("contains", &Bounds::contains);

    py::class_<ValidationResult>(m, "ValidationResult")
        .def_property_readonly("ok", &ValidationResult::ok)
        .def_readonly("shape_error", &ValidationResult::shape_error)
        .def_property_readonly("violations",
                               [](const ValidationResult& r) {
                                   py::list out;
                                   for (const auto& v : r.violations)
                                       out.append(py::make_tuple(v.position, field_name(v.slot.field), v.value,
                                                                 v.lower, v.upper));
                                   return out;
                               })
        .def("describe", &ValidationResult::describe);

    m.def("validate", &validate, py::arg("trace"), py::arg("bounds"));
    m.def(
        "encode", [](const Trace& t, const Bounds& b) { return encode(t, b.layout); }, py::arg("trace"),
        py::arg("bounds"));
    m.def(
        "decode", [](const TraceVector& v, const Bounds& b) { return decode(v, b.layout); }, py::arg("vector"),
        py::arg("bounds"));
    m.def("parse_trace", &parse_trace, py::arg("text"));
    m.def("format_trace", &format_trace, py::arg("trace"));

    m.def(
        "eq1_score",
        [](double ref, double tgt, bool higher_better) {
            return eq1_score(ref, tgt, higher_better ? Direction::HigherBetter : Direction::LowerBetter);
        },
        py::arg("reference"), py::arg("target"), py::arg("higher_better") = true);
    m.def(
        "median", [](const std::vector<double>& v) { return median(v); }, py::arg("values"));

    m.def(
        "two_point_crossover",
        [](const TraceVector& a, const TraceVector& b, std::uint64_t seed) {
            Rng rng = make_rng(seed);
            return two_point_crossover(a, b, rng);
        },
        py::arg("a"), py::arg("b"), py::arg("seed") = 0);
    m.def(
        "uniform_mutation",
        [](const TraceVector& v, const Bounds& bounds, double p, std::uint64_t seed) {
            Rng rng = make_rng(seed);
            return uniform_mutation(v, bounds, p, rng);
        },
        py::arg("vector"), py::arg("bounds"), py::arg("mut_prob"), py::arg("seed") = 0);

    m.def(
        "mre_select",
        [](std::size_t n, std::size_t budget, const std::function<double(std::size_t)>& sample) {
            std::vector<Candidate> cands(n);
            for (std::size_t i = 0; i < n; ++i) cands[i].id = i;
            const auto s = mre_select(std::move(cands), budget,
                                      [&](const Candidate& c) -> std::optional<double> { return sample(c.id); });
            py::dict d;
            d["winner"] = s.winner().id;
            d["survivors_per_round"] = s.survivors_per_round;
            d["evaluations"] = s.evaluations;
            return d;
        },
        py::arg("candidates"), py::arg("budget"), py::arg("sample"));

    m.def(
        "gaussian_study",
        [](std::size_t budget, const std::string& algorithm, std::size_t trials, double sigma, std::uint64_t seed) {
            StudyConfig cfg;
            cfg.trials = trials;
            cfg.sigma = sigma;
            cfg.seed = seed;
            const auto algo = study_algorithm(algorithm);
            StudyResult r;
            {
                py::gil_scoped_release release;
                r = gaussian_study(cfg, budget, algo);
            }
            if (!r.applicable) return py::object(py::none());
            return py::object(py::make_tuple(r.mean, r.std_error));
        },
        py::arg("budget"), py::arg("algorithm"), py::arg("trials") = 2000, py::arg("sigma") = 20.0,
        py::arg("seed") = 1);
    m.def(
        "bench_pls",
        [](const std::vector<std::size_t>& budgets, std::size_t trials, double sigma, std::uint64_t seed) {
            StudyConfig cfg;
            cfg.trials = trials;
            cfg.sigma = sigma;
            cfg.seed = seed;
            py::gil_scoped_release release;
            return format_bench_csv(advgen::bench_pls(budgets, cfg));
        },
        py::arg("budgets") = std::vector<std::size_t>{50, 100, 150, 200, 250}, py::arg("trials") = 2000,
        py::arg("sigma") = 20.0, py::arg("seed") = 1);

    m.def(
        "simulate",
        [](const Trace& trace, const std::vector<std::string>& models, std::uint64_t seed, double jitter_sigma_ms) {
            std::vector<std::unique_ptr<CongestionControl>> owned;
            std::vector<const CongestionControl*> ptrs;
            for (const auto& name : models) {
                owned.push_back(make_cc(name));
                ptrs.push_back(owned.back().get());
            }
            SimOptions opt;
            opt.seed = seed;
            opt.jitter_sigma_ms = jitter_sigma_ms;
            SimResult r;
            {
                py::gil_scoped_release release;
                r = advgen::simulate(trace, ptrs, opt);
            }
            py::list flows;
            for (const auto& f : r.flows) {
                auto d = perf_dict(f.perf);
                d["model"] = f.model;
                d["retransmits"] = f.counters.retransmits;
                flows.append(d);
            }
            return flows;
        },
        py::arg("trace"), py::arg("models"), py::arg("seed") = 0, py::arg("jitter_sigma_ms") = 0.0);
    m.def(
        "capacity_oracle", [](const Trace& t) { return perf_dict(capacity_oracle(t)); }, py::arg("trace"));

    m.def(
        "run_experiment",
        [](const std::string& config_json, std::optional<std::string> output_dir) {
            const auto cfg = config_from(config_json, output_dir);
            ExperimentReport r;
            {
                py::gil_scoped_release release;
                r = advgen::run_experiment(cfg);
            }
            py::dict d;
            d["best_observed_score"] = r.best_observed_score;
            d["winner_iteration"] = r.winner_iteration;
            d["winner"] = r.winner;
            d["reevaluated_mean"] = r.reevaluated.mean;
            d["reevaluated_std"] = r.reevaluated.stddev;
            d["optimizer_evaluations"] = r.optimizer_evaluations;
            d["pls_evaluations"] = r.pls_evaluations;
            d["executor_runs"] = r.executor_runs;
            d["history_csv"] = r.history_csv_path;
            d["winner_trace"] = r.winner_trace_path;
            d["report_json"] = r.report_json_path;
            return d;
        },
        py::arg("config_json"), py::arg("output_dir") = py::none());
    m.def(
        "replay",
        [](const Trace& trace, const std::string& config_json, std::optional<std::string> output_dir, bool events) {
            const auto cfg = config_from(config_json, output_dir);
            ReplayResult r;
            {
                py::gil_scoped_release release;
                r = advgen::replay(trace, cfg, events);
            }
            py::dict d;
            py::list flows;
            for (const auto& f : r.flows) {
                auto fd = perf_dict(f.perf);
                fd["model"] = f.model;
                flows.append(fd);
            }
            d["flows"] = flows;
            d["score_mean"] = r.score.mean;
            d["score_std"] = r.score.stddev;
            d["events_csv"] = r.events_path ? py::cast(*r.events_path) : py::none();
            return d;
        },
        py::arg("trace"), py::arg("config_json") = "{}", py::arg("output_dir") = py::none(),
        py::arg("events") = false);
}

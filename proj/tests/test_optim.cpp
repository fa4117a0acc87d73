#include <numeric>
#include <set>

#include "advgen/optim.hpp"
#include "doctest.h"

using namespace advgen;

namespace {

Bounds box(std::int64_t lo, std::int64_t hi) { return Bounds::per_interval(1, {lo, hi}, {lo, hi}, {lo, hi}, {lo, hi}); }

Evaluator sum_ratio(const Bounds& b) {
    const double top = static_cast<double>(std::accumulate(b.upper.begin(), b.upper.end(), std::int64_t{0}));
    return [top](const TraceVector& v) -> std::optional<EvalOutcome> {
        return EvalOutcome{static_cast<double>(std::accumulate(v.begin(), v.end(), std::int64_t{0})) / top};
    };
}

std::vector<TraceVector> vectors(const History& h) {
    std::vector<TraceVector> out;
    for (const auto& e : h.evaluations) out.push_back(e.vector);
    return out;
}

}  // namespace

TEST_CASE("two-point crossover swaps the middle segment") {
    const TraceVector a{1, 2, 3, 4}, b{5, 6, 7, 8};
    const auto [c1, c2] = two_point_crossover_at(a, b, 1, 3);
    CHECK(c1 == TraceVector{1, 6, 7, 4});
    CHECK(c2 == TraceVector{5, 2, 3, 8});
    CHECK_THROWS(two_point_crossover_at(a, b, 3, 3));
    CHECK_THROWS_AS(two_point_crossover_at(a, TraceVector{1, 2}, 0, 1), ShapeError);

    Rng rng = make_rng(4);
    for (int i = 0; i < 200; ++i) {
        const auto [x, y] = two_point_crossover(a, a, rng);
        REQUIRE(x == a);
        REQUIRE(y == a);
        const auto [p, q] = two_point_crossover(a, b, rng);
        for (std::size_t k = 0; k < a.size(); ++k) {
            // every position keeps one parent's value per child, and the children are complementary
            REQUIRE(((p[k] == a[k] && q[k] == b[k]) || (p[k] == b[k] && q[k] == a[k])));
        }
    }
}

TEST_CASE("uniform mutation degenerate cases") {
    Rng rng = make_rng(5);
    const Bounds b = box(1, 10);
    const TraceVector v{3, 4, 5, 6};
    CHECK(uniform_mutation(v, b, 0.0, rng) == v);
    CHECK(uniform_mutation(v, box(7, 7), 1.0, rng) == TraceVector{7, 7, 7, 7});
    CHECK_THROWS_AS(uniform_mutation(TraceVector{1, 2}, b, 0.5, rng), ShapeError);
}

TEST_CASE("uniform mutation changes the expected fraction of coordinates") {
    const auto b = Bounds::per_interval(3, {1, 10}, {1, 10}, {1, 10}, {1, 10});
    REQUIRE(b.size() == 10);
    Rng rng = make_rng(6);
    const double range = 10.0;
    std::size_t changed = 0, total = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        const TraceVector v = sample_uniform_vector(b, rng);
        const TraceVector m = uniform_mutation(v, b, 0.5, rng);
        REQUIRE(b.contains(m));
        for (std::size_t i = 0; i < v.size(); ++i) changed += v[i] != m[i];
        total += v.size();
    }
    const double frac = static_cast<double>(changed) / static_cast<double>(total);
    CHECK(frac >= 0.45 * (1.0 - 1.0 / range));
    CHECK(frac <= 0.55);
}

TEST_CASE("GA finds the upper corner of a separable objective") {
    const Bounds b = box(1, 10);
    GAConfig cfg;
    cfg.population_size = 8;
    const auto h = run_ga(sum_ratio(b), b, cfg, OptimizerBudget::evaluations(200), 17);
    CHECK(h.evaluations.size() == 200);
    CHECK(h.best().score >= 0.95);
}

TEST_CASE("GA with a single-generation budget only samples uniformly") {
    const Bounds b = Bounds::defaults(5);
    GAConfig cfg;
    const auto ga = run_ga(sum_ratio(b), b, cfg, OptimizerBudget::evaluations(cfg.population_size), 3);
    const auto rg = run_rg(sum_ratio(b), b, OptimizerBudget::evaluations(cfg.population_size), 3);
    CHECK(ga.evaluations.size() == cfg.population_size);
    CHECK(vectors(ga) == vectors(rg));
}

TEST_CASE("optimizers are deterministic per seed") {
    const Bounds b = Bounds::defaults(3);
    const auto eval = sum_ratio(b);
    const auto budget = OptimizerBudget::evaluations(60);
    CHECK(vectors(run_ga(eval, b, {}, budget, 9)) == vectors(run_ga(eval, b, {}, budget, 9)));
    CHECK(vectors(run_eps(eval, b, {}, budget, 9)) == vectors(run_eps(eval, b, {}, budget, 9)));
    CHECK(vectors(run_bo(eval, b, {}, budget, 9)) == vectors(run_bo(eval, b, {}, budget, 9)));
    CHECK(vectors(run_rg(eval, b, budget, 9)) == vectors(run_rg(eval, b, budget, 9)));
    CHECK_FALSE(vectors(run_ga(eval, b, {}, budget, 9)) == vectors(run_ga(eval, b, {}, budget, 10)));
}

TEST_CASE("every optimizer proposes valid traces") {
    Rng meta = make_rng(8);
    const Bounds b = Bounds::per_interval(4, {3, 60}, {0, 90}, {100, 900}, {50, 70}, Range{1, 1000});
    const auto eval = [&](const TraceVector& v) -> std::optional<EvalOutcome> {
        if (!b.contains(v)) throw std::runtime_error("out of bounds proposal");
        if (!validate(decode(v, b.layout), b).ok()) throw std::runtime_error("invalid proposal");
        return EvalOutcome{static_cast<double>(v[0] - v[1]) + uniform_real(meta)};
    };
    const auto budget = OptimizerBudget::evaluations(80);
    CHECK(run_ga(eval, b, {}, budget, 1).evaluations.size() == 80);
    CHECK(run_eps(eval, b, {}, budget, 1).evaluations.size() == 80);
    BOConfig bo;
    bo.candidate_pool = 100;
    CHECK(run_bo(eval, b, bo, budget, 1).evaluations.size() == 80);
    CHECK(run_rg(eval, b, budget, 1).evaluations.size() == 80);
}

TEST_CASE("skipped evaluations still consume budget") {
    const Bounds b = box(1, 10);
    std::size_t calls = 0;
    const Evaluator flaky = [&](const TraceVector&) -> std::optional<EvalOutcome> {
        if (++calls % 3 == 0) return std::nullopt;
        return EvalOutcome{1.0, 3};
    };
    const auto h = run_ga(flaky, b, {}, OptimizerBudget::evaluations(30), 2);
    CHECK(h.evaluator_calls == 30);
    CHECK(h.skipped == 10);
    CHECK(h.evaluations.size() == 20);
    CHECK(h.evaluations.front().repetitions == 3);
}

TEST_CASE("random search counts and spread") {
    const Bounds b = box(1, 10);
    const auto h = run_rg(sum_ratio(b), b, OptimizerBudget::evaluations(100), 1);
    CHECK(h.evaluations.size() == 100);
    const auto big = run_rg(sum_ratio(b), b, OptimizerBudget::evaluations(200), 1);
    CHECK(big.best().score >= 0.85);
    CHECK(big.best().score <= 0.99);
}

TEST_CASE("epsilon-greedy with epsilon 1 is random search") {
    const Bounds b = Bounds::defaults(5);
    EPSConfig cfg;
    cfg.epsilon = 1.0;
    const auto budget = OptimizerBudget::evaluations(50);
    CHECK(vectors(run_eps(sum_ratio(b), b, cfg, budget, 12)) == vectors(run_rg(sum_ratio(b), b, budget, 12)));
}

TEST_CASE("epsilon-greedy with epsilon 0 exploits after one sample") {
    const Bounds b = Bounds::defaults(5);
    EPSConfig cfg;
    cfg.epsilon = 0.0;
    ProposalTrace trace;
    auto opt = make_epsilon_greedy(b, cfg, 3, &trace);
    run_optimizer(*opt, sum_ratio(b), OptimizerBudget::evaluations(60));
    REQUIRE(trace.exploit.size() == 60);
    CHECK_FALSE(trace.exploit.front());
    for (std::size_t i = 1; i < trace.exploit.size(); ++i) {
        CHECK(trace.exploit[i]);
        CHECK(trace.elite_sizes[i] >= 1);
        CHECK(trace.elite_sizes[i] <= cfg.elite_capacity);
    }
    CHECK(trace.elite_sizes.back() == cfg.elite_capacity);
}

TEST_CASE("elite set keeps the top scores with earlier ties first") {
    EliteSet e(3);
    e.offer({1}, 0.5);
    e.offer({2}, 0.9);
    e.offer({3}, 0.9);
    e.offer({4}, 0.1);
    e.offer({5}, 0.7);
    REQUIRE(e.size() == 3);
    CHECK(e.at(0) == TraceVector{2});
    CHECK(e.at(1) == TraceVector{3});
    CHECK(e.at(2) == TraceVector{5});
}

TEST_CASE("BO with a warm-up-only budget samples uniformly") {
    const Bounds b = Bounds::defaults(5);
    BOConfig cfg;
    ProposalTrace trace;
    auto opt = make_bayesian(b, cfg, 4, &trace);
    const auto h = run_optimizer(*opt, sum_ratio(b), OptimizerBudget::evaluations(cfg.warmup_samples));
    CHECK(vectors(h) == vectors(run_rg(sum_ratio(b), b, OptimizerBudget::evaluations(cfg.warmup_samples), 4)));
    CHECK(std::none_of(trace.surrogate_used.begin(), trace.surrogate_used.end(), [](bool x) { return x; }));
}

TEST_CASE("BO with kappa 0 proposes the pool's predicted-mean maximizer") {
    const Bounds b = box(1, 10);
    BOConfig cfg;
    cfg.lcb_kappa = 0.0;
    cfg.warmup_samples = 15;
    cfg.candidate_pool = 64;
    cfg.surrogate_trees = 10;
    const auto eval = sum_ratio(b);
    auto opt = make_bayesian(b, cfg, 21);
    const auto h = run_optimizer(*opt, eval, OptimizerBudget::evaluations(cfg.warmup_samples + 1));

    // Independent replay of the acquisition step from the same random stream.
    Rng rng = make_rng(21);
    std::vector<TraceVector> xs;
    std::vector<double> ys;
    for (std::size_t i = 0; i < cfg.warmup_samples; ++i) {
        xs.push_back(sample_uniform_vector(b, rng));
        ys.push_back(eval(xs.back())->score);
    }
    RandomForest forest(cfg.surrogate_trees, cfg.min_leaf, rng());
    forest.fit(xs, ys);
    TraceVector best;
    double best_mean = -1e300;
    for (std::size_t i = 0; i < cfg.candidate_pool; ++i) {
        auto c = sample_uniform_vector(b, rng);
        const double m = forest.predict(c).first;
        if (m > best_mean) {
            best_mean = m;
            best = c;
        }
    }
    CHECK(h.evaluations.back().vector == best);
}

TEST_CASE("BO beats random search on most paired seeds") {
    const Bounds b = box(1, 10);
    const auto eval = sum_ratio(b);
    BOConfig cfg;
    cfg.candidate_pool = 200;
    int wins = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto bo = run_bo(eval, b, cfg, OptimizerBudget::evaluations(200), seed);
        const auto rg = run_rg(eval, b, OptimizerBudget::evaluations(200), seed);
        wins += bo.best().score >= rg.best().score;
    }
    CHECK(wins >= 7);
}

TEST_CASE("random forest fits a step function") {
    std::vector<TraceVector> x;
    std::vector<double> y;
    for (std::int64_t i = 0; i < 40; ++i) {
        x.push_back({i});
        y.push_back(i < 20 ? 0.0 : 1.0);
    }
    RandomForest f(20, 2, 1);
    f.fit(x, y);
    CHECK(f.predict({2}).first < 0.2);
    CHECK(f.predict({37}).first > 0.8);
    CHECK(f.predict({37}).second >= 0.0);
}

TEST_CASE("wall-clock budget stops the loop") {
    const Bounds b = box(1, 10);
    const auto h = run_rg(sum_ratio(b), b, OptimizerBudget::wall_clock(std::chrono::milliseconds(20)), 1);
    CHECK(h.evaluations.size() >= 1);
    CHECK_THROWS(OptimizerBudget::evaluations(0));
}

TEST_CASE("optimizer configs reject bad hyperparameters") {
    GAConfig ga;
    ga.elitism_count = ga.population_size;
    CHECK_THROWS(ga.check());
    EPSConfig eps;
    eps.epsilon = 1.5;
    CHECK_THROWS(eps.check());
    BOConfig bo;
    bo.lcb_kappa = -1;
    CHECK_THROWS(bo.check());
}

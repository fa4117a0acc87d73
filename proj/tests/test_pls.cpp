#include <cmath>
#include <map>
#include <numeric>

#include "advgen/pls.hpp"
#include "doctest.h"

using namespace advgen;

namespace {

std::vector<Candidate> make_candidates(std::size_t n) {
    std::vector<Candidate> c(n);
    for (std::size_t i = 0; i < n; ++i) c[i].id = i;
    return c;
}

std::vector<std::size_t> counts(const Selection& s) {
    std::vector<std::size_t> out;
    for (const auto& c : s.candidates) out.push_back(c.stats.count());
    return out;
}

SampleFn deterministic(const std::vector<double>& mu) {
    return [mu](const Candidate& c) -> std::optional<double> { return mu[c.id]; };
}

std::vector<Evaluation> history_of(const std::vector<double>& scores) {
    std::vector<Evaluation> h;
    for (std::size_t i = 0; i < scores.size(); ++i) h.push_back({{static_cast<std::int64_t>(i)}, scores[i], 1, i});
    return h;
}

}  // namespace

TEST_CASE("simple_max picks the argmax with earlier ties") {
    CHECK(simple_max(history_of({0.1, 0.9, 0.5})) == 1);
    CHECK(simple_max(history_of({0.9, 0.9})) == 0);
    CHECK_THROWS_AS(simple_max({}), SelectionError);
}

TEST_CASE("top candidates are ranked by observed score") {
    const auto top = top_candidates(history_of({0.3, 0.9, 0.1, 0.9, 0.5}), 3);
    REQUIRE(top.size() == 3);
    CHECK(top[0].id == 1);
    CHECK(top[1].id == 3);
    CHECK(top[2].id == 4);
    CHECK(top_candidates(history_of({0.3}), 25).size() == 1);
}

TEST_CASE("round robin spreads the budget evenly") {
    const std::vector<double> mu{1, 2, 3, 4, 5};
    const auto s = round_robin(make_candidates(5), 12, deterministic(mu));
    CHECK(counts(s) == std::vector<std::size_t>{3, 3, 2, 2, 2});
    CHECK(s.evaluations == 12);
    CHECK(s.winner().id == 4);
    CHECK(counts(round_robin(make_candidates(5), 5, deterministic(mu))) == std::vector<std::size_t>(5, 1));
}

TEST_CASE("MRE halves the field down to four survivors") {
    std::vector<double> mu(25);
    std::iota(mu.begin(), mu.end(), 0.0);
    const auto s = mre_select(make_candidates(25), 60, deterministic(mu));
    CHECK(s.survivors_per_round == std::vector<std::size_t>{25, 13, 7, 4});
    CHECK(s.evaluations == 60);
    CHECK(s.winner().id == 24);
    CHECK_THROWS_AS(mre_select(make_candidates(25), 24, deterministic(mu)), SelectionError);
}

TEST_CASE("MRE errors before spending anything when the budget is short") {
    std::size_t calls = 0;
    const SampleFn counting = [&](const Candidate&) -> std::optional<double> {
        ++calls;
        return 0.0;
    };
    CHECK_THROWS_AS(mre_select(make_candidates(10), 9, counting), SelectionError);
    CHECK_THROWS_AS(tre_select(make_candidates(10), 19, counting), SelectionError);
    CHECK_THROWS_AS(ocba_select(make_candidates(10), 19, counting), SelectionError);
    CHECK(calls == 0);
}

TEST_CASE("TRE keeps a quarter after two full rounds") {
    const std::vector<double> mu{5, 1, 8, 2, 7, 3, 6, 4};
    const auto s = tre_select(make_candidates(8), 20, deterministic(mu));
    CHECK(s.survivors_per_round == std::vector<std::size_t>{8, 2});
    const auto c = counts(s);
    CHECK(std::accumulate(c.begin(), c.end(), std::size_t{0}) == 20);
    CHECK(c[2] == 4);
    CHECK(c[4] == 4);
    CHECK(c[0] == 2);
    CHECK(s.winner().id == 2);
}

TEST_CASE("OCBA warm-up and guards") {
    const SampleFn alternating = [n = 0](const Candidate& c) mutable -> std::optional<double> {
        return (c.id == 0 ? 10.0 : 5.0) + ((n++ % 2) ? 1.0 : -1.0);
    };
    const auto warm = ocba_select(make_candidates(2), 4, alternating);
    CHECK(counts(warm) == std::vector<std::size_t>{2, 2});

    // A zero-variance candidate must not produce non-finite allocations.
    auto cands = make_candidates(3);
    for (int k = 0; k < 2; ++k) {
        cands[0].stats.push(10.0);
        cands[1].stats.push(5.0);
        cands[2].stats.push(5.0 + k);
    }
    const auto w = ocba_allocation(cands, 0, 100.0, {});
    for (double x : w) CHECK(std::isfinite(x));
    CHECK(std::accumulate(w.begin(), w.end(), 0.0) == doctest::Approx(100.0));

    const std::vector<double> mu{3, 9, 1, 4};
    const auto det = ocba_select(make_candidates(4), 40, deterministic(mu));
    CHECK(det.evaluations == 40);
    CHECK(det.winner().id == 1);
}

TEST_CASE("OCBA allocation favours close competitors") {
    auto cands = make_candidates(3);
    const double noise[] = {-1, 1, -1, 1};
    for (double e : noise) {
        cands[0].stats.push(10 + e);
        cands[1].stats.push(9 + e);
        cands[2].stats.push(0 + e);
    }
    const auto w = ocba_allocation(cands, 0, 100.0, {});
    CHECK(w[1] > w[2]);
    CHECK(w[0] > w[2]);
}

TEST_CASE("Welford statistics match a two-pass reference") {
    Rng rng = make_rng(31);
    for (int trial = 0; trial < 200; ++trial) {
        const auto n = static_cast<std::size_t>(uniform_int(rng, 1, 40));
        std::vector<double> xs(n);
        RunningStats s;
        for (auto& x : xs) {
            x = uniform_real(rng, -1e3, 1e3) + 1e6;
            s.push(x);
        }
        const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(n);
        double ss = 0.0;
        for (double x : xs) ss += (x - mean) * (x - mean);
        REQUIRE(s.mean() == doctest::Approx(mean).epsilon(1e-12));
        if (n < 2) {
            REQUIRE_FALSE(s.variance().has_value());
        } else {
            REQUIRE(*s.variance() == doctest::Approx(ss / static_cast<double>(n - 1)).epsilon(1e-9));
        }
    }
}

TEST_CASE("noiseless selection always returns the true best") {
    Rng rng = make_rng(41);
    for (int trial = 0; trial < 100; ++trial) {
        const auto n = static_cast<std::size_t>(uniform_int(rng, 2, 30));
        std::vector<double> mu(n);
        for (auto& m : mu) m = uniform_real(rng, 0, 100);
        const auto best = static_cast<std::size_t>(std::max_element(mu.begin(), mu.end()) - mu.begin());
        const auto budget = static_cast<std::size_t>(uniform_int(rng, static_cast<std::int64_t>(2 * n), 300));
        const auto f = deterministic(mu);
        REQUIRE(round_robin(make_candidates(n), budget, f).winner().id == best);
        REQUIRE(mre_select(make_candidates(n), budget, f).winner().id == best);
        REQUIRE(tre_select(make_candidates(n), budget, f).winner().id == best);
        REQUIRE(ocba_select(make_candidates(n), budget, f).winner().id == best);
    }
}

TEST_CASE("selection never exceeds its budget and spends all of it") {
    Rng rng = make_rng(42);
    for (int trial = 0; trial < 100; ++trial) {
        const auto n = static_cast<std::size_t>(uniform_int(rng, 1, 30));
        const auto budget = static_cast<std::size_t>(uniform_int(rng, static_cast<std::int64_t>(2 * n), 400));
        Rng noise = make_rng(static_cast<std::uint64_t>(trial));
        std::size_t calls = 0;
        const SampleFn f = [&](const Candidate& c) -> std::optional<double> {
            ++calls;
            return static_cast<double>(c.id) + uniform_real(noise, -5, 5);
        };
        for (auto alg : {PlsAlgorithm::RoundRobin, PlsAlgorithm::Mre, PlsAlgorithm::Tre, PlsAlgorithm::Ocba}) {
            calls = 0;
            const auto s = run_selection(alg, make_candidates(n), budget, f);
            REQUIRE(calls == budget);
            REQUIRE(s.evaluations == budget);
        }
    }
}

TEST_CASE("MRE survivors shrink monotonically") {
    for (std::size_t n = 1; n <= 60; ++n) {
        std::vector<double> mu(n, 1.0);
        const auto s = mre_select(make_candidates(n), 4 * n, deterministic(mu));
        for (std::size_t r = 1; r < s.survivors_per_round.size(); ++r) {
            REQUIRE(s.survivors_per_round[r] < s.survivors_per_round[r - 1]);
            REQUIRE(s.survivors_per_round[r] == s.survivors_per_round[r - 1] - s.survivors_per_round[r - 1] / 2);
        }
        REQUIRE(s.survivors_per_round.back() <= std::max<std::size_t>(n, 1));
    }
}

TEST_CASE("failed samples consume budget without adding statistics") {
    const SampleFn failing = [](const Candidate& c) -> std::optional<double> {
        if (c.id == 1) return std::nullopt;
        return static_cast<double>(c.id);
    };
    const auto s = round_robin(make_candidates(3), 9, failing);
    CHECK(s.evaluations == 9);
    CHECK(counts(s) == std::vector<std::size_t>{3, 0, 3});
    CHECK(s.winner().id == 2);
}

TEST_CASE("gaussian study oracle baseline") {
    StudyConfig cfg;
    cfg.trials = 2000;
    const auto oracle = gaussian_study(cfg, 250, StudyAlgorithm::Oracle);
    const double expected = 100.0 * 50.0 / 51.0;
    CHECK(oracle.mean == doctest::Approx(expected).epsilon(0.01));
    CHECK(oracle.mean >= 97.0);
    CHECK(oracle.mean <= 99.0);
}

TEST_CASE("gaussian study at budget 250 orders the algorithms") {
    StudyConfig cfg;
    const auto mre = gaussian_study(cfg, 250, StudyAlgorithm::Mre);
    const auto rr = gaussian_study(cfg, 250, StudyAlgorithm::RoundRobin);
    const auto tre = gaussian_study(cfg, 250, StudyAlgorithm::Tre);
    const auto ocba = gaussian_study(cfg, 250, StudyAlgorithm::Ocba);
    CHECK(mre.mean > rr.mean);
    CHECK(mre.mean > tre.mean);
    CHECK(ocba.mean < mre.mean);
    CHECK(ocba.mean > rr.mean);
    CHECK(ocba.mean > tre.mean);
    CHECK_FALSE(gaussian_study(cfg, 50, StudyAlgorithm::Tre).applicable);

    // paired one-sided test: MRE at budget 250 is no worse than at budget 100
    const auto mre100 = gaussian_study(cfg, 100, StudyAlgorithm::Mre);
    double sum = 0.0, ss = 0.0;
    const auto n = static_cast<double>(mre.picks.size());
    for (std::size_t t = 0; t < mre.picks.size(); ++t) sum += mre.picks[t] - mre100.picks[t];
    const double mean = sum / n;
    for (std::size_t t = 0; t < mre.picks.size(); ++t) {
        const double d = mre.picks[t] - mre100.picks[t] - mean;
        ss += d * d;
    }
    const double se = std::sqrt(ss / (n - 1) / n);
    CHECK(mean / se > -1.645);
    CHECK(mean > 0.0);
}

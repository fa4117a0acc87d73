#include "advgen/pls.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace advgen {

const char* pls_name(PlsAlgorithm a) {
    switch (a) {
        case PlsAlgorithm::SimpleMax: return "simple_max";
        case PlsAlgorithm::RoundRobin: return "round_robin";
        case PlsAlgorithm::Ocba: return "ocba";
        case PlsAlgorithm::Tre: return "tre";
        case PlsAlgorithm::Mre: return "mre";
    }
    return "?";
}

PlsAlgorithm parse_pls(const std::string& name) {
    for (auto a : {PlsAlgorithm::SimpleMax, PlsAlgorithm::RoundRobin, PlsAlgorithm::Ocba, PlsAlgorithm::Tre,
                   PlsAlgorithm::Mre}) {
        if (name == pls_name(a)) return a;
    }
    throw SelectionError("unknown PLS algorithm '" + name + "'");
}

std::size_t simple_max(const std::vector<Evaluation>& history) {
    if (history.empty()) throw SelectionError("simple_max needs a nonempty history");
    std::size_t best = 0;
    for (std::size_t i = 1; i < history.size(); ++i)
        if (history[i].score > history[best].score) best = i;
    return best;
}

std::vector<Candidate> top_candidates(const std::vector<Evaluation>& history, std::size_t n) {
    std::vector<std::size_t> order(history.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return history[a].score > history[b].score; });
    order.resize(std::min(n, order.size()));
    std::vector<Candidate> out;
    out.reserve(order.size());
    for (auto i : order) out.push_back({i, history[i].vector, {}});
    return out;
}

namespace {

double ranking_mean(const Candidate& c) {
    return c.stats.count() ? c.stats.mean() : -std::numeric_limits<double>::infinity();
}

struct Sampler {
    std::vector<Candidate>& cands;
    const SampleFn& fn;
    std::size_t budget;
    std::size_t used = 0;

    std::size_t remaining() const { return budget - used; }

    void once(std::size_t i) {
        if (used >= budget) throw std::logic_error("selection exceeded its budget");
        ++used;
        if (auto x = fn(cands[i])) cands[i].stats.push(*x);
    }

    // Spend whatever is left cycling over `pool` in order.
    void cycle(const std::vector<std::size_t>& pool) {
        for (std::size_t k = 0; remaining() > 0; ++k) once(pool[k % pool.size()]);
    }
};

std::size_t best_of(const std::vector<Candidate>& cands, const std::vector<std::size_t>& pool) {
    std::size_t best = pool.front();
    for (auto i : pool)
        if (ranking_mean(cands[i]) > ranking_mean(cands[best])) best = i;
    return best;
}

std::vector<std::size_t> all_indices(std::size_t n) {
    std::vector<std::size_t> v(n);
    std::iota(v.begin(), v.end(), 0);
    return v;
}

/// `pool` ranked by cumulative mean, best first; the earlier index wins ties.
std::vector<std::size_t> ranked(const std::vector<Candidate>& cands, std::vector<std::size_t> pool) {
    std::stable_sort(pool.begin(), pool.end(),
                     [&](std::size_t a, std::size_t b) { return ranking_mean(cands[a]) > ranking_mean(cands[b]); });
    return pool;
}

void require_nonempty(const std::vector<Candidate>& c) {
    if (c.empty()) throw SelectionError("selection needs at least one candidate");
}

}  // namespace

Selection round_robin(std::vector<Candidate> candidates, std::size_t budget, const SampleFn& sample) {
    require_nonempty(candidates);
    if (budget < 1) throw SelectionError("round_robin needs a positive budget");
    Sampler s{candidates, sample, budget};
    const auto pool = all_indices(candidates.size());
    s.cycle(pool);
    Selection out;
    out.index = best_of(candidates, pool);
    out.evaluations = s.used;
    out.candidates = std::move(candidates);
    return out;
}

Selection mre_select(std::vector<Candidate> candidates, std::size_t budget, const SampleFn& sample) {
    require_nonempty(candidates);
    if (budget < candidates.size())
        throw SelectionError("mre needs a budget of at least one evaluation per candidate (" +
                             std::to_string(candidates.size()) + "), got " + std::to_string(budget));
    constexpr std::size_t kStopAt = 5;
    Sampler s{candidates, sample, budget};
    Selection out;
    auto survivors = all_indices(candidates.size());
    out.survivors_per_round.push_back(survivors.size());
    while (survivors.size() > kStopAt && s.remaining() >= survivors.size()) {
        for (auto i : survivors) s.once(i);
        const auto order = ranked(candidates, survivors);
        const std::size_t keep = survivors.size() - survivors.size() / 2;
        std::vector<std::size_t> next(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep));
        std::sort(next.begin(), next.end());
        survivors = std::move(next);
        out.survivors_per_round.push_back(survivors.size());
    }
    s.cycle(survivors);
    out.index = best_of(candidates, survivors);
    out.evaluations = s.used;
    out.candidates = std::move(candidates);
    return out;
}

Selection tre_select(std::vector<Candidate> candidates, std::size_t budget, const SampleFn& sample) {
    require_nonempty(candidates);
    const std::size_t n = candidates.size();
    if (budget < 2 * n)
        throw SelectionError("tre needs a budget of at least two evaluations per candidate (" +
                             std::to_string(2 * n) + "), got " + std::to_string(budget));
    Sampler s{candidates, sample, budget};
    Selection out;
    const auto pool = all_indices(n);
    out.survivors_per_round.push_back(n);
    for (int round = 0; round < 2; ++round)
        for (auto i : pool) s.once(i);
    auto order = ranked(candidates, pool);
    order.resize((n + 3) / 4);
    std::sort(order.begin(), order.end());
    out.survivors_per_round.push_back(order.size());
    s.cycle(order);
    out.index = best_of(candidates, order);
    out.evaluations = s.used;
    out.candidates = std::move(candidates);
    return out;
}

std::vector<double> ocba_allocation(const std::vector<Candidate>& candidates, std::size_t best, double total,
                                    const OcbaOptions& options) {
    const std::size_t n = candidates.size();
    auto sd = [&](std::size_t i) {
        const double var = candidates[i].stats.variance().value_or(0.0);
        return std::sqrt(std::max(var, options.variance_floor));
    };
    std::vector<double> w(n, 0.0);
    if (n == 1) return {total};
    const double best_mean = ranking_mean(candidates[best]);
    double tail = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (i == best) continue;
        const double gap = std::max(best_mean - ranking_mean(candidates[i]), options.gap_floor);
        w[i] = std::pow(sd(i) / gap, 2);
        tail += std::pow(w[i] / sd(i), 2);
    }
    w[best] = sd(best) * std::sqrt(tail);
    const double sum = std::accumulate(w.begin(), w.end(), 0.0);
    for (auto& x : w) x = x / sum * total;
    return w;
}

Selection ocba_select(std::vector<Candidate> candidates, std::size_t budget, const SampleFn& sample,
                      const OcbaOptions& options) {
    require_nonempty(candidates);
    if (options.delta_budget < 1) throw SelectionError("ocba delta_budget must be >= 1");
    const std::size_t n = candidates.size();
    if (budget < 2 * n && !options.allow_short_warmup)
        throw SelectionError("ocba warm-up needs two evaluations per candidate (" + std::to_string(2 * n) +
                             "), got " + std::to_string(budget));
    Sampler s{candidates, sample, budget};
    const auto pool = all_indices(n);
    for (int round = 0; round < 2; ++round)
        for (auto i : pool)
            if (s.remaining() > 0) s.once(i);

    while (s.remaining() > 0) {
        const std::size_t step = std::min(options.delta_budget, s.remaining());
        const std::size_t best = best_of(candidates, pool);
        const auto target = ocba_allocation(candidates, best, static_cast<double>(s.used + step), options);
        std::vector<double> deficit(n);
        double total_deficit = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            deficit[i] = std::max(0.0, target[i] - static_cast<double>(candidates[i].stats.count()));
            total_deficit += deficit[i];
        }
        std::vector<std::size_t> extra(n, 0);
        if (total_deficit <= 0.0) {
            extra[best] = step;
        } else {
            // Largest-remainder rounding of the step over the deficits.
            std::vector<double> frac(n);
            std::size_t given = 0;
            for (std::size_t i = 0; i < n; ++i) {
                const double share = deficit[i] / total_deficit * static_cast<double>(step);
                extra[i] = static_cast<std::size_t>(std::floor(share));
                frac[i] = share - static_cast<double>(extra[i]);
                given += extra[i];
            }
            auto order = pool;
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
            for (std::size_t k = 0; given < step; ++k, ++given) ++extra[order[k % n]];
        }
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < extra[i]; ++k) s.once(i);
    }
    Selection out;
    out.index = best_of(candidates, pool);
    out.evaluations = s.used;
    out.candidates = std::move(candidates);
    return out;
}

Selection run_selection(PlsAlgorithm algorithm, std::vector<Candidate> candidates, std::size_t budget,
                        const SampleFn& sample, const OcbaOptions& ocba) {
    switch (algorithm) {
        case PlsAlgorithm::SimpleMax: {
            require_nonempty(candidates);
            Selection out;
            out.index = 0;  // candidates arrive ranked by observed score
            out.candidates = std::move(candidates);
            return out;
        }
        case PlsAlgorithm::RoundRobin: return round_robin(std::move(candidates), budget, sample);
        case PlsAlgorithm::Ocba: return ocba_select(std::move(candidates), budget, sample, ocba);
        case PlsAlgorithm::Tre: return tre_select(std::move(candidates), budget, sample);
        case PlsAlgorithm::Mre: return mre_select(std::move(candidates), budget, sample);
    }
    throw SelectionError("unknown PLS algorithm");
}

// ---- Gaussian study ----

const char* study_name(StudyAlgorithm a) {
    switch (a) {
        case StudyAlgorithm::Oracle: return "oracle";
        case StudyAlgorithm::SimpleMax: return "simple_max";
        case StudyAlgorithm::RoundRobin: return "round_robin";
        case StudyAlgorithm::Ocba: return "ocba";
        case StudyAlgorithm::Tre: return "tre";
        case StudyAlgorithm::Mre: return "mre";
    }
    return "?";
}

StudyResult gaussian_study(const StudyConfig& cfg, std::size_t budget, StudyAlgorithm algorithm) {
    if (cfg.n_vars < 1 || cfg.trials < 1) throw std::invalid_argument("study needs n_vars >= 1 and trials >= 1");
    StudyResult result;
    const std::size_t n = cfg.n_vars;
    switch (algorithm) {
        case StudyAlgorithm::Mre: result.applicable = budget >= n; break;
        case StudyAlgorithm::Tre: result.applicable = budget >= 2 * n; break;
        case StudyAlgorithm::RoundRobin:
        case StudyAlgorithm::Ocba: result.applicable = budget >= 1; break;
        default: break;
    }
    if (!result.applicable) {
        result.mean = result.std_error = std::numeric_limits<double>::quiet_NaN();
        return result;
    }

    result.picks.reserve(cfg.trials);
    for (std::size_t t = 0; t < cfg.trials; ++t) {
        Rng means_rng = make_rng(mix_seed(cfg.seed) ^ (0x5eed0000ULL + t));
        std::vector<double> mu(n);
        for (auto& m : mu) m = uniform_real(means_rng, cfg.mean_low, cfg.mean_high);

        Rng noise = make_rng(mix_seed(mix_seed(cfg.seed) + t) ^ mix_seed(static_cast<std::uint64_t>(algorithm) * 1000003ULL + budget));
        std::normal_distribution<double> gauss(0.0, cfg.sigma);
        const SampleFn sample = [&](const Candidate& c) -> std::optional<double> { return mu[c.id] + gauss(noise); };

        std::vector<Candidate> cands(n);
        for (std::size_t i = 0; i < n; ++i) cands[i].id = i;

        std::size_t pick = 0;
        switch (algorithm) {
            case StudyAlgorithm::Oracle:
                pick = static_cast<std::size_t>(std::max_element(mu.begin(), mu.end()) - mu.begin());
                break;
            case StudyAlgorithm::SimpleMax: {
                // One observation per variable, as the optimizer would have seen it.
                std::vector<Evaluation> history(n);
                for (std::size_t i = 0; i < n; ++i) history[i].score = *sample(cands[i]);
                pick = simple_max(history);
                break;
            }
            case StudyAlgorithm::RoundRobin: pick = round_robin(std::move(cands), budget, sample).winner().id; break;
            case StudyAlgorithm::Tre: pick = tre_select(std::move(cands), budget, sample).winner().id; break;
            case StudyAlgorithm::Mre: pick = mre_select(std::move(cands), budget, sample).winner().id; break;
            case StudyAlgorithm::Ocba: {
                OcbaOptions opt;
                opt.delta_budget = cfg.ocba_delta;
                opt.allow_short_warmup = true;
                pick = ocba_select(std::move(cands), budget, sample, opt).winner().id;
                break;
            }
        }
        result.picks.push_back(mu[pick]);
    }
    const double count = static_cast<double>(result.picks.size());
    const double mean = std::accumulate(result.picks.begin(), result.picks.end(), 0.0) / count;
    double ss = 0.0;
    for (double p : result.picks) ss += (p - mean) * (p - mean);
    result.mean = mean;
    result.std_error = count > 1 ? std::sqrt(ss / (count - 1) / count) : 0.0;
    return result;
}

}  // namespace advgen

#include "advgen/optim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <stdexcept>

namespace advgen {

const Evaluation& History::best() const {
    if (evaluations.empty()) throw std::logic_error("empty history has no best evaluation");
    const Evaluation* best = &evaluations.front();
    for (const auto& e : evaluations)
        if (e.score > best->score) best = &e;
    return *best;
}

OptimizerBudget OptimizerBudget::evaluations(std::size_t n) {
    if (n == 0) throw std::invalid_argument("evaluation budget must be positive");
    OptimizerBudget b;
    b.max_evaluations_ = n;
    return b;
}

OptimizerBudget OptimizerBudget::wall_clock(std::chrono::milliseconds ms) {
    if (ms.count() <= 0) throw std::invalid_argument("wall-clock budget must be positive");
    OptimizerBudget b;
    b.wall_clock_ = ms;
    return b;
}

void GAConfig::check() const {
    if (population_size < 2) throw std::invalid_argument("GA population_size must be >= 2");
    if (mut_prob < 0.0 || mut_prob > 1.0) throw std::invalid_argument("GA mut_prob must lie in [0, 1]");
    if (elitism_count >= population_size) throw std::invalid_argument("GA elitism_count must be < population_size");
    if (tournament_size < 1) throw std::invalid_argument("GA tournament_size must be >= 1");
}

void EPSConfig::check() const {
    if (epsilon < 0.0 || epsilon > 1.0) throw std::invalid_argument("EPS epsilon must lie in [0, 1]");
    if (mutation_prob < 0.0 || mutation_prob > 1.0)
        throw std::invalid_argument("EPS mutation_prob must lie in [0, 1]");
    if (elite_capacity < 1) throw std::invalid_argument("EPS elite_capacity must be >= 1");
}

void BOConfig::check() const {
    if (warmup_samples < 1) throw std::invalid_argument("BO warmup_samples must be >= 1");
    if (surrogate_trees < 1) throw std::invalid_argument("BO surrogate_trees must be >= 1");
    if (candidate_pool < 1) throw std::invalid_argument("BO candidate_pool must be >= 1");
    if (lcb_kappa < 0.0) throw std::invalid_argument("BO lcb_kappa must be nonnegative");
    if (min_leaf < 1) throw std::invalid_argument("BO min_leaf must be >= 1");
}

// ---- operators ----

std::pair<TraceVector, TraceVector> two_point_crossover_at(const TraceVector& a, const TraceVector& b,
                                                           std::size_t p, std::size_t q) {
    if (a.size() != b.size()) throw ShapeError("crossover parents differ in length");
    if (!(p < q && q <= a.size())) throw std::invalid_argument("crossover needs cut points p < q <= N");
    TraceVector c1 = a;
    TraceVector c2 = b;
    for (std::size_t i = p; i < q; ++i) std::swap(c1[i], c2[i]);
    return {std::move(c1), std::move(c2)};
}

std::pair<TraceVector, TraceVector> two_point_crossover(const TraceVector& a, const TraceVector& b, Rng& rng) {
    if (a.size() != b.size()) throw ShapeError("crossover parents differ in length");
    if (a.size() < 2) throw ShapeError("crossover needs vectors of length >= 2");
    const auto n = static_cast<std::int64_t>(a.size());
    std::int64_t p = uniform_int(rng, 0, n);
    std::int64_t q = uniform_int(rng, 0, n);
    while (q == p) q = uniform_int(rng, 0, n);
    if (p > q) std::swap(p, q);
    return two_point_crossover_at(a, b, static_cast<std::size_t>(p), static_cast<std::size_t>(q));
}

TraceVector uniform_mutation(const TraceVector& v, const Bounds& bounds, double mut_prob, Rng& rng) {
    if (v.size() != bounds.size()) throw ShapeError("mutation vector does not match bounds");
    TraceVector out = v;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (bernoulli(rng, mut_prob)) out[i] = uniform_int(rng, bounds.lower[i], bounds.upper[i]);
    }
    return out;
}

// ---- elite set ----

EliteSet::EliteSet(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("elite set capacity must be >= 1");
}

void EliteSet::offer(const TraceVector& v, double score) {
    const std::size_t order = next_order_++;
    // Members stay sorted by score descending; an equal score ranks after existing ones.
    auto pos = std::find_if(members_.begin(), members_.end(),
                            [&](const Member& m) { return score > m.score; });
    if (static_cast<std::size_t>(pos - members_.begin()) >= capacity_) return;
    members_.insert(pos, Member{score, order, v});
    if (members_.size() > capacity_) members_.pop_back();
}

// ---- random forest ----

RandomForest::RandomForest(std::size_t trees, std::size_t min_leaf, std::uint64_t seed)
    : n_trees_(trees), min_leaf_(std::max<std::size_t>(1, min_leaf)), rng_(make_rng(seed)) {}

void RandomForest::fit(const std::vector<TraceVector>& x, const std::vector<double>& y) {
    if (x.empty() || x.size() != y.size()) throw std::invalid_argument("forest fit needs matching nonempty data");
    forest_.clear();
    forest_.reserve(n_trees_);
    const std::size_t n = x.size();
    std::vector<std::size_t> idx(n);
    for (std::size_t t = 0; t < n_trees_; ++t) {
        for (auto& i : idx) i = static_cast<std::size_t>(uniform_int(rng_, 0, static_cast<std::int64_t>(n) - 1));
        Tree tree;
        grow(tree, x, y, idx, 0, n, rng_);
        forest_.push_back(std::move(tree));
    }
}

int RandomForest::grow(Tree& tree, const std::vector<TraceVector>& x, const std::vector<double>& y,
                       std::vector<std::size_t>& idx, std::size_t begin, std::size_t end, Rng& rng) {
    const int id = static_cast<int>(tree.size());
    tree.push_back({});
    const std::size_t count = end - begin;
    double sum = 0.0;
    for (std::size_t i = begin; i < end; ++i) sum += y[idx[i]];
    tree[id].value = sum / static_cast<double>(count);

    const bool constant = std::all_of(idx.begin() + static_cast<std::ptrdiff_t>(begin),
                                      idx.begin() + static_cast<std::ptrdiff_t>(end),
                                      [&](std::size_t i) { return y[i] == y[idx[begin]]; });
    if (count < 2 * min_leaf_ || constant) return id;

    const std::size_t dims = x.front().size();
    std::vector<std::size_t> features(dims);
    std::iota(features.begin(), features.end(), 0);
    std::shuffle(features.begin(), features.end(), rng);
    features.resize(std::max<std::size_t>(1, (dims + 2) / 3));

    double best_gain = 0.0;
    int best_feature = -1;
    double best_threshold = 0.0;
    std::vector<std::size_t> order(idx.begin() + static_cast<std::ptrdiff_t>(begin),
                                   idx.begin() + static_cast<std::ptrdiff_t>(end));
    for (std::size_t f : features) {
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a][f] < x[b][f]; });
        double left_sum = 0.0;
        double left_sq = 0.0;
        double total_sq = 0.0;
        for (auto i : order) total_sq += y[i] * y[i];
        const double parent_sse = total_sq - sum * sum / static_cast<double>(count);
        for (std::size_t k = 0; k + 1 < count; ++k) {
            left_sum += y[order[k]];
            left_sq += y[order[k]] * y[order[k]];
            const std::size_t nl = k + 1;
            const std::size_t nr = count - nl;
            if (nl < min_leaf_ || nr < min_leaf_) continue;
            if (x[order[k]][f] == x[order[k + 1]][f]) continue;
            const double right_sum = sum - left_sum;
            const double right_sq = total_sq - left_sq;
            const double sse = (left_sq - left_sum * left_sum / static_cast<double>(nl)) +
                               (right_sq - right_sum * right_sum / static_cast<double>(nr));
            const double gain = parent_sse - sse;
            if (gain > best_gain + 1e-12) {
                best_gain = gain;
                best_feature = static_cast<int>(f);
                best_threshold = 0.5 * (static_cast<double>(x[order[k]][f]) + static_cast<double>(x[order[k + 1]][f]));
            }
        }
    }
    if (best_feature < 0) return id;

    const auto mid_it = std::partition(idx.begin() + static_cast<std::ptrdiff_t>(begin),
                                       idx.begin() + static_cast<std::ptrdiff_t>(end), [&](std::size_t i) {
                                           return static_cast<double>(x[i][static_cast<std::size_t>(best_feature)]) <=
                                                  best_threshold;
                                       });
    const auto mid = static_cast<std::size_t>(mid_it - idx.begin());
    const int left = grow(tree, x, y, idx, begin, mid, rng);
    const int right = grow(tree, x, y, idx, mid, end, rng);
    tree[id].feature = best_feature;
    tree[id].threshold = best_threshold;
    tree[id].left = left;
    tree[id].right = right;
    return id;
}

double RandomForest::predict_tree(const Tree& tree, const TraceVector& x) {
    int node = 0;
    while (tree[node].feature >= 0) {
        const auto& nd = tree[node];
        node = static_cast<double>(x[static_cast<std::size_t>(nd.feature)]) <= nd.threshold ? nd.left : nd.right;
    }
    return tree[node].value;
}

std::pair<double, double> RandomForest::predict(const TraceVector& x) const {
    if (forest_.empty()) throw std::logic_error("forest used before fit");
    double sum = 0.0;
    double sq = 0.0;
    for (const auto& tree : forest_) {
        const double p = predict_tree(tree, x);
        sum += p;
        sq += p * p;
    }
    const double n = static_cast<double>(forest_.size());
    const double mean = sum / n;
    return {mean, std::sqrt(std::max(0.0, sq / n - mean * mean))};
}

// ---- optimizers ----

namespace {

class RandomSearch final : public Optimizer {
public:
    RandomSearch(const Bounds& bounds, std::uint64_t seed) : bounds_(bounds), rng_(make_rng(seed)) {
        bounds_.check();
    }
    std::string name() const override { return "rg"; }
    TraceVector propose() override { return sample_uniform_vector(bounds_, rng_); }
    void observe(const TraceVector&, std::optional<double>) override {}

private:
    Bounds bounds_;
    Rng rng_;
};

class Genetic final : public Optimizer {
public:
    Genetic(const Bounds& bounds, const GAConfig& cfg, std::uint64_t seed)
        : bounds_(bounds), cfg_(cfg), rng_(make_rng(seed)) {
        bounds_.check();
        cfg_.check();
        for (std::size_t i = 0; i < cfg_.population_size; ++i) pending_.push_back(sample_uniform_vector(bounds_, rng_));
    }

    std::string name() const override { return "ga"; }

    TraceVector propose() override {
        if (pending_.empty()) breed();
        return pending_.front();
    }

    void observe(const TraceVector& v, std::optional<double> score) override {
        if (pending_.empty() || pending_.front() != v) throw std::logic_error("GA observed an unexpected vector");
        pending_.pop_front();
        generation_.push_back({v, score, next_order_++});
    }

private:
    struct Member {
        TraceVector vector;
        std::optional<double> score;
        std::size_t order;
    };

    static bool better(const Member& a, const Member& b) {
        if (a.score.has_value() != b.score.has_value()) return a.score.has_value();
        if (a.score && *a.score != *b.score) return *a.score > *b.score;
        return a.order < b.order;
    }

    const Member& tournament(const std::vector<const Member*>& scored) {
        const Member* winner = nullptr;
        for (std::size_t k = 0; k < cfg_.tournament_size; ++k) {
            const auto* m = scored[static_cast<std::size_t>(
                uniform_int(rng_, 0, static_cast<std::int64_t>(scored.size()) - 1))];
            if (!winner || better(*m, *winner)) winner = m;
        }
        return *winner;
    }

    void breed() {
        std::vector<Member> ranked = std::move(generation_);
        generation_.clear();
        std::stable_sort(ranked.begin(), ranked.end(), better);
        std::vector<const Member*> scored;
        for (const auto& m : ranked)
            if (m.score) scored.push_back(&m);

        // Elites carry over with their observed scores and are not re-evaluated.
        for (std::size_t i = 0; i < cfg_.elitism_count && i < scored.size(); ++i) generation_.push_back(*scored[i]);

        const std::size_t needed = cfg_.population_size - generation_.size();
        std::vector<TraceVector> children;
        while (children.size() < needed) {
            if (scored.empty()) {
                children.push_back(sample_uniform_vector(bounds_, rng_));
                continue;
            }
            const auto& a = tournament(scored).vector;
            const auto& b = tournament(scored).vector;
            auto [c1, c2] = a.size() >= 2 ? two_point_crossover(a, b, rng_) : std::make_pair(a, b);
            children.push_back(uniform_mutation(c1, bounds_, cfg_.mut_prob, rng_));
            if (children.size() < needed) children.push_back(uniform_mutation(c2, bounds_, cfg_.mut_prob, rng_));
        }
        pending_.assign(children.begin(), children.end());
    }

    Bounds bounds_;
    GAConfig cfg_;
    Rng rng_;
    std::deque<TraceVector> pending_;
    std::vector<Member> generation_;
    std::size_t next_order_ = 0;
};

class EpsilonGreedy final : public Optimizer {
public:
    EpsilonGreedy(const Bounds& bounds, const EPSConfig& cfg, std::uint64_t seed, ProposalTrace* trace)
        : bounds_(bounds), cfg_(cfg), rng_(make_rng(seed)), elite_(cfg.elite_capacity), trace_(trace) {
        bounds_.check();
        cfg_.check();
    }

    std::string name() const override { return "eps"; }

    TraceVector propose() override {
        const bool explore = elite_.empty() || bernoulli(rng_, cfg_.epsilon);
        if (trace_) {
            trace_->exploit.push_back(!explore);
            trace_->elite_sizes.push_back(elite_.size());
        }
        if (explore) return sample_uniform_vector(bounds_, rng_);
        const auto pick = static_cast<std::size_t>(uniform_int(rng_, 0, static_cast<std::int64_t>(elite_.size()) - 1));
        return uniform_mutation(elite_.at(pick), bounds_, cfg_.mutation_prob, rng_);
    }

    void observe(const TraceVector& v, std::optional<double> score) override {
        if (score) elite_.offer(v, *score);
    }

private:
    Bounds bounds_;
    EPSConfig cfg_;
    Rng rng_;
    EliteSet elite_;
    ProposalTrace* trace_;
};

class Bayesian final : public Optimizer {
public:
    Bayesian(const Bounds& bounds, const BOConfig& cfg, std::uint64_t seed, ProposalTrace* trace)
        : bounds_(bounds), cfg_(cfg), rng_(make_rng(seed)), trace_(trace) {
        bounds_.check();
        cfg_.check();
    }

    std::string name() const override { return "bo"; }

    TraceVector propose() override {
        const bool warm = proposals_++ < cfg_.warmup_samples;
        const bool degenerate =
            ys_.empty() || std::all_of(ys_.begin(), ys_.end(), [&](double y) { return y == ys_.front(); });
        if (warm || degenerate) {
            if (trace_) trace_->surrogate_used.push_back(false);
            return sample_uniform_vector(bounds_, rng_);
        }
        RandomForest forest(cfg_.surrogate_trees, cfg_.min_leaf, rng_());
        forest.fit(xs_, ys_);
        TraceVector best;
        double best_value = 0.0;
        for (std::size_t i = 0; i < cfg_.candidate_pool; ++i) {
            TraceVector c = sample_uniform_vector(bounds_, rng_);
            const auto [mean, sd] = forest.predict(c);
            // Minimizing LCB of the negated score is maximizing mean + kappa * sd.
            const double value = mean + cfg_.lcb_kappa * sd;
            if (best.empty() || value > best_value) {
                best_value = value;
                best = std::move(c);
            }
        }
        if (trace_) trace_->surrogate_used.push_back(true);
        return best;
    }

    void observe(const TraceVector& v, std::optional<double> score) override {
        if (!score) return;
        xs_.push_back(v);
        ys_.push_back(*score);
    }

private:
    Bounds bounds_;
    BOConfig cfg_;
    Rng rng_;
    ProposalTrace* trace_;
    std::size_t proposals_ = 0;
    std::vector<TraceVector> xs_;
    std::vector<double> ys_;
};

}  // namespace

std::unique_ptr<Optimizer> make_random_search(const Bounds& bounds, std::uint64_t seed) {
    return std::make_unique<RandomSearch>(bounds, seed);
}
std::unique_ptr<Optimizer> make_genetic(const Bounds& bounds, const GAConfig& cfg, std::uint64_t seed) {
    return std::make_unique<Genetic>(bounds, cfg, seed);
}
std::unique_ptr<Optimizer> make_epsilon_greedy(const Bounds& bounds, const EPSConfig& cfg, std::uint64_t seed) {
    return std::make_unique<EpsilonGreedy>(bounds, cfg, seed, nullptr);
}
std::unique_ptr<Optimizer> make_epsilon_greedy(const Bounds& bounds, const EPSConfig& cfg, std::uint64_t seed,
                                               ProposalTrace* trace) {
    return std::make_unique<EpsilonGreedy>(bounds, cfg, seed, trace);
}
std::unique_ptr<Optimizer> make_bayesian(const Bounds& bounds, const BOConfig& cfg, std::uint64_t seed) {
    return std::make_unique<Bayesian>(bounds, cfg, seed, nullptr);
}
std::unique_ptr<Optimizer> make_bayesian(const Bounds& bounds, const BOConfig& cfg, std::uint64_t seed,
                                         ProposalTrace* trace) {
    return std::make_unique<Bayesian>(bounds, cfg, seed, trace);
}

History run_optimizer(Optimizer& opt, const Evaluator& evaluator, const OptimizerBudget& budget) {
    History h;
    const auto start = std::chrono::steady_clock::now();
    auto exhausted = [&] {
        if (auto max = budget.max_evaluations()) return h.evaluator_calls >= *max;
        return std::chrono::steady_clock::now() - start >= *budget.wall_clock_limit();
    };
    while (!exhausted()) {
        TraceVector v = opt.propose();
        const auto outcome = evaluator(v);
        const std::size_t iteration = h.evaluator_calls++;
        if (outcome) {
            opt.observe(v, outcome->score);
            h.evaluations.push_back({std::move(v), outcome->score, outcome->repetitions, iteration});
        } else {
            opt.observe(v, std::nullopt);
            ++h.skipped;
        }
    }
    return h;
}

History run_rg(const Evaluator& evaluator, const Bounds& bounds, const OptimizerBudget& budget, std::uint64_t seed) {
    auto opt = make_random_search(bounds, seed);
    return run_optimizer(*opt, evaluator, budget);
}

History run_ga(const Evaluator& evaluator, const Bounds& bounds, const GAConfig& cfg,
               const OptimizerBudget& budget, std::uint64_t seed) {
    auto opt = make_genetic(bounds, cfg, seed);
    return run_optimizer(*opt, evaluator, budget);
}

History run_eps(const Evaluator& evaluator, const Bounds& bounds, const EPSConfig& cfg,
                const OptimizerBudget& budget, std::uint64_t seed) {
    auto opt = make_epsilon_greedy(bounds, cfg, seed);
    return run_optimizer(*opt, evaluator, budget);
}

History run_bo(const Evaluator& evaluator, const Bounds& bounds, const BOConfig& cfg,
               const OptimizerBudget& budget, std::uint64_t seed) {
    auto opt = make_bayesian(bounds, cfg, seed);
    return run_optimizer(*opt, evaluator, budget);
}

}  // namespace advgen

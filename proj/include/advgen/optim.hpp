#pragma once

// Budgeted black-box optimizers over integer trace vectors.
//
// Every optimizer is an ask/tell state machine: propose() hands out the next
// vector to evaluate and observe() feeds back its score (or nullopt when the
// evaluation failed and was skipped). run_optimizer() drives one against an
// evaluator until the budget runs out.

#include <chrono>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "advgen/env.hpp"
#include "advgen/random.hpp"

namespace advgen {

struct Evaluation {
    TraceVector vector;
    double score = 0.0;
    int repetitions = 1;
    std::size_t iteration = 0;  // evaluator call index, counting skipped calls
};

struct EvalOutcome {
    double score;
    int repetitions = 1;
};

/// Returns nullopt when the evaluation failed; the call still counts against the budget.
using Evaluator = std::function<std::optional<EvalOutcome>(const TraceVector&)>;

struct History {
    std::vector<Evaluation> evaluations;
    std::size_t evaluator_calls = 0;
    std::size_t skipped = 0;

    const Evaluation& best() const;
};

class OptimizerBudget {
public:
    static OptimizerBudget evaluations(std::size_t n);
    static OptimizerBudget wall_clock(std::chrono::milliseconds ms);

    bool counts_evaluations() const { return max_evaluations_.has_value(); }
    std::optional<std::size_t> max_evaluations() const { return max_evaluations_; }
    std::optional<std::chrono::milliseconds> wall_clock_limit() const { return wall_clock_; }

private:
    std::optional<std::size_t> max_evaluations_;
    std::optional<std::chrono::milliseconds> wall_clock_;
};

struct GAConfig {
    std::size_t population_size = 20;
    double mut_prob = 0.1;
    std::size_t elitism_count = 1;
    std::size_t tournament_size = 2;

    void check() const;
};

struct EPSConfig {
    double epsilon = 0.3;
    std::size_t elite_capacity = 10;
    double mutation_prob = 0.3;

    void check() const;
};

struct BOConfig {
    std::size_t surrogate_trees = 50;
    double lcb_kappa = 1.96;
    std::size_t warmup_samples = 20;
    std::size_t candidate_pool = 500;
    std::size_t min_leaf = 2;

    void check() const;
};

// ---- operators ----

/// Children for explicit cut points p < q in [0, N]: segment [p, q) is swapped.
std::pair<TraceVector, TraceVector> two_point_crossover_at(const TraceVector& a, const TraceVector& b,
                                                           std::size_t p, std::size_t q);
std::pair<TraceVector, TraceVector> two_point_crossover(const TraceVector& a, const TraceVector& b, Rng& rng);

TraceVector uniform_mutation(const TraceVector& v, const Bounds& bounds, double mut_prob, Rng& rng);

// ---- ask/tell optimizers ----

class Optimizer {
public:
    virtual ~Optimizer() = default;
    virtual std::string name() const = 0;
    virtual TraceVector propose() = 0;
    virtual void observe(const TraceVector& v, std::optional<double> score) = 0;
};

std::unique_ptr<Optimizer> make_random_search(const Bounds& bounds, std::uint64_t seed);
std::unique_ptr<Optimizer> make_genetic(const Bounds& bounds, const GAConfig& cfg, std::uint64_t seed);
std::unique_ptr<Optimizer> make_epsilon_greedy(const Bounds& bounds, const EPSConfig& cfg, std::uint64_t seed);
std::unique_ptr<Optimizer> make_bayesian(const Bounds& bounds, const BOConfig& cfg, std::uint64_t seed);

History run_optimizer(Optimizer& opt, const Evaluator& evaluator, const OptimizerBudget& budget);

History run_rg(const Evaluator& evaluator, const Bounds& bounds, const OptimizerBudget& budget, std::uint64_t seed);
History run_ga(const Evaluator& evaluator, const Bounds& bounds, const GAConfig& cfg,
               const OptimizerBudget& budget, std::uint64_t seed);
History run_eps(const Evaluator& evaluator, const Bounds& bounds, const EPSConfig& cfg,
                const OptimizerBudget& budget, std::uint64_t seed);
History run_bo(const Evaluator& evaluator, const Bounds& bounds, const BOConfig& cfg,
               const OptimizerBudget& budget, std::uint64_t seed);

// ---- introspection used by tests ----

/// Top-k by score, earlier entry wins ties. Entries are (score, insertion order, vector).
class EliteSet {
public:
    explicit EliteSet(std::size_t capacity);

    void offer(const TraceVector& v, double score);
    std::size_t size() const { return members_.size(); }
    std::size_t capacity() const { return capacity_; }
    bool empty() const { return members_.empty(); }
    const TraceVector& at(std::size_t i) const { return members_.at(i).vector; }
    double score_at(std::size_t i) const { return members_.at(i).score; }

private:
    struct Member {
        double score;
        std::size_t order;
        TraceVector vector;
    };
    std::size_t capacity_;
    std::size_t next_order_ = 0;
    std::vector<Member> members_;
};

/// Ensemble of regression trees with bootstrap resampling; predict() returns
/// the mean and the spread across trees.
class RandomForest {
public:
    RandomForest(std::size_t trees, std::size_t min_leaf, std::uint64_t seed);

    void fit(const std::vector<TraceVector>& x, const std::vector<double>& y);
    std::pair<double, double> predict(const TraceVector& x) const;

private:
    struct Node {
        int feature = -1;  // -1 marks a leaf
        double threshold = 0.0;
        int left = -1;
        int right = -1;
        double value = 0.0;
    };
    using Tree = std::vector<Node>;

    int grow(Tree& tree, const std::vector<TraceVector>& x, const std::vector<double>& y,
             std::vector<std::size_t>& idx, std::size_t begin, std::size_t end, Rng& rng);
    static double predict_tree(const Tree& tree, const TraceVector& x);

    std::size_t n_trees_;
    std::size_t min_leaf_;
    Rng rng_;
    std::vector<Tree> forest_;
};

/// Observer hooks for tests: every EPS proposal is tagged explore/exploit,
/// and BO reports whether the surrogate chose the proposal.
struct ProposalTrace {
    std::vector<bool> exploit;          // EPS: true when the proposal mutated an elite member
    std::vector<std::size_t> elite_sizes;
    std::vector<bool> surrogate_used;   // BO
};

std::unique_ptr<Optimizer> make_epsilon_greedy(const Bounds& bounds, const EPSConfig& cfg, std::uint64_t seed,
                                               ProposalTrace* trace);
std::unique_ptr<Optimizer> make_bayesian(const Bounds& bounds, const BOConfig& cfg, std::uint64_t seed,
                                         ProposalTrace* trace);

}  // namespace advgen

#pragma once

// Post-learning selection: spend a re-evaluation budget on the optimizer's
// top candidates to pick the one with the highest true mean score.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "advgen/env.hpp"
#include "advgen/optim.hpp"
#include "advgen/random.hpp"

namespace advgen {

/// Welford running mean/variance.
class RunningStats {
public:
    void push(double x) {
        ++count_;
        const double delta = x - mean_;
        mean_ += delta / static_cast<double>(count_);
        m2_ += delta * (x - mean_);
    }

    std::size_t count() const { return count_; }
    double mean() const { return mean_; }
    double m2() const { return m2_; }
    /// Sample variance; nullopt with fewer than two observations.
    std::optional<double> variance() const {
        if (count_ < 2) return std::nullopt;
        return m2_ / static_cast<double>(count_ - 1);
    }

private:
    std::size_t count_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

struct Candidate {
    std::size_t id = 0;
    TraceVector vector;
    RunningStats stats;
};

/// One noisy re-evaluation of a candidate. nullopt marks a failed run; it still consumes budget.
using SampleFn = std::function<std::optional<double>(const Candidate&)>;

class SelectionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct Selection {
    std::size_t index = 0;              // position in the input candidate list
    std::vector<Candidate> candidates;  // with PLS-phase statistics
    std::size_t evaluations = 0;        // sample calls consumed
    std::vector<std::size_t> survivors_per_round;  // MRE/TRE only

    const Candidate& winner() const { return candidates.at(index); }
};

enum class PlsAlgorithm { SimpleMax, RoundRobin, Ocba, Tre, Mre };

const char* pls_name(PlsAlgorithm a);
PlsAlgorithm parse_pls(const std::string& name);

/// Index of the highest observed score; earliest wins ties. Consumes no budget.
std::size_t simple_max(const std::vector<Evaluation>& history);

/// The n highest-scoring history entries as fresh candidates (ids are history indices).
std::vector<Candidate> top_candidates(const std::vector<Evaluation>& history, std::size_t n);

Selection round_robin(std::vector<Candidate> candidates, std::size_t budget, const SampleFn& sample);
Selection mre_select(std::vector<Candidate> candidates, std::size_t budget, const SampleFn& sample);
Selection tre_select(std::vector<Candidate> candidates, std::size_t budget, const SampleFn& sample);

struct OcbaOptions {
    std::size_t delta_budget = 10;
    double variance_floor = 1e-6;
    double gap_floor = 1e-6;
    /// Below 2 evaluations per candidate the warm-up is shortened to whatever the
    /// budget covers instead of failing. Only the Gaussian study uses this.
    bool allow_short_warmup = false;
};

Selection ocba_select(std::vector<Candidate> candidates, std::size_t budget, const SampleFn& sample,
                      const OcbaOptions& options = {});

/// Target allocation for a total of `total` evaluations given current statistics.
/// Exposed for tests; `best` is the index of the highest current mean.
std::vector<double> ocba_allocation(const std::vector<Candidate>& candidates, std::size_t best, double total,
                                    const OcbaOptions& options);

Selection run_selection(PlsAlgorithm algorithm, std::vector<Candidate> candidates, std::size_t budget,
                        const SampleFn& sample, const OcbaOptions& ocba = {});

// ---- Gaussian simulation study ----

enum class StudyAlgorithm { Oracle, SimpleMax, RoundRobin, Ocba, Tre, Mre };

const char* study_name(StudyAlgorithm a);

struct StudyConfig {
    std::size_t n_vars = 50;
    std::size_t trials = 2000;
    double sigma = 20.0;
    double mean_low = 0.0;
    double mean_high = 100.0;
    std::uint64_t seed = 1;
    std::size_t ocba_delta = 10;
};

struct StudyResult {
    double mean = 0.0;
    double std_error = 0.0;
    std::vector<double> picks;  // true mean of the selected variable, per trial
    bool applicable = true;     // false when the budget violates the algorithm's precondition
};

/// Trial t draws its true means from a stream that depends only on (seed, t), so
/// results for different algorithms and budgets are paired on the same instances.
StudyResult gaussian_study(const StudyConfig& cfg, std::size_t budget, StudyAlgorithm algorithm);

}  // namespace advgen

#ifndef CROWDMECH_SIMULATOR_HPP
#define CROWDMECH_SIMULATOR_HPP

#include <cstdint>
#include <vector>

#include "crowdmech/basic_mechanisms.hpp"
#include "crowdmech/cost_model.hpp"
#include "crowdmech/training_mechanism.hpp"

namespace crowdmech {

/**
 * SplitMix64: a tiny counter-based PRNG (Steele, Lea & Flood 2014). Each
 * draw advances the state by a fixed odd constant and scrambles it with two
 * xor-shift-multiply rounds. Passes BigCrush, has period 2^64, and is
 * reproducible across platforms, which is what the simulator needs; it is
 * not cryptographic.
 */
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1), using the top 53 bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Bernoulli(p) draw; p outside [0,1] saturates.
    bool bernoulli(double p) { return next_double() < p; }

    /// Uniform integer in [0, n). Requires n >= 1. Uses rejection to avoid
    /// modulo bias.
    std::uint64_t below(std::uint64_t n) {
        std::uint64_t threshold = (0ULL - n) % n;
        for (;;) {
            std::uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

  private:
    std::uint64_t state_;
};

enum class Mechanism { consensus, accuracy, training };

/**
 * One simulated deployment: a fixed-size worker population playing a fixed
 * stationary policy against one of the three validation mechanisms for a
 * fixed number of slots. Departing workers (probability 1 - continuation
 * each slot) are immediately replaced, so the population size is constant.
 *
 * For the consensus and accuracy mechanisms every worker stays in the
 * working state; for the training mechanism rejected workers are demoted to
 * the training state and must pass a training batch to return.
 */
struct SimConfig {
    Mechanism mechanism = Mechanism::training;
    ConsensusParams consensus;  // read when mechanism == consensus
    AccuracyParams accuracy;    // read when mechanism == accuracy
    TrainingParams training;    // read when mechanism == training; also
                                // supplies continuation/initial-state
                                // probabilities for the other two
    ActionPair policy;          // quality played in each state
    int population = 1000;      // concurrent workers, >= 1
    int horizon = 500;          // simulated slots, >= 1
    std::uint64_t seed = 1;
    int replications = 1;       // independent runs in replicate(), >= 1

    void validate() const;  // throws std::domain_error on bad ranges
};

/// Point estimate with its standard error.
struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
};

/**
 * Aggregates of one run (simulate) or averaged over independent runs
 * (replicate; standard errors are then across-run).
 *
 * discounted_utility estimates a fresh worker's expected lifetime utility,
 * where the per-slot survival probability doubles as the discount factor:
 * it averages realized lifetime utility sums over workers who entered in
 * the first half of the horizon (later entrants are censored). The
 * occupancy trace is the working-state fraction at the start of each slot;
 * tail_occupancy averages its second half.
 */
struct SimResult {
    Estimate work_accept_rate;       // accepted / submitted working tasks
    Estimate train_pass_rate;        // passed / completed training batches; NaN if none
    std::vector<double> occupancy_trace;
    Estimate tail_occupancy;
    Estimate cost_per_task;          // requester spend per working task
    Estimate mean_worker_utility;    // per-slot utility averaged over worker-slots
    Estimate discounted_utility;
};

/// One run with the given seed.
SimResult simulate(const SimConfig& cfg, const CostModel& c);

/// cfg.replications independent runs with seeds cfg.seed, cfg.seed + 1, ...;
/// means and across-run standard errors. The occupancy trace is averaged
/// pointwise.
SimResult replicate(const SimConfig& cfg, const CostModel& c);

}  // namespace crowdmech

#endif  // CROWDMECH_SIMULATOR_HPP

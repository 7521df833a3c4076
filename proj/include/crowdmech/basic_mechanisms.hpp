#ifndef CROWDMECH_BASIC_MECHANISMS_HPP
#define CROWDMECH_BASIC_MECHANISMS_HPP

#include <vector>

#include "crowdmech/cost_model.hpp"

namespace crowdmech {

/**
 * Reward-consensus mechanism: each task goes to `peers + 1` workers and a
 * worker is paid `reward` iff their solution matches the majority solution.
 * `peers` must be even and at least 2; utilities are computed with exact
 * binomial coefficients, so `peers` is capped at 20.
 */
struct ConsensusParams {
    int peers = 2;        // additional workers per task; even, >= 2
    double reward = 0.0;  // payment per accepted solution, >= 0

    void validate() const;
};

/**
 * Reward-accuracy mechanism: each submission is spot-checked with
 * probability `sampling_prob` at cost `validation_cost`; the check flips
 * the accept/reject verdict with probability `error_prob`. Unchecked
 * submissions are paid unconditionally.
 */
struct AccuracyParams {
    double sampling_prob = 0.0;    // in [0, 1]
    double reward = 0.0;           // >= 0
    double error_prob = 0.0;       // in [0, 0.5)
    double validation_cost = 0.0;  // >= 0

    void validate() const;

    /// Acceptance probability of a quality-q submission.
    double accept_prob(double q) const;
};

/// Minimum-cost summary for a basic mechanism. `peers` is meaningful for
/// the consensus report, `sampling_prob` for the accuracy report.
struct CostReport {
    double mechanism_cost = 0.0;
    double reward = 0.0;
    double sampling_prob = 0.0;
    int peers = 0;
    bool achieves_q1 = false;
};

/// Expected utility of a worker producing quality q while every other worker
/// in the group produces quality q_tilde.
double utility_consensus(double q, double q_tilde, const ConsensusParams& p,
                         const CostModel& c);

/// Whether all workers choosing quality 1 is a symmetric Nash equilibrium,
/// i.e. reward >= marginal_cost(1).
bool is_sne_consensus_q1(const ConsensusParams& p, const CostModel& c);

/**
 * All verified symmetric equilibria of the 3-worker consensus mechanism in
 * (0, 1], ascending. Candidates are the roots of
 *     reward * (2q - q^2) = marginal_cost(q)
 * located by a sign-change scan plus bisection; each candidate is kept only
 * if it survives a best-response check against itself on a fine action grid.
 * Quality 1 is included whenever reward >= marginal_cost(1).
 */
std::vector<double> consensus_equilibria(double reward, const CostModel& c);

/// Highest verified symmetric equilibrium quality (0 when none exists).
double equilibrium_consensus(double reward, const CostModel& c);

/// Requester expenditure per task: (peers + 1) * reward.
double mechanism_cost_consensus(const ConsensusParams& p);

/// Cheapest consensus configuration that still makes quality 1 an
/// equilibrium: 2 peers and reward = marginal_cost(1).
CostReport min_cost_consensus(const CostModel& c);

/// Expected utility of a worker producing quality q under spot-checking.
double utility_accuracy(double q, const AccuracyParams& p, const CostModel& c);

/// Worker's utility-maximizing quality (argmax of the concave utility).
double optimal_action_accuracy(const AccuracyParams& p, const CostModel& c);

/// Expected requester expenditure per task: (1 - sampling_prob * error_prob)
/// * reward + sampling_prob * validation_cost.
double mechanism_cost_accuracy(const AccuracyParams& p);

/**
 * Cheapest spot-check configuration for which quality 1 is the worker's best
 * response. The constrained problem
 *     min (1 - a*e) r + a*d   s.t.  a r (1 - 2e) >= marginal_cost(1), a <= 1
 * has the closed-form solution
 *     a* = sqrt(m1 / ((1-2e) d)), r* = sqrt(m1 d / (1-2e))   if d >= m1/(1-2e)
 *     a* = 1,                     r* = m1 / (1-2e)           otherwise
 * with m1 = marginal_cost(1).
 */
CostReport min_cost_accuracy(double validation_cost, double error_prob,
                             const CostModel& c);

}  // namespace crowdmech

#endif  // CROWDMECH_BASIC_MECHANISMS_HPP

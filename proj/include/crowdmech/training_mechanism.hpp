#ifndef CROWDMECH_TRAINING_MECHANISM_HPP
#define CROWDMECH_TRAINING_MECHANISM_HPP

#include <utility>
#include <vector>

#include "crowdmech/cost_model.hpp"

namespace crowdmech {

/**
 * Parameters of the training-gated mechanism.
 *
 * A worker is either in the working state, where each task is validated by
 * 3-worker consensus with probability 1 - accuracy_fraction and spot-checked
 * with probability accuracy_fraction * work_sampling_prob, or in the training
 * state, where they must complete a batch of unpaid training tasks to regain
 * access to paid work. Rejected working-state solutions demote the worker to
 * training. Workers leave the system with probability 1 - continuation_prob
 * per slot and are replaced by fresh workers placed at the working state with
 * probability initial_work_prob.
 */
struct TrainingParams {
    double accuracy_fraction = 0.0;  // share of working tasks spot-checked instead of consensus-validated, in [0,1]
    double work_sampling_prob = 0.0; // spot-check sampling probability at the working state, in [0,1]
    double reward = 0.0;             // payment per accepted working-state task, >= 0
    double train_eval_prob = 0.0;    // probability a training batch is evaluated, in [0,1]
    int training_tasks = 1;          // batch size at the training state, >= 1
    int pass_threshold = 1;          // required correct solutions; must equal training_tasks
    double continuation_prob = 0.9;  // per-slot survival probability, in (0,1)
    double error_prob = 0.0;         // validation error probability, in [0, 0.5)
    double validation_cost = 0.0;    // cost of one spot-check / training-task evaluation, >= 0
    double budget_ratio = 1.0;       // allowed training-to-working validation cost ratio, > 0
    double initial_work_prob = 1.0;  // probability a fresh worker starts at the working state, in [0,1]

    void validate() const;  // throws std::domain_error on any violated range
};

/// Stationary policy of a worker: one quality per state.
struct ActionPair {
    double q_work = 0.0;
    double q_train = 0.0;
};

/// Long-term expected utilities, one per state.
struct UtilityPair {
    double work = 0.0;
    double train = 0.0;
};

/// Outcome of the symmetric-equilibrium check for a candidate action pair.
struct EquilibriumReport {
    ActionPair action;              // the candidate
    bool is_sne = false;
    UtilityPair utilities;          // long-term utilities when everyone plays the candidate
    ActionPair best_response;       // a deviating worker's optimal pair
    // Value lost at the working state by deviating to (q_work, candidate
    // q_train): pairs of (q_work, loss) over the action grid.
    std::vector<std::pair<double, double>> utility_loss_curve;
};

/// Probability that a quality-q_w working-state solution is accepted when
/// the other workers submit quality q_tilde_w.
double p_work_accept(double q_tilde_w, double q_w, const TrainingParams& p);

/// Probability that a worker producing quality q_t training solutions is
/// admitted to the working state after one training batch.
double p_train_pass(double q_t, const TrainingParams& p);

/// Per-slot utilities: reward * p_work_accept - cost at the working state,
/// minus the whole batch's cost at the training state.
UtilityPair immediate_utilities(double q_tilde_w, const ActionPair& a,
                                const TrainingParams& p, const CostModel& c);

/// Long-term expected utilities of a worker holding the pair `a` fixed while
/// others play q_tilde_w, from the exact 2x2 linear solve of the recursive
/// utility equations.
UtilityPair long_term_utilities(double q_tilde_w, const ActionPair& a,
                                const TrainingParams& p, const CostModel& c);

/// Working-minus-training long-term utility, via the closed form
/// (u_work - u_train) / (1 + delta * (p_pass - p_accept)).
double utility_gap(double q_tilde_w, const ActionPair& a,
                   const TrainingParams& p, const CostModel& c);

/// Diagnostic record of one value-iteration solve.
struct ValueIterationTrace {
    std::vector<double> sup_changes;  // sup-norm value change per iteration
    double value_work = 0.0;          // converged optimal state values
    double value_train = 0.0;
};

/**
 * Optimal stationary action pair of a single worker facing opponents who
 * play q_tilde_w, computed by value iteration over a uniform action grid of
 * grid_n + 1 points per state. Iterates until the sup-norm change drops
 * below 1e-9 (or below the representable resolution of the value scale,
 * whichever is larger). Ties between grid actions break toward the higher
 * quality. If `trace` is non-null it receives convergence diagnostics.
 */
ActionPair best_response(double q_tilde_w, const TrainingParams& p,
                         const CostModel& c, int grid_n = 100,
                         ValueIterationTrace* trace = nullptr);

/**
 * Three-step symmetric-equilibrium check for a candidate pair: fix everyone
 * at the candidate, solve the deviator's best response, and compare. The
 * working action must match within one grid step; the training action must
 * attain the optimal training-state value (exact ties allowed). Also fills
 * the working-state utility-loss curve for deviations (q_work, candidate
 * q_train).
 */
EquilibriumReport verify_sne(const ActionPair& a, const TrainingParams& p,
                             const CostModel& c, int grid_n = 100);

/**
 * Smallest training-batch size guaranteeing that quality 1 at the working
 * state is a symmetric equilibrium for the given working-state parameters
 * (train_eval_prob and training_tasks in `p` are ignored). Clamped below at
 * 1. Throws std::domain_error when accuracy_fraction = 1 and
 * work_sampling_prob = 0, since then no solution is ever validated and no
 * finite batch works.
 */
int min_training_tasks(const TrainingParams& p, const CostModel& c);

/// Largest training evaluation probability that keeps expected training
/// validation spending within budget_ratio times the working-state
/// mechanism cost, capped at 1 (train_eval_prob in `p` is ignored).
double max_training_sampling(const TrainingParams& p);

/// Upper bound on the requester's per-task cost at the quality-1
/// equilibrium: (1 + budget_ratio) * working-state mechanism cost.
/// Throws std::domain_error if train_eval_prob exceeds
/// max_training_sampling(p).
double cost_upper_bound(const TrainingParams& p);

/// Minimum working/training utility gap required for quality 1 to be a
/// working-state equilibrium. Same domain restriction as
/// min_training_tasks.
double equilibrium_gap_requirement(const TrainingParams& p, const CostModel& c);

/**
 * Completes a mechanism from freely chosen working-state parameters:
 * training_tasks = min_training_tasks, train_eval_prob =
 * max_training_sampling, pass_threshold = training_tasks,
 * initial_work_prob = 1.
 */
TrainingParams design_mechanism(double accuracy_fraction,
                                double work_sampling_prob, double reward,
                                double budget_ratio, double continuation_prob,
                                double error_prob, double validation_cost,
                                const CostModel& c);

/// Long-run probability of occupying the working state, with all workers at
/// the quality-1 equilibrium with training action q_hat_t.
struct StationaryDistribution {
    double exact = 0.0;        // fixed point of the occupancy update
    double lower_bound = 0.0;  // closed-form bound independent of q_hat_t
};

StationaryDistribution stationary_working_prob(const TrainingParams& p,
                                               double q_hat_t);

/// One step of the population occupancy update at the quality-1 equilibrium;
/// iterating from initial_work_prob converges to the exact stationary value.
double working_prob_step(double pi_n, const TrainingParams& p, double q_hat_t);

}  // namespace crowdmech

#endif  // CROWDMECH_TRAINING_MECHANISM_HPP

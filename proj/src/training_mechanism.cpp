#include "crowdmech/training_mechanism.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace crowdmech {

namespace {

void require_prob(double x, const char* name) {
    if (!(x >= 0.0 && x <= 1.0)) {
        throw std::domain_error(std::string(name) + " must lie in [0, 1]");
    }
}

// Probability that at least one of two quality-q_tilde peer solutions is
// acceptable, i.e. that an acceptable own solution finds its consensus
// majority: q_tilde^2 + 2 q_tilde (1 - q_tilde).
double consensus_match_prob(double q_tilde) {
    return (2.0 - q_tilde) * q_tilde;
}

// Effective validation channel width at quality 1: how strongly the
// acceptance probability responds to own quality.
double accept_slope(const TrainingParams& p) {
    return (1.0 - p.accuracy_fraction) +
           p.accuracy_fraction * p.work_sampling_prob * (1.0 - 2.0 * p.error_prob);
}

// Per-task spending cap base: expected working-state validation cost per
// task when everyone produces quality 1 (3 consensus rewards on the
// consensus share, reward + spot-check costs on the accuracy share).
double working_cost_base(const TrainingParams& p) {
    return 3.0 * p.reward * (1.0 - p.accuracy_fraction) +
           p.accuracy_fraction *
               ((1.0 - p.work_sampling_prob * p.error_prob) * p.reward +
                p.work_sampling_prob * p.validation_cost);
}

}  // namespace

void TrainingParams::validate() const {
    require_prob(accuracy_fraction, "accuracy fraction");
    require_prob(work_sampling_prob, "working-state sampling probability");
    require_prob(train_eval_prob, "training evaluation probability");
    require_prob(initial_work_prob, "initial working-state probability");
    if (!(reward >= 0.0)) {
        throw std::domain_error("reward must be nonnegative");
    }
    if (training_tasks < 1) {
        throw std::domain_error("training batch size must be at least 1");
    }
    if (pass_threshold != training_tasks) {
        throw std::domain_error("pass threshold must equal the training batch size");
    }
    if (!(continuation_prob > 0.0 && continuation_prob < 1.0)) {
        throw std::domain_error("continuation probability must lie strictly in (0, 1)");
    }
    if (!(error_prob >= 0.0 && error_prob < 0.5)) {
        throw std::domain_error("validation error probability must lie in [0, 0.5)");
    }
    if (!(validation_cost >= 0.0)) {
        throw std::domain_error("validation cost must be nonnegative");
    }
    if (!(budget_ratio > 0.0)) {
        throw std::domain_error("training budget ratio must be positive");
    }
}

double p_work_accept(double q_tilde_w, double q_w, const TrainingParams& p) {
    p.validate();
    require_quality(q_tilde_w);
    require_quality(q_w);
    const double consensus = q_w * consensus_match_prob(q_tilde_w);
    const double sampled =
        (1.0 - 2.0 * p.error_prob) * q_w + p.error_prob;
    return std::clamp((1.0 - p.accuracy_fraction) * consensus +
                          p.accuracy_fraction * (1.0 - p.work_sampling_prob) +
                          p.accuracy_fraction * p.work_sampling_prob * sampled,
                      0.0, 1.0);
}

double p_train_pass(double q_t, const TrainingParams& p) {
    p.validate();
    require_quality(q_t);
    const double per_task = (1.0 - 2.0 * p.error_prob) * q_t + p.error_prob;
    return std::clamp((1.0 - p.train_eval_prob) +
                          p.train_eval_prob * std::pow(per_task, p.training_tasks),
                      0.0, 1.0);
}

UtilityPair immediate_utilities(double q_tilde_w, const ActionPair& a,
                                const TrainingParams& p, const CostModel& c) {
    UtilityPair u;
    u.work = p.reward * p_work_accept(q_tilde_w, a.q_work, p) - c.cost(a.q_work);
    u.train = -static_cast<double>(p.training_tasks) * c.cost(a.q_train);
    return u;
}

UtilityPair long_term_utilities(double q_tilde_w, const ActionPair& a,
                                const TrainingParams& p, const CostModel& c) {
    const UtilityPair u = immediate_utilities(q_tilde_w, a, p, c);
    const double accept = p_work_accept(q_tilde_w, a.q_work, p);
    const double pass = p_train_pass(a.q_train, p);
    const double delta = p.continuation_prob;
    const double det = (1.0 - delta) * (1.0 + delta * (pass - accept));
    assert(det > 0.0);  // holds for any delta in (0,1) and probabilities in [0,1]
    UtilityPair result;
    result.work =
        ((1.0 - delta + delta * pass) * u.work + delta * (1.0 - accept) * u.train) /
        det;
    result.train =
        (delta * pass * u.work + (1.0 - delta * accept) * u.train) / det;
    return result;
}

double utility_gap(double q_tilde_w, const ActionPair& a,
                   const TrainingParams& p, const CostModel& c) {
    const UtilityPair u = immediate_utilities(q_tilde_w, a, p, c);
    const double accept = p_work_accept(q_tilde_w, a.q_work, p);
    const double pass = p_train_pass(a.q_train, p);
    return (u.work - u.train) /
           (1.0 + p.continuation_prob * (pass - accept));
}

ActionPair best_response(double q_tilde_w, const TrainingParams& p,
                         const CostModel& c, int grid_n,
                         ValueIterationTrace* trace) {
    p.validate();
    require_quality(q_tilde_w);
    if (grid_n < 2) {
        throw std::domain_error("action grid needs at least 3 points");
    }
    const double delta = p.continuation_prob;
    const int n = grid_n + 1;

    // Per-action immediate utilities and transition probabilities.
    std::vector<double> u_work(n), acc(n), u_train(n), pass(n);
    for (int i = 0; i < n; ++i) {
        const double q = static_cast<double>(i) / grid_n;
        acc[i] = p_work_accept(q_tilde_w, q, p);
        u_work[i] = p.reward * acc[i] - c.cost(q);
        pass[i] = p_train_pass(q, p);
        u_train[i] = -static_cast<double>(p.training_tasks) * c.cost(q);
    }

    constexpr double kTol = 1e-9;
    const int max_iters = static_cast<int>(
        10.0 * std::ceil(1.0 / (1.0 - delta)) * std::log(1.0 / kTol)) + 1;

    double v_work = 0.0, v_train = 0.0;
    int best_work = 0, best_train = 0;
    if (trace) trace->sup_changes.clear();
    bool converged = false;
    for (int iter = 0; iter < max_iters; ++iter) {
        double next_work = -std::numeric_limits<double>::infinity();
        double next_train = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i) {  // ascending: >= keeps the higher-quality tie
            const double qw = u_work[i] + delta * (acc[i] * v_work +
                                                   (1.0 - acc[i]) * v_train);
            if (qw >= next_work) {
                next_work = qw;
                best_work = i;
            }
            const double qt = u_train[i] + delta * (pass[i] * v_work +
                                                    (1.0 - pass[i]) * v_train);
            if (qt >= next_train) {
                next_train = qt;
                best_train = i;
            }
        }
        const double change =
            std::max(std::abs(next_work - v_work), std::abs(next_train - v_train));
        if (trace) trace->sup_changes.push_back(change);
        v_work = next_work;
        v_train = next_train;
        // Below the nominal tolerance, or below what the value scale can
        // even represent (the fixed point may sit between representable
        // doubles when values are large).
        const double scale = std::max({1.0, std::abs(v_work), std::abs(v_train)});
        if (change < std::max(kTol, 4.0 * std::numeric_limits<double>::epsilon() * scale)) {
            converged = true;
            break;
        }
    }
    if (!converged) {
        throw std::runtime_error("value iteration failed to converge");
    }
    if (trace) {
        trace->value_work = v_work;
        trace->value_train = v_train;
    }
    return ActionPair{static_cast<double>(best_work) / grid_n,
                      static_cast<double>(best_train) / grid_n};
}

EquilibriumReport verify_sne(const ActionPair& a, const TrainingParams& p,
                             const CostModel& c, int grid_n) {
    require_quality(a.q_work);
    require_quality(a.q_train);
    ValueIterationTrace trace;
    EquilibriumReport report;
    report.action = a;
    report.best_response = best_response(a.q_work, p, c, grid_n, &trace);
    report.utilities = long_term_utilities(a.q_work, a, p, c);

    const double delta = p.continuation_prob;
    // Value of playing a.q_train at the training state against the
    // deviator's optimal continuation; ties with the optimum are allowed.
    const double pass = p_train_pass(a.q_train, p);
    const double candidate_train_value =
        -static_cast<double>(p.training_tasks) * c.cost(a.q_train) +
        delta * (pass * trace.value_work + (1.0 - pass) * trace.value_train);
    const double scale =
        std::max({1.0, std::abs(trace.value_work), std::abs(trace.value_train)});
    const bool work_matches =
        std::abs(report.best_response.q_work - a.q_work) <= 1.0 / grid_n + 1e-12;
    const bool train_matches =
        candidate_train_value >= trace.value_train - 1e-7 * scale;
    report.is_sne = work_matches && train_matches;

    report.utility_loss_curve.reserve(grid_n + 1);
    const double base = report.utilities.work;
    for (int i = 0; i <= grid_n; ++i) {
        const double q = static_cast<double>(i) / grid_n;
        const double dev =
            long_term_utilities(a.q_work, ActionPair{q, a.q_train}, p, c).work;
        report.utility_loss_curve.emplace_back(q, base - dev);
    }
    return report;
}

namespace {

// Shared precondition of the batch-size bound: the working state must have
// some validation channel that responds to quality.
double require_accept_slope(const TrainingParams& p) {
    const double slope = accept_slope(p);
    if (!(slope > 0.0)) {
        throw std::domain_error(
            "no working-state validation channel: all tasks are spot-check "
            "tasks with zero sampling probability, so quality is never "
            "observed and no training batch size can enforce it");
    }
    return slope;
}

}  // namespace

int min_training_tasks(const TrainingParams& p, const CostModel& c) {
    p.validate();
    const double slope = require_accept_slope(p);
    const double delta = p.continuation_prob;
    const double leak = p.accuracy_fraction * p.work_sampling_prob * p.error_prob;
    const double bound =
        ((1.0 + delta * leak) * c.marginal_cost(1.0) / (delta * slope) -
         (delta + 1.0) / delta * p.reward + c.cost(1.0)) /
        c.cost(0.0);
    if (bound >= 1e9) {
        throw std::overflow_error("required training batch size exceeds 1e9");
    }
    // The -1e-9 absorbs float noise when the bound is an exact integer.
    const double n = std::ceil(bound - 1e-9);
    return n < 1.0 ? 1 : static_cast<int>(n);
}

double equilibrium_gap_requirement(const TrainingParams& p, const CostModel& c) {
    p.validate();
    const double slope = require_accept_slope(p);
    const double delta = p.continuation_prob;
    return c.marginal_cost(1.0) / (delta * slope) - p.reward / delta;
}

double max_training_sampling(const TrainingParams& p) {
    p.validate();
    const double base = working_cost_base(p);
    const double eval_spend = p.accuracy_fraction * p.work_sampling_prob *
                              p.error_prob *
                              static_cast<double>(p.training_tasks) *
                              p.validation_cost;
    if (eval_spend == 0.0) return 1.0;  // demotion never costs anything at quality 1
    const double fail_all = std::pow(p.error_prob, p.training_tasks);
    const double bound = p.budget_ratio * base /
                         (p.budget_ratio * (1.0 - fail_all) * base + eval_spend);
    return std::min(1.0, bound);
}

double cost_upper_bound(const TrainingParams& p) {
    p.validate();
    const double cap = max_training_sampling(p);
    if (p.train_eval_prob > cap + 1e-12) {
        throw std::domain_error(
            "training evaluation probability exceeds the spending cap "
            "implied by the budget ratio");
    }
    return (1.0 + p.budget_ratio) * working_cost_base(p);
}

TrainingParams design_mechanism(double accuracy_fraction,
                                double work_sampling_prob, double reward,
                                double budget_ratio, double continuation_prob,
                                double error_prob, double validation_cost,
                                const CostModel& c) {
    TrainingParams p;
    p.accuracy_fraction = accuracy_fraction;
    p.work_sampling_prob = work_sampling_prob;
    p.reward = reward;
    p.continuation_prob = continuation_prob;
    p.error_prob = error_prob;
    p.validation_cost = validation_cost;
    p.budget_ratio = budget_ratio;
    p.initial_work_prob = 1.0;
    p.training_tasks = min_training_tasks(p, c);
    p.pass_threshold = p.training_tasks;
    p.train_eval_prob = max_training_sampling(p);
    return p;
}

StationaryDistribution stationary_working_prob(const TrainingParams& p,
                                               double q_hat_t) {
    p.validate();
    require_quality(q_hat_t);
    const double delta = p.continuation_prob;
    const double accept = p_work_accept(1.0, 1.0, p);
    const double pass = p_train_pass(q_hat_t, p);
    const double inflow = (1.0 - delta) * p.initial_work_prob;
    StationaryDistribution out;
    out.exact = (inflow + delta * pass) / (1.0 - delta * (accept - pass));
    const double leak = p.accuracy_fraction * p.work_sampling_prob * p.error_prob;
    out.lower_bound =
        (inflow + delta * (1.0 - p.train_eval_prob)) /
        (1.0 - delta + delta * leak + delta * (1.0 - p.train_eval_prob));
    return out;
}

double working_prob_step(double pi_n, const TrainingParams& p, double q_hat_t) {
    p.validate();
    require_quality(q_hat_t);
    require_prob(pi_n, "working-state occupancy");
    const double delta = p.continuation_prob;
    const double accept = p_work_accept(1.0, 1.0, p);
    const double pass = p_train_pass(q_hat_t, p);
    return delta * (accept - pass) * pi_n + (1.0 - delta) * p.initial_work_prob +
           delta * pass;
}

}  // namespace crowdmech

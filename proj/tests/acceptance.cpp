// End-to-end acceptance checks for the mechanism analysis library. Each
// criterion prints one [PASS]/[FAIL] line; the process exits nonzero if any
// criterion fails. Oracles are independent of the code under test: analytic
// formulas evaluated in place, brute-force grid searches, finite-horizon
// iteration, and the Monte Carlo simulator.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "crowdmech/basic_mechanisms.hpp"
#include "crowdmech/cost_model.hpp"
#include "crowdmech/simulator.hpp"
#include "crowdmech/training_mechanism.hpp"

using namespace crowdmech;

namespace {

struct Check {
    bool ok = true;
    std::string detail;

    void expect(bool cond, const std::string& msg) {
        if (!cond && ok) {
            ok = false;
            detail = msg;
        }
    }

    void expect_near(double got, double want, double tol, const std::string& what) {
        if (!(std::abs(got - want) <= tol)) {
            std::ostringstream ss;
            ss << what << ": got " << got << ", want " << want << " +/- " << tol;
            expect(false, ss.str());
        }
    }

    // Simulator statistic against its analytic target, within three
    // across-replication standard errors (plus a tiny floor for exact cases).
    void expect_stat(const Estimate& got, double want, const std::string& what) {
        if (!(std::abs(got.value - want) <= 3.0 * got.std_error + 1e-9)) {
            std::ostringstream ss;
            ss << what << ": got " << got.value << " +/- " << got.std_error
               << ", want " << want;
            expect(false, ss.str());
        }
    }
};

void criterion_consensus_threshold(Check& chk) {
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    for (double lam : {0.5, 1.0, 2.0}) {
        QuadraticCost c(lam);
        const double m1 = 2.0 / (lam + 1.0);
        for (int k = 0; k <= 200; ++k) {
            const double r = m1 + (k - 100) * 1e-3;
            const bool full = equilibrium_consensus(r, c) == 1.0;
            const bool funded = r >= m1;
            if (full != funded) {
                std::ostringstream ss;
                ss << "lambda " << lam << ", r " << r << ": full-quality "
                   << full << " but reward-covers-marginal-cost " << funded;
                chk.expect(false, ss.str());
                return;
            }
        }
    }
    const double secs = std::chrono::duration<double>(clock::now() - t0).count();
    chk.expect(secs < 1.0, "threshold sweep exceeded 1 s");
}

void criterion_consensus_roots(Check& chk) {
    QuadraticCost c(1.0);
    const std::vector<double> roots = consensus_equilibria(1.0, c);
    // Quadratic-formula oracle for r = 1, lambda = 1:
    // 2q^2 - 3q + 1 = 0 has roots (3 +/- 1)/4.
    chk.expect(roots.size() == 2, "expected exactly two equilibria");
    if (roots.size() == 2) {
        chk.expect_near(roots[0], 0.5, 1e-6, "lower equilibrium");
        chk.expect_near(roots[1], 1.0, 1e-6, "upper equilibrium");
    }
    chk.expect(equilibrium_consensus(1.0, c) == 1.0,
               "tie-break should report the high-quality equilibrium");
}

void criterion_spot_check_min_cost(Check& chk) {
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    QuadraticCost c(1.0);
    const double d = 10.0, eps = 0.01;

    // Constrained grid search: for each sampling probability on a fine grid,
    // bisect for the smallest reward under which full quality beats backing
    // off (the feasibility predicate is monotone in the reward), then take the
    // cheapest design. Feasibility is judged from the utility itself.
    const double r_max = 8.0;
    constexpr int kGrid = 1000;
    const auto feasible = [&](double a, double r) {
        AccuracyParams p{a, r, eps, d};
        return utility_accuracy(1.0, p, c) >= utility_accuracy(1.0 - 1e-6, p, c);
    };
    double best_cost = 1e300, best_a = 0.0, best_r = 0.0;
    for (int i = 1; i <= kGrid; ++i) {
        const double a = static_cast<double>(i) / kGrid;
        if (!feasible(a, r_max)) continue;
        double lo = 0.0, hi = r_max;
        for (int it = 0; it < 60; ++it) {
            const double mid = 0.5 * (lo + hi);
            (feasible(a, mid) ? hi : lo) = mid;
        }
        const double cost = mechanism_cost_accuracy(AccuracyParams{a, hi, eps, d});
        if (cost < best_cost) {
            best_cost = cost;
            best_a = a;
            best_r = hi;
        }
    }

    const CostReport rep = min_cost_accuracy(d, eps, c);
    chk.expect_near(rep.mechanism_cost, best_cost, 1e-3 * best_cost,
                    "cost vs grid search");
    chk.expect_near(rep.sampling_prob, best_a, 2.0 / kGrid,
                    "sampling probability vs grid argmin");
    chk.expect_near(rep.reward, best_r, 0.02, "reward vs grid argmin");
    chk.expect_near(rep.mechanism_cost, 6.3786, 1e-3, "pinned cost");
    chk.expect_near(rep.sampling_prob, 0.3194, 1e-3, "pinned sampling prob");
    chk.expect_near(rep.reward, 3.1944, 1e-3, "pinned reward");
    const double secs = std::chrono::duration<double>(clock::now() - t0).count();
    chk.expect(secs < 10.0, "grid search exceeded 10 s");
}

void criterion_training_equilibrium(Check& chk) {
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    for (double lam : {0.5, 1.0, 2.0}) {
        QuadraticCost c(lam);
        for (double beta_w : {0.0, 1.0}) {
            for (double alpha_w : {0.1, 0.9}) {
                const TrainingParams p = design_mechanism(
                    beta_w, alpha_w, 1.0, 1.0, 0.9, 0.01, 10.0, c);
                const double q_hat_t = best_response(1.0, p, c, 100).q_train;
                const EquilibriumReport rep =
                    verify_sne(ActionPair{1.0, q_hat_t}, p, c, 100);
                std::ostringstream tag;
                tag << "(lambda " << lam << ", beta " << beta_w << ", alpha "
                    << alpha_w << ")";
                chk.expect(rep.is_sne, tag.str() + ": not an equilibrium");
                bool zero_at_top = false;
                for (const auto& [q, loss] : rep.utility_loss_curve) {
                    chk.expect(loss >= -1e-9,
                               tag.str() + ": negative deviation loss");
                    if (q == 1.0) zero_at_top = loss == 0.0;
                }
                chk.expect(zero_at_top,
                           tag.str() + ": loss at the equilibrium action not 0");
            }
        }
    }
    const double secs = std::chrono::duration<double>(clock::now() - t0).count();
    chk.expect(secs < 60.0, "equilibrium sweep exceeded 60 s");
}

void criterion_batch_bound_monotone(Check& chk) {
    TrainingParams p;
    p.reward = 1.0;
    p.error_prob = 0.01;
    int prev = 1 << 30;
    int last = 0;
    for (int i = 1; i <= 30; ++i) {
        QuadraticCost c(0.1 * i);
        last = min_training_tasks(p, c);
        chk.expect(last <= prev, "batch bound increased in cost sensitivity");
        prev = last;
    }
    chk.expect(last == 1, "batch bound not clamped to 1 for cheap effort");

    QuadraticCost c1(1.0);
    for (double beta_w : {0.5, 1.0}) {
        TrainingParams ps = p;
        ps.accuracy_fraction = beta_w;
        prev = 1 << 30;
        for (int j = 1; j <= 20; ++j) {
            ps.work_sampling_prob = 0.05 * j;
            const int n = min_training_tasks(ps, c1);
            chk.expect(n <= prev, "batch bound increased in sampling probability");
            prev = n;
        }
    }
}

void criterion_stationary_occupancy(Check& chk) {
    TrainingParams p;
    p.accuracy_fraction = 1.0;
    p.work_sampling_prob = 0.9;
    p.reward = 1.0;
    p.train_eval_prob = 0.5;
    p.training_tasks = 4;
    p.pass_threshold = 4;
    p.error_prob = 0.01;
    p.validation_cost = 10.0;

    // Iterating the occupancy update must land on the closed form.
    for (double q_hat_t : {0.0, 0.4, 1.0}) {
        const StationaryDistribution s = stationary_working_prob(p, q_hat_t);
        double pi = p.initial_work_prob;
        for (int i = 0; i < 2000; ++i) pi = working_prob_step(pi, p, q_hat_t);
        chk.expect_near(pi, s.exact, 1e-10, "iterated update vs closed form");
        chk.expect(s.exact >= s.lower_bound - 1e-12,
                   "exact occupancy below its lower bound");
    }

    // Hand arithmetic: (0.1 + 0.9*0.5) / (0.1 + 0.9*0.9*0.01 + 0.9*0.5).
    chk.expect_near(stationary_working_prob(p, 0.0).lower_bound, 0.55 / 0.5581,
                    1e-12, "pinned lower bound");

    // Full sweep of sampling and evaluation probabilities.
    double worst = 1.0;
    for (int i = 0; i <= 100; ++i) {
        for (int j = 0; j <= 100; ++j) {
            p.work_sampling_prob = i / 100.0;
            p.train_eval_prob = j / 100.0;
            worst = std::min(worst,
                             stationary_working_prob(p, 0.0).lower_bound);
        }
    }
    chk.expect(worst > 0.9, "lower bound dips below 0.9 somewhere in the sweep");
}

void criterion_simulator_vs_analytics(Check& chk) {
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    QuadraticCost c(1.0);

    struct Setup {
        const char* tag;
        TrainingParams params;
        bool expect_everyone_working;
    };
    std::vector<Setup> setups;
    setups.push_back(
        {"consensus-validated", design_mechanism(0.0, 0.5, 1.0, 1.0, 0.9, 0.01, 10.0, c), true});
    setups.push_back(
        {"heavy spot-check", design_mechanism(1.0, 0.9, 1.0, 1.0, 0.9, 0.01, 10.0, c), false});
    setups.push_back(
        {"light spot-check", design_mechanism(1.0, 0.1, 1.0, 1.0, 0.9, 0.01, 10.0, c), false});
    setups.push_back(
        {"mixed validation", design_mechanism(0.5, 0.5, 1.0, 1.0, 0.9, 0.01, 10.0, c), false});
    {
        TrainingParams manual;
        manual.accuracy_fraction = 1.0;
        manual.work_sampling_prob = 0.9;
        manual.reward = 1.0;
        manual.train_eval_prob = 0.5;
        manual.training_tasks = 4;
        manual.pass_threshold = 4;
        manual.error_prob = 0.01;
        manual.validation_cost = 10.0;
        setups.push_back({"manual batch of four", manual, false});
    }

    std::uint64_t seed = 20240901;
    for (const Setup& s : setups) {
        const double q_hat_t = best_response(1.0, s.params, c, 100).q_train;
        SimConfig cfg;
        cfg.mechanism = Mechanism::training;
        cfg.training = s.params;
        cfg.policy = ActionPair{1.0, q_hat_t};
        cfg.population = 10000;
        cfg.horizon = 500;
        cfg.replications = 6;
        cfg.seed = seed;
        seed += 101;
        const SimResult res = replicate(cfg, c);
        const std::string tag(s.tag);

        chk.expect_stat(res.work_accept_rate,
                        p_work_accept(1.0, 1.0, s.params), tag + " accept rate");
        if (!std::isnan(res.train_pass_rate.value)) {
            chk.expect_stat(res.train_pass_rate,
                            p_train_pass(q_hat_t, s.params), tag + " pass rate");
        }
        const StationaryDistribution st =
            stationary_working_prob(s.params, q_hat_t);
        chk.expect_stat(res.tail_occupancy, st.exact, tag + " tail occupancy");
        const UtilityPair u =
            long_term_utilities(1.0, cfg.policy, s.params, c);
        chk.expect_stat(res.discounted_utility, u.work,
                        tag + " discounted utility");
        if (s.expect_everyone_working) {
            for (double x : res.occupancy_trace) {
                chk.expect(x == 1.0, tag + ": occupancy left 1");
            }
        }
    }
    const double secs = std::chrono::duration<double>(clock::now() - t0).count();
    chk.expect(secs < 300.0, "simulation suite exceeded 5 min");
}

void criterion_recursive_identities(Check& chk) {
    SplitMix64 rng(424242);
    for (int trial = 0; trial < 1000; ++trial) {
        QuadraticCost c(0.1 + 2.9 * rng.next_double());
        TrainingParams p;
        p.accuracy_fraction = rng.next_double();
        p.work_sampling_prob = rng.next_double();
        p.reward = 3.0 * rng.next_double();
        p.train_eval_prob = rng.next_double();
        p.training_tasks = 1 + static_cast<int>(rng.below(50));
        p.pass_threshold = p.training_tasks;
        p.continuation_prob = 0.5 + 0.45 * rng.next_double();
        p.error_prob = 0.49 * rng.next_double();
        p.validation_cost = 10.0 * rng.next_double();
        const double q_tilde = rng.next_double();
        const ActionPair a{rng.next_double(), rng.next_double()};

        const UtilityPair lt = long_term_utilities(q_tilde, a, p, c);
        const UtilityPair u = immediate_utilities(q_tilde, a, p, c);
        const double accept = p_work_accept(q_tilde, a.q_work, p);
        const double pass = p_train_pass(a.q_train, p);
        const double delta = p.continuation_prob;
        const double res_w =
            lt.work - (u.work + delta * (accept * lt.work + (1.0 - accept) * lt.train));
        const double res_t =
            lt.train - (u.train + delta * (pass * lt.work + (1.0 - pass) * lt.train));
        chk.expect(std::abs(res_w) < 1e-10, "working-state recursion residual");
        chk.expect(std::abs(res_t) < 1e-10, "training-state recursion residual");
        chk.expect(std::abs(utility_gap(q_tilde, a, p, c) - (lt.work - lt.train)) <
                       1e-10,
                   "gap identity residual");
        if (!chk.ok) return;
    }
}

void criterion_vanishing_cost(Check& chk) {
    QuadraticCost c(1.0);
    double prev_cost = 1e300;
    for (int k = 1; k <= 6; ++k) {
        const double scale = std::pow(10.0, -k);
        const TrainingParams p =
            design_mechanism(1.0, scale, scale, 1.0, 0.9, 0.01, 10.0, c);
        const double cost = cost_upper_bound(p);
        std::ostringstream tag;
        tag << "k=" << k;
        chk.expect(cost < prev_cost, tag.str() + ": cost bound not decreasing");
        prev_cost = cost;
        const double q_hat_t = best_response(1.0, p, c, 100).q_train;
        chk.expect(verify_sne(ActionPair{1.0, q_hat_t}, p, c, 100).is_sne,
                   tag.str() + ": equilibrium lost");
        if (!chk.ok) return;
    }
    chk.expect(prev_cost < 1e-4, "final cost bound not below 1e-4");
}

}  // namespace

int main() {
    using clock = std::chrono::steady_clock;
    struct Criterion {
        const char* name;
        std::function<void(Check&)> body;
    };
    const std::vector<Criterion> criteria = {
        {"consensus full-quality reward threshold", criterion_consensus_threshold},
        {"consensus equilibrium root set", criterion_consensus_roots},
        {"spot-check minimum cost vs grid search", criterion_spot_check_min_cost},
        {"training mechanism equilibrium end-to-end", criterion_training_equilibrium},
        {"training batch bound monotonicity", criterion_batch_bound_monotone},
        {"stationary occupancy closed form and bound", criterion_stationary_occupancy},
        {"simulator agrees with analytic values", criterion_simulator_vs_analytics},
        {"recursive utility identities", criterion_recursive_identities},
        {"vanishing-cost mechanism family", criterion_vanishing_cost},
    };

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Check chk;
        const auto t0 = clock::now();
        try {
            criteria[i].body(chk);
        } catch (const std::exception& e) {
            chk.expect(false, std::string("exception: ") + e.what());
        }
        const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                            clock::now() - t0)
                            .count();
        if (chk.ok) {
            std::printf("[PASS] %zu. %s (%lld ms)\n", i + 1, criteria[i].name,
                        static_cast<long long>(ms));
        } else {
            ++failures;
            std::printf("[FAIL] %zu. %s (%lld ms) - %s\n", i + 1,
                        criteria[i].name, static_cast<long long>(ms),
                        chk.detail.c_str());
        }
    }
    if (failures > 0) {
        std::printf("%d of %zu criteria failed\n", failures, criteria.size());
    }
    return failures == 0 ? 0 : 1;
}

#include "crowdmech/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace crowdmech {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Worker {
    bool working = true;
    int entry_slot = 0;
    double lifetime_utility = 0.0;
};

Estimate binomial_estimate(long long successes, long long trials) {
    if (trials <= 0) return {kNaN, kNaN};
    const double p = static_cast<double>(successes) / static_cast<double>(trials);
    return {p, std::sqrt(std::max(0.0, p * (1.0 - p) / static_cast<double>(trials)))};
}

Estimate sample_mean_estimate(double sum, double sumsq, long long n) {
    if (n <= 0) return {kNaN, kNaN};
    const double mean = sum / static_cast<double>(n);
    if (n == 1) return {mean, 0.0};
    const double var =
        std::max(0.0, (sumsq - static_cast<double>(n) * mean * mean) /
                          static_cast<double>(n - 1));
    return {mean, std::sqrt(var / static_cast<double>(n))};
}

// Standard error of the mean of a correlated series via nonoverlapping
// batch means (at most 20 batches).
double batch_means_se(const std::vector<double>& series) {
    const std::size_t b = std::min<std::size_t>(20, series.size());
    if (b < 2) return 0.0;
    const std::size_t len = series.size() / b;
    double sum = 0.0, sumsq = 0.0;
    for (std::size_t k = 0; k < b; ++k) {
        double acc = 0.0;
        for (std::size_t j = k * len; j < (k + 1) * len; ++j) acc += series[j];
        const double mean = acc / static_cast<double>(len);
        sum += mean;
        sumsq += mean * mean;
    }
    const double bd = static_cast<double>(b);
    const double var = std::max(0.0, (sumsq - sum * sum / bd) / (bd - 1.0));
    return std::sqrt(var / bd);
}

// As above but for a ratio of per-slot totals (cost over tasks).
double batch_ratio_se(const std::vector<double>& num,
                      const std::vector<double>& den) {
    const std::size_t b = std::min<std::size_t>(20, num.size());
    if (b < 2) return 0.0;
    const std::size_t len = num.size() / b;
    std::vector<double> ratios;
    for (std::size_t k = 0; k < b; ++k) {
        double n = 0.0, d = 0.0;
        for (std::size_t j = k * len; j < (k + 1) * len; ++j) {
            n += num[j];
            d += den[j];
        }
        if (d > 0.0) ratios.push_back(n / d);
    }
    if (ratios.size() < 2) return 0.0;
    double sum = 0.0, sumsq = 0.0;
    for (double r : ratios) {
        sum += r;
        sumsq += r * r;
    }
    const double m = static_cast<double>(ratios.size());
    const double var = std::max(0.0, (sumsq - sum * sum / m) / (m - 1.0));
    return std::sqrt(var / m);
}

// Draws `count` distinct elements of {0, ..., m-1} \ excluded, appending to
// `out`. `excluded` must be sorted; picked elements join it.
void sample_distinct(SplitMix64& rng, std::uint64_t m, int count,
                     std::vector<std::uint64_t>& excluded,
                     std::vector<std::uint64_t>& out) {
    for (int k = 0; k < count; ++k) {
        std::uint64_t x = rng.below(m - excluded.size());
        for (std::uint64_t e : excluded) {
            if (x >= e) ++x;
        }
        excluded.insert(std::upper_bound(excluded.begin(), excluded.end(), x), x);
        out.push_back(x);
    }
}

}  // namespace

void SimConfig::validate() const {
    if (population < 1) throw std::domain_error("population must be at least 1");
    if (horizon < 1) throw std::domain_error("horizon must be at least 1");
    if (replications < 1) throw std::domain_error("replications must be at least 1");
    require_quality(policy.q_work);
    require_quality(policy.q_train);
    training.validate();  // continuation and entry probabilities come from here
    switch (mechanism) {
        case Mechanism::consensus:
            consensus.validate();
            if (consensus.peers > 20) {
                throw std::domain_error("consensus peer count capped at 20");
            }
            if (population < consensus.peers + 1) {
                throw std::domain_error(
                    "population too small to form consensus groups");
            }
            break;
        case Mechanism::accuracy:
            accuracy.validate();
            break;
        case Mechanism::training:
            if (training.accuracy_fraction < 1.0 && population < 3) {
                throw std::domain_error(
                    "population too small to form consensus groups");
            }
            break;
    }
}

SimResult simulate(const SimConfig& cfg, const CostModel& c) {
    cfg.validate();
    SplitMix64 rng(cfg.seed);
    const TrainingParams& tp = cfg.training;
    const bool is_training = cfg.mechanism == Mechanism::training;
    const bool is_consensus = cfg.mechanism == Mechanism::consensus;
    const double delta = tp.continuation_prob;
    const double q_work = cfg.policy.q_work;
    const double work_cost = c.cost(q_work);
    const double train_cost =
        static_cast<double>(tp.training_tasks) * c.cost(cfg.policy.q_train);
    const double reward = is_training ? tp.reward
                          : is_consensus ? cfg.consensus.reward
                                         : cfg.accuracy.reward;
    const int peers = is_consensus ? cfg.consensus.peers : 2;

    const int pop = cfg.population;
    std::vector<Worker> workers(pop);
    for (Worker& w : workers) {
        w.working = !is_training || rng.bernoulli(tp.initial_work_prob);
    }

    std::vector<int> working_ids;
    std::vector<int> pos_in_working(pop, -1);
    std::vector<char> draw(pop, 0);        // own-task acceptability this slot
    std::vector<char> next_working(pop, 1);
    std::vector<std::uint64_t> excluded, picked;
    std::vector<char> group(peers + 1);    // consensus group outcome draws

    long long submitted = 0, accepted_total = 0;
    long long batches = 0, batches_passed = 0;
    double util_sum = 0.0, util_sumsq = 0.0;
    long long util_n = 0;
    double life_sum = 0.0, life_sumsq = 0.0;
    long long life_n = 0;
    std::vector<double> trace, slot_cost, slot_tasks;
    trace.reserve(cfg.horizon);
    slot_cost.reserve(cfg.horizon);
    slot_tasks.reserve(cfg.horizon);
    const int entry_cutoff = cfg.horizon / 2;

    for (int t = 0; t < cfg.horizon; ++t) {
        working_ids.clear();
        for (int i = 0; i < pop; ++i) {
            if (workers[i].working) {
                pos_in_working[i] = static_cast<int>(working_ids.size());
                working_ids.push_back(i);
            }
            next_working[i] = workers[i].working;
        }
        trace.push_back(static_cast<double>(working_ids.size()) / pop);

        for (int id : working_ids) draw[id] = rng.bernoulli(q_work) ? 1 : 0;

        double cost_acc = 0.0;
        for (int id : working_ids) {
            const bool accuracy_path =
                !is_consensus &&
                (!is_training || rng.bernoulli(tp.accuracy_fraction));
            bool accepted;
            if (accuracy_path) {
                const double alpha =
                    is_training ? tp.work_sampling_prob : cfg.accuracy.sampling_prob;
                const double eps =
                    is_training ? tp.error_prob : cfg.accuracy.error_prob;
                const double d =
                    is_training ? tp.validation_cost : cfg.accuracy.validation_cost;
                if (rng.bernoulli(alpha)) {
                    const bool flip = rng.bernoulli(eps);
                    accepted = (draw[id] != 0) != flip;
                    cost_acc += d;
                } else {
                    accepted = true;
                }
                cost_acc += accepted ? reward : 0.0;
            } else {
                // Consensus group: the worker plus `peers` co-solvers whose
                // outcomes reuse their own per-slot draws (fresh draws stand
                // in when too few workers are in the working state).
                group[0] = draw[id];
                const std::uint64_t avail = working_ids.size() - 1;
                const int real = static_cast<int>(
                    std::min<std::uint64_t>(avail, static_cast<std::uint64_t>(peers)));
                excluded.clear();
                picked.clear();
                excluded.push_back(static_cast<std::uint64_t>(pos_in_working[id]));
                sample_distinct(rng, working_ids.size(), real, excluded, picked);
                for (int k = 0; k < real; ++k) {
                    group[k + 1] = draw[working_ids[picked[k]]];
                }
                for (int k = real; k < peers; ++k) {
                    group[k + 1] = rng.bernoulli(q_work) ? 1 : 0;
                }
                int total = 0;
                for (int k = 0; k <= peers; ++k) total += group[k];
                // Everyone in the group whose solution joins the majority is
                // paid; only the group owner's acceptance drives their own
                // utility and state.
                for (int k = 0; k <= peers; ++k) {
                    if (group[k] && total - group[k] >= peers / 2) {
                        cost_acc += reward;
                    }
                }
                accepted = group[0] && total - group[0] >= peers / 2;
            }
            ++submitted;
            accepted_total += accepted ? 1 : 0;
            const double u = (accepted ? reward : 0.0) - work_cost;
            workers[id].lifetime_utility += u;
            util_sum += u;
            util_sumsq += u * u;
            ++util_n;
            if (is_training && !accepted) next_working[id] = 0;
        }
        slot_cost.push_back(cost_acc);
        slot_tasks.push_back(static_cast<double>(working_ids.size()));

        if (is_training) {
            for (int i = 0; i < pop; ++i) {
                if (workers[i].working) continue;
                const double u = -train_cost;
                workers[i].lifetime_utility += u;
                util_sum += u;
                util_sumsq += u * u;
                ++util_n;
                bool pass = true;
                if (rng.bernoulli(tp.train_eval_prob)) {
                    slot_cost.back() +=
                        static_cast<double>(tp.training_tasks) * tp.validation_cost;
                    for (int k = 0; k < tp.training_tasks; ++k) {
                        const bool correct = rng.bernoulli(cfg.policy.q_train);
                        const bool flip = rng.bernoulli(tp.error_prob);
                        if (correct == flip) {  // judged unacceptable
                            pass = false;
                            break;
                        }
                    }
                }
                ++batches;
                batches_passed += pass ? 1 : 0;
                next_working[i] = pass ? 1 : 0;
            }
        }

        for (int i = 0; i < pop; ++i) {
            if (rng.bernoulli(1.0 - delta)) {
                if (workers[i].entry_slot <= entry_cutoff) {
                    life_sum += workers[i].lifetime_utility;
                    life_sumsq += workers[i].lifetime_utility * workers[i].lifetime_utility;
                    ++life_n;
                }
                workers[i].entry_slot = t + 1;
                workers[i].lifetime_utility = 0.0;
                workers[i].working =
                    !is_training || rng.bernoulli(tp.initial_work_prob);
            } else {
                workers[i].working = next_working[i] != 0;
            }
        }
    }

    // Workers still present count too; censoring at the horizon is
    // negligible for entrants from the first half (survival decays
    // geometrically).
    for (const Worker& w : workers) {
        if (w.entry_slot <= entry_cutoff) {
            life_sum += w.lifetime_utility;
            life_sumsq += w.lifetime_utility * w.lifetime_utility;
            ++life_n;
        }
    }

    SimResult result;
    result.work_accept_rate = binomial_estimate(accepted_total, submitted);
    result.train_pass_rate = binomial_estimate(batches_passed, batches);
    result.occupancy_trace = std::move(trace);
    {
        const std::vector<double>& tr = result.occupancy_trace;
        std::vector<double> tail(tr.begin() + cfg.horizon / 2, tr.end());
        double s = 0.0;
        for (double x : tail) s += x;
        result.tail_occupancy = {s / static_cast<double>(tail.size()),
                                 batch_means_se(tail)};
    }
    {
        double cost_total = 0.0, tasks_total = 0.0;
        for (double x : slot_cost) cost_total += x;
        for (double x : slot_tasks) tasks_total += x;
        result.cost_per_task = {tasks_total > 0.0 ? cost_total / tasks_total : kNaN,
                                batch_ratio_se(slot_cost, slot_tasks)};
    }
    result.mean_worker_utility = sample_mean_estimate(util_sum, util_sumsq, util_n);
    result.discounted_utility = sample_mean_estimate(life_sum, life_sumsq, life_n);
    return result;
}

namespace {

Estimate across_runs(const std::vector<double>& values) {
    std::vector<double> v;
    for (double x : values) {
        if (!std::isnan(x)) v.push_back(x);
    }
    if (v.empty()) return {kNaN, kNaN};
    double sum = 0.0, sumsq = 0.0;
    for (double x : v) {
        sum += x;
        sumsq += x * x;
    }
    const double m = static_cast<double>(v.size());
    const double mean = sum / m;
    if (v.size() < 2) return {mean, 0.0};
    const double var = std::max(0.0, (sumsq - m * mean * mean) / (m - 1.0));
    return {mean, std::sqrt(var / m)};
}

}  // namespace

SimResult replicate(const SimConfig& cfg, const CostModel& c) {
    cfg.validate();
    if (cfg.replications == 1) return simulate(cfg, c);

    std::vector<SimResult> runs;
    runs.reserve(cfg.replications);
    SimConfig run_cfg = cfg;
    for (int k = 0; k < cfg.replications; ++k) {
        run_cfg.seed = cfg.seed + static_cast<std::uint64_t>(k);
        runs.push_back(simulate(run_cfg, c));
    }

    SimResult out;
    const auto gather = [&](Estimate SimResult::*field) {
        std::vector<double> vals;
        vals.reserve(runs.size());
        for (const SimResult& r : runs) vals.push_back((r.*field).value);
        return across_runs(vals);
    };
    out.work_accept_rate = gather(&SimResult::work_accept_rate);
    out.train_pass_rate = gather(&SimResult::train_pass_rate);
    out.tail_occupancy = gather(&SimResult::tail_occupancy);
    out.cost_per_task = gather(&SimResult::cost_per_task);
    out.mean_worker_utility = gather(&SimResult::mean_worker_utility);
    out.discounted_utility = gather(&SimResult::discounted_utility);
    out.occupancy_trace.assign(runs[0].occupancy_trace.size(), 0.0);
    for (const SimResult& r : runs) {
        for (std::size_t i = 0; i < out.occupancy_trace.size(); ++i) {
            out.occupancy_trace[i] += r.occupancy_trace[i];
        }
    }
    for (double& x : out.occupancy_trace) x /= static_cast<double>(runs.size());
    return out;
}

}  // namespace crowdmech

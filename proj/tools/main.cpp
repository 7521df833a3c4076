// crowdmech: CSV-emitting front end for the mechanism analysis library.
//
// Every numeric flag accepts either a scalar ("0.5") or an inclusive range
// ("0.1:3:30" = 30 evenly spaced values); at most two flags may be ranges
// and rows are emitted in row-major order of the flags as listed in --help.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "crowdmech/basic_mechanisms.hpp"
#include "crowdmech/cost_model.hpp"
#include "crowdmech/simulator.hpp"
#include "crowdmech/training_mechanism.hpp"

namespace {

using namespace crowdmech;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string fmt(double x) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, p);
}

double parse_number(const std::string& s) {
    double x = 0.0;
    const char* b = s.data();
    const char* e = b + s.size();
    auto [p, ec] = std::from_chars(b, e, x);
    if (ec != std::errc() || p != e) {
        throw UsageError("not a number: '" + s + "'");
    }
    return x;
}

struct Range {
    double start = 0.0, stop = 0.0;
    int count = 1;
    bool is_range = false;

    std::vector<double> values() const {
        std::vector<double> v;
        v.reserve(count);
        if (count == 1) {
            v.push_back(start);
        } else {
            for (int i = 0; i < count; ++i) {
                v.push_back(start + (stop - start) * i / (count - 1));
            }
        }
        return v;
    }
};

Range parse_range(const std::string& s) {
    Range r;
    const auto c1 = s.find(':');
    if (c1 == std::string::npos) {
        r.start = r.stop = parse_number(s);
        return r;
    }
    const auto c2 = s.find(':', c1 + 1);
    if (c2 == std::string::npos || s.find(':', c2 + 1) != std::string::npos) {
        throw UsageError("range must be start:stop:count, got '" + s + "'");
    }
    r.start = parse_number(s.substr(0, c1));
    r.stop = parse_number(s.substr(c1 + 1, c2 - c1 - 1));
    const double count = parse_number(s.substr(c2 + 1));
    if (!(count >= 1.0) || count != std::floor(count) || count > 1e7) {
        throw UsageError("range count must be a positive integer, got '" + s + "'");
    }
    if (!(r.start <= r.stop)) {
        throw UsageError("range start must not exceed stop, got '" + s + "'");
    }
    r.count = static_cast<int>(count);
    r.is_range = true;
    return r;
}

struct Param {
    std::string column;
    std::string raw;
    CLI::Option* opt = nullptr;
    Range range;
    double value = 0.0;

    bool supplied() const { return opt != nullptr && opt->count() > 0; }
    long long as_int() const { return std::llround(value); }
};

// One subcommand's numeric flags plus the sweep machinery over them.
class Sweep {
  public:
    Param* add(CLI::App* cmd, const std::string& flag, const std::string& column,
               double def, const std::string& help) {
        auto p = std::make_unique<Param>();
        p->column = column;
        p->range.start = p->range.stop = def;
        p->value = def;
        p->opt = cmd->add_option(flag, p->raw,
                                 help + " [default " + fmt(def) + "]");
        params_.push_back(std::move(p));
        return params_.back().get();
    }

    // Parses raw flag values; must run after CLI parsing and before run().
    void finalize() {
        ranged_.clear();
        for (auto& p : params_) {
            if (p->supplied()) p->range = parse_range(p->raw);
            p->value = p->range.start;
            if (p->range.is_range) ranged_.push_back(p.get());
        }
        if (ranged_.size() > 2) {
            throw UsageError("at most two flags may take range values");
        }
    }

    // Evaluates `eval` (returning rows of output columns) at every grid
    // point and writes the full CSV; the first ranged flag is the outer
    // loop. Rows are buffered so failures never leave partial output.
    void run(std::ostream& os, const std::vector<std::string>& out_cols,
             const std::function<std::vector<std::vector<double>>()>& eval) {
        std::vector<std::vector<double>> rows;
        const std::vector<double> outer =
            !ranged_.empty() ? ranged_[0]->range.values() : std::vector<double>{0.0};
        const std::vector<double> inner =
            ranged_.size() > 1 ? ranged_[1]->range.values() : std::vector<double>{0.0};
        for (double ov : outer) {
            if (!ranged_.empty()) ranged_[0]->value = ov;
            for (double iv : inner) {
                if (ranged_.size() > 1) ranged_[1]->value = iv;
                for (std::vector<double>& out : eval()) {
                    std::vector<double> row;
                    row.reserve(params_.size() + out.size());
                    for (const auto& p : params_) row.push_back(p->value);
                    row.insert(row.end(), out.begin(), out.end());
                    rows.push_back(std::move(row));
                }
            }
        }
        bool first = true;
        for (const auto& p : params_) {
            os << (first ? "" : ",") << p->column;
            first = false;
        }
        for (const std::string& name : out_cols) os << ',' << name;
        os << '\n';
        for (const std::vector<double>& row : rows) {
            first = true;
            for (double x : row) {
                os << (first ? "" : ",") << fmt(x);
                first = false;
            }
            os << '\n';
        }
    }

  private:
    std::vector<std::unique_ptr<Param>> params_;
    std::vector<Param*> ranged_;
};

// Statistics that were never observed in a run (e.g. the training pass rate
// when no worker was ever demoted) are reported as -1 so every CSV field
// stays a finite number.
double finite_or_sentinel(double x) { return std::isnan(x) ? -1.0 : x; }

struct Command {
    Sweep sweep;
    std::string out_path = "-";
    std::vector<std::string> out_cols;
    std::function<std::vector<std::vector<double>>()> eval;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "crowdmech: equilibria, costs and population simulation for "
        "crowdsourcing incentive mechanisms.\n"
        "Numeric flags accept a scalar or an inclusive start:stop:count "
        "range (at most two ranges per invocation)."};
    app.require_subcommand(1);

    std::map<const CLI::App*, std::shared_ptr<Command>> commands;
    const auto make = [&](const std::string& name, const std::string& desc) {
        CLI::App* cmd = app.add_subcommand(name, desc);
        auto c = std::make_shared<Command>();
        cmd->add_option("--out", c->out_path,
                        "output CSV path; '-' writes to stdout [default -]");
        commands[cmd] = c;
        return std::pair<CLI::App*, std::shared_ptr<Command>>(cmd, c);
    };

    {
        auto [cmd, c] = make("mc-equilibrium",
                             "Symmetric equilibrium quality and per-task cost of "
                             "the 3-worker consensus mechanism across rewards");
        Param* lam = c->sweep.add(cmd, "--lambda", "lambda", 1.0, "cost sensitivity");
        Param* r = c->sweep.add(cmd, "--r", "r", 1.0, "reward per accepted task");
        c->out_cols = {"equilibrium_q", "mechanism_cost"};
        c->eval = [lam, r]() -> std::vector<std::vector<double>> {
            QuadraticCost cost(lam->value);
            ConsensusParams p;
            p.reward = r->value;
            return {{equilibrium_consensus(r->value, cost),
                     mechanism_cost_consensus(p)}};
        };
    }
    {
        auto [cmd, c] = make("ma-optimal",
                             "Worker's optimal quality under spot-check validation");
        Param* lam = c->sweep.add(cmd, "--lambda", "lambda", 1.0, "cost sensitivity");
        Param* eps = c->sweep.add(cmd, "--eps", "eps", 0.01, "validation error probability");
        Param* aa = c->sweep.add(cmd, "--alpha-a", "alpha_a", 1.0, "spot-check probability");
        Param* r = c->sweep.add(cmd, "--r", "r", 1.0, "reward per accepted task");
        c->out_cols = {"optimal_q", "utility"};
        c->eval = [=]() -> std::vector<std::vector<double>> {
            QuadraticCost cost(lam->value);
            AccuracyParams p;
            p.sampling_prob = aa->value;
            p.reward = r->value;
            p.error_prob = eps->value;
            const double q = optimal_action_accuracy(p, cost);
            return {{q, utility_accuracy(q, p, cost)}};
        };
    }
    {
        auto [cmd, c] = make("ma-min-cost",
                             "Cheapest spot-check configuration that still induces "
                             "quality 1");
        Param* lam = c->sweep.add(cmd, "--lambda", "lambda", 1.0, "cost sensitivity");
        Param* eps = c->sweep.add(cmd, "--eps", "eps", 0.01, "validation error probability");
        Param* d = c->sweep.add(cmd, "--d", "d", 10.0, "cost of one validation");
        c->out_cols = {"min_cost", "alpha_a_opt", "r_opt"};
        c->eval = [=]() -> std::vector<std::vector<double>> {
            QuadraticCost cost(lam->value);
            const CostReport rep = min_cost_accuracy(d->value, eps->value, cost);
            return {{rep.mechanism_cost, rep.sampling_prob, rep.reward}};
        };
    }
    {
        auto [cmd, c] = make("mt-n-bound",
                             "Smallest training batch size that makes quality 1 a "
                             "working-state equilibrium");
        Param* lam = c->sweep.add(cmd, "--lambda", "lambda", 1.0, "cost sensitivity");
        Param* bw = c->sweep.add(cmd, "--beta-w", "beta_w", 0.0, "spot-check share of working tasks");
        Param* aw = c->sweep.add(cmd, "--alpha-w", "alpha_w", 0.5, "working-state sampling probability");
        Param* r = c->sweep.add(cmd, "--r", "r", 1.0, "reward per accepted task");
        Param* del = c->sweep.add(cmd, "--delta", "delta", 0.9, "worker continuation probability");
        Param* eps = c->sweep.add(cmd, "--eps", "eps", 0.01, "validation error probability");
        c->out_cols = {"n_bound"};
        c->eval = [=]() -> std::vector<std::vector<double>> {
            QuadraticCost cost(lam->value);
            TrainingParams p;
            p.accuracy_fraction = bw->value;
            p.work_sampling_prob = aw->value;
            p.reward = r->value;
            p.continuation_prob = del->value;
            p.error_prob = eps->value;
            return {{static_cast<double>(min_training_tasks(p, cost))}};
        };
    }
    {
        auto [cmd, c] = make("mt-design",
                             "Complete a training mechanism from working-state "
                             "parameters: batch size, evaluation probability, cost "
                             "bound");
        Param* lam = c->sweep.add(cmd, "--lambda", "lambda", 1.0, "cost sensitivity");
        Param* bw = c->sweep.add(cmd, "--beta-w", "beta_w", 0.0, "spot-check share of working tasks");
        Param* aw = c->sweep.add(cmd, "--alpha-w", "alpha_w", 0.5, "working-state sampling probability");
        Param* r = c->sweep.add(cmd, "--r", "r", 1.0, "reward per accepted task");
        Param* gam = c->sweep.add(cmd, "--gamma", "gamma", 1.0, "training-to-working spending ratio");
        Param* del = c->sweep.add(cmd, "--delta", "delta", 0.9, "worker continuation probability");
        Param* eps = c->sweep.add(cmd, "--eps", "eps", 0.01, "validation error probability");
        Param* d = c->sweep.add(cmd, "--d", "d", 10.0, "cost of one validation");
        c->out_cols = {"n_tasks", "alpha_t", "cost_bound"};
        c->eval = [=]() -> std::vector<std::vector<double>> {
            QuadraticCost cost(lam->value);
            const TrainingParams p = design_mechanism(
                bw->value, aw->value, r->value, gam->value, del->value,
                eps->value, d->value, cost);
            return {{static_cast<double>(p.training_tasks), p.train_eval_prob,
                     cost_upper_bound(p)}};
        };
    }
    {
        auto [cmd, c] = make("mt-verify",
                             "Check that everyone playing (quality 1, derived "
                             "training quality) is an equilibrium; one row per "
                             "deviation quality with its long-term utility loss");
        Param* lam = c->sweep.add(cmd, "--lambda", "lambda", 1.0, "cost sensitivity");
        Param* bw = c->sweep.add(cmd, "--beta-w", "beta_w", 0.0, "spot-check share of working tasks");
        Param* aw = c->sweep.add(cmd, "--alpha-w", "alpha_w", 0.5, "working-state sampling probability");
        Param* r = c->sweep.add(cmd, "--r", "r", 1.0, "reward per accepted task");
        Param* gam = c->sweep.add(cmd, "--gamma", "gamma", 1.0, "training-to-working spending ratio");
        Param* del = c->sweep.add(cmd, "--delta", "delta", 0.9, "worker continuation probability");
        Param* eps = c->sweep.add(cmd, "--eps", "eps", 0.01, "validation error probability");
        Param* d = c->sweep.add(cmd, "--d", "d", 10.0, "cost of one validation");
        Param* n = c->sweep.add(cmd, "--n", "n", 1.0, "training batch size (derived when omitted)");
        Param* at = c->sweep.add(cmd, "--alpha-t", "alpha_t", 1.0, "training evaluation probability (derived when omitted)");
        Param* grid = c->sweep.add(cmd, "--grid", "grid", 100.0, "action grid resolution");
        c->out_cols = {"q_w", "utility_loss", "is_sne", "q_hat_t"};
        c->eval = [=]() -> std::vector<std::vector<double>> {
            QuadraticCost cost(lam->value);
            TrainingParams p;
            p.accuracy_fraction = bw->value;
            p.work_sampling_prob = aw->value;
            p.reward = r->value;
            p.continuation_prob = del->value;
            p.error_prob = eps->value;
            p.validation_cost = d->value;
            p.budget_ratio = gam->value;
            p.initial_work_prob = 1.0;
            p.training_tasks = n->supplied() ? static_cast<int>(n->as_int())
                                             : min_training_tasks(p, cost);
            p.pass_threshold = p.training_tasks;
            p.train_eval_prob =
                at->supplied() ? at->value : max_training_sampling(p);
            const int g = static_cast<int>(grid->as_int());
            const double q_hat_t = best_response(1.0, p, cost, g).q_train;
            const EquilibriumReport rep =
                verify_sne(ActionPair{1.0, q_hat_t}, p, cost, g);
            std::vector<std::vector<double>> rows;
            rows.reserve(rep.utility_loss_curve.size());
            for (const auto& [q, loss] : rep.utility_loss_curve) {
                rows.push_back({q, loss, rep.is_sne ? 1.0 : 0.0, q_hat_t});
            }
            return rows;
        };
    }
    {
        auto [cmd, c] = make("mt-stationary",
                             "Long-run working-state occupancy at the quality-1 "
                             "equilibrium: exact fixed point and closed-form lower "
                             "bound");
        Param* lam = c->sweep.add(cmd, "--lambda", "lambda", 1.0, "cost sensitivity");
        Param* bw = c->sweep.add(cmd, "--beta-w", "beta_w", 0.0, "spot-check share of working tasks");
        Param* aw = c->sweep.add(cmd, "--alpha-w", "alpha_w", 0.5, "working-state sampling probability");
        Param* at = c->sweep.add(cmd, "--alpha-t", "alpha_t", 1.0, "training evaluation probability (derived when omitted)");
        Param* n = c->sweep.add(cmd, "--n", "n", 1.0, "training batch size (derived when omitted)");
        Param* r = c->sweep.add(cmd, "--r", "r", 1.0, "reward per accepted task");
        Param* gam = c->sweep.add(cmd, "--gamma", "gamma", 1.0, "training-to-working spending ratio");
        Param* del = c->sweep.add(cmd, "--delta", "delta", 0.9, "worker continuation probability");
        Param* eps = c->sweep.add(cmd, "--eps", "eps", 0.01, "validation error probability");
        Param* d = c->sweep.add(cmd, "--d", "d", 10.0, "cost of one validation");
        Param* pi0 = c->sweep.add(cmd, "--pi0", "pi0", 1.0, "entry probability of the working state");
        Param* grid = c->sweep.add(cmd, "--grid", "grid", 100.0, "action grid resolution");
        c->out_cols = {"q_hat_t", "stationary_exact", "stationary_lower"};
        c->eval = [=]() -> std::vector<std::vector<double>> {
            QuadraticCost cost(lam->value);
            TrainingParams p;
            p.accuracy_fraction = bw->value;
            p.work_sampling_prob = aw->value;
            p.reward = r->value;
            p.continuation_prob = del->value;
            p.error_prob = eps->value;
            p.validation_cost = d->value;
            p.budget_ratio = gam->value;
            p.initial_work_prob = pi0->value;
            p.training_tasks = n->supplied() ? static_cast<int>(n->as_int())
                                             : min_training_tasks(p, cost);
            p.pass_threshold = p.training_tasks;
            p.train_eval_prob =
                at->supplied() ? at->value : max_training_sampling(p);
            const double q_hat_t =
                best_response(1.0, p, cost, static_cast<int>(grid->as_int())).q_train;
            const StationaryDistribution s = stationary_working_prob(p, q_hat_t);
            return {{q_hat_t, s.exact, s.lower_bound}};
        };
    }
    {
        auto [cmd, c] = make("simulate",
                             "Monte Carlo population run of one mechanism under a "
                             "fixed worker policy; unobserved statistics are "
                             "reported as -1");
        auto mech = std::make_shared<std::string>("training");
        cmd->add_option("--mechanism", *mech,
                        "one of consensus, accuracy, training [default training]")
            ->check(CLI::IsMember({"consensus", "accuracy", "training"}));
        Param* lam = c->sweep.add(cmd, "--lambda", "lambda", 1.0, "cost sensitivity");
        Param* qw = c->sweep.add(cmd, "--q-w", "q_w", 1.0, "working-state policy quality");
        Param* qt = c->sweep.add(cmd, "--q-t", "q_t", 1.0, "training-state policy quality (derived when omitted under training)");
        Param* k = c->sweep.add(cmd, "--k", "k", 2.0, "consensus co-solvers per task");
        Param* r = c->sweep.add(cmd, "--r", "r", 1.0, "reward per accepted task");
        Param* aa = c->sweep.add(cmd, "--alpha-a", "alpha_a", 1.0, "spot-check probability (accuracy mechanism)");
        Param* bw = c->sweep.add(cmd, "--beta-w", "beta_w", 0.0, "spot-check share of working tasks");
        Param* aw = c->sweep.add(cmd, "--alpha-w", "alpha_w", 0.5, "working-state sampling probability");
        Param* at = c->sweep.add(cmd, "--alpha-t", "alpha_t", 1.0, "training evaluation probability (derived when omitted)");
        Param* n = c->sweep.add(cmd, "--n", "n", 1.0, "training batch size (derived when omitted)");
        Param* gam = c->sweep.add(cmd, "--gamma", "gamma", 1.0, "training-to-working spending ratio");
        Param* del = c->sweep.add(cmd, "--delta", "delta", 0.9, "worker continuation probability");
        Param* eps = c->sweep.add(cmd, "--eps", "eps", 0.01, "validation error probability");
        Param* d = c->sweep.add(cmd, "--d", "d", 10.0, "cost of one validation");
        Param* pi0 = c->sweep.add(cmd, "--pi0", "pi0", 1.0, "entry probability of the working state");
        Param* pop = c->sweep.add(cmd, "--pop", "pop", 1000.0, "population size");
        Param* hor = c->sweep.add(cmd, "--horizon", "horizon", 500.0, "simulated slots");
        Param* reps = c->sweep.add(cmd, "--reps", "reps", 1.0, "independent replications");
        Param* seed = c->sweep.add(cmd, "--seed", "seed", 1.0, "RNG seed");
        c->out_cols = {"accept_rate", "accept_se", "pass_rate", "pass_se",
                       "tail_occupancy", "tail_occupancy_se", "cost_per_task",
                       "cost_per_task_se", "mean_utility", "mean_utility_se",
                       "discounted_utility", "discounted_utility_se"};
        c->eval = [=]() -> std::vector<std::vector<double>> {
            QuadraticCost cost(lam->value);
            SimConfig cfg;
            cfg.mechanism = *mech == "consensus" ? Mechanism::consensus
                            : *mech == "accuracy" ? Mechanism::accuracy
                                                  : Mechanism::training;
            cfg.consensus.peers = static_cast<int>(k->as_int());
            cfg.consensus.reward = r->value;
            cfg.accuracy.sampling_prob = aa->value;
            cfg.accuracy.reward = r->value;
            cfg.accuracy.error_prob = eps->value;
            cfg.accuracy.validation_cost = d->value;
            TrainingParams tp;
            tp.accuracy_fraction = bw->value;
            tp.work_sampling_prob = aw->value;
            tp.reward = r->value;
            tp.continuation_prob = del->value;
            tp.error_prob = eps->value;
            tp.validation_cost = d->value;
            tp.budget_ratio = gam->value;
            tp.initial_work_prob = pi0->value;
            const bool is_training = cfg.mechanism == Mechanism::training;
            tp.training_tasks = n->supplied() ? static_cast<int>(n->as_int())
                                : is_training ? min_training_tasks(tp, cost)
                                              : 1;
            tp.pass_threshold = tp.training_tasks;
            tp.train_eval_prob = at->supplied() ? at->value
                                 : is_training  ? max_training_sampling(tp)
                                                : 0.0;
            cfg.training = tp;
            cfg.policy.q_work = qw->value;
            cfg.policy.q_train = !qt->supplied() && is_training
                                     ? best_response(qw->value, tp, cost).q_train
                                     : qt->value;
            cfg.population = static_cast<int>(pop->as_int());
            cfg.horizon = static_cast<int>(hor->as_int());
            cfg.replications = static_cast<int>(reps->as_int());
            cfg.seed = static_cast<std::uint64_t>(seed->as_int());
            const SimResult res = replicate(cfg, cost);
            return {{finite_or_sentinel(res.work_accept_rate.value),
                     finite_or_sentinel(res.work_accept_rate.std_error),
                     finite_or_sentinel(res.train_pass_rate.value),
                     finite_or_sentinel(res.train_pass_rate.std_error),
                     finite_or_sentinel(res.tail_occupancy.value),
                     finite_or_sentinel(res.tail_occupancy.std_error),
                     finite_or_sentinel(res.cost_per_task.value),
                     finite_or_sentinel(res.cost_per_task.std_error),
                     finite_or_sentinel(res.mean_worker_utility.value),
                     finite_or_sentinel(res.mean_worker_utility.std_error),
                     finite_or_sentinel(res.discounted_utility.value),
                     finite_or_sentinel(res.discounted_utility.std_error)}};
        };
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        for (const auto& [cmd, c] : commands) {
            if (!cmd->parsed()) continue;
            c->sweep.finalize();
            if (c->out_path == "-") {
                c->sweep.run(std::cout, c->out_cols, c->eval);
            } else {
                std::ofstream os(c->out_path, std::ios::binary);
                if (!os) {
                    throw UsageError("cannot open output file '" + c->out_path + "'");
                }
                c->sweep.run(os, c->out_cols, c->eval);
            }
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

#include "crowdmech/basic_mechanisms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace crowdmech {

namespace {

constexpr int kMaxPeers = 20;

void require_peer_scale(int peers) {
    if (peers > kMaxPeers) {
        throw std::overflow_error(
            "consensus group sizes above " + std::to_string(kMaxPeers + 1) +
            " workers are not supported (exact binomial arithmetic)");
    }
}

// C(n, k) in exact integer arithmetic; n <= 20 keeps this far from overflow.
unsigned long long binomial(int n, int k) {
    unsigned long long result = 1;
    for (int i = 1; i <= k; ++i) {
        result = result * static_cast<unsigned long long>(n - k + i) /
                 static_cast<unsigned long long>(i);
    }
    return result;
}

// Probability that at least peers/2 of `peers` independent quality-q_tilde
// solutions are acceptable: the chance the group forms a majority the
// worker's own acceptable solution would match.
double majority_prob(double q_tilde, int peers) {
    double sum = 0.0;
    for (int n = peers / 2; n <= peers; ++n) {
        sum += static_cast<double>(binomial(peers, n)) *
               std::pow(q_tilde, n) * std::pow(1.0 - q_tilde, peers - n);
    }
    return std::min(sum, 1.0);
}

// Left-hand side minus right-hand side of the 3-worker symmetric
// equilibrium condition reward * (2q - q^2) = marginal_cost(q).
double equilibrium_residual(double q, double reward, const CostModel& c) {
    return reward * (2.0 * q - q * q) - c.marginal_cost(q);
}

// A candidate q_hat is a symmetric equilibrium iff quality q_hat is a best
// response when everyone else plays q_hat; checked by argmax over a fine
// grid (ties broken toward higher quality).
bool is_best_response_to_self(double q_hat, double reward, const CostModel& c) {
    constexpr int kGrid = 1000;
    const double match = reward * (2.0 * q_hat - q_hat * q_hat);
    double best_q = 0.0;
    double best_u = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= kGrid; ++i) {
        const double q = static_cast<double>(i) / kGrid;
        const double u = match * q - c.cost(q);
        if (u >= best_u) {
            best_u = u;
            best_q = q;
        }
    }
    return std::abs(best_q - q_hat) <= 1.0 / kGrid + 1e-9;
}

}  // namespace

void ConsensusParams::validate() const {
    if (peers < 2 || peers % 2 != 0) {
        throw std::domain_error("consensus peer count must be even and >= 2");
    }
    if (!(reward >= 0.0)) {
        throw std::domain_error("reward must be nonnegative");
    }
}

void AccuracyParams::validate() const {
    if (!(sampling_prob >= 0.0 && sampling_prob <= 1.0)) {
        throw std::domain_error("sampling probability must lie in [0, 1]");
    }
    if (!(reward >= 0.0)) {
        throw std::domain_error("reward must be nonnegative");
    }
    if (!(error_prob >= 0.0 && error_prob < 0.5)) {
        throw std::domain_error("validation error probability must lie in [0, 0.5)");
    }
    if (!(validation_cost >= 0.0)) {
        throw std::domain_error("validation cost must be nonnegative");
    }
}

double AccuracyParams::accept_prob(double q) const {
    return (1.0 - 2.0 * error_prob) * q + error_prob;
}

double utility_consensus(double q, double q_tilde, const ConsensusParams& p,
                         const CostModel& c) {
    p.validate();
    require_peer_scale(p.peers);
    require_quality(q);
    require_quality(q_tilde);
    return p.reward * q * majority_prob(q_tilde, p.peers) - c.cost(q);
}

bool is_sne_consensus_q1(const ConsensusParams& p, const CostModel& c) {
    p.validate();
    return p.reward >= c.marginal_cost(1.0);
}

std::vector<double> consensus_equilibria(double reward, const CostModel& c) {
    if (!(reward >= 0.0)) {
        throw std::domain_error("reward must be nonnegative");
    }
    constexpr int kScan = 1000;       // 1e-3 scan resolution
    constexpr double kRootTol = 1e-10;

    std::vector<double> roots;
    double prev_q = 0.0;
    double prev_g = equilibrium_residual(prev_q, reward, c);
    if (prev_g == 0.0) roots.push_back(prev_q);
    for (int i = 1; i <= kScan; ++i) {
        const double q = static_cast<double>(i) / kScan;
        const double g = equilibrium_residual(q, reward, c);
        if (g == 0.0) {
            roots.push_back(q);
        } else if (prev_g != 0.0 && (prev_g < 0.0) != (g < 0.0)) {
            double lo = prev_q, hi = q;
            double g_lo = prev_g;
            while (hi - lo > kRootTol) {
                const double mid = 0.5 * (lo + hi);
                const double g_mid = equilibrium_residual(mid, reward, c);
                if (g_mid == 0.0) {
                    lo = hi = mid;
                    break;
                }
                if ((g_mid < 0.0) == (g_lo < 0.0)) {
                    lo = mid;
                    g_lo = g_mid;
                } else {
                    hi = mid;
                }
            }
            roots.push_back(0.5 * (lo + hi));
        }
        prev_q = q;
        prev_g = g;
    }
    if (reward >= c.marginal_cost(1.0)) roots.push_back(1.0);

    std::sort(roots.begin(), roots.end());
    std::vector<double> equilibria;
    for (double q_hat : roots) {
        q_hat = std::clamp(q_hat, 0.0, 1.0);
        if (!equilibria.empty() && q_hat - equilibria.back() <= 1e-9) continue;
        if (is_best_response_to_self(q_hat, reward, c)) {
            equilibria.push_back(q_hat);
        }
    }
    return equilibria;
}

double equilibrium_consensus(double reward, const CostModel& c) {
    const std::vector<double> equilibria = consensus_equilibria(reward, c);
    return equilibria.empty() ? 0.0 : equilibria.back();
}

double mechanism_cost_consensus(const ConsensusParams& p) {
    p.validate();
    return (p.peers + 1) * p.reward;
}

CostReport min_cost_consensus(const CostModel& c) {
    const double m1 = c.marginal_cost(1.0);
    CostReport report;
    report.peers = 2;
    report.reward = m1;
    report.mechanism_cost = 3.0 * m1;
    report.achieves_q1 = true;
    return report;
}

double utility_accuracy(double q, const AccuracyParams& p, const CostModel& c) {
    p.validate();
    require_quality(q);
    const double paid = 1.0 - p.sampling_prob * (1.0 - p.accept_prob(q));
    return p.reward * paid - c.cost(q);
}

double optimal_action_accuracy(const AccuracyParams& p, const CostModel& c) {
    p.validate();
    return c.inverse_marginal(p.reward * p.sampling_prob *
                              (1.0 - 2.0 * p.error_prob));
}

double mechanism_cost_accuracy(const AccuracyParams& p) {
    p.validate();
    return (1.0 - p.sampling_prob * p.error_prob) * p.reward +
           p.sampling_prob * p.validation_cost;
}

CostReport min_cost_accuracy(double validation_cost, double error_prob,
                             const CostModel& c) {
    if (!(validation_cost >= 0.0)) {
        throw std::domain_error("validation cost must be nonnegative");
    }
    if (!(error_prob >= 0.0 && error_prob < 0.5)) {
        throw std::domain_error("validation error probability must lie in [0, 0.5)");
    }
    const double m1 = c.marginal_cost(1.0);
    const double share = 1.0 - 2.0 * error_prob;  // accuracy margin of one check
    CostReport report;
    report.achieves_q1 = true;
    if (validation_cost * share >= m1) {
        // Interior optimum of the relaxed problem: sampling stays below 1.
        report.sampling_prob = std::sqrt(m1 / (share * validation_cost));
        report.reward = std::sqrt(m1 * validation_cost / share);
        report.mechanism_cost = 2.0 * report.reward - error_prob * m1 / share;
    } else {
        // Checks are cheap: sample everything and pay the minimum reward
        // that still makes quality 1 the best response.
        report.sampling_prob = 1.0;
        report.reward = m1 / share;
        report.mechanism_cost = m1 * (1.0 - error_prob) / share + validation_cost;
    }
    return report;
}

}  // namespace crowdmech

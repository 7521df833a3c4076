#include "crowdmech/cost_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace crowdmech {

void require_quality(double q) {
    if (!(q >= 0.0 && q <= 1.0)) {
        throw std::domain_error("quality must lie in [0, 1], got " +
                                std::to_string(q));
    }
}

void CostModel::validate_assumptions(int grid_points, double tol) const {
    if (grid_points < 3) {
        throw std::domain_error("validate_assumptions needs at least 3 grid points");
    }
    const double h = 1.0 / (grid_points - 1);

    if (!(cost(0.0) > 0.0)) {
        throw std::domain_error("cost model violates cost(0) > 0");
    }
    double prev_marginal = marginal_cost(0.0);
    for (int i = 0; i < grid_points; ++i) {
        const double q = static_cast<double>(i) * h;
        const double m = marginal_cost(q);
        if (!(m > 0.0)) {
            throw std::domain_error("cost model violates marginal_cost > 0 at q = " +
                                    std::to_string(q));
        }
        if (m < prev_marginal - tol) {
            throw std::domain_error("cost model violates convexity (marginal cost "
                                    "decreases) at q = " + std::to_string(q));
        }
        prev_marginal = m;
        if (i > 0 && i + 1 < grid_points) {
            const double second = cost(q + h) - 2.0 * cost(q) + cost(q - h);
            if (second < -tol) {
                throw std::domain_error("cost model violates convexity at q = " +
                                        std::to_string(q));
            }
            // Central finite difference must agree with the stated derivative.
            const double fd = (cost(q + h) - cost(q - h)) / (2.0 * h);
            if (std::abs(fd - m) > 1e-6 * std::max(1.0, std::abs(m))) {
                throw std::domain_error("cost model marginal_cost disagrees with "
                                        "finite differences at q = " +
                                        std::to_string(q));
            }
        }
    }
}

QuadraticCost::QuadraticCost(double lambda) : lambda_(lambda) {
    if (!(lambda > 0.0)) {
        throw std::domain_error("cost sensitivity lambda must be positive, got " +
                                std::to_string(lambda));
    }
}

double QuadraticCost::cost(double q) const {
    require_quality(q);
    const double s = (q + lambda_) / (lambda_ + 1.0);
    return s * s;
}

double QuadraticCost::marginal_cost(double q) const {
    require_quality(q);
    return 2.0 * (q + lambda_) / ((lambda_ + 1.0) * (lambda_ + 1.0));
}

double QuadraticCost::inverse_marginal(double m) const {
    const double root = (lambda_ + 1.0) * (lambda_ + 1.0) * m / 2.0 - lambda_;
    return std::clamp(root, 0.0, 1.0);
}

}  // namespace crowdmech

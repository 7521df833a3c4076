#ifndef CROWDMECH_COST_MODEL_HPP
#define CROWDMECH_COST_MODEL_HPP

namespace crowdmech {

/// Throws std::domain_error unless q lies in [0, 1].
void require_quality(double q);

/**
 * Worker cost of producing a solution of quality q, defined on [0, 1].
 *
 * Every implementation must satisfy the structural contract assumed by the
 * mechanism analysis:
 *   - cost is convex and differentiable on [0, 1],
 *   - marginal_cost(q) > 0 everywhere (higher quality is more expensive),
 *   - cost(0) > 0 (even zero-quality work has a cost).
 *
 * inverse_marginal is the generalized inverse of marginal_cost: it returns
 * the quality whose marginal cost equals m, clamped to [0, 1] when the
 * unclamped solution falls outside the action space. All downstream modules
 * use only these three operations, so alternative convex models can be
 * dropped in behind this interface.
 */
class CostModel {
public:
    virtual ~CostModel() = default;

    virtual double cost(double q) const = 0;
    virtual double marginal_cost(double q) const = 0;
    virtual double inverse_marginal(double m) const = 0;

    /// Checks the structural contract on a uniform grid; throws
    /// std::domain_error naming the first violated assumption.
    void validate_assumptions(int grid_points = 101, double tol = 1e-9) const;
};

/**
 * The quadratic cost family cost(q) = (q + lambda)^2 / (lambda + 1)^2.
 *
 * lambda > 0 controls how sensitive the cost is to quality: smaller
 * lambda means a steeper relative climb toward q = 1. The family is
 * normalized so that cost(1) = 1 for every lambda.
 */
class QuadraticCost final : public CostModel {
public:
    explicit QuadraticCost(double lambda);  // throws std::domain_error if lambda <= 0

    double lambda() const { return lambda_; }

    double cost(double q) const override;
    double marginal_cost(double q) const override;
    double inverse_marginal(double m) const override;

private:
    double lambda_;
};

}  // namespace crowdmech

#endif  // CROWDMECH_COST_MODEL_HPP

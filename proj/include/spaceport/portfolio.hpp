/**
 * @file portfolio.hpp
 * @brief Closed-form global-minimum-variance and Markowitz weights computed
 *        directly from a precision matrix (no covariance inversion).
 *
 * GMV:        w = Omega 1 / (1' Omega 1),  risk = 1 / (1' Omega 1)
 * Markowitz:  w = { B Omega 1 - A Omega mu + mu* (C Omega mu - A Omega 1) } / D
 *             A = mu' Omega 1, B = mu' Omega mu, C = 1' Omega 1, D = B C - A^2
 *
 * Bilinear forms use the matrix exactly as given, so an asymmetric nodewise
 * estimate enters unsymmetrized.
 */

#pragma once

#include "spaceport/core_types.hpp"

#include <optional>
#include <string>

namespace spaceport
{

    enum class PortfolioKind
    {
        gmv,
        markowitz
    };

    std::string to_string(PortfolioKind kind);
    PortfolioKind portfolio_from_string(const std::string &name);

    /// Fully invested allocation: entries sum to one, shorts allowed.
    class WeightVector
    {
    public:
        WeightVector(Eigen::VectorXd values, PortfolioKind kind);

        const Eigen::VectorXd &values() const { return values_; }
        PortfolioKind kind() const { return kind_; }
        Eigen::Index dim() const { return values_.size(); }

    private:
        Eigen::VectorXd values_;
        PortfolioKind kind_;
    };

    struct PortfolioTarget
    {
        double mu_star = 0.0;
    };

    struct PortfolioSolution
    {
        WeightVector weights;
        double risk = 0.0; ///< variance of the optimal portfolio
    };

    /// Throws std::domain_error("degenerate precision for GMV") when |1'Omega 1| < 1e-12.
    PortfolioSolution gmv_weights(const PrecisionMatrix &omega);

    /**
     * Throws std::domain_error("mean vector collinear with ones") when D vanishes.
     * Risk is w' Sigma w when sigma is given, else w' Omega^{-1} w by linear solve.
     */
    PortfolioSolution markowitz_weights(const PrecisionMatrix &omega, const MeanVector &mu, PortfolioTarget target,
                                        const std::optional<CovarianceMatrix> &sigma = std::nullopt);

} // namespace spaceport

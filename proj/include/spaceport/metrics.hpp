/**
 * @file metrics.hpp
 * @brief Simulation error metrics and out-of-sample performance measures.
 */

#pragma once

#include "spaceport/core_types.hpp"
#include "spaceport/portfolio.hpp"

#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace spaceport
{

    struct SimulationMetrics
    {
        double e_v = 0.0; ///< |w_hat' S_hat w_hat / (w' S w) - 1|
        double e_w = 0.0; ///< ||w_hat - w||_1
        double e_r = 0.0; ///< |w_hat' (S_hat - S) w_hat|
    };

    struct PerformanceReport
    {
        double mean_return = 0.0;
        double variance = 0.0; ///< 1/(T-1) normalization
        double sharpe = 0.0;
        std::optional<double> turnover;
        bool with_cost = false;
        double cost_bps = 0.0;
    };

    double weight_error(const WeightVector &w_hat, const WeightVector &w_true);

    /// Throws std::domain_error when the true portfolio variance is not positive.
    double variance_error(const WeightVector &w_hat, const CovarianceMatrix &sigma_hat, const WeightVector &w_true,
                          const CovarianceMatrix &sigma_true);

    double risk_error(const WeightVector &w_hat, const CovarianceMatrix &sigma_hat, const CovarianceMatrix &sigma_true);

    /// Mean, 1/(T-1) variance and Sharpe ratio of a return series.
    /// Throws std::domain_error for zero variance (the Sharpe ratio is undefined).
    PerformanceReport oos_performance(std::span<const double> realized);

    /// w_t'x - c (1 + w_t'x) ||w_next - w_drift||_1
    double net_return(const Eigen::VectorXd &w_t, const Eigen::VectorXd &x_next, const Eigen::VectorXd &w_next,
                      const Eigen::VectorXd &w_drift, double cost);

    /// Mean L1 distance over (w_next, w_drift) pairs.
    double turnover(const std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> &weight_pairs);

    struct CovarianceFromPrecision
    {
        CovarianceMatrix covariance;
        bool floored = false; ///< an eigenvalue floor was applied before inversion
    };

    /**
     * Covariance implied by a precision estimate. Asymmetric input is
     * symmetrized first. Eigenvalues below 1e-8 * (largest eigenvalue) are
     * raised to that floor and the result is flagged.
     */
    CovarianceFromPrecision covariance_from_precision(const PrecisionMatrix &omega);

} // namespace spaceport

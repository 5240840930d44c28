/**
 * @file baselines.hpp
 * @brief Comparator estimators: nodewise lasso precision and Ledoit-Wolf shrinkage.
 */

#pragma once

#include "spaceport/core_types.hpp"

#include <optional>

namespace spaceport
{

    /**
     * Per-node lasso settings. Each node solves
     *
     *     min_g  1/(2n) ||x_j - X_{-j} g||^2 + lambda_j ||g||_1
     *
     * on centered data. With fixed_lambda empty, lambda_j is picked by
     *     GIC(lambda) = log(RSS / n) + k * log(p) * log(log n) / n
     * over a geometric grid from the smallest all-zero lambda down to 1% of it.
     */
    struct NodewiseConfig
    {
        std::optional<double> fixed_lambda;
        int grid_size = 30;
        double coord_tolerance = 1e-6;
        int max_sweeps = 1000;

        void validate() const;
    };

    struct NodewiseFit
    {
        PrecisionMatrix precision; ///< rows Theta_j = (1, -gamma_j) / tau_j^2, not symmetrized
        Eigen::MatrixXd gamma;     ///< row j: coefficients of node j's regression, zero diagonal
        Eigen::VectorXd lambdas;
        Eigen::VectorXd tau2;
        bool converged = true;
    };

    NodewiseFit fit_nodewise_detailed(const ReturnsMatrix &x, const NodewiseConfig &cfg);
    PrecisionMatrix fit_nodewise(const ReturnsMatrix &x, const NodewiseConfig &cfg);

    struct LedoitWolfFit
    {
        CovarianceMatrix covariance;
        PrecisionMatrix precision;
        double intensity = 0.0; ///< b^2 / d^2, weight on the scaled-identity target
        double target_scale = 0.0; ///< m = trace(S) / p
    };

    /// Shrinks the 1/n sample covariance toward m*I. Throws on all-constant data.
    LedoitWolfFit fit_ledoit_wolf(const ReturnsMatrix &x);

} // namespace spaceport

/**
 * @file space.hpp
 * @brief Joint sparse partial-correlation estimation.
 *
 * Minimizes, over partial correlations rho and diagonal precisions omega,
 *
 *     1/2 * sum_i eta_i * || X_i - sum_{j != i} beta_ij X_j ||^2 + lambda * sum_{i<j} |rho_ij|,
 *     beta_ij = rho_ij * sqrt(omega_jj / omega_ii),
 *
 * by alternating a rho-step (cyclic coordinate descent with soft
 * thresholding and active-set scheduling, omega and eta held fixed) with an
 * omega-step (omega_ii = n / RSS_i).
 *
 * Working scale: columns are centered and, when standardize is on, scaled
 * so that ||X_i||^2 = n. Omega is mapped back to the input scale on output;
 * rho is scale free.
 */

#pragma once

#include "spaceport/core_types.hpp"

#include <optional>
#include <vector>

namespace spaceport
{

    enum class WeightMode
    {
        uniform,  ///< eta_i = 1
        precision ///< eta_i = omega_ii, refreshed every outer iteration
    };

    struct SpaceConfig
    {
        std::optional<double> lambda; ///< empty = auto (BIC over a geometric grid)
        WeightMode weight_mode = WeightMode::uniform;
        int outer_iterations = 3;
        double coord_tolerance = 1e-6;
        double kkt_tolerance = 1e-6; ///< max subgradient violation on the working scale
        int max_sweeps = 1000;
        int lambda_grid_size = 30;
        bool standardize = true;

        /// Throws std::invalid_argument on out-of-range fields.
        void validate() const;
    };

    struct LambdaScore
    {
        double lambda = 0.0;
        double score = 0.0;
        std::size_t nonzero_count = 0;
    };

    struct SpaceFit
    {
        SpaceDecomposition decomposition; ///< input scale
        double lambda_used = 0.0;
        std::vector<double> objective_trace;    ///< penalized loss at the end of each rho-step
        std::vector<double> step_start_objective; ///< penalized loss at the start of each rho-step
        std::vector<int> sweeps_per_outer;
        bool converged = false;
        bool clamped = false; ///< some |rho| > 1 was clamped to 1 - 1e-10

        // Working-scale state held fixed by the final rho-step; lets callers
        // re-derive the optimality conditions independently.
        Eigen::VectorXd working_omega;
        Eigen::VectorXd eta;
        Eigen::VectorXd column_scale; ///< per-column variance divisor (1/n), ones if not standardized

        std::vector<LambdaScore> score_table; ///< populated when lambda was auto
    };

    /// Penalized loss on x as given (no centering). eta must be positive.
    double joint_loss(const Eigen::MatrixXd &x, const SpaceDecomposition &d, const Eigen::VectorXd &eta, double lambda);
    double joint_loss(const ReturnsMatrix &x, const SpaceDecomposition &d, const Eigen::VectorXd &eta, double lambda);

    /// Centered (and optionally unit 1/n-variance) copy of the data the solver works on.
    struct WorkingData
    {
        Eigen::MatrixXd z;
        Eigen::VectorXd column_scale; ///< ||x_i - mean||^2 / n when standardized, else ones
    };

    /// Throws std::invalid_argument naming the first zero-variance column.
    WorkingData prepare_working_data(const ReturnsMatrix &x, bool standardize);

    /// Smallest lambda at which the first rho-step leaves every rho at zero.
    double lambda_max(const ReturnsMatrix &x, const SpaceConfig &cfg);

    struct LambdaSelection
    {
        double lambda = 0.0;
        std::vector<LambdaScore> score_table;
        bool path_truncated = false; ///< stopped at a non-convergent, clamped or saturated point
    };

    /// BIC-type score  sum_i [n log(RSS_i / n) + log(n) * #{j : rho_ij != 0}]  over a
    /// geometric grid from lambda_max down to lambda_max / 100. The path stops at
    /// the first point that fails to converge, needs clamping, or gives some node
    /// n - 1 or more neighbours; only the points before it are scored.
    LambdaSelection select_lambda(const ReturnsMatrix &x, const SpaceConfig &cfg);

    SpaceFit fit_space(const ReturnsMatrix &x, const SpaceConfig &cfg);

    /// Precision matrix of a fit, tagged by the weight mode it was fitted with.
    PrecisionMatrix space_precision(const SpaceFit &fit, WeightMode mode);

} // namespace spaceport

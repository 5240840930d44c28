/**
 * @file backtest.hpp
 * @brief Rolling-sample out-of-sample evaluation with buy-and-hold drift
 *        and proportional transaction costs.
 *
 * For each test period the estimator is refitted on the preceding
 * fixed-width window, the new weights are held over the next period, and
 * the trade from the drifted previous holding into the new weights is
 * charged at rate c against that period's return:
 *
 *     gross_{t+1} = w_t' x_{t+1}
 *     net_{t+1}   = gross_{t+1} - c (1 + gross_{t+1}) ||w_t - w_{t-1}^+||_1
 *     w_t^+       = w_t .* (1 + x_{t+1}) / (1 + w_t' x_{t+1})
 *
 * The first test period has no prior holding; by default it is treated as
 * already positioned (no cost). charge_initial_trade charges ||w||_1 instead.
 */

#pragma once

#include "spaceport/baselines.hpp"
#include "spaceport/core_types.hpp"
#include "spaceport/metrics.hpp"
#include "spaceport/portfolio.hpp"
#include "spaceport/space.hpp"

#include <optional>
#include <string>
#include <vector>

namespace spaceport
{

    inline constexpr double monthly_target_return = 0.007974;
    inline constexpr double daily_target_return = 0.000378;
    inline constexpr double default_cost_rate = 0.0050; ///< 50 basis points

    struct BacktestConfig
    {
        int train_length = 60;
        EstimatorTag estimator = EstimatorTag::space_unweighted;
        PortfolioKind portfolio = PortfolioKind::gmv;
        std::optional<PortfolioTarget> target; ///< required for Markowitz
        double cost = default_cost_rate;       ///< proportional, 0.005 = 50 bps
        SpaceConfig space;
        NodewiseConfig nodewise;
        int rebalance_every = 1;
        bool charge_initial_trade = false;
        int jobs = 1;
        std::optional<PrecisionMatrix> exact_precision; ///< required for the "exact" estimator

        void validate() const;
    };

    /// Buy-and-hold drift of weights over one period of returns.
    /// Throws std::domain_error("portfolio value non-positive") when 1 + w'x <= 0.
    Eigen::VectorXd drift_weights(const Eigen::VectorXd &w, const Eigen::VectorXd &x_next);

    struct PeriodRecord
    {
        std::string date; ///< period whose return is realized
        double gross = 0.0;
        double net = 0.0;
        double turnover = 0.0; ///< ||w_t - w_{t-1}^+||_1 traded at the start of the period
        int weight_id = 0;     ///< index of the refit whose weights are held
    };

    struct RefitDiagnostics
    {
        int weight_id = 0;
        std::string window_start;
        std::string window_end;
        std::optional<double> lambda_used;
        bool converged = true;
        std::size_t nonzero_count = 0;
        bool markowitz_fallback = false; ///< degenerate window, GMV weights used
        std::string note;
    };

    struct BacktestReport
    {
        EstimatorTag estimator = EstimatorTag::space_unweighted;
        PortfolioKind portfolio = PortfolioKind::gmv;
        std::vector<PeriodRecord> records;
        PerformanceReport without_cost;
        PerformanceReport with_cost;
        double turnover = 0.0;
        std::vector<RefitDiagnostics> refits;
        std::vector<Eigen::VectorXd> weights; ///< post-rebalance weights per refit
    };

    /// Weights and diagnostics for one estimation window.
    struct WindowWeights
    {
        Eigen::VectorXd weights;
        RefitDiagnostics diagnostics;
    };

    WindowWeights window_weights(const ReturnsMatrix &window, const BacktestConfig &cfg);

    BacktestReport run_backtest(const ReturnsMatrix &x, const BacktestConfig &cfg);

} // namespace spaceport

/**
 * @file serialize.hpp
 * @brief JSON and CSV writers for fits, study tables and backtest reports.
 *
 * JSON documents use nlohmann::json. Doubles are written with 17 significant
 * digits so files round-trip exactly.
 */

#pragma once

#include "spaceport/backtest.hpp"
#include "spaceport/simulation.hpp"
#include "spaceport/space.hpp"

#include <json.hpp>

#include <ostream>
#include <string>
#include <vector>

namespace spaceport
{

    /// lambda_used, converged, omega_diag and the nonzero edges {i, j, rho} with asset labels.
    nlohmann::json space_fit_json(const SpaceFit &fit, const std::vector<std::string> &labels);

    /// Header row of asset labels, then one labelled row per asset.
    void write_precision_csv(std::ostream &out, const PrecisionMatrix &omega, const std::vector<std::string> &labels);

    /// Long format: dgp,n,p,portfolio,estimator,metric,mean,stderr,replications,exclusions.
    void write_study_csv(std::ostream &out, const StudyResult &result);
    nlohmann::json study_json(const StudyResult &result);

    nlohmann::json backtest_json(const BacktestReport &report);

    /// date,gross,net,turnover
    void write_period_csv(std::ostream &out, const BacktestReport &report);

    /// One row per (report, cost block): estimator,portfolio,cost_block,return,variance,sharpe,turnover.
    void write_summary_csv(std::ostream &out, const std::vector<BacktestReport> &reports);

} // namespace spaceport

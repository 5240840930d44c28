#include "spaceport/backtest.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace spaceport
{

    void BacktestConfig::validate() const
    {
        if (train_length < 3)
            throw std::invalid_argument("training window must hold at least 3 periods");
        if (!(cost >= 0.0) || !std::isfinite(cost))
            throw std::invalid_argument("transaction cost must be finite and non-negative");
        if (rebalance_every < 1)
            throw std::invalid_argument("rebalance_every must be >= 1");
        if (portfolio == PortfolioKind::markowitz && !target)
            throw std::invalid_argument("Markowitz backtests need a target return");
        if (estimator == EstimatorTag::exact && !exact_precision)
            throw std::invalid_argument("the exact estimator needs an injected precision matrix");
        if (estimator == EstimatorTag::poet)
            throw std::invalid_argument("poet is a reserved tag; it cannot be estimated here");
        space.validate();
        nodewise.validate();
    }

    Eigen::VectorXd drift_weights(const Eigen::VectorXd &w, const Eigen::VectorXd &x_next)
    {
        if (w.size() != x_next.size())
            throw std::invalid_argument("drift: weight and return dimensions differ");
        const double growth = 1.0 + w.dot(x_next);
        if (!(growth > 0.0))
            throw std::domain_error("portfolio value non-positive");
        return (w.array() * (1.0 + x_next.array())).matrix() / growth;
    }

    WindowWeights window_weights(const ReturnsMatrix &window, const BacktestConfig &cfg)
    {
        WindowWeights out;
        out.diagnostics.window_start = window.period_index().front();
        out.diagnostics.window_end = window.period_index().back();

        std::optional<PrecisionMatrix> omega;
        switch (cfg.estimator)
        {
        case EstimatorTag::space_unweighted:
        case EstimatorTag::space_weighted:
        {
            SpaceConfig sc = cfg.space;
            sc.weight_mode =
                cfg.estimator == EstimatorTag::space_weighted ? WeightMode::precision : WeightMode::uniform;
            const SpaceFit fit = fit_space(window, sc);
            out.diagnostics.lambda_used = fit.lambda_used;
            out.diagnostics.converged = fit.converged;
            out.diagnostics.nonzero_count = fit.decomposition.nonzero_count();
            omega.emplace(space_precision(fit, sc.weight_mode));
            break;
        }
        case EstimatorTag::nodewise:
        {
            NodewiseFit fit = fit_nodewise_detailed(window, cfg.nodewise);
            out.diagnostics.converged = fit.converged;
            omega.emplace(std::move(fit.precision));
            break;
        }
        case EstimatorTag::ledoit_wolf:
            omega.emplace(fit_ledoit_wolf(window).precision);
            break;
        case EstimatorTag::exact:
            omega.emplace(*cfg.exact_precision);
            break;
        case EstimatorTag::poet:
            throw std::invalid_argument("poet is a reserved tag; it cannot be estimated here");
        }

        if (cfg.portfolio == PortfolioKind::markowitz)
        {
            const MeanVector mu = sample_moments(window).mean;
            try
            {
                out.weights = markowitz_weights(*omega, mu, *cfg.target).weights.values();
                return out;
            }
            catch (const std::domain_error &e)
            {
                out.diagnostics.markowitz_fallback = true;
                out.diagnostics.note = e.what();
            }
        }
        out.weights = gmv_weights(*omega).weights.values();
        return out;
    }

    BacktestReport run_backtest(const ReturnsMatrix &x, const BacktestConfig &cfg)
    {
        cfg.validate();
        const Eigen::Index n = x.periods();
        const Eigen::Index train = cfg.train_length;
        if (n <= train)
            throw std::invalid_argument("backtest needs more periods (" + std::to_string(n) +
                                        ") than the training window (" + std::to_string(train) + ")");
        const Eigen::Index tests = n - train;

        // Pass 1: refits depend only on data and may run concurrently.
        std::vector<Eigen::Index> refit_at;
        for (Eigen::Index s = 0; s < tests; s += cfg.rebalance_every)
            refit_at.push_back(s);
        std::vector<std::optional<WindowWeights>> fits(refit_at.size());
        std::vector<std::string> errors(refit_at.size());
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (std::size_t k = next++; k < refit_at.size(); k = next++)
            {
                try
                {
                    fits[k].emplace(window_weights(x.window(refit_at[k], train), cfg));
                    fits[k]->diagnostics.weight_id = static_cast<int>(k);
                }
                catch (const std::exception &e)
                {
                    errors[k] = e.what();
                }
            }
        };
        const int jobs = std::max(1, std::min<int>(cfg.jobs, static_cast<int>(refit_at.size())));
        if (jobs == 1)
            worker();
        else
        {
            std::vector<std::thread> pool;
            for (int j = 0; j < jobs; ++j)
                pool.emplace_back(worker);
            for (auto &t : pool)
                t.join();
        }
        for (std::size_t k = 0; k < refit_at.size(); ++k)
            if (!errors[k].empty())
                throw std::runtime_error("estimation window " + std::to_string(refit_at[k]) + " (" +
                                         x.period_index()[static_cast<std::size_t>(refit_at[k])] +
                                         " onward) failed: " + errors[k]);

        // Pass 2: drift and cost accounting in time order.
        BacktestReport report;
        report.estimator = cfg.estimator;
        report.portfolio = cfg.portfolio;
        std::vector<double> gross, net;
        std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> trades;
        Eigen::VectorXd held;
        Eigen::VectorXd drifted;
        std::size_t refit = 0;
        int weight_id = -1;
        for (Eigen::Index s = 0; s < tests; ++s)
        {
            const Eigen::Index row = train + s;
            const Eigen::VectorXd x_next = x.values().row(row).transpose();
            if (refit < refit_at.size() && refit_at[refit] == s)
            {
                held = fits[refit]->weights;
                report.weights.push_back(held);
                report.refits.push_back(fits[refit]->diagnostics);
                weight_id = static_cast<int>(refit);
                ++refit;
                if (s == 0)
                    drifted = cfg.charge_initial_trade ? Eigen::VectorXd::Zero(held.size()) : held;
            }
            else
                held = drifted;

            PeriodRecord rec;
            rec.date = x.period_index()[static_cast<std::size_t>(row)];
            rec.gross = held.dot(x_next);
            rec.net = net_return(held, x_next, held, drifted, cfg.cost);
            rec.turnover = (held - drifted).lpNorm<1>();
            rec.weight_id = weight_id;
            trades.emplace_back(held, drifted);
            gross.push_back(rec.gross);
            net.push_back(rec.net);
            report.records.push_back(std::move(rec));

            drifted = drift_weights(held, x_next);
        }

        report.turnover = turnover(trades);
        report.without_cost = oos_performance(gross);
        report.with_cost = oos_performance(net);
        report.with_cost.with_cost = true;
        report.with_cost.cost_bps = cfg.cost * 1e4;
        report.with_cost.turnover = report.turnover;
        return report;
    }

} // namespace spaceport

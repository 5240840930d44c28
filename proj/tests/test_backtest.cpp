#include "oracles.hpp"
#include "spaceport/backtest.hpp"
#include "spaceport/returns_csv.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <string>

using namespace spaceport;

namespace
{
    ReturnsMatrix hand_trace() { return read_returns_csv(std::string(SPACEPORT_FIXTURE_DIR) + "/hand_trace.csv"); }

    PrecisionMatrix hand_omega() { return PrecisionMatrix(Eigen::Matrix2d{{2.0, -0.5}, {-0.5, 1.0}}, EstimatorTag::exact); }

    BacktestConfig hand_config(PortfolioKind kind)
    {
        BacktestConfig cfg;
        cfg.train_length = 3;
        cfg.estimator = EstimatorTag::exact;
        cfg.exact_precision = hand_omega();
        cfg.portfolio = kind;
        cfg.target = PortfolioTarget{0.01};
        cfg.cost = 0.005;
        return cfg;
    }

    ReturnsMatrix random_returns(int n, int p, std::uint64_t seed)
    {
        std::mt19937_64 rng(seed);
        Eigen::MatrixXd x = 0.03 * oracle::gaussian_matrix(n, p, rng);
        x.array() += 0.005;
        return ReturnsMatrix(x);
    }
} // namespace

TEST_SUITE("backtest")
{
    TEST_CASE("defaults")
    {
        const BacktestConfig cfg;
        CHECK(cfg.cost == 0.005);
        CHECK(cfg.train_length == 60);
        CHECK(monthly_target_return == 0.007974);
        CHECK(daily_target_return == 0.000378);
        BacktestConfig m;
        m.portfolio = PortfolioKind::markowitz;
        CHECK_THROWS_AS(m.validate(), std::invalid_argument);
        BacktestConfig e;
        e.estimator = EstimatorTag::exact;
        CHECK_THROWS_AS(e.validate(), std::invalid_argument);
    }

    TEST_CASE("buy-and-hold drift")
    {
        const Eigen::VectorXd d = drift_weights(Eigen::Vector2d(0.5, 0.5), Eigen::Vector2d(0.02, 0.0));
        CHECK(d[0] == doctest::Approx(0.504950495).epsilon(1e-8));
        CHECK(d[1] == doctest::Approx(0.495049505).epsilon(1e-8));
        std::mt19937_64 rng(1);
        for (int k = 0; k < 100; ++k)
        {
            const Eigen::VectorXd w = oracle::gaussian_matrix(6, 1, rng);
            const Eigen::VectorXd w1 = w.array() - (w.sum() - 1.0) / 6.0;
            const Eigen::VectorXd x = 0.02 * oracle::gaussian_matrix(6, 1, rng);
            if (1.0 + w1.dot(x) <= 0.0)
                continue;
            CHECK(std::abs(drift_weights(w1, x).sum() - 1.0) < 1e-12);
        }
        CHECK_THROWS_AS(drift_weights(Eigen::Vector2d(2.0, -1.0), Eigen::Vector2d(-0.6, 0.5)), std::domain_error);
    }

    TEST_CASE("hand trace, GMV")
    {
        const auto r = run_backtest(hand_trace(), hand_config(PortfolioKind::gmv));
        REQUIRE(r.records.size() == 3);
        CHECK(r.refits.size() == 3);
        CHECK(r.records[0].date == "4");
        const double gross[] = {0.015, 0.0, 0.025};
        const double net[] = {0.015, -3.6945812807881771e-05, 0.024923125};
        const double trade[] = {0.0, 0.0073891625615763543, 0.015};
        for (int t = 0; t < 3; ++t)
        {
            CHECK(std::abs(r.records[t].gross - gross[t]) < 1e-12);
            CHECK(std::abs(r.records[t].net - net[t]) < 1e-12);
            CHECK(std::abs(r.records[t].turnover - trade[t]) < 1e-12);
        }
        CHECK(std::abs(r.without_cost.sharpe - 1.0596258856520351) < 1e-12);
        CHECK(std::abs(r.with_cost.mean_return - 0.013295393062397373) < 1e-12);
        CHECK(std::abs(r.with_cost.variance - 0.00015793054735388823) < 1e-12);
        CHECK(std::abs(r.with_cost.sharpe - 1.0579572303277165) < 1e-12);
        CHECK(std::abs(r.turnover - 0.0074630541871921179) < 1e-12);
    }

    TEST_CASE("hand trace, Markowitz with the degenerate first window logged")
    {
        const auto r = run_backtest(hand_trace(), hand_config(PortfolioKind::markowitz));
        REQUIRE(r.refits.size() == 3);
        CHECK(r.refits[0].markowitz_fallback);
        CHECK(r.refits[0].note == "mean vector collinear with ones");
        CHECK_FALSE(r.refits[1].markowitz_fallback);
        const double net[] = {0.015, -0.012438423645320197, 0.00495};
        for (int t = 0; t < 3; ++t)
            CHECK(std::abs(r.records[t].net - net[t]) < 1e-12);
        CHECK(std::abs(r.with_cost.sharpe - 0.18036984326386996) < 1e-12);
        CHECK(std::abs(r.without_cost.sharpe - 0.37796447300922725) < 1e-12);
        CHECK(std::abs(r.turnover - 0.49753694581280788) < 1e-12);
    }

    TEST_CASE("zero cost makes net equal gross; one record per test period")
    {
        const auto x = random_returns(40, 5, 2);
        for (auto est : {EstimatorTag::space_unweighted, EstimatorTag::ledoit_wolf, EstimatorTag::nodewise})
        {
            BacktestConfig cfg;
            cfg.train_length = 25;
            cfg.estimator = est;
            cfg.cost = 0.0;
            const auto r = run_backtest(x, cfg);
            CHECK(r.records.size() == 15);
            CHECK(r.refits.size() == 15);
            for (const auto &rec : r.records)
                CHECK(rec.net == rec.gross);
            CHECK(r.with_cost.sharpe == r.without_cost.sharpe);
        }
    }

    TEST_CASE("cost identities on random data")
    {
        const auto x = random_returns(50, 4, 3);
        BacktestConfig cfg;
        cfg.train_length = 30;
        cfg.estimator = EstimatorTag::ledoit_wolf;
        const auto r = run_backtest(x, cfg);
        double total = 0.0;
        for (const auto &rec : r.records)
        {
            CHECK(rec.net == doctest::Approx(rec.gross - 0.005 * (1 + rec.gross) * rec.turnover).epsilon(1e-14));
            CHECK(rec.net <= rec.gross);
            total += rec.turnover;
        }
        CHECK(r.records[0].turnover == 0.0);
        CHECK(r.turnover == doctest::Approx(total / r.records.size()));
        REQUIRE(r.with_cost.turnover);
        CHECK(*r.with_cost.turnover == r.turnover);
        CHECK(r.with_cost.cost_bps == doctest::Approx(50.0));
    }

    TEST_CASE("charging the initial trade")
    {
        const auto x = random_returns(40, 4, 4);
        BacktestConfig cfg;
        cfg.train_length = 30;
        cfg.estimator = EstimatorTag::ledoit_wolf;
        cfg.charge_initial_trade = true;
        const auto r = run_backtest(x, cfg);
        CHECK(r.records[0].turnover == doctest::Approx(r.weights[0].lpNorm<1>()));
        CHECK(r.records[0].net < r.records[0].gross);
    }

    TEST_CASE("rebalancing every k periods holds drifted weights in between")
    {
        const auto x = random_returns(40, 4, 5);
        BacktestConfig cfg;
        cfg.train_length = 30;
        cfg.estimator = EstimatorTag::ledoit_wolf;
        cfg.rebalance_every = 3;
        const auto r = run_backtest(x, cfg);
        CHECK(r.records.size() == 10);
        CHECK(r.refits.size() == 4);
        for (std::size_t t = 0; t < r.records.size(); ++t)
        {
            CHECK(r.records[t].weight_id == static_cast<int>(t / 3));
            if (t % 3 != 0)
                CHECK(r.records[t].turnover == 0.0);
        }
    }

    TEST_CASE("deterministic across runs and thread counts")
    {
        const auto x = random_returns(45, 6, 6);
        BacktestConfig cfg;
        cfg.train_length = 30;
        const auto a = run_backtest(x, cfg);
        cfg.jobs = 4;
        const auto b = run_backtest(x, cfg);
        REQUIRE(a.records.size() == b.records.size());
        for (std::size_t t = 0; t < a.records.size(); ++t)
            CHECK(a.records[t].net == b.records[t].net);
    }

    TEST_CASE("population oracle: long GMV run with the true precision")
    {
        const int p = 5, train = 10, tests = 5000;
        Eigen::MatrixXd sigma(p, p);
        for (int i = 0; i < p; ++i)
            for (int j = 0; j < p; ++j)
                sigma(i, j) = 1e-3 * std::pow(0.4, std::abs(i - j));
        std::mt19937_64 rng(7);
        Eigen::MatrixXd x = oracle::gaussian_sample(train + tests, sigma, rng);
        x.array() += 0.001;
        BacktestConfig cfg;
        cfg.train_length = train;
        cfg.estimator = EstimatorTag::exact;
        cfg.exact_precision = PrecisionMatrix(sigma.inverse(), EstimatorTag::exact);
        cfg.cost = 0.0;
        const auto r = run_backtest(ReturnsMatrix(x), cfg);
        const double var = 1.0 / sigma.inverse().sum();
        CHECK(std::abs(r.without_cost.variance / var - 1.0) < 0.05);
        CHECK(std::abs(r.without_cost.mean_return - 0.001) < 4.0 * std::sqrt(var / tests));
    }

    TEST_CASE("too short a sample is rejected")
    {
        BacktestConfig cfg;
        cfg.train_length = 6;
        cfg.estimator = EstimatorTag::ledoit_wolf;
        CHECK_THROWS_AS(run_backtest(hand_trace(), cfg), std::invalid_argument);
    }
}

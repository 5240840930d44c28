#include "oracles.hpp"
#include "spaceport/portfolio.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace spaceport;

namespace
{
    PrecisionMatrix exact(const Eigen::MatrixXd &m) { return PrecisionMatrix(m, EstimatorTag::exact); }

    /// Random point of the affine set {v : A v = b} near x0.
    Eigen::VectorXd random_feasible(const Eigen::MatrixXd &a, const Eigen::VectorXd &x0, std::mt19937_64 &rng)
    {
        const Eigen::MatrixXd step = oracle::gaussian_matrix(static_cast<int>(x0.size()), 1, rng);
        const Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
        const Eigen::MatrixXd null = lu.kernel();
        return x0 + null * (null.transpose() * step);
    }
} // namespace

TEST_SUITE("portfolio")
{
    TEST_CASE("weight vector budget constraint")
    {
        CHECK_NOTHROW(WeightVector(Eigen::Vector3d(0.5, 0.7, -0.2), PortfolioKind::gmv));
        CHECK_THROWS_AS(WeightVector(Eigen::Vector2d(0.5, 0.6), PortfolioKind::gmv), std::invalid_argument);
        CHECK_THROWS_AS(WeightVector(Eigen::Vector2d(NAN, 1.0), PortfolioKind::gmv), std::invalid_argument);
        CHECK(portfolio_from_string("markowitz") == PortfolioKind::markowitz);
        CHECK_THROWS_AS(portfolio_from_string("risk-parity"), std::invalid_argument);
    }

    TEST_CASE("GMV examples")
    {
        const auto a = gmv_weights(exact(Eigen::Matrix2d::Identity()));
        CHECK(a.weights.values().isApprox(Eigen::Vector2d(0.5, 0.5)));
        CHECK(a.risk == doctest::Approx(0.5));
        const auto b = gmv_weights(exact(Eigen::Vector2d(1, 4).asDiagonal().toDenseMatrix()));
        CHECK(b.weights.values()[0] == doctest::Approx(0.2));
        CHECK(b.weights.values()[1] == doctest::Approx(0.8));
        CHECK(b.risk == doctest::Approx(0.2));
        CHECK(b.weights.kind() == PortfolioKind::gmv);
    }

    TEST_CASE("GMV on Toeplitz(0.15) matches a linear solve")
    {
        Eigen::Matrix3d sigma;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                sigma(i, j) = std::pow(0.15, std::abs(i - j));
        const Eigen::Vector3d y = sigma.ldlt().solve(Eigen::Vector3d::Ones());
        const auto w = gmv_weights(exact(sigma.inverse())).weights.values();
        CHECK((w - y / y.sum()).cwiseAbs().maxCoeff() < 1e-10);
    }

    TEST_CASE("GMV degenerate precision")
    {
        CHECK_THROWS_WITH_AS(gmv_weights(exact(Eigen::Matrix2d{{1, -1}, {-1, 1}})),
                             "degenerate precision for GMV", std::domain_error);
    }

    TEST_CASE("GMV scale invariance")
    {
        std::mt19937_64 rng(1);
        const Eigen::MatrixXd omega = oracle::random_spd(6, rng);
        const auto a = gmv_weights(exact(omega));
        const auto b = gmv_weights(exact(7.5 * omega));
        CHECK((a.weights.values() - b.weights.values()).cwiseAbs().maxCoeff() < 1e-14);
        CHECK(b.risk == doctest::Approx(a.risk / 7.5).epsilon(1e-12));
    }

    TEST_CASE("Markowitz example and degenerate mean")
    {
        const auto s = markowitz_weights(exact(Eigen::Matrix2d::Identity()), MeanVector(Eigen::Vector2d(0.01, 0.02)),
                                         PortfolioTarget{0.015});
        CHECK(s.weights.values()[0] == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(s.weights.values()[1] == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(s.weights.kind() == PortfolioKind::markowitz);
        CHECK_THROWS_WITH_AS(markowitz_weights(exact(Eigen::Matrix3d::Identity()),
                                               MeanVector(Eigen::Vector3d::Constant(0.004)), PortfolioTarget{0.01}),
                             "mean vector collinear with ones", std::domain_error);
    }

    TEST_CASE("Markowitz constraints and KKT oracle on random instances")
    {
        std::mt19937_64 rng(2);
        std::normal_distribution<double> z(0.0, 0.02);
        for (int rep = 0; rep < 50; ++rep)
        {
            const int p = 2 + rep % 6;
            const Eigen::MatrixXd omega = oracle::random_spd(p, rng);
            Eigen::VectorXd mu(p);
            for (auto &m : mu)
                m = z(rng);
            const double target = z(rng);
            const Eigen::MatrixXd sigma = omega.inverse();
            const auto s = markowitz_weights(exact(omega), MeanVector(mu), PortfolioTarget{target},
                                             CovarianceMatrix(sigma));
            const Eigen::VectorXd w = s.weights.values();
            CHECK(std::abs(w.sum() - 1.0) < 1e-8);
            CHECK(std::abs(w.dot(mu) - target) < 1e-8);
            const Eigen::VectorXd ref = oracle::constrained_min_variance(0.5 * (sigma + sigma.transpose()), mu, target);
            CHECK((w - ref).cwiseAbs().maxCoeff() < 1e-8 * std::max(1.0, ref.cwiseAbs().maxCoeff()));
            // risk without a supplied covariance goes through a linear solve
            const auto t = markowitz_weights(exact(omega), MeanVector(mu), PortfolioTarget{target});
            CHECK(t.risk == doctest::Approx(s.risk).epsilon(1e-9));
        }
    }

    TEST_CASE("optimality certificates for p <= 4")
    {
        std::mt19937_64 rng(3);
        std::normal_distribution<double> z(0.0, 0.05);
        for (int p = 2; p <= 4; ++p)
        {
            const Eigen::MatrixXd omega = oracle::random_spd(p, rng);
            const Eigen::MatrixXd sigma = omega.inverse();
            Eigen::VectorXd mu(p);
            for (auto &m : mu)
                m = z(rng);

            const Eigen::VectorXd g = gmv_weights(exact(omega)).weights.values();
            const double gv = g.dot(sigma * g);
            const Eigen::MatrixXd ones = Eigen::RowVectorXd::Ones(p);
            for (int k = 0; k < 1000; ++k)
            {
                const Eigen::VectorXd v = random_feasible(ones, g, rng);
                CHECK(gv <= v.dot(sigma * v) + 1e-14);
            }

            const double target = 0.03;
            const Eigen::VectorXd m = markowitz_weights(exact(omega), MeanVector(mu), {target}).weights.values();
            const double mv = m.dot(sigma * m);
            Eigen::MatrixXd cons(2, p);
            cons.row(0).setOnes();
            cons.row(1) = mu.transpose();
            for (int k = 0; k < 1000; ++k)
            {
                const Eigen::VectorXd v = random_feasible(cons, m, rng);
                CHECK(mv <= v.dot(sigma * v) + 1e-12);
            }
        }
    }

    TEST_CASE("Markowitz at the GMV expected return is the GMV portfolio")
    {
        std::mt19937_64 rng(4);
        std::normal_distribution<double> z(0.0, 0.02);
        for (int rep = 0; rep < 20; ++rep)
        {
            const int p = 3 + rep % 5;
            const Eigen::MatrixXd omega = oracle::random_spd(p, rng);
            Eigen::VectorXd mu(p);
            for (auto &m : mu)
                m = z(rng);
            const Eigen::VectorXd g = gmv_weights(exact(omega)).weights.values();
            const Eigen::VectorXd m = markowitz_weights(exact(omega), MeanVector(mu), {g.dot(mu)}).weights.values();
            CHECK((m - g).cwiseAbs().maxCoeff() < 1e-8);
        }
    }

    TEST_CASE("asymmetric precision is used as given and still meets both constraints")
    {
        Eigen::Matrix3d theta{{2.0, -0.3, 0.1}, {-0.5, 1.5, -0.2}, {0.0, -0.4, 1.0}};
        const PrecisionMatrix nw(theta, EstimatorTag::nodewise);
        const Eigen::Vector3d mu(0.01, 0.03, -0.005);
        const Eigen::VectorXd g = gmv_weights(nw).weights.values();
        const Eigen::Vector3d u = theta.rowwise().sum();
        CHECK((g - u / u.sum()).cwiseAbs().maxCoeff() < 1e-15);
        const Eigen::VectorXd w = markowitz_weights(nw, MeanVector(mu), {0.02}).weights.values();
        CHECK(std::abs(w.sum() - 1.0) < 1e-12);
        CHECK(std::abs(w.dot(mu) - 0.02) < 1e-12);
    }
}

#include "oracles.hpp"
#include "spaceport/baselines.hpp"
#include "spaceport/portfolio.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace spaceport;

namespace
{
    ReturnsMatrix sample(int n, const Eigen::MatrixXd &sigma, std::uint64_t seed)
    {
        std::mt19937_64 rng(seed);
        return ReturnsMatrix(oracle::gaussian_sample(n, sigma, rng));
    }

    double soft(double g, double l) { return g > l ? g - l : g < -l ? g + l : 0.0; }
} // namespace

TEST_SUITE("baselines")
{
    TEST_CASE("nodewise: independent columns at large n recover the identity")
    {
        const auto x = sample(2000, Eigen::MatrixXd::Identity(5, 5), 1);
        const auto theta = fit_nodewise(x, NodewiseConfig{}).values();
        CHECK((theta - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() < 0.1);
    }

    TEST_CASE("nodewise: lambda at the grid maximum gives inverse variances")
    {
        const auto x = sample(50, Eigen::Matrix3d{{1, 0.4, 0.1}, {0.4, 1, 0.3}, {0.1, 0.3, 1}}, 2);
        const Eigen::MatrixXd c = x.values().rowwise() - x.values().colwise().mean();
        const Eigen::MatrixXd s = c.transpose() * c / 50.0;
        double top = 0.0;
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k)
                if (j != k)
                    top = std::max(top, std::abs(s(j, k)));
        NodewiseConfig cfg;
        cfg.fixed_lambda = top;
        const auto fit = fit_nodewise_detailed(x, cfg);
        CHECK(fit.gamma.isZero(0.0));
        for (int j = 0; j < 3; ++j)
            CHECK(fit.precision.values()(j, j) == doctest::Approx(1.0 / s(j, j)).epsilon(1e-12));
    }

    TEST_CASE("nodewise: p = 2 matches the scalar soft-threshold solution")
    {
        const auto x = sample(40, Eigen::Matrix2d{{1.0, 0.6}, {0.6, 2.0}}, 3);
        const Eigen::MatrixXd c = x.values().rowwise() - x.values().colwise().mean();
        const Eigen::MatrixXd s = c.transpose() * c / 40.0;
        for (double lambda : {0.0, 0.05, 0.2, 0.5})
        {
            NodewiseConfig cfg;
            cfg.fixed_lambda = lambda;
            cfg.coord_tolerance = 1e-12;
            const auto fit = fit_nodewise_detailed(x, cfg);
            for (int j = 0; j < 2; ++j)
            {
                const int k = 1 - j;
                const double g = soft(s(j, k), lambda) / s(k, k);
                const double tau2 = s(j, j) - 2 * g * s(j, k) + g * g * s(k, k) + lambda * std::abs(g);
                CHECK(fit.gamma(j, k) == doctest::Approx(g).epsilon(1e-10));
                CHECK(fit.tau2[j] == doctest::Approx(tau2).epsilon(1e-10));
                CHECK(fit.precision.values()(j, j) == doctest::Approx(1.0 / tau2).epsilon(1e-10));
                CHECK(fit.precision.values()(j, k) == doctest::Approx(-g / tau2).epsilon(1e-10));
            }
        }
    }

    TEST_CASE("nodewise: per-node KKT conditions and asymmetry")
    {
        Eigen::MatrixXd sigma(8, 8);
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 8; ++j)
                sigma(i, j) = std::pow(0.5, std::abs(i - j));
        for (std::uint64_t seed : {4u, 5u, 6u})
        {
            const auto x = sample(60, sigma, seed);
            const auto fit = fit_nodewise_detailed(x, NodewiseConfig{});
            CHECK(fit.converged);
            CHECK_FALSE(fit.precision.is_symmetric());
            CHECK(fit.precision.source() == EstimatorTag::nodewise);
            const Eigen::MatrixXd c = x.values().rowwise() - x.values().colwise().mean();
            for (int j = 0; j < 8; ++j)
            {
                const Eigen::VectorXd r = c.col(j) - c * fit.gamma.row(j).transpose();
                for (int k = 0; k < 8; ++k)
                {
                    if (k == j)
                        continue;
                    const double grad = -c.col(k).dot(r) / 60.0;
                    const double g = fit.gamma(j, k);
                    if (g != 0.0)
                        CHECK(std::abs(grad + std::copysign(fit.lambdas[j], g)) <= 1e-4);
                    else
                        CHECK(std::abs(grad) <= fit.lambdas[j] + 1e-4);
                }
            }
        }
    }

    TEST_CASE("nodewise: errors")
    {
        Eigen::MatrixXd v = sample(10, Eigen::MatrixXd::Identity(3, 3), 7).values();
        v.col(2).setConstant(1.0);
        CHECK_THROWS_AS(fit_nodewise(ReturnsMatrix(v), NodewiseConfig{}), std::invalid_argument);
        NodewiseConfig bad;
        bad.grid_size = 1;
        CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    }

    TEST_CASE("Ledoit-Wolf: formula check against a direct implementation")
    {
        Eigen::MatrixXd sigma(6, 6);
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j)
                sigma(i, j) = std::pow(0.4, std::abs(i - j)) * (1.0 + 0.2 * i) * (1.0 + 0.2 * j);
        const auto x = sample(25, sigma, 8);
        const auto fit = fit_ledoit_wolf(x);

        const int n = 25, p = 6;
        const Eigen::MatrixXd c = x.values().rowwise() - x.values().colwise().mean();
        const Eigen::MatrixXd s = c.transpose() * c / n;
        const double m = s.trace() / p;
        const Eigen::MatrixXd target = m * Eigen::MatrixXd::Identity(p, p);
        const double d2 = (s - target).squaredNorm() / p;
        double b2bar = 0.0;
        for (int t = 0; t < n; ++t)
        {
            const Eigen::VectorXd xt = c.row(t).transpose();
            b2bar += (xt * xt.transpose() - s).squaredNorm();
        }
        b2bar /= double(n) * n * p;
        const double b2 = std::min(b2bar, d2);
        const Eigen::MatrixXd expected = (b2 / d2) * target + (1 - b2 / d2) * s;

        CHECK((fit.covariance.values() - expected).cwiseAbs().maxCoeff() < 1e-14);
        CHECK(fit.intensity == doctest::Approx(b2 / d2).epsilon(1e-12));
        CHECK(fit.target_scale == doctest::Approx(m).epsilon(1e-14));
        CHECK((fit.precision.values() * fit.covariance.values() - Eigen::MatrixXd::Identity(p, p))
                  .cwiseAbs()
                  .maxCoeff() < 1e-10);
        CHECK(fit.covariance.is_positive_definite());
    }

    TEST_CASE("Ledoit-Wolf: intensity in [0, 1], well conditioned when p > n")
    {
        for (std::uint64_t seed = 0; seed < 20; ++seed)
        {
            const int p = 5 + static_cast<int>(seed);
            const auto x = sample(12, Eigen::MatrixXd::Identity(p, p), 100 + seed);
            const auto fit = fit_ledoit_wolf(x);
            CHECK(fit.intensity >= 0.0);
            CHECK(fit.intensity <= 1.0);
            CHECK(fit.covariance.is_positive_definite());
            CHECK(fit.precision.is_symmetric());
        }
    }

    TEST_CASE("Ledoit-Wolf: scalar scaling equivariance and GMV invariance")
    {
        const auto x = sample(30, Eigen::MatrixXd::Identity(8, 8) * 0.5 + Eigen::MatrixXd::Constant(8, 8, 0.5), 9);
        for (double c : {0.01, 3.0, 250.0})
        {
            const auto a = fit_ledoit_wolf(x);
            const auto b = fit_ledoit_wolf(ReturnsMatrix(Eigen::MatrixXd(c * x.values())));
            const Eigen::MatrixXd diff = b.covariance.values() - c * c * a.covariance.values();
            CHECK(diff.cwiseAbs().maxCoeff() <= 1e-10 * (c * c * a.covariance.values()).cwiseAbs().maxCoeff());
            const auto wa = gmv_weights(a.precision).weights.values();
            const auto wb = gmv_weights(b.precision).weights.values();
            CHECK((wa - wb).cwiseAbs().maxCoeff() < 1e-10);
        }
    }

    TEST_CASE("Ledoit-Wolf: identical rows are degenerate")
    {
        Eigen::MatrixXd v(4, 3);
        v.rowwise() = Eigen::RowVector3d(0.01, 0.02, -0.01);
        CHECK_THROWS_WITH_AS(fit_ledoit_wolf(ReturnsMatrix(v)), doctest::Contains("degenerate data"),
                             std::invalid_argument);
    }
}

#include "spaceport/baselines.hpp"

#include <cmath>
#include <stdexcept>

namespace spaceport
{

    LedoitWolfFit fit_ledoit_wolf(const ReturnsMatrix &x)
    {
        const Eigen::Index p = x.assets();
        const double n = static_cast<double>(x.periods());
        const Eigen::MatrixXd centered = x.values().rowwise() - x.values().colwise().mean();
        const Eigen::MatrixXd s = symmetrize(centered.transpose() * centered / n);

        const double m = s.trace() / static_cast<double>(p);
        if (!(m > 0.0))
            throw std::invalid_argument("degenerate data: sample covariance is zero");

        const double dp = static_cast<double>(p);
        const double d2 = (s - m * Eigen::MatrixXd::Identity(p, p)).squaredNorm() / dp;

        // sum_t ||x_t x_t' - S||_F^2 = sum_t (||x_t||^4 - 2 x_t' S x_t) + n ||S||_F^2
        const Eigen::MatrixXd xs = centered * s;
        double total = 0.0;
        for (Eigen::Index t = 0; t < centered.rows(); ++t)
        {
            const double sq = centered.row(t).squaredNorm();
            total += sq * sq - 2.0 * xs.row(t).dot(centered.row(t));
        }
        total += n * s.squaredNorm();
        const double b2_bar = total / (n * n * dp);
        const double b2 = std::min(b2_bar, d2);
        const double intensity = d2 > 0.0 ? b2 / d2 : 0.0;

        const Eigen::MatrixXd shrunk = intensity * m * Eigen::MatrixXd::Identity(p, p) + (1.0 - intensity) * s;
        CovarianceMatrix covariance(shrunk);
        Eigen::LLT<Eigen::MatrixXd> llt(covariance.values());
        if (llt.info() != Eigen::Success)
            throw std::runtime_error("Ledoit-Wolf covariance is not positive definite");
        const Eigen::MatrixXd inverse = llt.solve(Eigen::MatrixXd::Identity(p, p));
        return LedoitWolfFit{std::move(covariance), PrecisionMatrix(inverse, EstimatorTag::ledoit_wolf), intensity, m};
    }

} // namespace spaceport

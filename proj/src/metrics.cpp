#include "spaceport/metrics.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace spaceport
{
    namespace
    {
        double quad(const Eigen::VectorXd &w, const Eigen::MatrixXd &m) { return w.dot(m * w); }

        void check_dims(Eigen::Index a, Eigen::Index b)
        {
            if (a != b)
                throw std::invalid_argument("metric inputs have mismatched dimensions");
        }
    } // namespace

    double weight_error(const WeightVector &w_hat, const WeightVector &w_true)
    {
        check_dims(w_hat.dim(), w_true.dim());
        return (w_hat.values() - w_true.values()).lpNorm<1>();
    }

    double variance_error(const WeightVector &w_hat, const CovarianceMatrix &sigma_hat, const WeightVector &w_true,
                          const CovarianceMatrix &sigma_true)
    {
        check_dims(w_hat.dim(), sigma_hat.dim());
        check_dims(w_true.dim(), sigma_true.dim());
        const double truth = quad(w_true.values(), sigma_true.values());
        if (!(truth > 0.0))
            throw std::domain_error("true portfolio variance is zero");
        return std::abs(quad(w_hat.values(), sigma_hat.values()) / truth - 1.0);
    }

    double risk_error(const WeightVector &w_hat, const CovarianceMatrix &sigma_hat, const CovarianceMatrix &sigma_true)
    {
        check_dims(w_hat.dim(), sigma_hat.dim());
        check_dims(w_hat.dim(), sigma_true.dim());
        return std::abs(quad(w_hat.values(), sigma_hat.values() - sigma_true.values()));
    }

    PerformanceReport oos_performance(std::span<const double> realized)
    {
        if (realized.size() < 2)
            throw std::invalid_argument("performance needs at least two returns");
        const double count = static_cast<double>(realized.size());
        const double mean = std::accumulate(realized.begin(), realized.end(), 0.0) / count;
        double ss = 0.0;
        for (double r : realized)
            ss += (r - mean) * (r - mean);
        const double variance = ss / (count - 1.0);
        if (!(variance > 0.0))
            throw std::domain_error("zero return variance: Sharpe ratio undefined");
        PerformanceReport report;
        report.mean_return = mean;
        report.variance = variance;
        report.sharpe = mean / std::sqrt(variance);
        return report;
    }

    double net_return(const Eigen::VectorXd &w_t, const Eigen::VectorXd &x_next, const Eigen::VectorXd &w_next,
                      const Eigen::VectorXd &w_drift, double cost)
    {
        if (!(cost >= 0.0))
            throw std::invalid_argument("transaction cost must be non-negative");
        check_dims(w_t.size(), x_next.size());
        check_dims(w_next.size(), w_drift.size());
        const double gross = w_t.dot(x_next);
        return gross - cost * (1.0 + gross) * (w_next - w_drift).lpNorm<1>();
    }

    double turnover(const std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> &weight_pairs)
    {
        if (weight_pairs.empty())
            throw std::invalid_argument("turnover needs at least one rebalancing");
        double total = 0.0;
        for (const auto &[next, drift] : weight_pairs)
        {
            check_dims(next.size(), drift.size());
            total += (next - drift).lpNorm<1>();
        }
        return total / static_cast<double>(weight_pairs.size());
    }

    CovarianceFromPrecision covariance_from_precision(const PrecisionMatrix &omega)
    {
        const Eigen::MatrixXd sym = symmetrize(omega.values());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
        if (eig.info() != Eigen::Success)
            throw std::runtime_error("eigendecomposition of precision estimate failed");
        Eigen::VectorXd values = eig.eigenvalues();
        const double floor = 1e-8 * values.maxCoeff();
        bool floored = false;
        if (!(floor > 0.0))
            throw std::domain_error("precision estimate has no positive eigenvalue");
        for (Eigen::Index k = 0; k < values.size(); ++k)
            if (values[k] < floor)
            {
                values[k] = floor;
                floored = true;
            }
        const Eigen::MatrixXd &vectors = eig.eigenvectors();
        Eigen::MatrixXd inverse = vectors * values.cwiseInverse().asDiagonal() * vectors.transpose();
        return CovarianceFromPrecision{CovarianceMatrix(inverse), floored};
    }

} // namespace spaceport

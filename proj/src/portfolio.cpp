#include "spaceport/portfolio.hpp"

#include <cmath>
#include <stdexcept>

namespace spaceport
{

    std::string to_string(PortfolioKind kind)
    {
        return kind == PortfolioKind::gmv ? "gmv" : "markowitz";
    }

    PortfolioKind portfolio_from_string(const std::string &name)
    {
        if (name == "gmv")
            return PortfolioKind::gmv;
        if (name == "markowitz")
            return PortfolioKind::markowitz;
        throw std::invalid_argument("unknown portfolio kind '" + name + "'");
    }

    WeightVector::WeightVector(Eigen::VectorXd values, PortfolioKind kind)
        : values_(std::move(values)), kind_(kind)
    {
        if (!values_.allFinite())
            throw std::invalid_argument("weights must be finite");
        // Budget check scaled by gross exposure: leveraged Markowitz books
        // carry rounding proportional to their size.
        const double slack = 1e-10 * std::max(1.0, values_.lpNorm<1>());
        if (std::abs(values_.sum() - 1.0) > slack)
            throw std::invalid_argument("weights must sum to one");
    }

    PortfolioSolution gmv_weights(const PrecisionMatrix &omega)
    {
        const Eigen::VectorXd u = omega.values().rowwise().sum(); // Omega 1
        const double c = u.sum();
        if (!(std::abs(c) >= 1e-12))
            throw std::domain_error("degenerate precision for GMV");
        return PortfolioSolution{WeightVector(u / c, PortfolioKind::gmv), 1.0 / c};
    }

    PortfolioSolution markowitz_weights(const PrecisionMatrix &omega, const MeanVector &mu, PortfolioTarget target,
                                        const std::optional<CovarianceMatrix> &sigma)
    {
        if (mu.dim() != omega.dim())
            throw std::invalid_argument("mean vector and precision dimensions differ");
        const Eigen::MatrixXd &w = omega.values();
        const Eigen::VectorXd &m = mu.values();
        const Eigen::VectorXd u = w.rowwise().sum(); // Omega 1
        const Eigen::VectorXd v = w * m;             // Omega mu

        const double a = m.dot(u);   // mu' Omega 1
        const double a_t = v.sum();  // 1' Omega mu; equals a unless Omega is asymmetric
        const double b = m.dot(v);
        const double c = u.sum();
        const double d = b * c - a * a_t;
        if (!(std::abs(d) >= 1e-12 * std::max(1.0, std::abs(b * c))))
            throw std::domain_error("mean vector collinear with ones");

        const double mu_star = target.mu_star;
        Eigen::VectorXd weights = (b * u - a * v + mu_star * (c * v - a_t * u)) / d;

        double risk = 0.0;
        if (sigma)
            risk = weights.dot(sigma->values() * weights);
        else
            risk = weights.dot(w.fullPivLu().solve(weights));

        return PortfolioSolution{WeightVector(std::move(weights), PortfolioKind::markowitz), risk};
    }

} // namespace spaceport

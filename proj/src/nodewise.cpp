#include "spaceport/baselines.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace spaceport
{
    namespace
    {
        double soft_threshold(double g, double lambda)
        {
            if (g > lambda)
                return g - lambda;
            if (g < -lambda)
                return g + lambda;
            return 0.0;
        }

        struct LassoState
        {
            Eigen::VectorXd coef;
            Eigen::VectorXd grad; ///< c - A * coef, i.e. X_k' r / n
            bool converged = false;
        };

        /// Covariance-form coordinate descent: A = X'X/n, c = X'y/n.
        void lasso_cd(const Eigen::MatrixXd &a, const Eigen::VectorXd &c, double lambda, double tol, int max_sweeps,
                      LassoState &state)
        {
            const Eigen::Index q = c.size();
            auto update = [&](Eigen::Index k) {
                const double old = state.coef[k];
                const double next = soft_threshold(state.grad[k] + a(k, k) * old, lambda) / a(k, k);
                const double delta = next - old;
                if (delta != 0.0)
                {
                    state.coef[k] = next;
                    state.grad.noalias() -= delta * a.col(k);
                }
                return std::abs(delta);
            };

            state.converged = false;
            std::vector<Eigen::Index> active;
            int sweeps = 0;
            while (sweeps < max_sweeps)
            {
                double change = 0.0;
                for (Eigen::Index k = 0; k < q; ++k)
                    change = std::max(change, update(k));
                ++sweeps;
                if (change < tol)
                {
                    state.converged = true;
                    return;
                }
                active.clear();
                for (Eigen::Index k = 0; k < q; ++k)
                    if (state.coef[k] != 0.0)
                        active.push_back(k);
                while (!active.empty() && sweeps < max_sweeps)
                {
                    double inner = 0.0;
                    for (auto k : active)
                        inner = std::max(inner, update(k));
                    ++sweeps;
                    if (inner < tol)
                        break;
                }
            }
        }

        double mean_rss(double syy, const Eigen::VectorXd &c, const Eigen::VectorXd &coef, const Eigen::VectorXd &grad)
        {
            // ||y - Xg||^2 / n = syy - 2 g'c + g'A g, and A g = c - grad.
            return syy - 2.0 * coef.dot(c) + coef.dot(c - grad);
        }
    } // namespace

    void NodewiseConfig::validate() const
    {
        if (fixed_lambda && !(*fixed_lambda >= 0.0))
            throw std::invalid_argument("nodewise lambda must be non-negative");
        if (grid_size < 2)
            throw std::invalid_argument("nodewise grid size must be >= 2");
        if (!(coord_tolerance > 0.0) || max_sweeps < 1)
            throw std::invalid_argument("nodewise solver tolerance/sweeps out of range");
    }

    NodewiseFit fit_nodewise_detailed(const ReturnsMatrix &x, const NodewiseConfig &cfg)
    {
        cfg.validate();
        if (x.periods() < 3)
            throw std::invalid_argument("nodewise fit needs at least 3 periods");

        const Eigen::Index p = x.assets();
        const double n = static_cast<double>(x.periods());
        const Eigen::MatrixXd centered = x.values().rowwise() - x.values().colwise().mean();
        const Eigen::MatrixXd s = centered.transpose() * centered / n;
        for (Eigen::Index j = 0; j < p; ++j)
            if (!(s(j, j) > 0.0))
                throw std::invalid_argument("asset '" + x.asset_labels()[static_cast<std::size_t>(j)] +
                                            "' has zero variance");

        const double gic_penalty = std::log(static_cast<double>(p)) * std::log(std::log(n)) / n;

        Eigen::MatrixXd gamma = Eigen::MatrixXd::Zero(p, p);
        Eigen::VectorXd lambdas(p), tau2(p);
        Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(p, p);
        bool all_converged = true;

        std::vector<Eigen::Index> others(static_cast<std::size_t>(p - 1));
        for (Eigen::Index j = 0; j < p; ++j)
        {
            for (Eigen::Index k = 0, o = 0; k < p; ++k)
                if (k != j)
                    others[static_cast<std::size_t>(o++)] = k;
            const Eigen::MatrixXd a = s(others, others);
            const Eigen::VectorXd c = s(others, j);
            const double syy = s(j, j);

            LassoState state{Eigen::VectorXd::Zero(p - 1), c, true};
            double chosen_lambda = 0.0;
            Eigen::VectorXd chosen = state.coef;
            bool chosen_converged = true;

            if (cfg.fixed_lambda)
            {
                chosen_lambda = *cfg.fixed_lambda;
                lasso_cd(a, c, chosen_lambda, cfg.coord_tolerance, cfg.max_sweeps, state);
                chosen = state.coef;
                chosen_converged = state.converged;
            }
            else
            {
                const double top = c.cwiseAbs().maxCoeff();
                double best = std::numeric_limits<double>::infinity();
                for (int k = 0; k < cfg.grid_size; ++k)
                {
                    const double lambda = top * std::pow(0.01, static_cast<double>(k) / (cfg.grid_size - 1));
                    lasso_cd(a, c, lambda, cfg.coord_tolerance, cfg.max_sweeps, state);
                    const double rss = std::max(mean_rss(syy, c, state.coef, state.grad), 1e-300);
                    const auto nonzero = static_cast<double>((state.coef.array() != 0.0).count());
                    const double gic = std::log(rss) + nonzero * gic_penalty;
                    if (gic < best)
                    {
                        best = gic;
                        chosen_lambda = lambda;
                        chosen = state.coef;
                        chosen_converged = state.converged;
                    }
                }
            }

            // Recompute the residual sum for the chosen coefficients directly.
            const Eigen::VectorXd grad = c - a * chosen;
            const double t2 = mean_rss(syy, c, chosen, grad) + chosen_lambda * chosen.lpNorm<1>();
            if (!(t2 > 0.0))
                throw std::runtime_error("nodewise: non-positive residual variance for asset '" +
                                         x.asset_labels()[static_cast<std::size_t>(j)] + "'");

            lambdas[j] = chosen_lambda;
            tau2[j] = t2;
            theta(j, j) = 1.0 / t2;
            for (std::size_t o = 0; o < others.size(); ++o)
            {
                gamma(j, others[o]) = chosen[static_cast<Eigen::Index>(o)];
                theta(j, others[o]) = -chosen[static_cast<Eigen::Index>(o)] / t2;
            }
            all_converged = all_converged && chosen_converged;
        }

        return NodewiseFit{PrecisionMatrix(theta, EstimatorTag::nodewise), std::move(gamma), std::move(lambdas),
                           std::move(tau2), all_converged};
    }

    PrecisionMatrix fit_nodewise(const ReturnsMatrix &x, const NodewiseConfig &cfg)
    {
        return fit_nodewise_detailed(x, cfg).precision;
    }

} // namespace spaceport

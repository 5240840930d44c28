#include "spaceport/space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace spaceport
{
    namespace
    {
        constexpr double rho_clamp = 1.0 - 1e-10;

        double soft_threshold(double g, double lambda)
        {
            if (g > lambda)
                return g - lambda;
            if (g < -lambda)
                return g + lambda;
            return 0.0;
        }

        /// B(i, j) = rho_ij * sqrt(omega_j / omega_i).
        Eigen::MatrixXd beta_matrix(const Eigen::VectorXd &rho, const Eigen::VectorXd &omega)
        {
            const Eigen::Index p = omega.size();
            const Eigen::VectorXd root = omega.array().sqrt();
            Eigen::MatrixXd b = Eigen::MatrixXd::Zero(p, p);
            Eigen::Index k = 0;
            for (Eigen::Index i = 0; i < p; ++i)
                for (Eigen::Index j = i + 1; j < p; ++j, ++k)
                {
                    b(i, j) = rho[k] * root[j] / root[i];
                    b(j, i) = rho[k] * root[i] / root[j];
                }
            return b;
        }

        /// RSS_i = ||z_i - sum_k beta_ik z_k||^2 from the Gram matrix.
        Eigen::VectorXd residual_sums(const Eigen::MatrixXd &gram, const Eigen::MatrixXd &beta)
        {
            const Eigen::Index p = gram.rows();
            const Eigen::MatrixXd w = Eigen::MatrixXd::Identity(p, p) - beta;
            const Eigen::MatrixXd t = gram * w.transpose();
            Eigen::VectorXd rss(p);
            for (Eigen::Index i = 0; i < p; ++i)
                rss[i] = w.row(i).dot(t.col(i));
            return rss;
        }

        double penalized_objective(const Eigen::MatrixXd &gram, const Eigen::VectorXd &rho,
                                   const Eigen::VectorXd &omega, const Eigen::VectorXd &eta, double lambda)
        {
            const Eigen::VectorXd rss = residual_sums(gram, beta_matrix(rho, omega));
            return 0.5 * eta.dot(rss) + lambda * rho.lpNorm<1>();
        }

        /// Largest deviation from the subgradient conditions, given M(j, i) = <z_j, r_i>.
        double kkt_violation(const Eigen::MatrixXd &m, const Eigen::VectorXd &rho, const Eigen::VectorXd &root,
                             const Eigen::VectorXd &eta, double lambda)
        {
            const Eigen::Index p = m.rows();
            double worst = 0.0;
            Eigen::Index k = 0;
            for (Eigen::Index i = 0; i < p; ++i)
                for (Eigen::Index j = i + 1; j < p; ++j, ++k)
                {
                    const double grad = -(eta[i] * root[j] / root[i] * m(j, i) + eta[j] * root[i] / root[j] * m(i, j));
                    const double v = rho[k] != 0.0 ? std::abs(grad + std::copysign(lambda, rho[k]))
                                                   : std::max(0.0, std::abs(grad) - lambda);
                    worst = std::max(worst, v);
                }
            return worst;
        }

        struct RhoStepResult
        {
            int sweeps = 0;
            bool converged = false;
        };

        /**
         * Cyclic coordinate descent over rho with omega and eta fixed.
         *
         * Keeps M(j, i) = <z_j, r_i> where r_i is the current residual of
         * regression i. A change d in rho_ij moves r_i by -d*a*z_j and r_j
         * by -d*b*z_i, so columns i and j of M shift by multiples of Gram
         * columns.
         */
        RhoStepResult rho_step(const Eigen::MatrixXd &gram, Eigen::VectorXd &rho, const Eigen::VectorXd &omega,
                               const Eigen::VectorXd &eta, double lambda, double tol, double kkt_tol,
                               int max_sweeps)
        {
            const Eigen::Index p = gram.rows();
            const Eigen::VectorXd root = omega.array().sqrt();
            Eigen::MatrixXd m = gram - gram * beta_matrix(rho, omega).transpose();

            std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
            pairs.reserve(pair_count(static_cast<std::size_t>(p)));
            for (Eigen::Index i = 0; i < p; ++i)
                for (Eigen::Index j = i + 1; j < p; ++j)
                    pairs.emplace_back(i, j);

            auto update = [&](std::size_t k) {
                const auto [i, j] = pairs[k];
                const double a = root[j] / root[i];
                const double b = root[i] / root[j];
                const double q = eta[i] * a * a * gram(j, j) + eta[j] * b * b * gram(i, i);
                const double old = rho[static_cast<Eigen::Index>(k)];
                const double g = eta[i] * a * m(j, i) + eta[j] * b * m(i, j) + q * old;
                const double next = soft_threshold(g, lambda) / q;
                const double delta = next - old;
                if (delta != 0.0)
                {
                    rho[static_cast<Eigen::Index>(k)] = next;
                    m.col(i).noalias() -= (delta * a) * gram.col(j);
                    m.col(j).noalias() -= (delta * b) * gram.col(i);
                }
                return std::abs(delta);
            };

            RhoStepResult result;
            std::vector<std::size_t> active;
            while (result.sweeps < max_sweeps)
            {
                double full_change = 0.0;
                for (std::size_t k = 0; k < pairs.size(); ++k)
                    full_change = std::max(full_change, update(k));
                ++result.sweeps;
                if (full_change < tol)
                {
                    // Refresh M to shed drift from the rank-one updates, then
                    // require the subgradient conditions as well.
                    m = gram - gram * beta_matrix(rho, omega).transpose();
                    if (kkt_violation(m, rho, root, eta, lambda) <= kkt_tol)
                    {
                        result.converged = true;
                        break;
                    }
                    continue;
                }

                active.clear();
                for (std::size_t k = 0; k < pairs.size(); ++k)
                    if (rho[static_cast<Eigen::Index>(k)] != 0.0)
                        active.push_back(k);
                if (active.empty())
                    continue;

                while (result.sweeps < max_sweeps)
                {
                    double change = 0.0;
                    for (auto k : active)
                        change = std::max(change, update(k));
                    ++result.sweeps;
                    if (change < tol)
                        break;
                }
            }
            return result;
        }

        struct WorkingFit
        {
            Eigen::VectorXd rho;
            Eigen::VectorXd omega;
            Eigen::VectorXd eta;
            Eigen::VectorXd rss;
            std::vector<double> start_objective;
            std::vector<double> end_objective;
            std::vector<int> sweeps;
            bool converged = false;
        };

        Eigen::VectorXd initial_omega(const Eigen::MatrixXd &gram, double n)
        {
            return n / gram.diagonal().array();
        }

        Eigen::VectorXd weights_for(WeightMode mode, const Eigen::VectorXd &omega)
        {
            return mode == WeightMode::precision ? omega : Eigen::VectorXd::Ones(omega.size());
        }

        /// Outer loop: rho-step, then omega-step between consecutive rho-steps.
        WorkingFit fit_working(const Eigen::MatrixXd &gram, double n, double lambda, const SpaceConfig &cfg,
                               Eigen::VectorXd rho)
        {
            WorkingFit fit;
            fit.omega = initial_omega(gram, n);
            fit.rho = std::move(rho);
            for (int outer = 0; outer < cfg.outer_iterations; ++outer)
            {
                if (outer > 0)
                {
                    const Eigen::VectorXd rss = residual_sums(gram, beta_matrix(fit.rho, fit.omega));
                    for (Eigen::Index i = 0; i < fit.omega.size(); ++i)
                        fit.omega[i] = n / std::max(rss[i], 1e-12 * gram(i, i));
                }
                fit.eta = weights_for(cfg.weight_mode, fit.omega);
                fit.start_objective.push_back(penalized_objective(gram, fit.rho, fit.omega, fit.eta, lambda));
                const auto step = rho_step(gram, fit.rho, fit.omega, fit.eta, lambda, cfg.coord_tolerance,
                                           cfg.kkt_tolerance, cfg.max_sweeps);
                fit.sweeps.push_back(step.sweeps);
                fit.converged = step.converged;
                fit.end_objective.push_back(penalized_objective(gram, fit.rho, fit.omega, fit.eta, lambda));
            }
            fit.rss = residual_sums(gram, beta_matrix(fit.rho, fit.omega));
            return fit;
        }

        double working_lambda_max(const Eigen::MatrixXd &gram, double n, WeightMode mode)
        {
            const Eigen::VectorXd omega = initial_omega(gram, n);
            const Eigen::VectorXd eta = weights_for(mode, omega);
            const Eigen::VectorXd root = omega.array().sqrt();
            double best = 0.0;
            for (Eigen::Index i = 0; i < gram.rows(); ++i)
                for (Eigen::Index j = i + 1; j < gram.rows(); ++j)
                {
                    const double g = gram(i, j) * (eta[i] * root[j] / root[i] + eta[j] * root[i] / root[j]);
                    best = std::max(best, std::abs(g));
                }
            return best;
        }

        /// Per-node sum: each nonzero pair enters the neighbourhoods of both of its nodes.
        double bic_score(const Eigen::VectorXd &rss, double n, std::size_t nonzero_pairs)
        {
            double score = 0.0;
            for (Eigen::Index i = 0; i < rss.size(); ++i)
                score += n * std::log(rss[i] / n);
            return score + std::log(n) * 2.0 * static_cast<double>(nonzero_pairs);
        }

        std::size_t count_nonzero(const Eigen::VectorXd &v)
        {
            return static_cast<std::size_t>((v.array() != 0.0).count());
        }

        /// A path point is scored only if it converged, needs no clamping and
        /// leaves every node with fewer than n - 1 neighbours (centered data
        /// has rank n - 1, so a larger neighbourhood interpolates and RSS -> 0).
        bool admissible(const WorkingFit &fit, Eigen::Index p, double n)
        {
            if (!fit.converged || fit.rho.cwiseAbs().maxCoeff() > 1.0)
                return false;
            std::vector<int> degree(static_cast<std::size_t>(p), 0);
            Eigen::Index k = 0;
            for (Eigen::Index i = 0; i < p; ++i)
                for (Eigen::Index j = i + 1; j < p; ++j, ++k)
                    if (fit.rho[k] != 0.0)
                    {
                        ++degree[static_cast<std::size_t>(i)];
                        ++degree[static_cast<std::size_t>(j)];
                    }
            for (int d : degree)
                if (d >= n - 1.0)
                    return false;
            return true;
        }

        void check_fit_shape(const ReturnsMatrix &x)
        {
            if (x.periods() < 3)
                throw std::invalid_argument("joint shrinkage fit needs at least 3 periods");
        }
    } // namespace

    void SpaceConfig::validate() const
    {
        if (lambda && !(*lambda >= 0.0 && std::isfinite(*lambda)))
            throw std::invalid_argument("lambda must be finite and non-negative");
        if (outer_iterations < 1)
            throw std::invalid_argument("outer_iterations must be >= 1");
        if (!(coord_tolerance > 0.0))
            throw std::invalid_argument("coord_tolerance must be positive");
        if (!(kkt_tolerance > 0.0))
            throw std::invalid_argument("kkt_tolerance must be positive");
        if (max_sweeps < 1)
            throw std::invalid_argument("max_sweeps must be >= 1");
        if (lambda_grid_size < 1)
            throw std::invalid_argument("lambda_grid_size must be >= 1");
    }

    double joint_loss(const Eigen::MatrixXd &x, const SpaceDecomposition &d, const Eigen::VectorXd &eta, double lambda)
    {
        if (x.cols() != d.dim() || eta.size() != d.dim())
            throw std::invalid_argument("joint_loss: dimension mismatch");
        if (!(eta.array() > 0.0).all())
            throw std::invalid_argument("joint_loss: weights must be positive");
        const Eigen::MatrixXd beta = regression_coefficients(d);
        const Eigen::MatrixXd residual = x - x * beta.transpose();
        const Eigen::VectorXd rss = residual.colwise().squaredNorm().transpose();
        return 0.5 * eta.dot(rss) + lambda * d.rho().lpNorm<1>();
    }

    double joint_loss(const ReturnsMatrix &x, const SpaceDecomposition &d, const Eigen::VectorXd &eta, double lambda)
    {
        return joint_loss(x.values(), d, eta, lambda);
    }

    WorkingData prepare_working_data(const ReturnsMatrix &x, bool standardize)
    {
        const double n = static_cast<double>(x.periods());
        WorkingData out;
        const Eigen::RowVectorXd mean = x.values().colwise().mean();
        out.z = x.values().rowwise() - mean;
        out.column_scale = Eigen::VectorXd::Ones(x.assets());
        for (Eigen::Index i = 0; i < x.assets(); ++i)
        {
            const double ss = out.z.col(i).squaredNorm();
            const double magnitude = x.values().col(i).cwiseAbs().maxCoeff();
            if (!(ss > n * std::pow(1e-12 * magnitude, 2)) || ss == 0.0)
                throw std::invalid_argument("asset '" + x.asset_labels()[static_cast<std::size_t>(i)] +
                                            "' has zero variance");
            if (standardize)
            {
                out.column_scale[i] = ss / n;
                out.z.col(i) /= std::sqrt(out.column_scale[i]);
            }
        }
        return out;
    }

    double lambda_max(const ReturnsMatrix &x, const SpaceConfig &cfg)
    {
        const WorkingData w = prepare_working_data(x, cfg.standardize);
        const Eigen::MatrixXd gram = w.z.transpose() * w.z;
        return working_lambda_max(gram, static_cast<double>(x.periods()), cfg.weight_mode);
    }

    LambdaSelection select_lambda(const ReturnsMatrix &x, const SpaceConfig &cfg)
    {
        cfg.validate();
        check_fit_shape(x);
        const double n = static_cast<double>(x.periods());
        const WorkingData w = prepare_working_data(x, cfg.standardize);
        const Eigen::MatrixXd gram = w.z.transpose() * w.z;
        const double top = working_lambda_max(gram, n, cfg.weight_mode);

        LambdaSelection out;
        Eigen::VectorXd warm = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(pair_count(x.assets())));
        double best = std::numeric_limits<double>::infinity();
        const int grid = cfg.lambda_grid_size;
        for (int k = 0; k < grid; ++k)
        {
            const double frac = grid == 1 ? 0.0 : static_cast<double>(k) / (grid - 1);
            const double lambda = top * std::pow(0.01, frac);
            WorkingFit fit = fit_working(gram, n, lambda, cfg, warm);
            const std::size_t nonzero = count_nonzero(fit.rho);
            if (!admissible(fit, x.assets(), n))
            {
                out.path_truncated = true;
                break;
            }
            const double score = bic_score(fit.rss, n, nonzero);
            out.score_table.push_back({lambda, score, nonzero});
            if (score < best)
            {
                best = score;
                out.lambda = lambda;
            }
            warm = std::move(fit.rho);
        }
        if (out.score_table.empty())
            out.lambda = top;
        return out;
    }

    SpaceFit fit_space(const ReturnsMatrix &x, const SpaceConfig &cfg)
    {
        cfg.validate();
        check_fit_shape(x);

        std::vector<LambdaScore> table;
        double lambda = 0.0;
        if (cfg.lambda)
            lambda = *cfg.lambda;
        else
        {
            auto selection = select_lambda(x, cfg);
            lambda = selection.lambda;
            table = std::move(selection.score_table);
        }

        const double n = static_cast<double>(x.periods());
        const WorkingData w = prepare_working_data(x, cfg.standardize);
        const Eigen::MatrixXd gram = w.z.transpose() * w.z;
        WorkingFit fit = fit_working(gram, n, lambda,
                                     cfg, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(pair_count(x.assets()))));

        bool clamped = false;
        Eigen::VectorXd rho = fit.rho;
        for (Eigen::Index k = 0; k < rho.size(); ++k)
            if (std::abs(rho[k]) > 1.0)
            {
                rho[k] = std::copysign(rho_clamp, rho[k]);
                clamped = true;
            }

        Eigen::VectorXd omega = fit.omega.array() / w.column_scale.array();
        return SpaceFit{SpaceDecomposition(std::move(rho), std::move(omega)),
                        lambda,
                        std::move(fit.end_objective),
                        std::move(fit.start_objective),
                        std::move(fit.sweeps),
                        fit.converged,
                        clamped,
                        std::move(fit.omega),
                        std::move(fit.eta),
                        w.column_scale,
                        std::move(table)};
    }

    PrecisionMatrix space_precision(const SpaceFit &fit, WeightMode mode)
    {
        return precision_from_decomposition(fit.decomposition, mode == WeightMode::precision
                                                                   ? EstimatorTag::space_weighted
                                                                   : EstimatorTag::space_unweighted);
    }

} // namespace spaceport

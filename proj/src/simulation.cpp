#include "spaceport/simulation.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace spaceport
{
    namespace
    {
        constexpr std::uint64_t golden_gamma = 0x9E3779B97F4A7C15ULL;

        std::uint64_t fnv1a(const std::string &s)
        {
            std::uint64_t h = 0xcbf29ce484222325ULL;
            for (unsigned char ch : s)
            {
                h ^= ch;
                h *= 0x100000001b3ULL;
            }
            return h;
        }

        std::string fingerprint(const DgpSpec &spec)
        {
            std::ostringstream os;
            os.precision(17);
            os << to_string(spec.kind) << '|' << spec.n << '|' << spec.p << '|'
               << (spec.mean_mode == MeanMode::zero ? "zero" : "gaussian") << '|' << spec.mean_variance << '|'
               << spec.toeplitz_base << '|' << spec.factor_count << '|' << spec.loading_variance << '|'
               << spec.factor_variance;
            return os.str();
        }

        Eigen::VectorXd draw_mean(const DgpSpec &spec, std::mt19937_64 &rng)
        {
            Eigen::VectorXd mu = Eigen::VectorXd::Zero(spec.p);
            if (spec.mean_mode == MeanMode::gaussian)
            {
                std::normal_distribution<double> normal(0.0, std::sqrt(spec.mean_variance));
                for (Eigen::Index i = 0; i < mu.size(); ++i)
                    mu[i] = normal(rng);
            }
            return mu;
        }

        void require_kind(const DgpSpec &spec, DgpKind kind)
        {
            if (spec.kind != kind)
                throw std::invalid_argument("generator called with a spec of kind " + to_string(spec.kind));
        }

        struct EstimateBundle
        {
            PrecisionMatrix omega_hat;
            CovarianceMatrix sigma_hat;
            bool floored = false;
            bool converged = true;
            std::optional<double> lambda_used;
            std::size_t nonzero = 0;
        };

        std::size_t offdiag_nonzero(const Eigen::MatrixXd &m)
        {
            std::size_t count = 0;
            for (Eigen::Index i = 0; i < m.rows(); ++i)
                for (Eigen::Index j = i + 1; j < m.cols(); ++j)
                    if (m(i, j) != 0.0 || m(j, i) != 0.0)
                        ++count;
            return count;
        }

        EstimateBundle estimate(EstimatorTag tag, const StudyConfig &cfg, const SimulatedData &data)
        {
            switch (tag)
            {
            case EstimatorTag::space_unweighted:
            case EstimatorTag::space_weighted:
            {
                SpaceConfig sc = cfg.space;
                sc.weight_mode = tag == EstimatorTag::space_weighted ? WeightMode::precision : WeightMode::uniform;
                const SpaceFit fit = fit_space(data.returns, sc);
                PrecisionMatrix omega = space_precision(fit, sc.weight_mode);
                auto cov = covariance_from_precision(omega);
                return EstimateBundle{std::move(omega), std::move(cov.covariance), cov.floored, fit.converged,
                                      fit.lambda_used, fit.decomposition.nonzero_count()};
            }
            case EstimatorTag::nodewise:
            {
                NodewiseFit fit = fit_nodewise_detailed(data.returns, cfg.nodewise);
                auto cov = covariance_from_precision(fit.precision);
                const std::size_t nz = offdiag_nonzero(fit.precision.values());
                return EstimateBundle{std::move(fit.precision), std::move(cov.covariance), cov.floored, fit.converged,
                                      std::nullopt, nz};
            }
            case EstimatorTag::ledoit_wolf:
            {
                LedoitWolfFit fit = fit_ledoit_wolf(data.returns);
                return EstimateBundle{std::move(fit.precision), std::move(fit.covariance), false, true, std::nullopt,
                                      0};
            }
            case EstimatorTag::exact:
                return EstimateBundle{data.true_omega, data.true_sigma, false, true, std::nullopt,
                                      offdiag_nonzero(data.true_omega.values())};
            case EstimatorTag::poet:
                break;
            }
            throw std::invalid_argument("estimator '" + to_string(tag) + "' is not available in simulations");
        }

        double se(double sum, double sum_sq, int count)
        {
            if (count < 2)
                return 0.0;
            const double mean = sum / count;
            const double var = std::max(0.0, (sum_sq - count * mean * mean) / (count - 1));
            return std::sqrt(var / count);
        }
    } // namespace

    std::string to_string(DgpKind kind)
    {
        return kind == DgpKind::toeplitz ? "toeplitz" : "sparse_factor";
    }

    DgpKind dgp_from_string(const std::string &name)
    {
        if (name == "toeplitz")
            return DgpKind::toeplitz;
        if (name == "sparse_factor" || name == "sparse-factor")
            return DgpKind::sparse_factor;
        throw std::invalid_argument("unknown DGP '" + name + "'");
    }

    void DgpSpec::validate() const
    {
        if (n < 2 || p < 2)
            throw std::invalid_argument("DGP needs n >= 2 and p >= 2");
        if (!(toeplitz_base >= 0.0 && toeplitz_base < 1.0))
            throw std::invalid_argument("toeplitz_base must lie in [0, 1)");
        if (factor_count < 0)
            throw std::invalid_argument("factor_count must be non-negative");
        if (!(loading_variance >= 0.0) || !(factor_variance >= 0.0) || !(mean_variance >= 0.0))
            throw std::invalid_argument("variances must be non-negative");
        if (!std::isfinite(target_mu_star))
            throw std::invalid_argument("target return must be finite");
    }

    double default_markowitz_mean_variance(DgpKind kind)
    {
        return kind == DgpKind::toeplitz ? 1e-4 : 1e-2;
    }

    DgpPopulation population(const DgpSpec &spec)
    {
        spec.validate();
        const Eigen::Index p = spec.p;
        if (spec.kind == DgpKind::toeplitz)
        {
            Eigen::MatrixXd sigma(p, p);
            for (Eigen::Index i = 0; i < p; ++i)
                for (Eigen::Index j = 0; j < p; ++j)
                    sigma(i, j) = std::pow(spec.toeplitz_base, static_cast<double>(std::abs(i - j)));
            Eigen::LLT<Eigen::MatrixXd> llt(sigma);
            if (llt.info() != Eigen::Success)
                throw std::runtime_error("Toeplitz covariance is not positive definite");
            Eigen::MatrixXd omega = llt.solve(Eigen::MatrixXd::Identity(p, p));
            Eigen::MatrixXd lower = llt.matrixL();
            return DgpPopulation{CovarianceMatrix(sigma), PrecisionMatrix(omega, EstimatorTag::exact),
                                 std::move(lower)};
        }
        const double scale = 1.0 + spec.factor_count * spec.factor_variance * spec.loading_variance;
        const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(p, p);
        return DgpPopulation{CovarianceMatrix(scale * eye), PrecisionMatrix(eye / scale, EstimatorTag::exact),
                             Eigen::MatrixXd()};
    }

    SimulatedData generate(const DgpSpec &spec, const DgpPopulation &pop, std::mt19937_64 &rng)
    {
        spec.validate();
        const Eigen::Index n = spec.n;
        const Eigen::Index p = spec.p;
        const Eigen::VectorXd mu = draw_mean(spec, rng);
        std::normal_distribution<double> std_normal(0.0, 1.0);

        Eigen::MatrixXd x(n, p);
        if (spec.kind == DgpKind::toeplitz)
        {
            Eigen::MatrixXd z(p, n);
            for (Eigen::Index t = 0; t < n; ++t)
                for (Eigen::Index i = 0; i < p; ++i)
                    z(i, t) = std_normal(rng);
            x = (pop.sigma_lower * z).transpose();
            x.rowwise() += mu.transpose();
        }
        else
        {
            const Eigen::Index k = spec.factor_count;
            std::normal_distribution<double> loading(0.0, std::sqrt(spec.loading_variance));
            std::normal_distribution<double> factor(0.0, std::sqrt(spec.factor_variance));
            Eigen::MatrixXd b(p, k);
            Eigen::VectorXd f(k);
            for (Eigen::Index t = 0; t < n; ++t)
            {
                for (Eigen::Index i = 0; i < p; ++i)
                    for (Eigen::Index c = 0; c < k; ++c)
                        b(i, c) = loading(rng);
                for (Eigen::Index c = 0; c < k; ++c)
                    f[c] = factor(rng);
                Eigen::VectorXd row = mu + b * f;
                for (Eigen::Index i = 0; i < p; ++i)
                    row[i] += std_normal(rng);
                x.row(t) = row.transpose();
            }
        }
        return SimulatedData{ReturnsMatrix(std::move(x)), MeanVector(mu), pop.sigma, pop.omega};
    }

    SimulatedData generate_toeplitz(const DgpSpec &spec, std::mt19937_64 &rng)
    {
        require_kind(spec, DgpKind::toeplitz);
        return generate(spec, population(spec), rng);
    }

    SimulatedData generate_sparse_factor(const DgpSpec &spec, std::mt19937_64 &rng)
    {
        require_kind(spec, DgpKind::sparse_factor);
        return generate(spec, population(spec), rng);
    }

    std::uint64_t splitmix64(std::uint64_t x)
    {
        x += golden_gamma;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
        return x ^ (x >> 31);
    }

    std::uint64_t replication_seed(std::uint64_t base_seed, const DgpSpec &spec, int replication)
    {
        const std::uint64_t stream = splitmix64(base_seed ^ splitmix64(fnv1a(fingerprint(spec))));
        return splitmix64(stream + golden_gamma * (static_cast<std::uint64_t>(replication) + 1));
    }

    void StudyConfig::validate() const
    {
        if (replications < 1)
            throw std::invalid_argument("replications must be >= 1");
        if (specs.empty() || estimators.empty() || portfolios.empty())
            throw std::invalid_argument("study needs at least one spec, estimator and portfolio");
        for (const auto &spec : specs)
        {
            spec.validate();
            for (auto kind : portfolios)
                if (kind == PortfolioKind::markowitz && spec.mean_mode == MeanMode::zero)
                    throw std::invalid_argument("Markowitz studies need a gaussian mean_mode");
        }
        for (auto tag : estimators)
            if (tag == EstimatorTag::poet)
                throw std::invalid_argument("poet is a reserved tag; it cannot be estimated here");
        space.validate();
        nodewise.validate();
    }

    std::vector<ReplicationResult> run_replication(const StudyConfig &cfg, std::size_t spec_index,
                                                   const DgpPopulation &pop, int replication)
    {
        const DgpSpec &spec = cfg.specs[spec_index];
        const std::uint64_t seed = replication_seed(cfg.base_seed, spec, replication);
        std::mt19937_64 rng(seed);
        const SimulatedData data = generate(spec, pop, rng);
        const MeanVector sample_mu = sample_moments(data.returns).mean;
        const MeanVector &plug_in_mu = cfg.markowitz_mu == MarkowitzMu::sample ? sample_mu : data.true_mu;
        const PortfolioTarget target{spec.target_mu_star};

        std::vector<ReplicationResult> out;
        for (auto tag : cfg.estimators)
        {
            std::optional<EstimateBundle> est;
            std::string failure;
            try
            {
                est.emplace(estimate(tag, cfg, data));
            }
            catch (const std::exception &e)
            {
                failure = e.what();
            }

            for (auto kind : cfg.portfolios)
            {
                ReplicationResult r;
                r.spec_index = spec_index;
                r.replication = replication;
                r.seed = seed;
                r.estimator = tag;
                r.portfolio = kind;
                if (!est)
                {
                    r.excluded = true;
                    r.note = failure;
                    out.push_back(std::move(r));
                    continue;
                }
                r.converged = est->converged;
                r.lambda_used = est->lambda_used;
                r.nonzero_count = est->nonzero;
                r.precision_floored = est->floored;
                try
                {
                    const bool gmv = kind == PortfolioKind::gmv;
                    const PortfolioSolution truth =
                        gmv ? gmv_weights(data.true_omega) : markowitz_weights(data.true_omega, data.true_mu, target);
                    const PortfolioSolution fitted =
                        gmv ? gmv_weights(est->omega_hat) : markowitz_weights(est->omega_hat, plug_in_mu, target);
                    r.metrics.e_w = weight_error(fitted.weights, truth.weights);
                    r.metrics.e_v = variance_error(fitted.weights, est->sigma_hat, truth.weights, data.true_sigma);
                    r.metrics.e_r = risk_error(fitted.weights, est->sigma_hat, data.true_sigma);
                    if (!std::isfinite(r.metrics.e_v) || !std::isfinite(r.metrics.e_w) ||
                        !std::isfinite(r.metrics.e_r))
                    {
                        r.excluded = true;
                        r.note = "non-finite metric";
                    }
                }
                catch (const std::exception &e)
                {
                    r.excluded = true;
                    r.note = e.what();
                }
                out.push_back(std::move(r));
            }
        }
        return out;
    }

    const StudyCell &StudyResult::cell(std::size_t spec_index, PortfolioKind portfolio, EstimatorTag estimator) const
    {
        for (const auto &c : cells)
            if (c.spec_index == spec_index && c.portfolio == portfolio && c.estimator == estimator)
                return c;
        throw std::out_of_range("no study cell for " + to_string(estimator) + "/" + to_string(portfolio));
    }

    StudyResult run_study(const StudyConfig &cfg)
    {
        cfg.validate();
        std::vector<DgpPopulation> pops;
        pops.reserve(cfg.specs.size());
        for (const auto &spec : cfg.specs)
            pops.push_back(population(spec));

        const std::size_t reps = static_cast<std::size_t>(cfg.replications);
        const std::size_t tasks = cfg.specs.size() * reps;
        std::vector<std::vector<ReplicationResult>> slots(tasks);
        std::vector<std::string> errors(tasks);
        std::atomic<std::size_t> next{0};

        auto worker = [&] {
            for (std::size_t task = next++; task < tasks; task = next++)
            {
                const std::size_t s = task / reps;
                const int r = static_cast<int>(task % reps);
                try
                {
                    slots[task] = run_replication(cfg, s, pops[s], r);
                }
                catch (const std::exception &e)
                {
                    errors[task] = e.what();
                }
            }
        };

        const int jobs = std::max(1, std::min<int>(cfg.jobs, static_cast<int>(tasks)));
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
        for (std::size_t task = 0; task < tasks; ++task)
            if (!errors[task].empty())
                throw std::runtime_error("replication " + std::to_string(task % reps) + " of spec " +
                                         std::to_string(task / reps) + " failed: " + errors[task]);

        StudyResult result;
        for (auto &slot : slots)
            for (auto &r : slot)
                result.replications.push_back(std::move(r));

        for (std::size_t s = 0; s < cfg.specs.size(); ++s)
            for (auto kind : cfg.portfolios)
                for (auto tag : cfg.estimators)
                {
                    StudyCell cell;
                    cell.spec_index = s;
                    cell.dgp = cfg.specs[s].kind;
                    cell.n = cfg.specs[s].n;
                    cell.p = cfg.specs[s].p;
                    cell.portfolio = kind;
                    cell.estimator = tag;
                    double sum[3] = {0, 0, 0}, sum_sq[3] = {0, 0, 0};
                    for (const auto &r : result.replications)
                    {
                        if (r.spec_index != s || r.portfolio != kind || r.estimator != tag)
                            continue;
                        if (r.excluded)
                        {
                            ++cell.exclusions;
                            continue;
                        }
                        const double v[3] = {r.metrics.e_v, r.metrics.e_w, r.metrics.e_r};
                        for (int m = 0; m < 3; ++m)
                        {
                            sum[m] += v[m];
                            sum_sq[m] += v[m] * v[m];
                        }
                        ++cell.replications;
                    }
                    if (cell.replications > 0)
                    {
                        const double k = cell.replications;
                        cell.mean = {sum[0] / k, sum[1] / k, sum[2] / k};
                        cell.stderr_ = {se(sum[0], sum_sq[0], cell.replications),
                                        se(sum[1], sum_sq[1], cell.replications),
                                        se(sum[2], sum_sq[2], cell.replications)};
                    }
                    else
                    {
                        const double nan = std::numeric_limits<double>::quiet_NaN();
                        cell.mean = {nan, nan, nan};
                        cell.stderr_ = {nan, nan, nan};
                    }
                    result.cells.push_back(cell);
                }
        return result;
    }

} // namespace spaceport

/**
 * @file simulation.hpp
 * @brief Synthetic return generators and the Monte-Carlo replication runner.
 *
 * Two data-generating processes:
 *  - toeplitz:      X_t ~ N(mu, Sigma), Sigma_ij = base^|i-j|
 *  - sparse_factor: X_t = mu + B_t f_t + e_t with loadings B_t (p x K) and
 *                   factors f_t redrawn every period, e_t ~ N(0, I).
 *                   Population covariance is (1 + K * var_f * var_b) I.
 *
 * Replication seeds come from SplitMix64 counter splitting, so replication r
 * of a given (base seed, spec) is the same regardless of how many
 * replications run or on which thread.
 */

#pragma once

#include "spaceport/baselines.hpp"
#include "spaceport/core_types.hpp"
#include "spaceport/metrics.hpp"
#include "spaceport/portfolio.hpp"
#include "spaceport/space.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace spaceport
{

    enum class DgpKind
    {
        toeplitz,
        sparse_factor
    };

    std::string to_string(DgpKind kind);
    DgpKind dgp_from_string(const std::string &name);

    enum class MeanMode
    {
        zero,
        gaussian ///< mu ~ N(0, mean_variance * I), drawn once per replication
    };

    struct DgpSpec
    {
        DgpKind kind = DgpKind::toeplitz;
        int n = 100;
        int p = 50;
        MeanMode mean_mode = MeanMode::zero;
        double mean_variance = 1e-4;
        double toeplitz_base = 0.15;
        int factor_count = 3;
        double loading_variance = 1e-2;
        double factor_variance = 1e-1;
        double target_mu_star = 0.000376;
        std::uint64_t seed = 0;

        void validate() const;
    };

    /// Mean variance used for Markowitz runs: 1e-4 for toeplitz, 1e-2 for sparse_factor.
    double default_markowitz_mean_variance(DgpKind kind);

    struct SimulatedData
    {
        ReturnsMatrix returns;
        MeanVector true_mu;
        CovarianceMatrix true_sigma;
        PrecisionMatrix true_omega;
    };

    /// Population covariance, precision and Cholesky factor of a spec; reusable across replications.
    struct DgpPopulation
    {
        CovarianceMatrix sigma;
        PrecisionMatrix omega;
        Eigen::MatrixXd sigma_lower; ///< Cholesky factor (toeplitz only)
    };

    DgpPopulation population(const DgpSpec &spec);

    SimulatedData generate_toeplitz(const DgpSpec &spec, std::mt19937_64 &rng);
    SimulatedData generate_sparse_factor(const DgpSpec &spec, std::mt19937_64 &rng);
    SimulatedData generate(const DgpSpec &spec, const DgpPopulation &pop, std::mt19937_64 &rng);

    std::uint64_t splitmix64(std::uint64_t x);

    /// Child seed of replication r: splitmix64 over (base seed, spec fingerprint, r).
    std::uint64_t replication_seed(std::uint64_t base_seed, const DgpSpec &spec, int replication);

    enum class MarkowitzMu
    {
        sample, ///< plug-in sample mean of the replication's data
        truth   ///< population mean
    };

    struct StudyConfig
    {
        std::vector<DgpSpec> specs;
        std::vector<EstimatorTag> estimators;
        std::vector<PortfolioKind> portfolios;
        int replications = 1;
        std::uint64_t base_seed = 0;
        MarkowitzMu markowitz_mu = MarkowitzMu::sample;
        SpaceConfig space;
        NodewiseConfig nodewise;
        int jobs = 1;

        void validate() const;
    };

    struct ReplicationResult
    {
        std::size_t spec_index = 0;
        int replication = 0;
        std::uint64_t seed = 0;
        EstimatorTag estimator = EstimatorTag::exact;
        PortfolioKind portfolio = PortfolioKind::gmv;
        SimulationMetrics metrics;
        bool converged = true;
        std::optional<double> lambda_used;
        std::size_t nonzero_count = 0;
        bool precision_floored = false;
        bool excluded = false;
        std::string note;
    };

    struct StudyCell
    {
        std::size_t spec_index = 0;
        DgpKind dgp = DgpKind::toeplitz;
        int n = 0;
        int p = 0;
        PortfolioKind portfolio = PortfolioKind::gmv;
        EstimatorTag estimator = EstimatorTag::exact;
        SimulationMetrics mean;
        SimulationMetrics stderr_;
        int replications = 0;
        int exclusions = 0;
    };

    struct StudyResult
    {
        std::vector<StudyCell> cells;
        std::vector<ReplicationResult> replications;

        const StudyCell &cell(std::size_t spec_index, PortfolioKind portfolio, EstimatorTag estimator) const;
    };

    /// Results for every (estimator, portfolio) on one replication of one spec.
    std::vector<ReplicationResult> run_replication(const StudyConfig &cfg, std::size_t spec_index,
                                                   const DgpPopulation &pop, int replication);

    StudyResult run_study(const StudyConfig &cfg);

} // namespace spaceport

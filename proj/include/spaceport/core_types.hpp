/**
 * @file core_types.hpp
 * @brief Domain types shared by the estimators, portfolio solvers and
 *        evaluation harnesses, plus conversions between the precision,
 *        partial-correlation and regression-coefficient representations.
 *
 * A precision matrix Omega is parameterized as
 *
 *     Omega = D^{1/2} Gamma D^{1/2},  D = diag(omega_11, ..., omega_pp),
 *     Gamma_ii = 1, Gamma_ij = -rho_ij,
 *
 * so that rho_ij = -omega_ij / sqrt(omega_ii * omega_jj) and the regression
 * of asset j on the others has coefficients beta_jk = rho_jk * sqrt(omega_kk / omega_jj).
 */

#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace spaceport
{

    /// Number of unordered pairs {i, j} with i < j among p items.
    constexpr std::size_t pair_count(std::size_t p) { return p * (p - 1) / 2; }

    /// Position of the pair (i, j), i < j, in lexicographic order (0,1),(0,2),...,(p-2,p-1).
    constexpr std::size_t pair_index(std::size_t i, std::size_t j, std::size_t p)
    {
        return i * p - i * (i + 1) / 2 + (j - i - 1);
    }

    /// Returns (m + m^T) / 2.
    Eigen::MatrixXd symmetrize(const Eigen::MatrixXd &m);

    /**
     * @class ReturnsMatrix
     * @brief n x p table of per-period asset returns with asset and period labels.
     *
     * Construction validates: n >= 2, p >= 2, all entries finite, labels
     * distinct, periods strictly increasing. Periods that all parse as
     * integers are compared numerically, anything else lexicographically
     * (ISO-8601 dates sort correctly that way).
     */
    class ReturnsMatrix
    {
    public:
        ReturnsMatrix(Eigen::MatrixXd values,
                      std::vector<std::string> asset_labels,
                      std::vector<std::string> period_index);

        /// Labels assets "A1".."Ap" and periods with zero-padded counters.
        explicit ReturnsMatrix(Eigen::MatrixXd values);

        const Eigen::MatrixXd &values() const { return values_; }
        const std::vector<std::string> &asset_labels() const { return asset_labels_; }
        const std::vector<std::string> &period_index() const { return period_index_; }

        Eigen::Index periods() const { return values_.rows(); }
        Eigen::Index assets() const { return values_.cols(); }

        /// Rows [first, first + count).
        ReturnsMatrix window(Eigen::Index first, Eigen::Index count) const;

    private:
        Eigen::MatrixXd values_;
        std::vector<std::string> asset_labels_;
        std::vector<std::string> period_index_;
    };

    class CovarianceMatrix
    {
    public:
        /// Symmetrizes the input; PD status is decided by an LLT attempt.
        /// Throws if the diagonal has a negative or non-finite entry.
        explicit CovarianceMatrix(const Eigen::MatrixXd &values);

        const Eigen::MatrixXd &values() const { return values_; }
        bool is_positive_definite() const { return is_positive_definite_; }
        Eigen::Index dim() const { return values_.rows(); }

    private:
        Eigen::MatrixXd values_;
        bool is_positive_definite_ = false;
    };

    enum class EstimatorTag
    {
        space_unweighted,
        space_weighted,
        nodewise,
        ledoit_wolf,
        exact,
        poet ///< reserved: accepted in report schemas only, never estimated here
    };

    std::string to_string(EstimatorTag tag);
    EstimatorTag estimator_from_string(const std::string &name);

    /**
     * @class PrecisionMatrix
     * @brief Estimated or true inverse covariance with its provenance.
     *
     * Every source except nodewise is symmetrized on construction. The
     * nodewise estimate is stored exactly as estimated.
     */
    class PrecisionMatrix
    {
    public:
        PrecisionMatrix(const Eigen::MatrixXd &values, EstimatorTag source);

        const Eigen::MatrixXd &values() const { return values_; }
        EstimatorTag source() const { return source_; }
        bool is_symmetric() const { return is_symmetric_; }
        Eigen::Index dim() const { return values_.rows(); }

    private:
        Eigen::MatrixXd values_;
        EstimatorTag source_;
        bool is_symmetric_ = true;
    };

    class MeanVector
    {
    public:
        explicit MeanVector(Eigen::VectorXd values);

        const Eigen::VectorXd &values() const { return values_; }
        Eigen::Index dim() const { return values_.size(); }

    private:
        Eigen::VectorXd values_;
    };

    /**
     * @class SpaceDecomposition
     * @brief Partial correlations rho_ij (lexicographic pair order) plus the
     *        diagonal precisions omega_ii.
     */
    class SpaceDecomposition
    {
    public:
        SpaceDecomposition(Eigen::VectorXd rho, Eigen::VectorXd omega_diag);

        const Eigen::VectorXd &rho() const { return rho_; }
        const Eigen::VectorXd &omega_diag() const { return omega_diag_; }
        Eigen::Index dim() const { return omega_diag_.size(); }

        double rho(Eigen::Index i, Eigen::Index j) const;

        /// p(p+1)/2: one partial correlation per pair and one diagonal precision per asset.
        std::size_t parameter_count() const;
        std::size_t nonzero_count() const;

    private:
        Eigen::VectorXd rho_;
        Eigen::VectorXd omega_diag_;
    };

    PrecisionMatrix precision_from_decomposition(const SpaceDecomposition &d, EstimatorTag source);

    /// Throws std::invalid_argument when the matrix is not symmetric (e.g. a nodewise estimate).
    SpaceDecomposition decomposition_from_precision(const PrecisionMatrix &m);

    /// beta(j, k) = rho_jk * sqrt(omega_kk / omega_jj); zero diagonal.
    Eigen::MatrixXd regression_coefficients(const SpaceDecomposition &d);

    struct SampleMoments
    {
        MeanVector mean;
        CovarianceMatrix covariance; ///< 1/(n-1) normalization
    };

    SampleMoments sample_moments(const ReturnsMatrix &x);

} // namespace spaceport

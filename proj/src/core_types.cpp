#include "spaceport/core_types.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace spaceport
{
    namespace
    {
        bool parse_integer(const std::string &s, long long &out)
        {
            if (s.empty())
                return false;
            auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
            return ec == std::errc() && ptr == s.data() + s.size();
        }

        void check_periods_increasing(const std::vector<std::string> &periods)
        {
            std::vector<long long> numeric(periods.size());
            bool all_numeric = true;
            for (std::size_t t = 0; t < periods.size() && all_numeric; ++t)
                all_numeric = parse_integer(periods[t], numeric[t]);

            for (std::size_t t = 1; t < periods.size(); ++t)
            {
                const bool increasing = all_numeric ? numeric[t - 1] < numeric[t]
                                                    : periods[t - 1] < periods[t];
                if (!increasing)
                    throw std::invalid_argument("period index not strictly increasing at '" +
                                                periods[t] + "' (row " + std::to_string(t + 1) + ")");
            }
        }

        std::string padded(const std::string &prefix, std::size_t k, std::size_t width)
        {
            std::string digits = std::to_string(k);
            if (digits.size() < width)
                digits.insert(0, width - digits.size(), '0');
            return prefix + digits;
        }
    } // namespace

    Eigen::MatrixXd symmetrize(const Eigen::MatrixXd &m)
    {
        if (m.rows() != m.cols())
            throw std::invalid_argument("symmetrize: matrix is not square");
        // FP addition commutes, so the result is bitwise symmetric.
        return 0.5 * (m + m.transpose());
    }

    // ---------------------------------------------------------------- ReturnsMatrix

    ReturnsMatrix::ReturnsMatrix(Eigen::MatrixXd values,
                                 std::vector<std::string> asset_labels,
                                 std::vector<std::string> period_index)
        : values_(std::move(values)), asset_labels_(std::move(asset_labels)), period_index_(std::move(period_index))
    {
        if (values_.rows() < 2 || values_.cols() < 2)
            throw std::invalid_argument("returns matrix needs at least 2 periods and 2 assets, got " +
                                        std::to_string(values_.rows()) + "x" + std::to_string(values_.cols()));
        if (static_cast<Eigen::Index>(asset_labels_.size()) != values_.cols())
            throw std::invalid_argument("asset label count does not match column count");
        if (static_cast<Eigen::Index>(period_index_.size()) != values_.rows())
            throw std::invalid_argument("period index length does not match row count");

        for (Eigen::Index t = 0; t < values_.rows(); ++t)
            for (Eigen::Index j = 0; j < values_.cols(); ++j)
                if (!std::isfinite(values_(t, j)))
                    throw std::invalid_argument("non-finite return at row " + std::to_string(t + 1) +
                                                ", asset '" + asset_labels_[j] + "'");

        std::unordered_set<std::string> seen;
        for (const auto &label : asset_labels_)
            if (!seen.insert(label).second)
                throw std::invalid_argument("duplicate asset label '" + label + "'");

        check_periods_increasing(period_index_);
    }

    namespace
    {
        std::vector<std::string> default_labels(const std::string &prefix, Eigen::Index count, bool pad)
        {
            const std::size_t width = pad ? std::to_string(count).size() : 0;
            std::vector<std::string> out;
            out.reserve(static_cast<std::size_t>(count));
            for (Eigen::Index k = 1; k <= count; ++k)
                out.push_back(padded(prefix, static_cast<std::size_t>(k), width));
            return out;
        }
    } // namespace

    ReturnsMatrix::ReturnsMatrix(Eigen::MatrixXd values)
        : ReturnsMatrix(values, default_labels("A", values.cols(), false), default_labels("t", values.rows(), true))
    {
    }

    ReturnsMatrix ReturnsMatrix::window(Eigen::Index first, Eigen::Index count) const
    {
        if (first < 0 || count < 2 || first + count > periods())
            throw std::out_of_range("returns window out of range");
        std::vector<std::string> periods(period_index_.begin() + first, period_index_.begin() + first + count);
        return ReturnsMatrix(values_.middleRows(first, count), asset_labels_, std::move(periods));
    }

    // ---------------------------------------------------------------- CovarianceMatrix

    CovarianceMatrix::CovarianceMatrix(const Eigen::MatrixXd &values)
        : values_(symmetrize(values))
    {
        for (Eigen::Index i = 0; i < values_.rows(); ++i)
            if (!(values_(i, i) >= 0.0) || !std::isfinite(values_(i, i)))
                throw std::invalid_argument("covariance diagonal must be finite and non-negative");
        Eigen::LLT<Eigen::MatrixXd> llt(values_);
        is_positive_definite_ = llt.info() == Eigen::Success && (values_.diagonal().array() > 0.0).all();
    }

    // ---------------------------------------------------------------- tags

    std::string to_string(EstimatorTag tag)
    {
        switch (tag)
        {
        case EstimatorTag::space_unweighted:
            return "space-unweighted";
        case EstimatorTag::space_weighted:
            return "space-weighted";
        case EstimatorTag::nodewise:
            return "nodewise";
        case EstimatorTag::ledoit_wolf:
            return "ledoit-wolf";
        case EstimatorTag::exact:
            return "exact";
        case EstimatorTag::poet:
            return "poet";
        }
        return "unknown";
    }

    EstimatorTag estimator_from_string(const std::string &name)
    {
        for (auto tag : {EstimatorTag::space_unweighted, EstimatorTag::space_weighted, EstimatorTag::nodewise,
                         EstimatorTag::ledoit_wolf, EstimatorTag::exact, EstimatorTag::poet})
            if (to_string(tag) == name)
                return tag;
        throw std::invalid_argument("unknown estimator '" + name + "'");
    }

    // ---------------------------------------------------------------- PrecisionMatrix

    PrecisionMatrix::PrecisionMatrix(const Eigen::MatrixXd &values, EstimatorTag source)
        : source_(source)
    {
        if (values.rows() != values.cols())
            throw std::invalid_argument("precision matrix must be square");
        if (source == EstimatorTag::nodewise)
        {
            values_ = values;
            is_symmetric_ = false;
        }
        else
        {
            values_ = symmetrize(values);
            is_symmetric_ = true;
        }
        for (Eigen::Index i = 0; i < values_.rows(); ++i)
            if (!(values_(i, i) > 0.0) || !std::isfinite(values_(i, i)))
                throw std::invalid_argument("precision diagonal must be strictly positive");
    }

    // ---------------------------------------------------------------- MeanVector

    MeanVector::MeanVector(Eigen::VectorXd values) : values_(std::move(values))
    {
        if (!values_.allFinite())
            throw std::invalid_argument("mean vector has non-finite entries");
    }

    // ---------------------------------------------------------------- SpaceDecomposition

    SpaceDecomposition::SpaceDecomposition(Eigen::VectorXd rho, Eigen::VectorXd omega_diag)
        : rho_(std::move(rho)), omega_diag_(std::move(omega_diag))
    {
        const auto p = static_cast<std::size_t>(omega_diag_.size());
        if (p < 1 || static_cast<std::size_t>(rho_.size()) != pair_count(p))
            throw std::invalid_argument("decomposition: rho must hold p(p-1)/2 entries");
        if (!(omega_diag_.array() > 0.0).all() || !omega_diag_.allFinite())
            throw std::invalid_argument("decomposition: omega_diag must be strictly positive");
        if (!rho_.allFinite() || (rho_.array().abs() > 1.0).any())
            throw std::invalid_argument("decomposition: partial correlations must lie in [-1, 1]");
    }

    double SpaceDecomposition::rho(Eigen::Index i, Eigen::Index j) const
    {
        if (i == j)
            throw std::invalid_argument("rho(i, i) is undefined");
        if (i > j)
            std::swap(i, j);
        return rho_[static_cast<Eigen::Index>(pair_index(i, j, omega_diag_.size()))];
    }

    std::size_t SpaceDecomposition::parameter_count() const
    {
        return static_cast<std::size_t>(rho_.size() + omega_diag_.size());
    }

    std::size_t SpaceDecomposition::nonzero_count() const
    {
        return static_cast<std::size_t>((rho_.array() != 0.0).count());
    }

    // ---------------------------------------------------------------- conversions

    PrecisionMatrix precision_from_decomposition(const SpaceDecomposition &d, EstimatorTag source)
    {
        const Eigen::Index p = d.dim();
        const Eigen::VectorXd root = d.omega_diag().array().sqrt();
        Eigen::MatrixXd omega(p, p);
        for (Eigen::Index i = 0; i < p; ++i)
        {
            omega(i, i) = d.omega_diag()[i];
            for (Eigen::Index j = i + 1; j < p; ++j)
            {
                const double v = -d.rho(i, j) * root[i] * root[j];
                omega(i, j) = v;
                omega(j, i) = v;
            }
        }
        return PrecisionMatrix(omega, source);
    }

    SpaceDecomposition decomposition_from_precision(const PrecisionMatrix &m)
    {
        if (!m.is_symmetric() || m.values() != m.values().transpose())
            throw std::invalid_argument("decomposition requires a symmetric precision matrix");
        const Eigen::Index p = m.dim();
        const Eigen::MatrixXd &w = m.values();
        Eigen::VectorXd rho(static_cast<Eigen::Index>(pair_count(p)));
        for (Eigen::Index i = 0; i < p; ++i)
            for (Eigen::Index j = i + 1; j < p; ++j)
                rho[static_cast<Eigen::Index>(pair_index(i, j, p))] = -w(i, j) / std::sqrt(w(i, i) * w(j, j));
        return SpaceDecomposition(std::move(rho), w.diagonal());
    }

    Eigen::MatrixXd regression_coefficients(const SpaceDecomposition &d)
    {
        const Eigen::Index p = d.dim();
        const Eigen::VectorXd &w = d.omega_diag();
        Eigen::MatrixXd beta = Eigen::MatrixXd::Zero(p, p);
        for (Eigen::Index i = 0; i < p; ++i)
            for (Eigen::Index j = i + 1; j < p; ++j)
            {
                const double r = d.rho(i, j);
                beta(i, j) = r * std::sqrt(w[j] / w[i]);
                beta(j, i) = r * std::sqrt(w[i] / w[j]);
            }
        return beta;
    }

    SampleMoments sample_moments(const ReturnsMatrix &x)
    {
        const Eigen::MatrixXd &v = x.values();
        const double n = static_cast<double>(v.rows());
        Eigen::VectorXd mean = v.colwise().mean().transpose();
        Eigen::MatrixXd centered = v.rowwise() - mean.transpose();
        Eigen::MatrixXd cov = (centered.transpose() * centered) / (n - 1.0);
        return SampleMoments{MeanVector(std::move(mean)), CovarianceMatrix(cov)};
    }

} // namespace spaceport

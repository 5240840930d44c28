#include "spaceport/serialize.hpp"

#include <iomanip>
#include <stdexcept>

namespace spaceport
{
    namespace
    {
        struct PrecisionGuard
        {
            std::ostream &out;
            std::streamsize saved;
            explicit PrecisionGuard(std::ostream &o) : out(o), saved(o.precision(17)) {}
            ~PrecisionGuard() { out.precision(saved); }
        };

        std::vector<double> to_vector(const Eigen::VectorXd &v) { return {v.data(), v.data() + v.size()}; }

        nlohmann::json performance_json(const PerformanceReport &r)
        {
            nlohmann::json j{{"mean_return", r.mean_return},
                             {"variance", r.variance},
                             {"sharpe", r.sharpe},
                             {"with_cost", r.with_cost},
                             {"cost_bps", r.cost_bps}};
            j["turnover"] = r.turnover ? nlohmann::json(*r.turnover) : nlohmann::json(nullptr);
            return j;
        }

        const char *metric_names[] = {"E_V", "E_W", "E_R"};

        double metric(const SimulationMetrics &m, int k) { return k == 0 ? m.e_v : k == 1 ? m.e_w : m.e_r; }
    } // namespace

    nlohmann::json space_fit_json(const SpaceFit &fit, const std::vector<std::string> &labels)
    {
        const auto &d = fit.decomposition;
        if (static_cast<Eigen::Index>(labels.size()) != d.dim())
            throw std::invalid_argument("label count does not match the fit dimension");
        nlohmann::json edges = nlohmann::json::array();
        for (Eigen::Index i = 0; i < d.dim(); ++i)
            for (Eigen::Index j = i + 1; j < d.dim(); ++j)
                if (const double r = d.rho(i, j); r != 0.0)
                    edges.push_back({{"i", labels[static_cast<std::size_t>(i)]},
                                     {"j", labels[static_cast<std::size_t>(j)]},
                                     {"rho", r}});
        nlohmann::json j{{"lambda_used", fit.lambda_used},
                         {"converged", fit.converged},
                         {"clamped", fit.clamped},
                         {"assets", labels},
                         {"omega_diag", to_vector(d.omega_diag())},
                         {"nonzero_count", d.nonzero_count()},
                         {"rho_edges", std::move(edges)},
                         {"objective_trace", fit.objective_trace},
                         {"sweeps_per_outer", fit.sweeps_per_outer}};
        if (!fit.score_table.empty())
        {
            nlohmann::json table = nlohmann::json::array();
            for (const auto &s : fit.score_table)
                table.push_back({{"lambda", s.lambda}, {"score", s.score}, {"nonzero_count", s.nonzero_count}});
            j["score_table"] = std::move(table);
        }
        return j;
    }

    void write_precision_csv(std::ostream &out, const PrecisionMatrix &omega, const std::vector<std::string> &labels)
    {
        if (static_cast<Eigen::Index>(labels.size()) != omega.dim())
            throw std::invalid_argument("label count does not match the precision dimension");
        PrecisionGuard guard(out);
        out << "asset";
        for (const auto &l : labels)
            out << ',' << l;
        out << '\n';
        for (Eigen::Index i = 0; i < omega.dim(); ++i)
        {
            out << labels[static_cast<std::size_t>(i)];
            for (Eigen::Index j = 0; j < omega.dim(); ++j)
                out << ',' << omega.values()(i, j);
            out << '\n';
        }
    }

    void write_study_csv(std::ostream &out, const StudyResult &result)
    {
        PrecisionGuard guard(out);
        out << "dgp,n,p,portfolio,estimator,metric,mean,stderr,replications,exclusions\n";
        for (const auto &c : result.cells)
            for (int k = 0; k < 3; ++k)
                out << to_string(c.dgp) << ',' << c.n << ',' << c.p << ',' << to_string(c.portfolio) << ','
                    << to_string(c.estimator) << ',' << metric_names[k] << ',' << metric(c.mean, k) << ','
                    << metric(c.stderr_, k) << ',' << c.replications << ',' << c.exclusions << '\n';
    }

    nlohmann::json study_json(const StudyResult &result)
    {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto &c : result.cells)
            for (int k = 0; k < 3; ++k)
                rows.push_back({{"dgp", to_string(c.dgp)},
                                {"n", c.n},
                                {"p", c.p},
                                {"portfolio", to_string(c.portfolio)},
                                {"estimator", to_string(c.estimator)},
                                {"metric", metric_names[k]},
                                {"mean", metric(c.mean, k)},
                                {"stderr", metric(c.stderr_, k)},
                                {"replications", c.replications},
                                {"exclusions", c.exclusions}});
        nlohmann::json notes = nlohmann::json::array();
        for (const auto &r : result.replications)
            if (r.excluded || r.precision_floored || !r.converged || !r.note.empty())
                notes.push_back({{"spec_index", r.spec_index},
                                 {"replication", r.replication},
                                 {"estimator", to_string(r.estimator)},
                                 {"portfolio", to_string(r.portfolio)},
                                 {"excluded", r.excluded},
                                 {"precision_floored", r.precision_floored},
                                 {"converged", r.converged},
                                 {"note", r.note}});
        return {{"rows", std::move(rows)}, {"replication_notes", std::move(notes)}};
    }

    nlohmann::json backtest_json(const BacktestReport &report)
    {
        nlohmann::json periods = nlohmann::json::array();
        for (const auto &r : report.records)
            periods.push_back({{"date", r.date},
                               {"gross", r.gross},
                               {"net", r.net},
                               {"turnover", r.turnover},
                               {"weight_id", r.weight_id}});
        nlohmann::json refits = nlohmann::json::array();
        for (std::size_t k = 0; k < report.refits.size(); ++k)
        {
            const auto &d = report.refits[k];
            nlohmann::json j{{"weight_id", d.weight_id},
                             {"window_start", d.window_start},
                             {"window_end", d.window_end},
                             {"converged", d.converged},
                             {"nonzero_count", d.nonzero_count},
                             {"markowitz_fallback", d.markowitz_fallback},
                             {"note", d.note},
                             {"weights", to_vector(report.weights[k])}};
            j["lambda_used"] = d.lambda_used ? nlohmann::json(*d.lambda_used) : nlohmann::json(nullptr);
            refits.push_back(std::move(j));
        }
        return {{"estimator", to_string(report.estimator)},
                {"portfolio", to_string(report.portfolio)},
                {"return_units", "per period"},
                {"without_cost", performance_json(report.without_cost)},
                {"with_cost", performance_json(report.with_cost)},
                {"turnover", report.turnover},
                {"periods", std::move(periods)},
                {"refits", std::move(refits)}};
    }

    void write_period_csv(std::ostream &out, const BacktestReport &report)
    {
        PrecisionGuard guard(out);
        out << "date,gross,net,turnover\n";
        for (const auto &r : report.records)
            out << r.date << ',' << r.gross << ',' << r.net << ',' << r.turnover << '\n';
    }

    void write_summary_csv(std::ostream &out, const std::vector<BacktestReport> &reports)
    {
        PrecisionGuard guard(out);
        out << "estimator,portfolio,cost_block,return,variance,sharpe,turnover\n";
        for (const auto &r : reports)
        {
            const std::string head = to_string(r.estimator) + ',' + to_string(r.portfolio) + ',';
            const auto &a = r.without_cost;
            out << head << "without_cost," << a.mean_return << ',' << a.variance << ',' << a.sharpe << ",\n";
            const auto &b = r.with_cost;
            out << head << "with_cost," << b.mean_return << ',' << b.variance << ',' << b.sharpe << ','
                << r.turnover << '\n';
        }
    }

} // namespace spaceport

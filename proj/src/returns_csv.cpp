#include "spaceport/returns_csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

namespace spaceport
{
    namespace
    {
        std::string trim(std::string s)
        {
            const auto first = s.find_first_not_of(" \t\r");
            if (first == std::string::npos)
                return {};
            const auto last = s.find_last_not_of(" \t\r");
            return s.substr(first, last - first + 1);
        }

        std::vector<std::string> split(const std::string &line)
        {
            std::vector<std::string> cells;
            std::string cell;
            std::istringstream ss(line);
            while (std::getline(ss, cell, ','))
                cells.push_back(trim(cell));
            if (!line.empty() && line.back() == ',')
                cells.emplace_back();
            return cells;
        }

        double parse_number(const std::string &cell, std::size_t line, const std::string &column)
        {
            double v = 0.0;
            const char *begin = cell.data();
            const char *end = cell.data() + cell.size();
            if (begin != end && *begin == '+')
                ++begin;
            auto [ptr, ec] = std::from_chars(begin, end, v);
            if (cell.empty() || ec != std::errc() || ptr != end)
                throw CsvError("cannot parse '" + cell + "' in column '" + column + "'", line);
            if (!std::isfinite(v))
                throw CsvError("non-finite value in column '" + column + "'", line);
            return v;
        }
    } // namespace

    ReturnsMatrix read_returns_csv(std::istream &in)
    {
        std::string line;
        std::size_t line_no = 0;
        std::vector<std::string> header;
        while (std::getline(in, line))
        {
            ++line_no;
            if (!trim(line).empty())
            {
                header = split(line);
                break;
            }
        }
        if (header.size() < 3)
            throw CsvError("header must be 'date' followed by at least two asset columns", line_no);
        if (header.front() != "date")
            throw CsvError("first header column must be 'date', got '" + header.front() + "'", line_no);

        std::vector<std::string> labels(header.begin() + 1, header.end());
        std::vector<std::string> periods;
        std::vector<double> flat;
        while (std::getline(in, line))
        {
            ++line_no;
            if (trim(line).empty())
                continue;
            auto cells = split(line);
            if (cells.size() != header.size())
                throw CsvError("expected " + std::to_string(header.size()) + " fields, found " +
                                   std::to_string(cells.size()),
                               line_no);
            if (cells.front().empty())
                throw CsvError("empty date", line_no);
            periods.push_back(cells.front());
            for (std::size_t j = 1; j < cells.size(); ++j)
                flat.push_back(parse_number(cells[j], line_no, header[j]));
        }

        const auto n = static_cast<Eigen::Index>(periods.size());
        const auto p = static_cast<Eigen::Index>(labels.size());
        Eigen::MatrixXd values(n, p);
        for (Eigen::Index t = 0; t < n; ++t)
            for (Eigen::Index j = 0; j < p; ++j)
                values(t, j) = flat[static_cast<std::size_t>(t * p + j)];
        try
        {
            return ReturnsMatrix(std::move(values), std::move(labels), std::move(periods));
        }
        catch (const std::invalid_argument &e)
        {
            throw CsvError(e.what(), line_no);
        }
    }

    ReturnsMatrix read_returns_csv(const std::string &path)
    {
        std::ifstream in(path);
        if (!in)
            throw std::runtime_error("cannot open returns file '" + path + "'");
        return read_returns_csv(in);
    }

    void write_returns_csv(std::ostream &out, const ReturnsMatrix &x)
    {
        out << "date";
        for (const auto &label : x.asset_labels())
            out << ',' << label;
        out << '\n';
        out << std::setprecision(17);
        for (Eigen::Index t = 0; t < x.periods(); ++t)
        {
            out << x.period_index()[static_cast<std::size_t>(t)];
            for (Eigen::Index j = 0; j < x.assets(); ++j)
                out << ',' << x.values()(t, j);
            out << '\n';
        }
    }

    std::map<std::string, double> read_risk_free_csv(const std::string &path)
    {
        std::ifstream in(path);
        if (!in)
            throw std::runtime_error("cannot open risk-free file '" + path + "'");
        std::map<std::string, double> rates;
        std::string line;
        std::size_t line_no = 0;
        bool header_seen = false;
        while (std::getline(in, line))
        {
            ++line_no;
            if (trim(line).empty())
                continue;
            auto cells = split(line);
            if (!header_seen)
            {
                header_seen = true;
                if (cells.size() != 2 || cells[0] != "date")
                    throw CsvError("risk-free header must be 'date,rate'", line_no);
                continue;
            }
            if (cells.size() != 2)
                throw CsvError("expected 2 fields", line_no);
            if (!rates.emplace(cells[0], parse_number(cells[1], line_no, "rate")).second)
                throw CsvError("duplicate date '" + cells[0] + "'", line_no);
        }
        return rates;
    }

    ReturnsMatrix subtract_risk_free(const ReturnsMatrix &x, const std::map<std::string, double> &rates)
    {
        Eigen::MatrixXd values = x.values();
        for (Eigen::Index t = 0; t < x.periods(); ++t)
        {
            const auto &date = x.period_index()[static_cast<std::size_t>(t)];
            auto it = rates.find(date);
            if (it == rates.end())
                throw std::invalid_argument("no risk-free rate for period '" + date + "'");
            values.row(t).array() -= it->second;
        }
        return ReturnsMatrix(std::move(values), x.asset_labels(), x.period_index());
    }

} // namespace spaceport

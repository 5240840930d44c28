#pragma once

#include "spaceport/core_types.hpp"

#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>

namespace spaceport
{

    /// Ingestion failure; line() is 1-based and counts the header as line 1.
    class CsvError : public std::runtime_error
    {
    public:
        CsvError(const std::string &what, std::size_t line)
            : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line)
        {
        }
        std::size_t line() const { return line_; }

    private:
        std::size_t line_;
    };

    /**
     * Reads a returns table: header row `date,<asset>,...,<asset>`, then one
     * row per period with decimal returns. Rows with missing or non-finite
     * cells are rejected rather than imputed.
     */
    ReturnsMatrix read_returns_csv(std::istream &in);
    ReturnsMatrix read_returns_csv(const std::string &path);

    void write_returns_csv(std::ostream &out, const ReturnsMatrix &x);

    /// Two-column `date,rate` file keyed by period label.
    std::map<std::string, double> read_risk_free_csv(const std::string &path);

    /// Subtracts the per-period rate from every asset. Every period must have a rate.
    ReturnsMatrix subtract_risk_free(const ReturnsMatrix &x, const std::map<std::string, double> &rates);

} // namespace spaceport

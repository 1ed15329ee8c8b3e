// SPDX-License-Identifier: Apache-2.0

#ifndef RIS_CLI_EXPORT_HPP
#define RIS_CLI_EXPORT_HPP

#include "ris/locsense.hpp"

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace ris::cli
{
    using Cell = std::variant<double, std::string>;

    // Row-oriented result table. A "flagged" column is appended on export: 1 when a numeric cell of the row
    // is not finite.
    struct Table
    {
        std::vector<std::string> header;
        std::vector<std::vector<Cell>> rows;

        void add(std::vector<Cell> row);
        std::size_t flagged_rows() const;
    };

    // %.10g, with "inf", "-inf" and "nan" for non-finite values
    std::string format_value(double v);

    std::string to_csv(const Table &table);

    // First line "x0 y0 dx dy nx ny", then ny rows of nx space-separated values, row-major from y0 upwards
    std::string to_grid(const loc::Grid &grid, const Eigen::MatrixXd &values);

    void write_text(const std::filesystem::path &file, const std::string &text);
}

#endif

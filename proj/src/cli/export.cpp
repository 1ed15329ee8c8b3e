// SPDX-License-Identifier: Apache-2.0

#include "ris/cli/export.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace ris::cli
{
    namespace
    {
        bool is_flagged(const std::vector<Cell> &row)
        {
            for (const Cell &c : row)
                if (const double *v = std::get_if<double>(&c); v && !std::isfinite(*v))
                    return true;
            return false;
        }

        std::string format_cell(const Cell &c)
        {
            if (const double *v = std::get_if<double>(&c))
                return format_value(*v);
            return std::get<std::string>(c);
        }
    }

    void Table::add(std::vector<Cell> row)
    {
        if (row.size() != header.size())
            throw std::invalid_argument("Row width does not match the table header.");
        rows.push_back(std::move(row));
    }

    std::size_t Table::flagged_rows() const
    {
        std::size_t n = 0;
        for (const auto &r : rows)
            n += is_flagged(r) ? 1 : 0;
        return n;
    }

    std::string format_value(double v)
    {
        if (std::isnan(v))
            return "nan";
        if (std::isinf(v))
            return v > 0.0 ? "inf" : "-inf";
        if (v == 0.0)
            return "0";
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.10g", v);
        return buf;
    }

    std::string to_csv(const Table &table)
    {
        std::string out;
        for (const auto &h : table.header)
            out += h + ",";
        out += "flagged\n";
        for (const auto &row : table.rows)
        {
            for (const Cell &c : row)
                out += format_cell(c) + ",";
            out += is_flagged(row) ? "1\n" : "0\n";
        }
        return out;
    }

    std::string to_grid(const loc::Grid &grid, const Eigen::MatrixXd &values)
    {
        grid.validate();
        if (std::size_t(values.rows()) != grid.ny || std::size_t(values.cols()) != grid.nx)
            throw std::invalid_argument("Grid values do not match the grid dimensions.");
        std::string out = format_value(grid.x0) + " " + format_value(grid.y0) + " " + format_value(grid.dx) + " " +
                          format_value(grid.dy) + " " + std::to_string(grid.nx) + " " + std::to_string(grid.ny) +
                          "\n";
        for (Eigen::Index i = 0; i < values.rows(); ++i)
        {
            for (Eigen::Index j = 0; j < values.cols(); ++j)
                out += (j ? " " : "") + format_value(values(i, j));
            out += "\n";
        }
        return out;
    }

    void write_text(const std::filesystem::path &file, const std::string &text)
    {
        if (file.has_parent_path())
            std::filesystem::create_directories(file.parent_path());
        std::ofstream out(file, std::ios::binary);
        if (!out)
            throw std::runtime_error("Cannot write " + file.string());
        out << text;
        if (!out)
            throw std::runtime_error("Write failed for " + file.string());
    }
}

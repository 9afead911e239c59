// SPDX-License-Identifier: Apache-2.0
//
// mela: metasurface-enabled ELAA channel simulation
// Copyright (C) 2026 The mela contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "mela/harness.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <sstream>

namespace mela
{

void ResultTable::add_row(std::vector<double> row)
{
    if (row.size() != columns.size())
        throw DomainError("table " + name + ": row has " + std::to_string(row.size()) + " values for " +
                          std::to_string(columns.size()) + " columns");
    rows.push_back(std::move(row));
}

void ResultTable::validate(bool allow_inf) const
{
    for (const auto &r : rows)
    {
        if (r.size() != columns.size())
            throw DomainError("table " + name + " is not rectangular");
        for (double v : r)
            if (std::isnan(v) || (!allow_inf && std::isinf(v)))
                throw DomainError("table " + name + " holds a non-finite value");
    }
}

std::vector<double> ResultTable::column(const std::string &col) const
{
    for (size_t c = 0; c < columns.size(); ++c)
        if (columns[c] == col)
        {
            std::vector<double> out;
            for (const auto &r : rows)
                out.push_back(r[c]);
            return out;
        }
    throw DomainError("table " + name + " has no column " + col);
}

std::string format_tables(const std::vector<ResultTable> &tables, TableFormat format)
{
    const char *sep = format == TableFormat::TSV ? "\t" : ",";
    std::string out;
    for (size_t i = 0; i < tables.size(); ++i)
    {
        const auto &t = tables[i];
        if (i > 0)
            out += "\n";
        out += fmt::format("# {}\n{}\n", t.name, fmt::join(t.columns, sep));
        for (const auto &r : t.rows)
        {
            std::vector<std::string> cells;
            for (double v : r)
                cells.push_back(fmt::format("{:.10g}", v));
            out += fmt::format("{}\n", fmt::join(cells, sep));
        }
    }
    return out;
}

std::vector<double> parse_list(const std::string &text)
{
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
    {
        item = CLI::detail::trim_copy(item);
        if (item.empty())
            continue;
        size_t used = 0;
        double v = 0.0;
        try
        {
            v = std::stod(item, &used);
        }
        catch (const std::exception &)
        {
            used = 0;
        }
        if (used != item.size())
            throw DomainError("not a number: '" + item + "'");
        out.push_back(v);
    }
    return out;
}

Overrides read_config_file(const std::string &path)
{
    std::ifstream in(path);
    if (!in)
        throw DomainError("cannot open config file " + path);
    // Drop '#' and ';' comments, including trailing ones, before parsing.
    std::stringstream text;
    for (std::string line; std::getline(in, line);)
        text << line.substr(0, line.find_first_of("#;")) << '\n';
    Overrides out;
    for (const auto &item : CLI::ConfigINI().from_config(text))
    {
        if (item.name == "++" || item.name == "--")
            continue;
        std::vector<std::string> parts;
        for (const auto &in : item.inputs)
            parts.push_back(CLI::detail::trim_copy(in));
        out[item.fullname()] = fmt::format("{}", fmt::join(parts, ","));
    }
    return out;
}

double ParamReader::get(const std::string &key, double fallback)
{
    auto it = values_.find(key);
    if (it == values_.end())
        return fallback;
    used_.insert(key);
    auto v = parse_list(it->second);
    if (v.size() != 1)
        throw DomainError("override " + key + " expects one number");
    return v[0];
}

int ParamReader::get_int(const std::string &key, int fallback)
{
    double v = get(key, fallback);
    if (v != std::floor(v) || std::abs(v) > 1e9)
        throw DomainError("override " + key + " expects an integer");
    return static_cast<int>(v);
}

std::string ParamReader::get_str(const std::string &key, const std::string &fallback)
{
    auto it = values_.find(key);
    if (it == values_.end())
        return fallback;
    used_.insert(key);
    return it->second;
}

std::vector<double> ParamReader::get_list(const std::string &key, const std::vector<double> &fallback)
{
    auto it = values_.find(key);
    if (it == values_.end())
        return fallback;
    used_.insert(key);
    auto v = parse_list(it->second);
    if (v.empty())
        throw DomainError("override " + key + " is empty");
    return v;
}

void ParamReader::finish() const
{
    for (const auto &[k, v] : values_)
        if (!used_.count(k))
            throw DomainError("unknown override '" + k + "'");
}

} // namespace mela

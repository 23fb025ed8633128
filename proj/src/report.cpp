#include "rubricrl/report.hpp"

#include "rubricrl/io.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

namespace rubricrl {

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    return out + "\"";
}

std::size_t index_of(std::vector<std::string>& list, const std::string& name) {
    auto it = std::find(list.begin(), list.end(), name);
    if (it != list.end()) {
        return static_cast<std::size_t>(it - list.begin());
    }
    list.push_back(name);
    return list.size() - 1;
}

std::string percent(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v * 100.0);
    return buf;
}

} // namespace

std::vector<std::vector<Rank>> rank_columns(const Table& table) {
    std::vector<std::vector<Rank>> ranks(table.rows.size(), std::vector<Rank>(table.columns.size(), Rank::none));
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
        std::set<double, std::greater<>> values;
        for (std::size_t r = 0; r < table.rows.size(); ++r) {
            if (table.cells[r][c]) {
                values.insert(*table.cells[r][c]);
            }
        }
        if (values.empty()) {
            continue;
        }
        const double best = *values.begin();
        const bool has_second = values.size() > 1;
        const double second = has_second ? *std::next(values.begin()) : best;
        for (std::size_t r = 0; r < table.rows.size(); ++r) {
            const auto& v = table.cells[r][c];
            if (!v) {
                continue;
            }
            if (*v == best) {
                ranks[r][c] = Rank::best;
            } else if (has_second && *v == second) {
                ranks[r][c] = Rank::second;
            }
        }
    }
    return ranks;
}

std::string render_csv(const Table& table) {
    std::string out = csv_field(table.corner);
    for (const auto& c : table.columns) {
        out += "," + csv_field(c);
    }
    out += "\n";
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        out += csv_field(table.rows[r]);
        for (const auto& v : table.cells[r]) {
            out += ",";
            if (v) {
                out += format_double(*v);
            }
        }
        out += "\n";
    }
    return out;
}

std::string render_text(const Table& table) {
    const auto ranks = rank_columns(table);
    std::vector<std::vector<std::string>> grid;
    grid.push_back({table.corner});
    for (const auto& c : table.columns) {
        grid.back().push_back(c);
    }
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        std::vector<std::string> line{table.rows[r]};
        for (std::size_t c = 0; c < table.columns.size(); ++c) {
            const auto& v = table.cells[r][c];
            std::string cell = v ? percent(*v) : "-";
            cell += ranks[r][c] == Rank::best ? "*" : ranks[r][c] == Rank::second ? "+" : " ";
            line.push_back(cell);
        }
        grid.push_back(std::move(line));
    }

    std::vector<std::size_t> width(table.columns.size() + 1, 0);
    for (const auto& line : grid) {
        for (std::size_t c = 0; c < line.size(); ++c) {
            width[c] = std::max(width[c], line[c].size());
        }
    }
    std::string out;
    for (const auto& line : grid) {
        std::string row;
        for (std::size_t c = 0; c < line.size(); ++c) {
            if (c == 0) {
                row += line[c] + std::string(width[c] - line[c].size(), ' ');
            } else {
                row += "  " + std::string(width[c] - line[c].size(), ' ') + line[c];
            }
        }
        while (!row.empty() && row.back() == ' ') {
            row.pop_back();
        }
        out += row + "\n";
    }
    return out;
}

Table eval_table(std::span<const EvalResult> results) {
    Table t;
    t.corner = "endpoint/benchmark";
    t.columns = {"overall_acc", "macro_acc", "acc_plus"};
    std::set<std::string> categories;
    for (const auto& r : results) {
        for (const auto& [cat, acc] : r.per_category) {
            categories.insert(cat);
        }
    }
    t.columns.insert(t.columns.end(), categories.begin(), categories.end());
    for (const auto& r : results) {
        t.rows.push_back(r.benchmark.empty() ? r.endpoint : r.endpoint + "/" + r.benchmark);
        std::vector<std::optional<double>> row{r.overall_acc, r.macro_acc, r.acc_plus};
        for (const auto& cat : categories) {
            auto it = r.per_category.find(cat);
            row.push_back(it == r.per_category.end() ? std::nullopt : std::optional(it->second));
        }
        t.cells.push_back(std::move(row));
    }
    return t;
}

Table transfer_table(std::span<const TransferRecord> records) {
    Table t;
    t.corner = "evaluator";
    for (const auto& r : records) {
        index_of(t.rows, r.evaluator);
        index_of(t.columns, r.rubric_source);
    }
    t.cells.assign(t.rows.size(), std::vector<std::optional<double>>(t.columns.size()));
    for (const auto& r : records) {
        const auto row = index_of(t.rows, r.evaluator);
        const auto col = index_of(t.columns, r.rubric_source);
        t.cells[row][col] = r.accuracy;
    }
    return t;
}

} // namespace rubricrl

#pragma once

#include "rubricrl/bench_eval.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rubricrl {

// Rows x columns of accuracies in [0, 1]; a missing cell renders as "-".
struct Table {
    std::string corner;
    std::vector<std::string> columns;
    std::vector<std::string> rows;
    std::vector<std::vector<std::optional<double>>> cells;
};

enum class Rank { none, best, second };

// Per column: every cell equal to the highest value is best, every cell
// equal to the next distinct value is second.
std::vector<std::vector<Rank>> rank_columns(const Table& table);

// Plain values with 6 decimals, no markers.
std::string render_csv(const Table& table);

// Percentages with 2 decimals, "*" after best and "+" after second best.
std::string render_text(const Table& table);

// One row per (endpoint, benchmark): overall, macro, acc+ and every category seen.
Table eval_table(std::span<const EvalResult> results);

// Evaluators as rows, rubric sources as columns, in first-seen order.
Table transfer_table(std::span<const TransferRecord> records);

} // namespace rubricrl

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace rubricrl {

enum class Verdict { first = 1, second = 2 };

inline int to_int(Verdict v) { return static_cast<int>(v); }
std::optional<Verdict> verdict_from_int(long long value);

struct Criterion {
    std::string name;
    std::optional<double> weight;
    std::string description;

    bool operator==(const Criterion&) const = default;
};

struct Rubric {
    std::vector<Criterion> criteria;
    std::string raw;

    bool has_weights() const;
    bool operator==(const Rubric&) const = default;
};

struct StructuredOutput {
    Rubric rubric;
    std::string evaluation;
    Verdict answer = Verdict::first;
    std::string raw;

    // Field-wise comparison; `raw` is the source text and may differ by
    // a discarded preamble.
    bool operator==(const StructuredOutput& other) const {
        return rubric == other.rubric && evaluation == other.evaluation && answer == other.answer;
    }
};

struct ProxyOutput {
    std::string think;
    Verdict answer = Verdict::first;
    std::string raw;
};

enum class FormatErrorKind { missing_tag, tag_order, bad_verdict, empty_section, trailing_content };

std::string_view to_string(FormatErrorKind kind);

struct FormatError {
    FormatErrorKind kind;
    std::string detail;
};

template <typename T>
using Parsed = std::variant<T, FormatError>;

template <typename T>
bool is_ok(const Parsed<T>& p) {
    return std::holds_alternative<T>(p);
}

struct ParseOptions {
    // Reject any non-whitespace text before the first opening tag.
    bool strict_preamble = false;
};

// <rubric>R</rubric><eval>E</eval><answer>A</answer>
//
// Each tag must occur exactly once and in that order. Section bodies must
// be non-empty after trimming and the answer must trim to "1" or "2".
// Only whitespace may separate the sections or follow </answer>. Checks
// run in the order missing_tag, tag_order, trailing_content,
// empty_section, bad_verdict; the first failing one is reported.
Parsed<StructuredOutput> parse_grm_output(std::string_view text, const ParseOptions& options = {});

// <think>…</think><answer>A</answer>; think may be empty. Any of the
// rubric/eval tags anywhere in the text is trailing_content, since the
// proxy must never author a rubric.
Parsed<ProxyOutput> parse_proxy_output(std::string_view text, const ParseOptions& options = {});

// Numbered items "N. Name (weight): description", one per line, with
// continuation lines folded into the previous description. Falls back to
// a single unnamed criterion holding the whole body when nothing matches.
// Weights survive only if every criterion has one in (0, 1] and they sum
// to 1 within 0.01.
Parsed<Rubric> parse_rubric(std::string_view text);

bool check_format(std::string_view text, const ParseOptions& options = {});

std::string serialize(const StructuredOutput& output);
std::string serialize(const ProxyOutput& output);

namespace tags {
inline constexpr std::string_view rubric_open = "<rubric>";
inline constexpr std::string_view rubric_close = "</rubric>";
inline constexpr std::string_view eval_open = "<eval>";
inline constexpr std::string_view eval_close = "</eval>";
inline constexpr std::string_view answer_open = "<answer>";
inline constexpr std::string_view answer_close = "</answer>";
inline constexpr std::string_view think_open = "<think>";
inline constexpr std::string_view think_close = "</think>";
} // namespace tags

} // namespace rubricrl

#include "rubricrl/grm_format.hpp"

#include "rubricrl/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cctype>
#include <span>

namespace rubricrl {

std::optional<Verdict> verdict_from_int(long long value) {
    if (value == 1) {
        return Verdict::first;
    }
    if (value == 2) {
        return Verdict::second;
    }
    return std::nullopt;
}

bool Rubric::has_weights() const {
    return !criteria.empty() && criteria.front().weight.has_value();
}

std::string_view to_string(FormatErrorKind kind) {
    switch (kind) {
        case FormatErrorKind::missing_tag: return "missing_tag";
        case FormatErrorKind::tag_order: return "tag_order";
        case FormatErrorKind::bad_verdict: return "bad_verdict";
        case FormatErrorKind::empty_section: return "empty_section";
        case FormatErrorKind::trailing_content: return "trailing_content";
    }
    return "unknown";
}

namespace {

struct TagHit {
    std::size_t tag;
    std::size_t pos;
};

std::vector<TagHit> scan_tags(std::string_view text, std::span<const std::string_view> tag_list) {
    std::vector<TagHit> hits;
    std::size_t pos = text.find('<');
    while (pos != std::string_view::npos) {
        std::size_t advance = 1;
        for (std::size_t t = 0; t < tag_list.size(); ++t) {
            if (text.substr(pos).starts_with(tag_list[t])) {
                hits.push_back({t, pos});
                advance = tag_list[t].size();
                break;
            }
        }
        pos = text.find('<', pos + advance);
    }
    return hits;
}

FormatError fail(FormatErrorKind kind, std::string detail) {
    return FormatError{kind, std::move(detail)};
}

bool blank(std::string_view s) { return trim(s).empty(); }

std::optional<Verdict> parse_verdict_body(std::string_view body) {
    auto t = trim(body);
    if (t == "1") {
        return Verdict::first;
    }
    if (t == "2") {
        return Verdict::second;
    }
    return std::nullopt;
}

struct Sections {
    std::vector<std::string_view> bodies;
};

// Shared validation for a fixed sequence of open/close tag pairs. On
// success returns the section bodies in order.
std::variant<Sections, FormatError> split_sections(std::string_view text,
                                                   std::span<const std::string_view> tag_list,
                                                   const ParseOptions& options) {
    const auto hits = scan_tags(text, tag_list);
    std::vector<std::size_t> counts(tag_list.size(), 0);
    for (const auto& h : hits) {
        ++counts[h.tag];
    }
    for (std::size_t t = 0; t < tag_list.size(); ++t) {
        if (counts[t] == 0) {
            return fail(FormatErrorKind::missing_tag, "missing " + std::string(tag_list[t]));
        }
    }
    for (std::size_t t = 0; t < tag_list.size(); ++t) {
        if (counts[t] > 1) {
            return fail(FormatErrorKind::tag_order, "duplicate " + std::string(tag_list[t]));
        }
    }
    for (std::size_t i = 0; i < hits.size(); ++i) {
        if (hits[i].tag != i) {
            return fail(FormatErrorKind::tag_order,
                        "expected " + std::string(tag_list[i]) + " but found " +
                            std::string(tag_list[hits[i].tag]));
        }
    }

    if (options.strict_preamble && !blank(text.substr(0, hits.front().pos))) {
        return fail(FormatErrorKind::trailing_content, "text before " + std::string(tag_list[0]));
    }

    Sections out;
    for (std::size_t i = 0; i + 1 < hits.size(); i += 2) {
        const std::size_t body_start = hits[i].pos + tag_list[i].size();
        out.bodies.push_back(text.substr(body_start, hits[i + 1].pos - body_start));

        const std::size_t gap_start = hits[i + 1].pos + tag_list[i + 1].size();
        const std::size_t gap_end = i + 2 < hits.size() ? hits[i + 2].pos : text.size();
        if (!blank(text.substr(gap_start, gap_end - gap_start))) {
            return fail(FormatErrorKind::trailing_content,
                        "text after " + std::string(tag_list[i + 1]));
        }
    }
    return out;
}

constexpr std::array<std::string_view, 6> grm_tags = {tags::rubric_open, tags::rubric_close,
                                                      tags::eval_open,   tags::eval_close,
                                                      tags::answer_open, tags::answer_close};

constexpr std::array<std::string_view, 4> proxy_tags = {tags::think_open, tags::think_close,
                                                        tags::answer_open, tags::answer_close};

constexpr std::array<std::string_view, 4> rubric_only_tags = {tags::rubric_open, tags::rubric_close,
                                                              tags::eval_open, tags::eval_close};

std::optional<double> parse_number(std::string_view s) {
    s = trim(s);
    if (s.empty()) {
        return std::nullopt;
    }
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        return std::nullopt;
    }
    return value;
}

// "N. Name (w): description" or "N) Name: description".
std::optional<Criterion> parse_item(std::string_view line) {
    line = trim(line);
    std::size_t i = 0;
    while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i])) != 0) {
        ++i;
    }
    if (i == 0 || i >= line.size() || (line[i] != '.' && line[i] != ')')) {
        return std::nullopt;
    }
    std::string_view rest = line.substr(i + 1);
    if (!rest.empty() && std::isspace(static_cast<unsigned char>(rest.front())) == 0) {
        return std::nullopt;
    }

    std::string_view head = rest;
    std::string_view description;
    if (auto colon = rest.find(':'); colon != std::string_view::npos) {
        head = rest.substr(0, colon);
        description = rest.substr(colon + 1);
    }
    head = trim(head);

    Criterion c;
    if (head.ends_with(')')) {
        if (auto open = head.rfind('('); open != std::string_view::npos) {
            if (auto w = parse_number(head.substr(open + 1, head.size() - open - 2))) {
                c.weight = *w;
                head = trim(head.substr(0, open));
            }
        }
    }
    if (head.empty()) {
        return std::nullopt;
    }
    c.name = std::string(head);
    c.description = std::string(trim(description));
    return c;
}

void normalize_weights(std::vector<Criterion>& criteria) {
    double sum = 0.0;
    bool usable = true;
    for (const auto& c : criteria) {
        if (!c.weight || *c.weight <= 0.0 || *c.weight > 1.0) {
            usable = false;
            break;
        }
        sum += *c.weight;
    }
    if (usable && sum >= 0.99 && sum <= 1.01) {
        return;
    }
    for (auto& c : criteria) {
        c.weight.reset();
    }
}

} // namespace

Parsed<Rubric> parse_rubric(std::string_view text) {
    if (blank(text)) {
        return fail(FormatErrorKind::empty_section, "empty rubric");
    }
    Rubric rubric;
    rubric.raw = std::string(text);

    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        std::string_view line = text.substr(start, end - start);
        if (auto item = parse_item(line)) {
            rubric.criteria.push_back(std::move(*item));
        } else if (!rubric.criteria.empty() && !blank(line)) {
            auto& desc = rubric.criteria.back().description;
            if (!desc.empty()) {
                desc.push_back('\n');
            }
            desc.append(trim(line));
        }
        start = end + 1;
    }

    if (rubric.criteria.empty()) {
        rubric.criteria.push_back(Criterion{"", std::nullopt, std::string(trim(text))});
    } else {
        normalize_weights(rubric.criteria);
    }
    return rubric;
}

Parsed<StructuredOutput> parse_grm_output(std::string_view text, const ParseOptions& options) {
    auto split = split_sections(text, grm_tags, options);
    if (auto* err = std::get_if<FormatError>(&split)) {
        return *err;
    }
    const auto& bodies = std::get<Sections>(split).bodies;
    static constexpr std::array<std::string_view, 3> names = {"rubric", "eval", "answer"};
    for (std::size_t i = 0; i < bodies.size(); ++i) {
        if (blank(bodies[i])) {
            return fail(FormatErrorKind::empty_section, "empty " + std::string(names[i]));
        }
    }
    auto verdict = parse_verdict_body(bodies[2]);
    if (!verdict) {
        return fail(FormatErrorKind::bad_verdict, "answer must be 1 or 2, got '" +
                                                      std::string(trim(bodies[2])) + "'");
    }

    StructuredOutput out;
    out.rubric = std::get<Rubric>(parse_rubric(bodies[0]));
    out.evaluation = std::string(bodies[1]);
    out.answer = *verdict;
    out.raw = std::string(text);
    return out;
}

Parsed<ProxyOutput> parse_proxy_output(std::string_view text, const ParseOptions& options) {
    if (auto hits = scan_tags(text, rubric_only_tags); !hits.empty()) {
        return fail(FormatErrorKind::trailing_content,
                    "proxy output contains " + std::string(rubric_only_tags[hits.front().tag]));
    }
    auto split = split_sections(text, proxy_tags, options);
    if (auto* err = std::get_if<FormatError>(&split)) {
        return *err;
    }
    const auto& bodies = std::get<Sections>(split).bodies;
    if (blank(bodies[1])) {
        return fail(FormatErrorKind::empty_section, "empty answer");
    }
    auto verdict = parse_verdict_body(bodies[1]);
    if (!verdict) {
        return fail(FormatErrorKind::bad_verdict, "answer must be 1 or 2, got '" +
                                                      std::string(trim(bodies[1])) + "'");
    }
    ProxyOutput out;
    out.think = std::string(bodies[0]);
    out.answer = *verdict;
    out.raw = std::string(text);
    return out;
}

bool check_format(std::string_view text, const ParseOptions& options) {
    return is_ok(parse_grm_output(text, options));
}

std::string serialize(const StructuredOutput& output) {
    std::string out;
    out.reserve(output.rubric.raw.size() + output.evaluation.size() + 64);
    out.append(tags::rubric_open).append(output.rubric.raw).append(tags::rubric_close);
    out.append(tags::eval_open).append(output.evaluation).append(tags::eval_close);
    out.append(tags::answer_open).append(std::to_string(to_int(output.answer))).append(tags::answer_close);
    return out;
}

std::string serialize(const ProxyOutput& output) {
    std::string out;
    out.append(tags::think_open).append(output.think).append(tags::think_close);
    out.append(tags::answer_open).append(std::to_string(to_int(output.answer))).append(tags::answer_close);
    return out;
}

} // namespace rubricrl

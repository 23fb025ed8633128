#pragma once

// Builders for synthetic benchmarks with scripted judges whose per-sample
// correctness is fixed in advance.

#include "rubricrl/fixture.hpp"
#include "rubricrl/preference_data.hpp"

#include <optional>
#include <string>
#include <vector>

namespace bench {

inline std::string judge_text(rubricrl::Verdict v, const std::string& rubric = "1. Accuracy (1.0): facts match.") {
    return "<rubric>" + rubric + "</rubric><eval>compared both</eval><answer>" + std::to_string(rubricrl::to_int(v)) +
           "</answer>";
}

inline std::string proxy_text(rubricrl::Verdict v) {
    return "<think>applied the criteria</think><answer>" + std::to_string(rubricrl::to_int(v)) + "</answer>";
}

inline rubricrl::Verdict flip(rubricrl::Verdict v) {
    return v == rubricrl::Verdict::first ? rubricrl::Verdict::second : rubricrl::Verdict::first;
}

inline rubricrl::PreferenceSample item(const std::string& id, const std::string& category,
                                       std::optional<std::string> group = std::nullopt) {
    rubricrl::PreferenceSample s;
    s.id = id;
    s.question = "Which response describes the image in " + id + "?";
    s.response_1 = "The image shows two people on a bench.";
    s.response_2 = "The image shows a single dog in snow.";
    s.gold_verdict = id.size() % 2 == 0 ? rubricrl::Verdict::first : rubricrl::Verdict::second;
    s.category = category;
    s.group_id = std::move(group);
    return s;
}

// Appends `size` samples of `category`, the first `correct` of which the
// scripted policy answers correctly.
inline void add_category(std::vector<rubricrl::PreferenceSample>& benchmark, rubricrl::ScriptedFixture& policy,
                         const std::string& category, std::size_t size, std::size_t correct) {
    for (std::size_t i = 0; i < size; ++i) {
        auto s = item(category + "-" + std::to_string(i), category);
        policy.set(s.id + "/policy/0", judge_text(i < correct ? s.gold_verdict : flip(s.gold_verdict)));
        benchmark.push_back(std::move(s));
    }
}

} // namespace bench

#pragma once

#include "rubricrl/grm_format.hpp"
#include "rubricrl/preference_data.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace rubricrl {

// Placeholders: {question} {response_1} {response_2} {image} {rubric}.
// Substitution is a single left-to-right pass, so placeholder-like text
// inside substituted values is left alone. Unknown braces pass through.
struct PromptTemplate {
    std::string system;  // empty means no system message
    std::string user;
};

struct PromptTemplates {
    PromptTemplate policy;
    PromptTemplate proxy;
    // Used when a rubric source produced no parseable rubric.
    PromptTemplate proxy_no_rubric;

    static PromptTemplates defaults();

    // Throws ConfigError when a required placeholder is missing.
    void validate() const;
};

struct TemplatePaths {
    std::filesystem::path policy_system;
    std::filesystem::path policy_user;
    std::filesystem::path proxy_system;
    std::filesystem::path proxy_user;
    std::filesystem::path proxy_no_rubric_user;
};

// Empty paths keep the built-in default for that slot.
PromptTemplates load_templates(const TemplatePaths& paths);

std::string substitute(std::string_view tmpl, const PreferenceSample& sample, std::string_view rubric = {});

std::string render_policy_prompt(const PromptTemplates& templates, const PreferenceSample& sample);

// Throws ValidationError if the rubric text is blank.
std::string render_proxy_prompt(const PromptTemplates& templates, const PreferenceSample& sample,
                                const Rubric& rubric);

std::string render_proxy_no_rubric_prompt(const PromptTemplates& templates, const PreferenceSample& sample);

} // namespace rubricrl

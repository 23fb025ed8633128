#include "rubricrl/templates.hpp"

#include "rubricrl/errors.hpp"
#include "rubricrl/io.hpp"

#include <array>

namespace rubricrl {

namespace {

constexpr std::string_view kPolicySystem =
    "You are an impartial multimodal judge. Given a question about an image and two candidate "
    "responses, first write a rubric of weighted evaluation criteria inside <rubric></rubric> as "
    "numbered items of the form \"N. Name (weight): description\" with weights summing to 1. Then "
    "apply each criterion to both responses inside <eval></eval>. Finally output 1 or 2 inside "
    "<answer></answer> for the better response.";

constexpr std::string_view kPolicyUser =
    "Image: {image}\n"
    "Question: {question}\n\n"
    "Response 1:\n{response_1}\n\n"
    "Response 2:\n{response_2}\n";

constexpr std::string_view kProxySystem =
    "You are an evaluator that follows a given rubric. Do not write a rubric of your own. Apply "
    "the provided criteria to both responses inside <think></think>, then output 1 or 2 inside "
    "<answer></answer> for the better response.";

constexpr std::string_view kProxyUser =
    "Image: {image}\n"
    "Question: {question}\n\n"
    "Response 1:\n{response_1}\n\n"
    "Response 2:\n{response_2}\n\n"
    "Rubric:\n{rubric}\n";

constexpr std::string_view kProxyNoRubricUser =
    "Image: {image}\n"
    "Question: {question}\n\n"
    "Response 1:\n{response_1}\n\n"
    "Response 2:\n{response_2}\n\n"
    "No rubric is available; judge the responses directly.\n";

bool has_placeholder(std::string_view tmpl, std::string_view name) {
    return tmpl.find(name) != std::string_view::npos;
}

void require(std::string_view tmpl, std::string_view placeholder, std::string_view which) {
    if (!has_placeholder(tmpl, placeholder)) {
        throw ConfigError(std::string(which) + " template lacks " + std::string(placeholder));
    }
}

} // namespace

PromptTemplates PromptTemplates::defaults() {
    PromptTemplates t;
    t.policy = {std::string(kPolicySystem), std::string(kPolicyUser)};
    t.proxy = {std::string(kProxySystem), std::string(kProxyUser)};
    t.proxy_no_rubric = {std::string(kProxySystem), std::string(kProxyNoRubricUser)};
    return t;
}

void PromptTemplates::validate() const {
    require(policy.user, "{question}", "policy");
    require(proxy.user, "{question}", "proxy");
    require(proxy.user, "{rubric}", "proxy");
    require(proxy_no_rubric.user, "{question}", "proxy_no_rubric");
}

PromptTemplates load_templates(const TemplatePaths& paths) {
    PromptTemplates t = PromptTemplates::defaults();
    auto load = [](const std::filesystem::path& p, std::string& slot) {
        if (p.empty()) {
            return;
        }
        try {
            slot = read_text_file(p);
        } catch (const DataError&) {
            throw ConfigError("cannot read template " + p.string());
        }
    };
    load(paths.policy_system, t.policy.system);
    load(paths.policy_user, t.policy.user);
    load(paths.proxy_system, t.proxy.system);
    load(paths.proxy_user, t.proxy.user);
    load(paths.proxy_system, t.proxy_no_rubric.system);
    load(paths.proxy_no_rubric_user, t.proxy_no_rubric.user);
    t.validate();
    return t;
}

std::string substitute(std::string_view tmpl, const PreferenceSample& sample, std::string_view rubric) {
    const std::array<std::pair<std::string_view, std::string_view>, 5> table = {{
        {"{question}", sample.question},
        {"{response_1}", sample.response_1},
        {"{response_2}", sample.response_2},
        {"{image}", sample.image_ref ? std::string_view(*sample.image_ref) : std::string_view("(none)")},
        {"{rubric}", rubric},
    }};

    std::string out;
    out.reserve(tmpl.size() + sample.question.size() + sample.response_1.size() + sample.response_2.size() +
                rubric.size());
    std::size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] == '{') {
            bool matched = false;
            for (const auto& [key, value] : table) {
                if (tmpl.substr(i).starts_with(key)) {
                    out += value;
                    i += key.size();
                    matched = true;
                    break;
                }
            }
            if (matched) {
                continue;
            }
        }
        out.push_back(tmpl[i++]);
    }
    return out;
}

std::string render_policy_prompt(const PromptTemplates& templates, const PreferenceSample& sample) {
    return substitute(templates.policy.user, sample);
}

std::string render_proxy_prompt(const PromptTemplates& templates, const PreferenceSample& sample,
                                const Rubric& rubric) {
    if (trim(rubric.raw).empty()) {
        throw ValidationError("refusing to build a proxy prompt without a rubric");
    }
    return substitute(templates.proxy.user, sample, rubric.raw);
}

std::string render_proxy_no_rubric_prompt(const PromptTemplates& templates, const PreferenceSample& sample) {
    return substitute(templates.proxy_no_rubric.user, sample);
}

} // namespace rubricrl

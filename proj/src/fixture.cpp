#include "rubricrl/fixture.hpp"

#include "rubricrl/errors.hpp"
#include "rubricrl/io.hpp"

#include <array>

using json = nlohmann::json;

namespace rubricrl {

std::string FixtureKey::str() const { return sample_id + "/" + purpose + "/" + std::to_string(draw); }

ScriptedFixture ScriptedFixture::from_json(const json& j) {
    if (!j.is_object()) {
        throw ConfigError("fixture must be a JSON object");
    }
    ScriptedFixture f;
    for (const auto& [key, value] : j.items()) {
        if (value.is_string()) {
            f.set(key, value.get<std::string>());
            continue;
        }
        if (!value.is_object() || !value.contains("cases") || !value["cases"].is_array()) {
            throw ConfigError("fixture entry '" + key + "' must be a string or a {cases, default} object");
        }
        std::vector<Case> cases;
        for (const auto& c : value["cases"]) {
            if (!c.is_object() || !c.contains("contains") || !c.contains("text") || !c["contains"].is_string() ||
                !c["text"].is_string()) {
                throw ConfigError("fixture entry '" + key + "' has a malformed case");
            }
            cases.push_back({c["contains"].get<std::string>(), c["text"].get<std::string>()});
        }
        std::optional<std::string> fallback;
        if (auto it = value.find("default"); it != value.end() && it->is_string()) {
            fallback = it->get<std::string>();
        }
        f.set_cases(key, std::move(cases), std::move(fallback));
    }
    return f;
}

ScriptedFixture ScriptedFixture::load(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_text_file(path);
    } catch (const DataError&) {
        throw ConfigError("cannot read fixture " + path.string());
    }
    try {
        return from_json(json::parse(text));
    } catch (const json::parse_error& e) {
        throw ConfigError("fixture " + path.string() + " is not valid JSON: " + e.what());
    }
}

json ScriptedFixture::to_json() const {
    json j = json::object();
    for (const auto& [key, entry] : entries_) {
        if (entry.text) {
            j[key] = *entry.text;
            continue;
        }
        json cases = json::array();
        for (const auto& c : entry.cases) {
            cases.push_back({{"contains", c.contains}, {"text", c.text}});
        }
        json e{{"cases", cases}};
        if (entry.fallback) {
            e["default"] = *entry.fallback;
        }
        j[key] = e;
    }
    return j;
}

void ScriptedFixture::set(const std::string& key, std::string text) {
    entries_[key] = Entry{std::move(text), {}, std::nullopt};
}

void ScriptedFixture::set_cases(const std::string& key, std::vector<Case> cases, std::optional<std::string> fallback) {
    entries_[key] = Entry{std::nullopt, std::move(cases), std::move(fallback)};
}

const std::string& ScriptedFixture::lookup(const FixtureKey& key, std::string_view prompt) const {
    const std::string index = std::to_string(key.draw);
    const std::array<std::string, 4> candidates = {
        key.sample_id + "/" + key.purpose + "/" + index,
        key.sample_id + "/" + key.purpose + "/*",
        "*/" + key.purpose + "/" + index,
        "*/" + key.purpose + "/*",
    };
    for (const auto& k : candidates) {
        auto it = entries_.find(k);
        if (it == entries_.end()) {
            continue;
        }
        const Entry& e = it->second;
        if (e.text) {
            return *e.text;
        }
        for (const auto& c : e.cases) {
            if (prompt.find(c.contains) != std::string_view::npos) {
                return c.text;
            }
        }
        if (e.fallback) {
            return *e.fallback;
        }
        throw FixtureError("fixture entry '" + k + "' has no case matching the request");
    }
    throw FixtureError("no fixture entry for '" + key.str() + "'");
}

} // namespace rubricrl

#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rubricrl {

struct FixtureKey {
    std::string sample_id;
    std::string purpose;
    int draw = 0;

    // "sampleId/purpose/index"
    std::string str() const;
};

// Canned completions for scripted endpoints.
//
// File format: a JSON object mapping "sampleId/purpose/index" to either a
// completion string or a conditional entry
//
//   {"cases": [{"contains": "<needle>", "text": "<completion>"}, ...],
//    "default": "<completion>"}
//
// where the first case whose needle occurs in the request's message text
// wins. Conditional entries let a scripted judge react to the rubric it
// was handed. "*" may stand in for the sample id or the index; lookup
// tries the exact key, then "id/purpose/*", "*/purpose/index" and
// "*/purpose/*".
class ScriptedFixture {
public:
    struct Case {
        std::string contains;
        std::string text;
    };
    struct Entry {
        std::optional<std::string> text;
        std::vector<Case> cases;
        std::optional<std::string> fallback;
    };

    static ScriptedFixture from_json(const nlohmann::json& j);
    static ScriptedFixture load(const std::filesystem::path& path);
    nlohmann::json to_json() const;

    void set(const std::string& key, std::string text);
    void set_cases(const std::string& key, std::vector<Case> cases, std::optional<std::string> fallback = {});

    // Throws FixtureError when no entry (or no matching case) exists.
    const std::string& lookup(const FixtureKey& key, std::string_view prompt) const;

    std::size_t size() const { return entries_.size(); }

private:
    std::map<std::string, Entry, std::less<>> entries_;
};

} // namespace rubricrl

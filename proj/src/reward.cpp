#include "rubricrl/reward.hpp"

#include "rubricrl/errors.hpp"

#include <array>

namespace rubricrl {

double accuracy_reward(std::optional<Verdict> predicted, Verdict gold) {
    return predicted && *predicted == gold ? 1.0 : -1.0;
}

double format_reward(bool well_formed) { return well_formed ? 1.0 : 0.0; }

double proxy_reward(std::optional<Verdict> proxy_verdict, Verdict gold) {
    return proxy_verdict && *proxy_verdict == gold ? 1.0 : -1.0;
}

int transferability(std::optional<Verdict> proxy_verdict, Verdict gold) {
    return proxy_verdict && *proxy_verdict == gold ? 1 : 0;
}

double ensemble_proxy_reward(std::span<const double> rewards) {
    if (rewards.empty()) {
        throw ValidationError("ensemble needs at least one proxy reward");
    }
    double sum = 0.0;
    for (double r : rewards) {
        if (r != 1.0 && r != -1.0) {
            throw ValidationError("proxy rewards must be -1 or +1");
        }
        sum += r;
    }
    return sum / static_cast<double>(rewards.size());
}

namespace {

struct PresetRow {
    std::string_view name;
    FeedbackCells cells;
    bool zero_out;
};

// Reward feedback table: (acc hit, proxy hit), (acc hit, proxy miss),
// (acc miss, proxy hit), (acc miss, proxy miss), zero-out flag.
constexpr std::array<PresetRow, 7> kPresets = {{
    {"fb1", {1.5, 0.5, -1.0, -1.0}, false},
    {"fb2", {1.5, 0.5, -1.5, -1.0}, false},
    {"fb3", {1.5, 0.5, -1.5, -2.0}, false},
    {"fb4", {1.0, 0.5, -1.0, -1.0}, false},
    {"fb5", {1.5, 0.5, -1.0, -1.0}, true},
    {"fb6", {1.5, 0.5, -1.5, -1.0}, true},
    {"fb7", {1.5, 0.5, -1.5, -2.0}, true},
}};

} // namespace

FeedbackConfig FeedbackConfig::additive_config() { return FeedbackConfig{}; }

FeedbackConfig FeedbackConfig::custom(std::string name, FeedbackCells cells, bool zero_out_proxy) {
    FeedbackConfig c;
    c.name = std::move(name);
    c.additive = false;
    c.cells = cells;
    c.zero_out_proxy = zero_out_proxy;
    return c;
}

FeedbackConfig FeedbackConfig::preset(std::string_view name) {
    if (name == "additive") {
        return additive_config();
    }
    for (const auto& row : kPresets) {
        if (row.name == name) {
            return custom(std::string(row.name), row.cells, row.zero_out);
        }
    }
    throw ValidationError("unknown reward config '" + std::string(name) + "'");
}

std::vector<std::string> FeedbackConfig::preset_names() {
    std::vector<std::string> names{"additive"};
    for (const auto& row : kPresets) {
        names.emplace_back(row.name);
    }
    return names;
}

double composite_reward(double acc, double proxy, double format, const FeedbackConfig& config) {
    if (acc != 1.0 && acc != -1.0) {
        throw ValidationError("accuracy reward must be -1 or +1");
    }
    if (format != 0.0 && format != 1.0) {
        throw ValidationError("format reward must be 0 or +1");
    }
    if (!(proxy >= -1.0 && proxy <= 1.0)) {
        throw ValidationError("proxy reward must lie in [-1, +1]");
    }
    if (config.additive) {
        return acc + proxy + kFormatWeight * format;
    }
    const bool acc_hit = acc == 1.0;
    const bool proxy_hit = proxy == 1.0;
    const auto& c = config.cells;
    const double cell = acc_hit ? (proxy_hit ? c.acc_hit_proxy_hit : c.acc_hit_proxy_miss)
                                : (proxy_hit ? c.acc_miss_proxy_hit : c.acc_miss_proxy_miss);
    return cell + kFormatWeight * format;
}

RewardBreakdown make_breakdown(double acc, double proxy, double format, const FeedbackConfig& config) {
    return RewardBreakdown{acc, format, proxy, composite_reward(acc, proxy, format, config)};
}

} // namespace rubricrl

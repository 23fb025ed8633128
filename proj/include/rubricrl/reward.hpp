#pragma once

#include "rubricrl/grm_format.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rubricrl {

inline constexpr double kFormatWeight = 0.5;

double accuracy_reward(std::optional<Verdict> predicted, Verdict gold);
double format_reward(bool well_formed);
double proxy_reward(std::optional<Verdict> proxy_verdict, Verdict gold);
int transferability(std::optional<Verdict> proxy_verdict, Verdict gold);

// Unweighted mean of per-proxy rewards, each of which must be -1 or +1.
double ensemble_proxy_reward(std::span<const double> rewards);

// Combined accuracy/proxy contribution for each outcome pair. A
// component is a "hit" when it equals +1 exactly.
struct FeedbackCells {
    double acc_hit_proxy_hit = 0.0;
    double acc_hit_proxy_miss = 0.0;
    double acc_miss_proxy_hit = 0.0;
    double acc_miss_proxy_miss = 0.0;

    bool operator==(const FeedbackCells&) const = default;
};

struct FeedbackConfig {
    std::string name = "additive";
    bool additive = true;
    FeedbackCells cells;
    bool zero_out_proxy = false;

    static FeedbackConfig additive_config();
    static FeedbackConfig custom(std::string name, FeedbackCells cells, bool zero_out_proxy);

    // "additive", "fb1" … "fb7". Throws ValidationError otherwise.
    static FeedbackConfig preset(std::string_view name);
    static std::vector<std::string> preset_names();
};

// additive: acc + proxy + 0.5 * format.
// table configs: cell(acc hit, proxy hit) + 0.5 * format. The cell is the
// whole accuracy/proxy contribution, so zero_out_proxy does not change the
// total; it is carried as metadata.
double composite_reward(double acc, double proxy, double format, const FeedbackConfig& config);

struct RewardBreakdown {
    double acc = -1.0;
    double format = 0.0;
    double proxy = -1.0;
    double composite = 0.0;
};

RewardBreakdown make_breakdown(double acc, double proxy, double format, const FeedbackConfig& config);

} // namespace rubricrl

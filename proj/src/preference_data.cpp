#include "rubricrl/preference_data.hpp"

#include "rubricrl/errors.hpp"
#include "rubricrl/io.hpp"
#include "rubricrl/rng.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

using json = nlohmann::json;

namespace rubricrl {

void validate(const PreferenceSample& sample) {
    if (sample.id.empty()) {
        throw ValidationError("sample id is empty");
    }
    if (trim(sample.response_1).empty() || trim(sample.response_2).empty()) {
        throw ValidationError("sample " + sample.id + ": responses must be non-empty");
    }
}

namespace {

std::string required_string(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) {
        throw ValidationError(std::string("field '") + key + "' must be a string");
    }
    return it->get<std::string>();
}

std::optional<std::string> optional_string(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) {
        return std::nullopt;
    }
    if (!it->is_string()) {
        throw ValidationError(std::string("field '") + key + "' must be a string or null");
    }
    return it->get<std::string>();
}

} // namespace

PreferenceSample sample_from_json(const json& j) {
    if (!j.is_object()) {
        throw ValidationError("record is not a JSON object");
    }
    PreferenceSample s;
    s.id = required_string(j, "id");
    s.question = required_string(j, "question");
    s.image_ref = optional_string(j, "image_ref");
    s.response_1 = required_string(j, "response_1");
    s.response_2 = required_string(j, "response_2");
    s.source = optional_string(j, "source").value_or("");
    s.category = optional_string(j, "category");
    s.group_id = optional_string(j, "group_id");

    auto it = j.find("gold_verdict");
    if (it == j.end() || !it->is_number_integer()) {
        throw ValidationError("field 'gold_verdict' must be the integer 1 or 2");
    }
    auto verdict = verdict_from_int(it->get<long long>());
    if (!verdict) {
        throw ValidationError("gold_verdict must be 1 or 2, got " + it->dump());
    }
    s.gold_verdict = *verdict;
    validate(s);
    return s;
}

json to_json(const PreferenceSample& s) {
    json j;
    j["id"] = s.id;
    j["question"] = s.question;
    j["image_ref"] = s.image_ref ? json(*s.image_ref) : json(nullptr);
    j["response_1"] = s.response_1;
    j["response_2"] = s.response_2;
    j["gold_verdict"] = to_int(s.gold_verdict);
    j["source"] = s.source;
    j["category"] = s.category ? json(*s.category) : json(nullptr);
    if (s.group_id) {
        j["group_id"] = *s.group_id;
    }
    return j;
}

std::vector<PreferenceSample> parse_samples(std::string_view jsonl) {
    std::vector<PreferenceSample> samples;
    std::unordered_set<std::string> seen;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < jsonl.size()) {
        std::size_t end = jsonl.find('\n', start);
        if (end == std::string_view::npos) {
            end = jsonl.size();
        }
        std::string_view line = jsonl.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }

        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(line_no, std::string("malformed JSON: ") + e.what());
        }
        PreferenceSample s;
        try {
            s = sample_from_json(j);
        } catch (const ValidationError& e) {
            throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!seen.insert(s.id).second) {
            throw ValidationError("line " + std::to_string(line_no) + ": duplicate id '" + s.id + "'");
        }
        samples.push_back(std::move(s));
    }
    return samples;
}

std::vector<PreferenceSample> load_samples(const std::filesystem::path& path) {
    return parse_samples(read_text_file(path));
}

void save_samples(const std::filesystem::path& path, const std::vector<PreferenceSample>& samples) {
    std::string out;
    for (const auto& s : samples) {
        out += to_json(s).dump();
        out += '\n';
    }
    write_file_atomic(path, out);
}

// ---------------------------------------------------------------- curation

namespace {

std::size_t word_edit_distance(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    std::vector<std::size_t> prev(b.size() + 1);
    std::vector<std::size_t> cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) {
        prev[j] = j;
    }
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

std::vector<std::string> shingles(std::string_view text, std::size_t n) {
    const auto words = split_words(normalize_text(text));
    std::vector<std::string> out;
    if (words.size() < n) {
        std::string whole;
        for (const auto& w : words) {
            if (!whole.empty()) {
                whole.push_back(' ');
            }
            whole += w;
        }
        out.push_back(std::move(whole));
        return out;
    }
    for (std::size_t i = 0; i + n <= words.size(); ++i) {
        std::string s = words[i];
        for (std::size_t k = 1; k < n; ++k) {
            s.push_back(' ');
            s += words[i + k];
        }
        out.push_back(std::move(s));
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

enum class QualityVerdict { ok, degenerate };

QualityVerdict quality_check(const PreferenceSample& s, const CurationConfig& config) {
    const auto a = normalize_text(s.response_1);
    const auto b = normalize_text(s.response_2);
    if (a == b) {
        return QualityVerdict::degenerate;
    }
    if (split_words(a).size() < config.min_response_tokens || split_words(b).size() < config.min_response_tokens) {
        return QualityVerdict::degenerate;
    }
    const double shorter = static_cast<double>(std::min(a.size(), b.size()));
    const double longer = static_cast<double>(std::max(a.size(), b.size()));
    if (longer > config.max_length_ratio * shorter) {
        return QualityVerdict::degenerate;
    }
    return QualityVerdict::ok;
}

} // namespace

double edit_distance_difficulty(const PreferenceSample& sample) {
    const auto a = split_words(normalize_text(sample.response_1));
    const auto b = split_words(normalize_text(sample.response_2));
    const std::size_t longest = std::max(a.size(), b.size());
    if (longest == 0) {
        return 0.0;
    }
    return static_cast<double>(word_edit_distance(a, b)) / static_cast<double>(longest);
}

double shingle_jaccard(std::string_view a, std::string_view b, std::size_t n) {
    const auto sa = shingles(a, n);
    const auto sb = shingles(b, n);
    std::vector<std::string> inter;
    std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(inter));
    const std::size_t uni = sa.size() + sb.size() - inter.size();
    return uni == 0 ? 0.0 : static_cast<double>(inter.size()) / static_cast<double>(uni);
}

json CurationReport::to_json() const {
    return json{{"input", input},
                {"kept", kept},
                {"dropped", {{"quality", dropped_quality},
                             {"difficulty", dropped_difficulty},
                             {"similarity", dropped_similarity}}}};
}

CurationResult curate(const std::vector<PreferenceSample>& samples, const CurationConfig& config) {
    if (!(config.similarity_threshold > 0.0 && config.similarity_threshold <= 1.0)) {
        throw ValidationError("similarity_threshold must be in (0, 1]");
    }
    if (config.difficulty_floor < 0.0 || config.max_length_ratio < 1.0 || config.shingle_size == 0) {
        throw ValidationError("curation thresholds out of range");
    }
    const DifficultyScorer& scorer = config.difficulty ? config.difficulty : DifficultyScorer(edit_distance_difficulty);

    CurationResult result;
    result.report.input = samples.size();

    std::unordered_map<std::string, std::uint32_t> shingle_ids;
    std::vector<std::vector<std::size_t>> postings;  // shingle id -> kept sample slots
    std::vector<std::size_t> kept_sizes;

    for (const auto& s : samples) {
        if (quality_check(s, config) == QualityVerdict::degenerate) {
            ++result.report.dropped_quality;
            continue;
        }
        if (scorer(s) < config.difficulty_floor) {
            ++result.report.dropped_difficulty;
            continue;
        }

        std::vector<std::uint32_t> ids;
        for (auto& sh : shingles(s.question, config.shingle_size)) {
            auto [it, inserted] = shingle_ids.try_emplace(std::move(sh), static_cast<std::uint32_t>(shingle_ids.size()));
            if (inserted) {
                postings.emplace_back();
            }
            ids.push_back(it->second);
        }

        std::unordered_map<std::size_t, std::size_t> overlap;
        for (auto id : ids) {
            for (auto slot : postings[id]) {
                ++overlap[slot];
            }
        }
        bool duplicate = false;
        for (auto [slot, inter] : overlap) {
            const double uni = static_cast<double>(kept_sizes[slot] + ids.size() - inter);
            if (static_cast<double>(inter) / uni >= config.similarity_threshold) {
                duplicate = true;
                break;
            }
        }
        if (duplicate) {
            ++result.report.dropped_similarity;
            continue;
        }

        const std::size_t slot = kept_sizes.size();
        kept_sizes.push_back(ids.size());
        for (auto id : ids) {
            postings[id].push_back(slot);
        }
        result.kept.push_back(s);
    }
    result.report.kept = result.kept.size();
    return result;
}

// ------------------------------------------------------------ distillation

json DistilledRecord::to_json() const {
    json j{{"sample_id", sample_id}, {"teacher_raw", teacher_raw}, {"teacher_correct", teacher_correct}};
    j["answer"] = parsed ? json(to_int(parsed->answer)) : json(nullptr);
    return j;
}

DistilledRecord make_distilled_record(const PreferenceSample& sample, std::string teacher_raw,
                                      const ParseOptions& options) {
    DistilledRecord r;
    r.sample_id = sample.id;
    auto parsed = parse_grm_output(teacher_raw, options);
    if (auto* out = std::get_if<StructuredOutput>(&parsed)) {
        r.parsed = std::move(*out);
    }
    r.teacher_raw = std::move(teacher_raw);
    r.teacher_correct = r.parsed && r.parsed->answer == sample.gold_verdict;
    return r;
}

TeacherSplit split_by_teacher_verdict(const std::vector<DistilledRecord>& records,
                                      const std::vector<PreferenceSample>& samples) {
    std::unordered_map<std::string_view, Verdict> gold;
    for (const auto& s : samples) {
        gold.emplace(s.id, s.gold_verdict);
    }
    TeacherSplit split;
    for (const auto& r : records) {
        auto it = gold.find(r.sample_id);
        if (it == gold.end()) {
            throw ValidationError("distilled record references unknown sample '" + r.sample_id + "'");
        }
        const bool correct = r.parsed && r.parsed->answer == it->second;
        (correct ? split.correct : split.hard).push_back(r.sample_id);
    }
    return split;
}

json SplitAllocation::to_json() const {
    return json{{"proxy_sft", proxy_sft},
                {"proxy_rl", proxy_rl},
                {"grm_sft", grm_sft},
                {"rl_pool", rl_pool},
                {"sizes", {{"proxy_sft", proxy_sft.size()},
                           {"proxy_rl", proxy_rl.size()},
                           {"grm_sft", grm_sft.size()},
                           {"rl_pool", rl_pool.size()}}}};
}

SplitAllocation allocate_splits(const std::vector<std::string>& correct, const std::vector<std::string>& hard,
                                const SplitRatios& ratios, std::uint64_t seed) {
    const std::array<double, 3> r = {ratios.proxy_sft, ratios.proxy_rl, ratios.grm_sft};
    double total = 0.0;
    for (double x : r) {
        if (!(x >= 0.0)) {
            throw ValidationError("split ratios must be non-negative");
        }
        total += x;
    }
    if (total > 1.0 + 1e-9) {
        throw ValidationError("split ratios sum to " + format_double(total) + " > 1");
    }
    std::unordered_set<std::string_view> seen;
    for (const auto& id : correct) {
        if (!seen.insert(id).second) {
            throw ValidationError("id '" + id + "' appears twice in the correct set");
        }
    }
    for (const auto& id : hard) {
        if (!seen.insert(id).second) {
            throw ValidationError("id '" + id + "' appears in both correct and hard sets");
        }
    }

    std::vector<std::string> order = correct;
    Rng rng(seed);
    for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[uniform_index(rng, i)]);
    }

    const double n = static_cast<double>(order.size());
    SplitAllocation out;
    std::array<std::vector<std::string>*, 3> targets = {&out.proxy_sft, &out.proxy_rl, &out.grm_sft};
    std::size_t cursor = 0;
    for (std::size_t k = 0; k < 3; ++k) {
        // The epsilon absorbs representation error such as 0.29 * 100.
        auto take = static_cast<std::size_t>(std::floor(r[k] * n + 1e-9));
        take = std::min(take, order.size() - cursor);
        targets[k]->assign(order.begin() + static_cast<std::ptrdiff_t>(cursor),
                           order.begin() + static_cast<std::ptrdiff_t>(cursor + take));
        cursor += take;
    }
    out.rl_pool.assign(order.begin() + static_cast<std::ptrdiff_t>(cursor), order.end());
    out.rl_pool.insert(out.rl_pool.end(), hard.begin(), hard.end());
    return out;
}

} // namespace rubricrl

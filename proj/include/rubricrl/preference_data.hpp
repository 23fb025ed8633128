#pragma once

#include "rubricrl/grm_format.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace rubricrl {

struct PreferenceSample {
    std::string id;
    std::string question;
    std::optional<std::string> image_ref;
    std::string response_1;
    std::string response_2;
    Verdict gold_verdict = Verdict::first;
    std::string source;
    std::optional<std::string> category;
    // Only meaningful for benchmark files (Acc+ grouping).
    std::optional<std::string> group_id;

    bool operator==(const PreferenceSample&) const = default;
};

// Throws ValidationError on an invariant violation.
void validate(const PreferenceSample& sample);

PreferenceSample sample_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PreferenceSample& sample);

// One JSON object per line; blank lines are skipped. Errors name the
// 1-based line number.
std::vector<PreferenceSample> load_samples(const std::filesystem::path& path);
std::vector<PreferenceSample> parse_samples(std::string_view jsonl);
void save_samples(const std::filesystem::path& path, const std::vector<PreferenceSample>& samples);

// ---------------------------------------------------------------- curation

// Higher means the pair is harder to tell apart.
using DifficultyScorer = std::function<double(const PreferenceSample&)>;

// Word-level Levenshtein distance between the normalized responses,
// divided by the longer response's word count.
double edit_distance_difficulty(const PreferenceSample& sample);

// Jaccard similarity of the sets of `n`-word shingles of two normalized
// texts. Texts shorter than n words form a single shingle.
double shingle_jaccard(std::string_view a, std::string_view b, std::size_t n = 3);

struct CurationConfig {
    std::size_t min_response_tokens = 3;
    double max_length_ratio = 20.0;
    double difficulty_floor = 0.05;
    double similarity_threshold = 0.9;
    std::size_t shingle_size = 3;
    DifficultyScorer difficulty = edit_distance_difficulty;
};

struct CurationReport {
    std::size_t input = 0;
    std::size_t kept = 0;
    std::size_t dropped_quality = 0;
    std::size_t dropped_difficulty = 0;
    std::size_t dropped_similarity = 0;

    nlohmann::json to_json() const;
};

struct CurationResult {
    std::vector<PreferenceSample> kept;
    CurationReport report;
};

// Filters run quality, difficulty, similarity; a sample is counted under
// the first filter that drops it. Similarity keeps the first occurrence
// in input order.
CurationResult curate(const std::vector<PreferenceSample>& samples, const CurationConfig& config = {});

// ------------------------------------------------------------ distillation

struct DistilledRecord {
    std::string sample_id;
    std::string teacher_raw;
    std::optional<StructuredOutput> parsed;
    bool teacher_correct = false;

    nlohmann::json to_json() const;
};

DistilledRecord make_distilled_record(const PreferenceSample& sample, std::string teacher_raw,
                                      const ParseOptions& options = {});

struct TeacherSplit {
    std::vector<std::string> correct;
    std::vector<std::string> hard;
};

// Unparseable teacher output lands in `hard`. Throws ValidationError for a
// record whose sample id is not in `samples`.
TeacherSplit split_by_teacher_verdict(const std::vector<DistilledRecord>& records,
                                      const std::vector<PreferenceSample>& samples);

struct SplitRatios {
    double proxy_sft = 0.2;
    double proxy_rl = 0.4;
    double grm_sft = 0.4;
};

struct SplitAllocation {
    std::vector<std::string> proxy_sft;
    std::vector<std::string> proxy_rl;
    std::vector<std::string> grm_sft;
    std::vector<std::string> rl_pool;

    nlohmann::json to_json() const;
};

// Shuffles `correct` with `seed`, takes floor(ratio * |correct|) ids for
// each of the three supervised splits in turn, and puts the leftover
// correct ids followed by every hard id into rl_pool.
SplitAllocation allocate_splits(const std::vector<std::string>& correct, const std::vector<std::string>& hard,
                                const SplitRatios& ratios, std::uint64_t seed);

} // namespace rubricrl

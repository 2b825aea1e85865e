#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mssum/stages.hpp"

namespace mssum {

struct MixedCriteria : std::runtime_error {
    explicit MixedCriteria(const std::string& what) : std::runtime_error(what) {}
};
struct EmptyInput : std::runtime_error {
    explicit EmptyInput(const std::string& what) : std::runtime_error(what) {}
};
struct LengthMismatch : std::runtime_error {
    explicit LengthMismatch(const std::string& what) : std::runtime_error(what) {}
};
struct TooFewSamples : std::runtime_error {
    explicit TooFewSamples(const std::string& what) : std::runtime_error(what) {}
};
struct DegenerateData : std::runtime_error {
    explicit DegenerateData(const std::string& what) : std::runtime_error(what) {}
};

struct Criterion {
    std::string key;         // INF, REL, FAC, OVR, INF_P, REL_P, OVR_P
    std::string definition;
    bool personalized = false;

    static Criterion standard(const std::string& key);  // built-in definition
    static const std::vector<std::string>& standard_keys();
};

struct JudgeVerdict {
    std::string criterion;
    int score = 0;  // 1..5
    std::string explanation;
    std::string raw;
};

struct AtomicFact {
    std::string text;
    bool supported = false;
};

struct FactReport {
    std::vector<AtomicFact> facts;
    double support_ratio = 0.0;
    int likert = 0;  // 1 + round(4 * support_ratio)
};

struct ScoreAggregate {
    std::string criterion;
    double mean = 0.0;
    double stddev = 0.0;  // population
    std::size_t n = 0;
};

struct SignificanceReport {
    std::string setup_a;
    std::string setup_b;
    double p_value = 1.0;
    std::string method;
    bool significant_05 = false;
    bool significant_01 = false;
};

enum class AgreementLevel { ordinal, interval };

// Items x raters; missing cells allowed.
struct RatingMatrix {
    std::vector<std::vector<std::optional<int>>> rows;  // one row per item
};

struct AgreementReport {
    double alpha = 0.0;
    AgreementLevel level = AgreementLevel::ordinal;
};

// Splits the judge output at the last '!' preceding a parseable single-key
// JSON object. Returns nullopt when no such split exists or the score is
// outside 1..5.
std::optional<JudgeVerdict> parse_judge_output(const std::string& raw,
                                               const std::string& criterion_key);

JudgeVerdict judge(const std::string& summary, const std::string& transcript,
                   const Criterion& criterion, const std::optional<Persona>& persona,
                   StageContext& ctx);

FactReport fact_score(const std::string& summary, const std::string& transcript,
                      StageContext& ctx);

int likert_from_ratio(double support_ratio);

ScoreAggregate aggregate(const std::vector<JudgeVerdict>& verdicts);
ScoreAggregate aggregate_scores(const std::string& criterion, const std::vector<int>& scores);

enum class CompareMethod { permutation, wilcoxon };

SignificanceReport compare(const std::vector<int>& scores_a, const std::vector<int>& scores_b,
                           bool paired, CompareMethod method = CompareMethod::permutation,
                           std::uint64_t seed = 0, std::size_t resamples = 10000);

AgreementReport krippendorff_alpha(const RatingMatrix& matrix, AgreementLevel level);

// CSV ingestion: rows = items, columns = raters, blank cell = missing.
RatingMatrix rating_matrix_from_csv(const std::string& csv_text);

}  // namespace mssum

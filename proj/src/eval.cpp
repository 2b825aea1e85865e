#include "mssum/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

namespace mssum {

namespace {

const std::map<std::string, std::pair<std::string, bool>>& criterion_table() {
    static const std::map<std::string, std::pair<std::string, bool>> table = {
        {"INF",
         {"Informativeness (INF): Assesses completeness and clarity. Ensures all essential "
          "details and key ideas are conveyed without omissions or ambiguity.",
          false}},
        {"REL",
         {"Relevance (REL): Measures alignment with (user's) specific information needs. "
          "Focuses on inclusion of central key points.",
          false}},
        {"FAC",
         {"Factuality (FAC): Refers to accuracy and truthfulness. Ensures all information is "
          "consistent with the original content.",
          false}},
        {"OVR",
         {"Overall (OVR): Assesses the overall summary quality, considering redundancy, "
          "incoherence, language issues (i.e., inappropriate or ungrammatical usage, and "
          "failure to capture unique styles), omissions, coreference problems (i.e., "
          "unresolved references, misattributions, or missing mentions), hallucinations, "
          "structural flaws (i.e., misrepresenting discourse order or logic), and "
          "irrelevance.",
          false}},
        {"INF_P",
         {"Informativeness for the target reader (INF-P): Assesses completeness and clarity "
          "with respect to the extracted persona. Ensures all details and key ideas essential "
          "to the target reader are conveyed without omissions or ambiguity.",
          true}},
        {"REL_P",
         {"Relevance for the target reader (REL-P): Measures alignment with the target "
          "persona's specific information needs. Focuses on inclusion of the key points "
          "central to the persona.",
          true}},
        {"OVR_P",
         {"Overall for the target reader (OVR-P): Assesses the overall summary quality for "
          "the target persona, considering redundancy, incoherence, language issues, "
          "omissions, coreference problems, hallucinations, structural flaws, and "
          "irrelevance with respect to the persona's needs.",
          true}},
    };
    return table;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

Criterion Criterion::standard(const std::string& key) {
    auto it = criterion_table().find(key);
    if (it == criterion_table().end()) {
        throw SchemaError("unknown criterion key '" + key + "'");
    }
    return Criterion{key, it->second.first, it->second.second};
}

const std::vector<std::string>& Criterion::standard_keys() {
    static const std::vector<std::string> keys = {"INF",   "REL",   "FAC",  "OVR",
                                                  "INF_P", "REL_P", "OVR_P"};
    return keys;
}

std::optional<JudgeVerdict> parse_judge_output(const std::string& raw,
                                               const std::string& criterion_key) {
    auto strip_fences = [](const std::string& text) {
        std::string out;
        std::istringstream in(text);
        std::string line;
        while (std::getline(in, line)) {
            std::size_t first = line.find_first_not_of(" \t");
            if (first != std::string::npos && line.compare(first, 3, "```") == 0) continue;
            out += line;
            out += '\n';
        }
        return out;
    };

    for (std::size_t pos = raw.rfind('!'); pos != std::string::npos;
         pos = (pos == 0 ? std::string::npos : raw.rfind('!', pos - 1))) {
        std::string tail = strip_fences(raw.substr(pos + 1));
        std::size_t a = tail.find('{');
        std::size_t b = tail.rfind('}');
        if (a == std::string::npos || b == std::string::npos || b < a) continue;
        auto j = nlohmann::json::parse(tail.substr(a, b - a + 1), nullptr, false);
        if (j.is_discarded() || !j.is_object() || j.size() != 1) continue;
        const auto& value = j.begin().value();
        if (!value.is_number_integer()) return std::nullopt;
        int score = value.get<int>();
        if (score < 1 || score > 5) return std::nullopt;
        JudgeVerdict v;
        v.criterion = criterion_key;
        v.score = score;
        v.explanation = raw.substr(0, pos);
        while (!v.explanation.empty() &&
               std::isspace(static_cast<unsigned char>(v.explanation.back()))) {
            v.explanation.pop_back();
        }
        v.raw = raw;
        return v;
    }
    return std::nullopt;
}

JudgeVerdict judge(const std::string& summary, const std::string& transcript,
                   const Criterion& criterion, const std::optional<Persona>& persona,
                   StageContext& ctx) {
    if (criterion.personalized && !persona) {
        throw SchemaError("criterion " + criterion.key + " requires a persona");
    }

    std::map<std::string, std::string> vars;
    vars["transcript"] = transcript;
    vars["summary"] = summary;
    vars["criteria"] = criterion.definition;
    if (criterion.personalized) vars["persona"] = persona->text;

    ChatRequest req;
    req.stage_tag = "judge";
    req.user_content = render_prompt(ctx.prompts.get("judge"), vars, {"persona"});
    ChatResponse resp = chat(*ctx.chat, req, *ctx.ledger, ctx.tokenizer);
    auto verdict = parse_judge_output(resp.text, criterion.key);
    if (!verdict) {
        // One corrective re-ask before erroring.
        ChatRequest retry = req;
        retry.user_content +=
            "\nRemember, the output must be in the format: <explanation, step-by-step> ! "
            "<json object> with a single Likert score between 1 and 5.";
        resp = chat(*ctx.chat, retry, *ctx.ledger, ctx.tokenizer);
        verdict = parse_judge_output(resp.text, criterion.key);
    }
    if (!verdict) {
        throw ParseError("judge: no parseable score for " + criterion.key + " after re-ask");
    }
    return *verdict;
}

int likert_from_ratio(double support_ratio) {
    return 1 + static_cast<int>(std::lround(4.0 * support_ratio));
}

FactReport fact_score(const std::string& summary, const std::string& transcript,
                      StageContext& ctx) {
    if (summary.empty()) throw SchemaError("fact_score: summary must be non-empty");

    ChatRequest facts_req;
    facts_req.stage_tag = "facts";
    facts_req.user_content =
        render_prompt(ctx.prompts.get("facts"), {{"summary", summary}});
    ChatResponse facts_resp = chat(*ctx.chat, facts_req, *ctx.ledger, ctx.tokenizer);

    nlohmann::json facts_json;
    {
        std::size_t a = facts_resp.text.find('[');
        std::size_t b = facts_resp.text.rfind(']');
        if (a == std::string::npos || b == std::string::npos || b < a) {
            throw ParseError("fact_score: decomposition output has no JSON array");
        }
        facts_json = nlohmann::json::parse(facts_resp.text.substr(a, b - a + 1), nullptr, false);
        if (facts_json.is_discarded() || !facts_json.is_array()) {
            throw ParseError("fact_score: decomposition output is not a JSON array");
        }
    }
    FactReport report;
    for (const auto& f : facts_json) {
        if (!f.is_string()) throw ParseError("fact_score: facts must be strings");
        report.facts.push_back({f.get<std::string>(), false});
    }
    if (report.facts.empty()) throw ParseError("fact_score: degenerate decomposition (0 facts)");

    ChatRequest check_req;
    check_req.stage_tag = "fact_check";
    check_req.user_content = render_prompt(
        ctx.prompts.get("fact_check"),
        {{"transcript", transcript}, {"facts", facts_json.dump()}});
    ChatResponse check_resp = chat(*ctx.chat, check_req, *ctx.ledger, ctx.tokenizer);

    std::size_t a = check_resp.text.find('[');
    std::size_t b = check_resp.text.rfind(']');
    if (a == std::string::npos || b == std::string::npos || b < a) {
        throw ParseError("fact_score: labeling output has no JSON array");
    }
    auto labels = nlohmann::json::parse(check_resp.text.substr(a, b - a + 1), nullptr, false);
    if (labels.is_discarded() || !labels.is_array()) {
        throw ParseError("fact_score: labeling output is not a JSON array");
    }
    if (labels.size() != report.facts.size()) {
        throw LengthMismatch("fact_score: " + std::to_string(labels.size()) + " labels for " +
                             std::to_string(report.facts.size()) + " facts");
    }
    std::size_t supported = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (!labels[i].is_boolean()) throw ParseError("fact_score: labels must be booleans");
        report.facts[i].supported = labels[i].get<bool>();
        if (report.facts[i].supported) ++supported;
    }
    report.support_ratio =
        static_cast<double>(supported) / static_cast<double>(report.facts.size());
    report.likert = likert_from_ratio(report.support_ratio);
    return report;
}

ScoreAggregate aggregate_scores(const std::string& criterion, const std::vector<int>& scores) {
    if (scores.empty()) throw EmptyInput("aggregate: no scores");
    ScoreAggregate agg;
    agg.criterion = criterion;
    agg.n = scores.size();
    double sum = 0;
    for (int s : scores) sum += s;
    agg.mean = sum / static_cast<double>(scores.size());
    double var = 0;
    for (int s : scores) var += (s - agg.mean) * (s - agg.mean);
    agg.stddev = std::sqrt(var / static_cast<double>(scores.size()));
    return agg;
}

ScoreAggregate aggregate(const std::vector<JudgeVerdict>& verdicts) {
    if (verdicts.empty()) throw EmptyInput("aggregate: no verdicts");
    std::vector<int> scores;
    for (const auto& v : verdicts) {
        if (v.criterion != verdicts.front().criterion) {
            throw MixedCriteria("aggregate: mixed criteria " + verdicts.front().criterion +
                                " and " + v.criterion);
        }
        scores.push_back(v.score);
    }
    return aggregate_scores(verdicts.front().criterion, scores);
}

SignificanceReport compare(const std::vector<int>& scores_a, const std::vector<int>& scores_b,
                           bool paired, CompareMethod method, std::uint64_t seed,
                           std::size_t resamples) {
    if (paired && scores_a.size() != scores_b.size()) {
        throw LengthMismatch("compare: paired comparison needs equal lengths");
    }
    if (scores_a.size() < 5 || scores_b.size() < 5) {
        throw TooFewSamples("compare: need at least 5 samples per side");
    }

    SignificanceReport report;
    report.setup_a = "a";
    report.setup_b = "b";

    std::mt19937_64 rng(seed);
    const double eps = 1e-12;

    if (method == CompareMethod::wilcoxon) {
        if (!paired) throw SchemaError("compare: wilcoxon signed-rank requires paired samples");
        report.method = "wilcoxon-signed-rank";
        std::vector<double> diffs;
        for (std::size_t i = 0; i < scores_a.size(); ++i) {
            double d = scores_a[i] - scores_b[i];
            if (d != 0.0) diffs.push_back(d);
        }
        if (diffs.empty()) {
            report.p_value = 1.0;
        } else {
            std::vector<std::size_t> order(diffs.size());
            std::iota(order.begin(), order.end(), 0);
            std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
                return std::abs(diffs[x]) < std::abs(diffs[y]);
            });
            std::vector<double> ranks(diffs.size());
            double tie_correction = 0.0;
            for (std::size_t i = 0; i < order.size();) {
                std::size_t j = i;
                while (j < order.size() &&
                       std::abs(diffs[order[j]]) == std::abs(diffs[order[i]])) {
                    ++j;
                }
                double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
                for (std::size_t k = i; k < j; ++k) ranks[order[k]] = avg_rank;
                double t = static_cast<double>(j - i);
                tie_correction += t * t * t - t;
                i = j;
            }
            double w_plus = 0.0;
            for (std::size_t i = 0; i < diffs.size(); ++i) {
                if (diffs[i] > 0) w_plus += ranks[i];
            }
            double n = static_cast<double>(diffs.size());
            double mu = n * (n + 1.0) / 4.0;
            double sigma2 = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_correction / 48.0;
            if (sigma2 <= 0) {
                report.p_value = 1.0;
            } else {
                double z = (w_plus - mu) / std::sqrt(sigma2);
                report.p_value = std::min(1.0, 2.0 * (1.0 - normal_cdf(std::abs(z))));
            }
        }
    } else if (paired) {
        report.method = "paired-permutation";
        std::vector<double> diffs(scores_a.size());
        double observed = 0;
        for (std::size_t i = 0; i < scores_a.size(); ++i) {
            diffs[i] = scores_a[i] - scores_b[i];
            observed += diffs[i];
        }
        observed = std::abs(observed / static_cast<double>(diffs.size()));
        std::size_t at_least = 0;
        for (std::size_t r = 0; r < resamples; ++r) {
            double sum = 0;
            for (double d : diffs) sum += (rng() & 1) ? d : -d;
            if (std::abs(sum / static_cast<double>(diffs.size())) >= observed - eps) ++at_least;
        }
        report.p_value = static_cast<double>(at_least + 1) / static_cast<double>(resamples + 1);
        if (observed <= eps) report.p_value = 1.0;
    } else {
        report.method = "label-permutation";
        std::vector<double> pooled;
        for (int s : scores_a) pooled.push_back(s);
        for (int s : scores_b) pooled.push_back(s);
        auto mean_diff = [&](const std::vector<double>& v, std::size_t na) {
            double sa = 0, sb = 0;
            for (std::size_t i = 0; i < v.size(); ++i) (i < na ? sa : sb) += v[i];
            return sa / static_cast<double>(na) -
                   sb / static_cast<double>(v.size() - na);
        };
        double observed = std::abs(mean_diff(pooled, scores_a.size()));
        std::size_t at_least = 0;
        std::vector<double> perm = pooled;
        for (std::size_t r = 0; r < resamples; ++r) {
            std::shuffle(perm.begin(), perm.end(), rng);
            if (std::abs(mean_diff(perm, scores_a.size())) >= observed - eps) ++at_least;
        }
        report.p_value = static_cast<double>(at_least + 1) / static_cast<double>(resamples + 1);
        if (observed <= eps) report.p_value = 1.0;
    }

    report.significant_05 = report.p_value <= 0.05;
    report.significant_01 = report.p_value <= 0.01;
    return report;
}

AgreementReport krippendorff_alpha(const RatingMatrix& matrix, AgreementLevel level) {
    std::size_t raters = 0;
    for (const auto& row : matrix.rows) raters = std::max(raters, row.size());
    if (raters < 2) throw EmptyInput("krippendorff_alpha: need at least 2 raters");

    // Domain of observed values and per-unit pairable counts.
    std::vector<int> domain;
    for (const auto& row : matrix.rows) {
        for (const auto& cell : row) {
            if (cell) domain.push_back(*cell);
        }
    }
    std::sort(domain.begin(), domain.end());
    domain.erase(std::unique(domain.begin(), domain.end()), domain.end());
    if (domain.empty()) throw EmptyInput("krippendorff_alpha: no ratings");
    if (domain.size() < 2) {
        throw DegenerateData("krippendorff_alpha: all ratings identical, alpha undefined");
    }
    std::map<int, std::size_t> value_index;
    for (std::size_t i = 0; i < domain.size(); ++i) value_index[domain[i]] = i;

    const std::size_t V = domain.size();
    std::vector<std::vector<double>> coincidence(V, std::vector<double>(V, 0.0));
    bool any_pairable = false;
    for (const auto& row : matrix.rows) {
        std::vector<int> values;
        for (const auto& cell : row) {
            if (cell) values.push_back(*cell);
        }
        if (values.size() < 2) continue;
        any_pairable = true;
        double weight = 1.0 / static_cast<double>(values.size() - 1);
        for (std::size_t i = 0; i < values.size(); ++i) {
            for (std::size_t j = 0; j < values.size(); ++j) {
                if (i == j) continue;
                coincidence[value_index[values[i]]][value_index[values[j]]] += weight;
            }
        }
    }
    if (!any_pairable) {
        throw EmptyInput("krippendorff_alpha: no item has two or more ratings");
    }

    std::vector<double> marginal(V, 0.0);
    double n = 0.0;
    for (std::size_t v = 0; v < V; ++v) {
        for (std::size_t k = 0; k < V; ++k) marginal[v] += coincidence[v][k];
        n += marginal[v];
    }

    auto delta2 = [&](std::size_t v, std::size_t k) -> double {
        if (level == AgreementLevel::interval) {
            double d = static_cast<double>(domain[v]) - static_cast<double>(domain[k]);
            return d * d;
        }
        // Ordinal: squared sum of marginals between the two ranks.
        std::size_t lo = std::min(v, k), hi = std::max(v, k);
        double sum = 0.0;
        for (std::size_t g = lo; g <= hi; ++g) sum += marginal[g];
        sum -= (marginal[lo] + marginal[hi]) / 2.0;
        return sum * sum;
    };

    double d_observed = 0.0, d_expected = 0.0;
    for (std::size_t v = 0; v < V; ++v) {
        for (std::size_t k = 0; k < V; ++k) {
            if (v == k) continue;
            double d2 = delta2(v, k);
            d_observed += coincidence[v][k] * d2;
            d_expected += marginal[v] * marginal[k] * d2;
        }
    }
    d_expected /= (n - 1.0);
    if (d_expected == 0.0) {
        throw DegenerateData("krippendorff_alpha: no expressible disagreement");
    }

    AgreementReport report;
    report.level = level;
    report.alpha = 1.0 - d_observed / d_expected;
    return report;
}

RatingMatrix rating_matrix_from_csv(const std::string& csv_text) {
    RatingMatrix m;
    std::istringstream in(csv_text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::optional<int>> row;
        std::size_t pos = 0;
        while (pos <= line.size()) {
            std::size_t comma = line.find(',', pos);
            std::string cell = line.substr(
                pos, comma == std::string::npos ? std::string::npos : comma - pos);
            std::size_t b = cell.find_first_not_of(" \t");
            std::size_t e = cell.find_last_not_of(" \t");
            if (b == std::string::npos) {
                row.push_back(std::nullopt);
            } else {
                row.push_back(std::stoi(cell.substr(b, e - b + 1)));
            }
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        m.rows.push_back(std::move(row));
    }
    return m;
}

}  // namespace mssum

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mssum/corpus.hpp"
#include "mssum/eval.hpp"
#include "mssum/http_backend.hpp"
#include "mssum/mock_backend.hpp"
#include "mssum/pipeline.hpp"
#include "mssum/prompts.hpp"
#include "mssum/provider.hpp"
#include "mssum/retrieval.hpp"
#include "mssum/stages.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitConfig = 2;
constexpr int kExitProvider = 3;
constexpr int kExitParse = 4;

struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

// ${NAME} interpolation over every string value; secrets stay in the
// environment and are resolved only at load time.
std::string interpolate_env(const std::string& s) {
    std::string out;
    std::size_t pos = 0;
    while (pos < s.size()) {
        std::size_t open = s.find("${", pos);
        if (open == std::string::npos) {
            out += s.substr(pos);
            break;
        }
        std::size_t close = s.find('}', open + 2);
        if (close == std::string::npos) {
            out += s.substr(pos);
            break;
        }
        out += s.substr(pos, open - pos);
        std::string name = s.substr(open + 2, close - open - 2);
        const char* value = std::getenv(name.c_str());
        if (value) out += value;
        pos = close + 1;
    }
    return out;
}

void interpolate_env(json& j) {
    if (j.is_string()) {
        j = interpolate_env(j.get<std::string>());
    } else if (j.is_object() || j.is_array()) {
        for (auto& child : j) interpolate_env(child);
    }
}

struct AppConfig {
    std::string out_dir = "runs";
    std::uint64_t seed = 0;
    std::optional<std::string> prices_path;
    std::optional<std::string> prompt_dir;
    json chat = {{"backend", "mock"}};
    json embed = {{"backend", "mock"}};
    json judge = {{"backend", "mock"}};
};

AppConfig load_config(const std::optional<std::string>& path) {
    AppConfig cfg;
    if (!path) return cfg;
    std::ifstream in(*path);
    if (!in) throw mssum::ConfigError("config file not found: " + *path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw mssum::ConfigError("config file is not a JSON object: " + *path);
    }
    interpolate_env(j);
    if (j.contains("out")) cfg.out_dir = j["out"].get<std::string>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("prices")) cfg.prices_path = j["prices"].get<std::string>();
    if (j.contains("prompt_dir")) cfg.prompt_dir = j["prompt_dir"].get<std::string>();
    if (j.contains("chat")) cfg.chat = j["chat"];
    if (j.contains("embed")) cfg.embed = j["embed"];
    if (j.contains("judge")) cfg.judge = j["judge"];
    for (const auto& p : {cfg.prices_path, cfg.prompt_dir}) {
        if (p && !fs::exists(*p)) throw mssum::ConfigError("configured path missing: " + *p);
    }
    return cfg;
}

mssum::ModelProfile lookup_profile(const AppConfig& cfg, const std::string& model) {
    if (!cfg.prices_path) {
        throw mssum::ConfigError("model '" + model + "' requires a prices file in the config");
    }
    auto table = mssum::load_price_table(*cfg.prices_path);
    auto it = table.find(model);
    if (it == table.end()) {
        throw mssum::ConfigError("model '" + model + "' not present in " + *cfg.prices_path);
    }
    return it->second;
}

mssum::HttpBackendConfig http_config_from(const json& role_cfg) {
    mssum::HttpBackendConfig hc;
    if (role_cfg.contains("base_url")) hc.base_url = role_cfg["base_url"].get<std::string>();
    if (role_cfg.contains("api_key_env")) hc.api_key_env = role_cfg["api_key_env"].get<std::string>();
    if (role_cfg.contains("timeout_s")) hc.timeout_s = role_cfg["timeout_s"].get<double>();
    return hc;
}

std::shared_ptr<mssum::ChatBackend> make_chat_backend(const AppConfig& cfg, const json& role_cfg,
                                                      const std::string& override_name,
                                                      std::uint64_t seed) {
    std::string kind = role_cfg.value("backend", std::string("mock"));
    if (!override_name.empty()) kind = override_name;
    if (kind == "mock") return std::make_shared<mssum::MockChatBackend>(seed);
    if (kind == "http") {
        std::string model = role_cfg.value("model", std::string());
        if (model.empty()) throw mssum::ConfigError("http chat backend needs a 'model' name");
        return std::make_shared<mssum::HttpChatBackend>(http_config_from(role_cfg),
                                                        lookup_profile(cfg, model));
    }
    throw UsageError("unknown chat backend '" + kind + "' (expected mock or http)");
}

std::shared_ptr<mssum::EmbedBackend> make_embed_backend(const AppConfig& cfg, const json& role_cfg,
                                                        const std::string& override_name) {
    std::string kind = role_cfg.value("backend", std::string("mock"));
    if (!override_name.empty()) kind = override_name;
    if (kind == "mock") {
        return std::make_shared<mssum::MockEmbedBackend>(role_cfg.value("dimension", 64));
    }
    if (kind == "http") {
        std::string model = role_cfg.value("model", std::string());
        if (model.empty()) throw mssum::ConfigError("http embed backend needs a 'model' name");
        std::size_t dim = role_cfg.value("dimension", 1536);
        return std::make_shared<mssum::HttpEmbedBackend>(http_config_from(role_cfg),
                                                         lookup_profile(cfg, model), dim);
    }
    throw UsageError("unknown embed backend '" + kind + "' (expected mock or http)");
}

void atomic_write(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw mssum::ConfigError("cannot write " + tmp.string());
        out << content;
    }
    fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw mssum::ConfigError("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::vector<fs::path> sorted_json_files(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw mssum::ConfigError("not a directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    return files;
}

mssum::PromptLibrary make_prompts(const AppConfig& cfg, const std::string& flag_dir) {
    if (!flag_dir.empty()) return mssum::PromptLibrary::from_directory(flag_dir);
    if (cfg.prompt_dir) return mssum::PromptLibrary::from_directory(*cfg.prompt_dir);
    return mssum::PromptLibrary::defaults();
}

void print_cost_line(const mssum::LedgerTotals& totals, double wall_time_s) {
    std::printf("cost=$%.6f time=%.3fs\n", totals.total_cost, wall_time_s);
}

// ---------------------------------------------------------------- summarize

int cmd_summarize(const std::string& meeting_path, const std::string& variant_name,
                  const std::string& target, const std::string& backend_name,
                  const std::optional<std::string>& config_path, std::uint64_t seed,
                  bool seed_given, const std::string& out_dir, const std::string& prompt_dir) {
    AppConfig cfg = load_config(config_path);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (seed_given) cfg.seed = seed;

    mssum::Variant variant = mssum::variant_from_name(variant_name);
    if (mssum::variant_is_personalized(variant) && target.empty()) {
        throw UsageError("--variant " + variant_name + " requires --target <role>");
    }

    mssum::Meeting meeting = mssum::load_meeting_file(meeting_path);

    mssum::RunConfig rc;
    rc.variant = variant;
    if (!target.empty()) rc.target_participant = target;
    rc.seed = cfg.seed;

    auto chat = make_chat_backend(cfg, cfg.chat, backend_name, cfg.seed);
    auto embed = make_embed_backend(cfg, cfg.embed, backend_name);
    mssum::CallLedger ledger;
    mssum::StageContext ctx;
    ctx.chat = chat.get();
    ctx.embed = embed.get();
    ctx.ledger = &ledger;
    ctx.prompts = make_prompts(cfg, prompt_dir);

    mssum::RunRecord record = mssum::run(meeting, rc, ctx);

    fs::path out = fs::path(cfg.out_dir) /
                   (meeting.meeting_id + "-" + mssum::variant_name(variant) + ".json");
    atomic_write(out, mssum::to_json(record).dump(2) + "\n");

    std::printf("%s\n", record.summary.text.c_str());
    print_cost_line(mssum::ledger_totals(record.ledger), record.wall_time_s);
    std::fprintf(stderr, "record written to %s\n", out.string().c_str());
    return kExitOk;
}

// -------------------------------------------------------------------- batch

int cmd_batch(const std::string& meetings_dir, std::vector<std::string> variant_names,
              const std::string& target, const std::string& backend_name,
              const std::optional<std::string>& config_path, std::uint64_t seed, bool seed_given,
              const std::string& out_dir, const std::string& prompt_dir, std::size_t jobs) {
    AppConfig cfg = load_config(config_path);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (seed_given) cfg.seed = seed;

    std::vector<mssum::Variant> variants;
    if (variant_names.empty()) {
        variants.assign(mssum::kAllVariants.begin(), mssum::kAllVariants.end());
    } else {
        for (const auto& name : variant_names) variants.push_back(mssum::variant_from_name(name));
    }

    std::vector<mssum::Meeting> meetings;
    for (const auto& file : sorted_json_files(meetings_dir)) {
        meetings.push_back(mssum::load_meeting_file(file.string()));
    }
    if (meetings.empty()) throw mssum::EmptyCorpus("no .json meetings in " + meetings_dir);

    mssum::RunConfig base;
    base.seed = cfg.seed;
    if (!target.empty()) base.target_participant = target;

    AppConfig cfg_copy = cfg;
    std::string backend_copy = backend_name;
    mssum::BackendFactory factory = [cfg_copy, backend_copy](std::uint64_t cell_seed) {
        mssum::Backends b;
        b.chat = make_chat_backend(cfg_copy, cfg_copy.chat, backend_copy, cell_seed);
        b.embed = make_embed_backend(cfg_copy, cfg_copy.embed, backend_copy);
        return b;
    };

    auto cells = mssum::run_matrix(meetings, variants, base, factory,
                                   make_prompts(cfg, prompt_dir), jobs);

    std::vector<std::string> paths;
    mssum::LedgerTotals grand;
    double wall = 0.0;
    std::size_t failures = 0;
    for (const auto& cell : cells) {
        std::string name = cell.meeting_id + "-" + mssum::variant_name(cell.variant) + ".json";
        fs::path out = fs::path(cfg.out_dir) / name;
        if (cell.record) {
            atomic_write(out, mssum::to_json(*cell.record).dump(2) + "\n");
            paths.push_back(name);
            auto totals = mssum::ledger_totals(cell.record->ledger);
            grand.total_cost += totals.total_cost;
            grand.total_calls += totals.total_calls;
            wall += cell.record->wall_time_s;
        } else {
            ++failures;
            std::fprintf(stderr, "cell %s %s failed: %s\n", cell.meeting_id.c_str(),
                         mssum::variant_name(cell.variant).c_str(), cell.error.c_str());
        }
    }
    atomic_write(fs::path(cfg.out_dir) / "manifest.json",
                 mssum::matrix_manifest(cells, paths).dump(2) + "\n");
    print_cost_line(grand, wall);
    std::fprintf(stderr, "%zu cells, %zu failed, manifest written to %s/manifest.json\n",
                 cells.size(), failures, cfg.out_dir.c_str());
    return failures == 0 ? kExitOk : kExitProvider;
}

// ----------------------------------------------------------------- evaluate

int cmd_evaluate(const std::string& records_dir, const std::string& criteria_list,
                 const std::string& backend_name, const std::optional<std::string>& config_path,
                 std::uint64_t seed, bool seed_given, const std::string& out_dir,
                 const std::string& prompt_dir) {
    AppConfig cfg = load_config(config_path);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (seed_given) cfg.seed = seed;

    std::vector<mssum::Criterion> criteria;
    {
        std::istringstream in(criteria_list);
        std::string key;
        while (std::getline(in, key, ',')) {
            if (!key.empty()) criteria.push_back(mssum::Criterion::standard(key));
        }
    }
    if (criteria.empty()) throw UsageError("--criteria must name at least one criterion");

    auto chat = make_chat_backend(cfg, cfg.judge, backend_name, cfg.seed);
    auto embed = make_embed_backend(cfg, cfg.embed, backend_name);
    mssum::CallLedger ledger;
    mssum::StageContext ctx;
    ctx.chat = chat.get();
    ctx.embed = embed.get();
    ctx.ledger = &ledger;
    ctx.prompts = make_prompts(cfg, prompt_dir);

    json report;
    report["criteria"] = json::array();
    for (const auto& c : criteria) report["criteria"].push_back(c.key);
    report["records"] = json::array();
    std::map<std::string, std::vector<int>> scores_by_criterion;

    auto files = sorted_json_files(records_dir);
    std::size_t evaluated = 0;
    for (const auto& file : files) {
        if (file.filename() == "manifest.json" || file.filename() == "evaluation.json") continue;
        json rj = json::parse(read_file(file), nullptr, false);
        if (rj.is_discarded()) throw mssum::SchemaError("not valid JSON: " + file.string());
        mssum::RunRecord record = mssum::run_record_from_json(rj);
        ++evaluated;

        json entry;
        entry["record"] = file.filename().string();
        entry["meeting_id"] = record.meeting_id;
        entry["variant"] = mssum::variant_name(record.variant);
        entry["scores"] = json::object();
        for (const auto& criterion : criteria) {
            if (criterion.personalized && !record.persona) {
                throw mssum::SchemaError("criterion " + criterion.key +
                                         " needs a persona, and record " +
                                         file.filename().string() + " has none");
            }
            int score = 0;
            if (criterion.key == "FAC") {
                auto fact = mssum::fact_score(record.summary.text, record.transcript, ctx);
                score = fact.likert;
                entry["fact_support_ratio"] = fact.support_ratio;
            } else {
                auto verdict = mssum::judge(record.summary.text, record.transcript, criterion,
                                            record.persona, ctx);
                score = verdict.score;
            }
            entry["scores"][criterion.key] = score;
            scores_by_criterion[criterion.key].push_back(score);
        }
        report["records"].push_back(entry);
    }
    if (evaluated == 0) throw mssum::EmptyCorpus("no run records in " + records_dir);

    report["aggregates"] = json::array();
    for (const auto& criterion : criteria) {
        auto agg = mssum::aggregate_scores(criterion.key, scores_by_criterion[criterion.key]);
        report["aggregates"].push_back({{"criterion", agg.criterion},
                                        {"mean", agg.mean},
                                        {"stddev", agg.stddev},
                                        {"n", agg.n}});
        std::printf("%s: mean=%.3f sd=%.3f n=%zu\n", agg.criterion.c_str(), agg.mean, agg.stddev,
                    agg.n);
    }
    auto totals = mssum::ledger_totals(ledger);
    report["judge_totals"] = {{"cost", totals.total_cost},
                              {"latency_s", totals.total_latency_s},
                              {"calls", totals.total_calls}};

    fs::path out = fs::path(cfg.out_dir) / "evaluation.json";
    atomic_write(out, report.dump(2) + "\n");
    print_cost_line(totals, totals.total_latency_s);
    std::fprintf(stderr, "evaluation written to %s\n", out.string().c_str());
    return kExitOk;
}

// ------------------------------------------------------------------ compare

std::vector<int> scores_from_report(const json& report, const std::string& criterion) {
    std::vector<int> scores;
    for (const auto& entry : report.value("records", json::array())) {
        const auto& s = entry.value("scores", json::object());
        if (s.contains(criterion)) scores.push_back(s[criterion].get<int>());
    }
    if (scores.empty()) {
        throw mssum::SchemaError("report carries no scores for criterion " + criterion);
    }
    return scores;
}

int cmd_compare(const std::string& report_a, const std::string& report_b,
                const std::string& criterion, bool unpaired, const std::string& method_name,
                std::uint64_t seed, const std::string& out_dir) {
    json a = json::parse(read_file(report_a), nullptr, false);
    json b = json::parse(read_file(report_b), nullptr, false);
    if (a.is_discarded() || b.is_discarded()) {
        throw mssum::SchemaError("comparison inputs must be evaluation report JSON");
    }
    mssum::CompareMethod method = mssum::CompareMethod::permutation;
    if (method_name == "wilcoxon") {
        method = mssum::CompareMethod::wilcoxon;
    } else if (method_name != "permutation") {
        throw UsageError("--method must be permutation or wilcoxon");
    }

    auto sa = scores_from_report(a, criterion);
    auto sb = scores_from_report(b, criterion);
    auto result = mssum::compare(sa, sb, !unpaired, method, seed);
    result.setup_a = report_a;
    result.setup_b = report_b;

    json out = {{"setup_a", result.setup_a},   {"setup_b", result.setup_b},
                {"criterion", criterion},      {"method", result.method},
                {"p_value", result.p_value},   {"significant_05", result.significant_05},
                {"significant_01", result.significant_01}};
    fs::path path = fs::path(out_dir.empty() ? "runs" : out_dir) / ("compare-" + criterion + ".json");
    atomic_write(path, out.dump(2) + "\n");
    std::printf("%s %s: p=%.6f (%s)\n", criterion.c_str(), result.method.c_str(), result.p_value,
                result.significant_05 ? "significant at 0.05" : "not significant at 0.05");
    return kExitOk;
}

// -------------------------------------------------------------------- stats

int cmd_stats(const std::string& dataset_dir) {
    std::vector<mssum::Meeting> meetings;
    for (const auto& file : sorted_json_files(dataset_dir)) {
        meetings.push_back(mssum::load_meeting_file(file.string()));
    }
    auto stats = mssum::corpus_stats(meetings);
    std::printf("meetings              %zu\n", stats.meeting_count);
    std::printf("avg turns             %.1f\n", stats.avg_turns);
    std::printf("avg speakers          %.1f\n", stats.avg_speakers);
    std::printf("avg summary words     %.1f\n", stats.avg_gold_words);
    std::printf("avg documents         %.1f\n", stats.avg_documents);
    return kExitOk;
}

// ------------------------------------------------------------------- report

int cmd_report(const std::string& records_dir, const std::string& evaluation_path,
               const std::string& out_dir) {
    struct Row {
        std::size_t n = 0;
        double cost = 0.0;
        double time_s = 0.0;
        std::map<std::string, std::vector<int>> scores;
    };
    std::map<std::string, Row> rows;  // keyed by variant name

    for (const auto& file : sorted_json_files(records_dir)) {
        if (file.filename() == "manifest.json" || file.filename() == "evaluation.json") continue;
        json rj = json::parse(read_file(file), nullptr, false);
        if (rj.is_discarded()) throw mssum::SchemaError("not valid JSON: " + file.string());
        mssum::RunRecord record = mssum::run_record_from_json(rj);
        Row& row = rows[mssum::variant_name(record.variant)];
        ++row.n;
        row.cost += mssum::ledger_totals(record.ledger).total_cost;
        row.time_s += record.wall_time_s;
    }
    if (rows.empty()) throw mssum::EmptyCorpus("no run records in " + records_dir);

    std::vector<std::string> criteria;
    if (!evaluation_path.empty()) {
        json ev = json::parse(read_file(evaluation_path), nullptr, false);
        if (ev.is_discarded()) throw mssum::SchemaError("not valid JSON: " + evaluation_path);
        for (const auto& c : ev.value("criteria", json::array())) {
            criteria.push_back(c.get<std::string>());
        }
        for (const auto& entry : ev.value("records", json::array())) {
            std::string variant = entry.value("variant", std::string());
            auto it = rows.find(variant);
            if (it == rows.end()) continue;
            for (const auto& key : criteria) {
                const auto& s = entry.value("scores", json::object());
                if (s.contains(key)) it->second.scores[key].push_back(s[key].get<int>());
            }
        }
    }

    std::ostringstream md;
    json machine = json::array();
    md << "| Setup | n |";
    for (const auto& c : criteria) md << ' ' << c << " |";
    md << " Cost ($) | Time (s) |\n|---|---|";
    for (std::size_t i = 0; i < criteria.size(); ++i) md << "---|";
    md << "---|---|\n";
    // Stable presentation order: the canonical variant order, then any extras.
    std::vector<std::string> order;
    for (auto v : mssum::kAllVariants) {
        if (rows.count(mssum::variant_name(v))) order.push_back(mssum::variant_name(v));
    }
    for (const auto& [name, row] : rows) {
        if (std::find(order.begin(), order.end(), name) == order.end()) order.push_back(name);
    }
    for (const auto& name : order) {
        const Row& row = rows.at(name);
        char buf[64];
        md << "| " << name << " | " << row.n << " |";
        json jrow = {{"setup", name}, {"n", row.n}, {"cost", row.cost}, {"time_s", row.time_s}};
        for (const auto& c : criteria) {
            auto it = row.scores.find(c);
            if (it == row.scores.end() || it->second.empty()) {
                md << " - |";
                continue;
            }
            auto agg = mssum::aggregate_scores(c, it->second);
            std::snprintf(buf, sizeof buf, " %.2f (%.2f) |", agg.mean, agg.stddev);
            md << buf;
            jrow["scores"][c] = {{"mean", agg.mean}, {"stddev", agg.stddev}, {"n", agg.n}};
        }
        std::snprintf(buf, sizeof buf, " %.4f | %.2f |", row.cost, row.time_s);
        md << buf << '\n';
        machine.push_back(jrow);
    }

    fs::path base = out_dir.empty() ? fs::path("runs") : fs::path(out_dir);
    atomic_write(base / "report.md", md.str());
    atomic_write(base / "report.json", machine.dump(2) + "\n");
    std::fputs(md.str().c_str(), stdout);
    return kExitOk;
}

// ------------------------------------------------------------- prompts-dump

int cmd_prompts_dump(const std::string& dir) {
    auto prompts = mssum::PromptLibrary::defaults();
    static const char* names[] = {"gap",     "infer",  "summarize", "summarize_update",
                                  "summarize_shorten", "persona",   "judge",
                                  "facts",   "fact_check"};
    fs::create_directories(dir);
    for (const char* name : names) {
        atomic_write(fs::path(dir) / (std::string(name) + ".txt"), prompts.get(name));
    }
    std::printf("templates written to %s\n", dir.c_str());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-source meeting summarization pipeline"};
    app.require_subcommand(1);

    std::string meeting, variant, target, backend, out_dir, prompt_dir;
    std::string records_dir, criteria = "INF,REL,FAC,OVR";
    std::string report_a, report_b, criterion, method = "permutation";
    std::string dataset_dir, evaluation_path, dump_dir = "prompts";
    std::vector<std::string> variant_list;
    std::optional<std::string> config_path;
    std::string config_flag;
    std::uint64_t seed = 0;
    std::size_t jobs = 1;
    bool unpaired = false;

    auto add_common = [&](CLI::App* cmd, bool with_backend) {
        cmd->add_option("--config", config_flag, "JSON config file");
        cmd->add_option("--seed", seed, "Base seed");
        cmd->add_option("--out", out_dir, "Output directory (default ./runs)");
        cmd->add_option("--prompts", prompt_dir, "Prompt template directory");
        if (with_backend) cmd->add_option("--backend", backend, "mock or http");
    };

    auto* c_sum = app.add_subcommand("summarize", "Run one pipeline variant on one meeting");
    c_sum->add_option("--meeting", meeting, "Meeting JSON file")->required();
    c_sum->add_option("--variant", variant, "Variant name (g-none ... p-infer-per)")->required();
    c_sum->add_option("--target", target, "Target participant role (p-* variants)");
    add_common(c_sum, true);

    auto* c_batch = app.add_subcommand("batch", "Run a meeting x variant matrix");
    c_batch->add_option("--meetings", records_dir, "Directory of meeting JSON files")->required();
    c_batch->add_option("--variant", variant_list, "Variant names (default: all nine)");
    c_batch->add_option("--target", target, "Target participant role for p-* variants");
    c_batch->add_option("--jobs", jobs, "Parallel cells");
    add_common(c_batch, true);

    auto* c_eval = app.add_subcommand("evaluate", "Judge run records against criteria");
    c_eval->add_option("--records", records_dir, "Directory of RunRecord JSON files")->required();
    c_eval->add_option("--criteria", criteria, "Comma-separated criteria keys");
    add_common(c_eval, true);

    auto* c_cmp = app.add_subcommand("compare", "Significance test between two evaluations");
    c_cmp->add_option("--report-a", report_a, "First evaluation report")->required();
    c_cmp->add_option("--report-b", report_b, "Second evaluation report")->required();
    c_cmp->add_option("--criterion", criterion, "Criterion key")->required();
    c_cmp->add_option("--method", method, "permutation (default) or wilcoxon");
    c_cmp->add_flag("--unpaired", unpaired, "Treat samples as independent");
    c_cmp->add_option("--seed", seed, "Resampling seed");
    c_cmp->add_option("--out", out_dir, "Output directory (default ./runs)");

    auto* c_stats = app.add_subcommand("stats", "Corpus statistics over a meeting directory");
    c_stats->add_option("--dataset", dataset_dir, "Directory of meeting JSON files")->required();

    auto* c_rep = app.add_subcommand("report", "Render per-setup results table");
    c_rep->add_option("--records", records_dir, "Directory of RunRecord JSON files")->required();
    c_rep->add_option("--evaluation", evaluation_path, "Evaluation report to pull scores from");
    c_rep->add_option("--out", out_dir, "Output directory (default ./runs)");

    auto* c_dump = app.add_subcommand("prompts-dump", "Write the default templates to a directory");
    c_dump->add_option("--dir", dump_dir, "Destination directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    if (!config_flag.empty()) config_path = config_flag;
    bool seed_given = false;
    for (auto* cmd : {c_sum, c_batch, c_eval}) {
        if (cmd->parsed() && cmd->count("--seed") > 0) seed_given = true;
    }
    if (out_dir.empty()) out_dir = "";

    try {
        if (c_sum->parsed()) {
            return cmd_summarize(meeting, variant, target, backend, config_path, seed, seed_given,
                                 out_dir.empty() ? "runs" : out_dir, prompt_dir);
        }
        if (c_batch->parsed()) {
            return cmd_batch(records_dir, variant_list, target, backend, config_path, seed,
                             seed_given, out_dir.empty() ? "runs" : out_dir, prompt_dir, jobs);
        }
        if (c_eval->parsed()) {
            return cmd_evaluate(records_dir, criteria, backend, config_path, seed, seed_given,
                                out_dir.empty() ? "runs" : out_dir, prompt_dir);
        }
        if (c_cmp->parsed()) {
            return cmd_compare(report_a, report_b, criterion, unpaired, method, seed, out_dir);
        }
        if (c_stats->parsed()) return cmd_stats(dataset_dir);
        if (c_rep->parsed()) return cmd_report(records_dir, evaluation_path, out_dir);
        if (c_dump->parsed()) return cmd_prompts_dump(dump_dir);
        std::fprintf(stderr, "no subcommand given\n");
        return kExitUsage;
    } catch (const UsageError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return kExitUsage;
    } catch (const mssum::UnknownParticipant& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return kExitUsage;
    } catch (const mssum::ParseError& e) {
        std::fprintf(stderr, "parse failure: %s\n", e.what());
        return kExitParse;
    } catch (const mssum::LengthMismatch& e) {
        std::fprintf(stderr, "parse failure: %s\n", e.what());
        return kExitParse;
    } catch (const mssum::TransportError& e) {
        std::fprintf(stderr, "transport failure: %s\n", e.what());
        return kExitProvider;
    } catch (const mssum::ProviderError& e) {
        std::fprintf(stderr, "provider failure: %s\n", e.what());
        return kExitProvider;
    } catch (const mssum::BudgetExceeded& e) {
        std::fprintf(stderr, "provider failure: %s\n", e.what());
        return kExitProvider;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfig;
    }
}

#include "mssum/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <set>
#include <thread>

#include "mssum/retrieval.hpp"
#include "mssum/textutil.hpp"

namespace mssum {

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::G_NONE: return "g-none";
        case Variant::G_ALL: return "g-all";
        case Variant::G_TOP: return "g-top";
        case Variant::G_INFER: return "g-infer";
        case Variant::P_NONE: return "p-none";
        case Variant::P_ALL: return "p-all";
        case Variant::P_INFER: return "p-infer";
        case Variant::P_PER: return "p-per";
        case Variant::P_INFER_PER: return "p-infer-per";
    }
    return "g-none";
}

Variant variant_from_name(const std::string& name) {
    for (Variant v : kAllVariants) {
        if (variant_name(v) == name) return v;
    }
    throw ConfigError("unknown variant '" + name + "'");
}

bool variant_is_personalized(Variant v) {
    switch (v) {
        case Variant::P_NONE:
        case Variant::P_ALL:
        case Variant::P_INFER:
        case Variant::P_PER:
        case Variant::P_INFER_PER: return true;
        default: return false;
    }
}

bool variant_extracts_persona(Variant v) {
    return v == Variant::P_PER || v == Variant::P_INFER_PER;
}

bool variant_enriches(Variant v) {
    return v == Variant::G_INFER || v == Variant::P_INFER || v == Variant::P_INFER_PER;
}

namespace {

std::string document_block(const SourceDocument& doc) {
    std::string header = "--- Document " + doc.doc_id;
    if (doc.title) header += ": " + *doc.title;
    header += " ---";
    return header + "\n" + doc.text;
}

std::string append_documents(const std::string& transcript,
                             const std::vector<SourceDocument>& docs) {
    std::string out = transcript;
    for (const auto& doc : docs) {
        out += "\n\n";
        out += document_block(doc);
    }
    return out;
}

std::string config_digest(const RunConfig& config) {
    nlohmann::json j;
    j["variant"] = variant_name(config.variant);
    j["target_participant"] = config.target_participant.value_or("");
    j["max_gaps"] = config.max_gaps;
    j["top_k_docs"] = config.top_k_docs;
    j["summary_limit_tokens"] = config.summary_limit_tokens;
    j["max_attempts"] = config.infer.max_attempts;
    j["excerpt_turn_window"] = config.infer.excerpt_turn_window;
    j["concat_top_k"] = config.infer.concat_top_k;
    j["chunk_max_tokens"] = config.chunking.max_tokens;
    j["chunk_overlap_tokens"] = config.chunking.overlap_tokens;
    j["seed"] = config.seed;
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(j.dump())));
    return buf;
}

}  // namespace

RunRecord run(const Meeting& meeting, const RunConfig& config, StageContext& ctx) {
    if (!ctx.chat) throw ConfigError("run: no chat backend configured");
    const bool personalized = variant_is_personalized(config.variant);
    if (personalized) {
        if (!config.target_participant) {
            throw ConfigError("variant " + variant_name(config.variant) +
                              " requires a target participant");
        }
        std::set<std::string> roles;
        for (const auto& t : meeting.turns) roles.insert(t.speaker_role);
        if (!roles.count(*config.target_participant)) {
            throw ConfigError("target participant '" + *config.target_participant +
                              "' does not appear in meeting '" + meeting.meeting_id + "'");
        }
    }

    CallLedger ledger;
    StageContext stage_ctx = ctx;
    stage_ctx.ledger = &ledger;

    RunRecord record;
    record.meeting_id = meeting.meeting_id;
    record.variant = config.variant;
    record.seed = config.seed;
    record.config_digest = config_digest(config);
    record.transcript = render_transcript(meeting);

    const auto t0 = std::chrono::steady_clock::now();

    std::optional<PersonaContext> reader;
    if (personalized) reader = PersonaContext{*config.target_participant, std::nullopt};
    if (variant_extracts_persona(config.variant)) {
        Persona persona =
            extract_persona(record.transcript, *config.target_participant, stage_ctx);
        reader->persona_text = persona.text;
        record.persona = std::move(persona);
    }

    std::string summarizer_input;
    switch (config.variant) {
        case Variant::G_NONE:
        case Variant::P_NONE:
        case Variant::P_PER:
            summarizer_input = record.transcript;
            break;
        case Variant::G_ALL:
        case Variant::P_ALL:
            summarizer_input = append_documents(record.transcript, meeting.documents);
            break;
        case Variant::G_TOP: {
            if (!ctx.embed) throw ConfigError("g-top requires an embedding backend");
            auto docs = top_documents(meeting, config.top_k_docs, *stage_ctx.embed,
                                      config.chunking, ledger);
            summarizer_input = append_documents(record.transcript, docs);
            break;
        }
        case Variant::G_INFER:
        case Variant::P_INFER:
        case Variant::P_INFER_PER: {
            if (!ctx.embed) throw ConfigError("infer variants require an embedding backend");
            EmbeddingIndex index =
                build_index(meeting.documents, *stage_ctx.embed, config.chunking, ledger);
            try {
                record.gaps = identify_gaps(record.transcript, reader, stage_ctx,
                                            config.max_gaps);
            } catch (const ParseError&) {
                // Fall back to plain summarization rather than failing the run.
                record.degraded = true;
            }
            for (const auto& gap : record.gaps) {
                record.answers.push_back(
                    infer_answer(gap, index, record.transcript, reader, stage_ctx, config.infer));
            }
            record.enriched = inject(record.transcript, record.answers);
            record.skip_report = record.enriched->skip_report;
            summarizer_input = record.enriched->rendered;
            break;
        }
    }

    record.summary =
        summarize(summarizer_input, reader, stage_ctx, config.summary_limit_tokens);

    record.ledger = ledger.records();
    if (ctx.chat->simulated()) {
        record.wall_time_s = ledger_totals(record.ledger).total_latency_s;
    } else {
        record.wall_time_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    return record;
}

nlohmann::json to_json(const RunRecord& record) {
    nlohmann::json j;
    j["meeting_id"] = record.meeting_id;
    j["variant"] = variant_name(record.variant);
    j["transcript"] = record.transcript;
    j["seed"] = record.seed;
    j["config_digest"] = record.config_digest;
    j["degraded"] = record.degraded;
    j["wall_time_s"] = record.wall_time_s;
    j["skip_report"] = record.skip_report;

    if (record.persona) {
        j["persona"] = {{"participant", record.persona->participant},
                        {"text", record.persona->text},
                        {"extracted_with", record.persona->extracted_with}};
    }

    j["gaps"] = nlohmann::json::array();
    for (const auto& g : record.gaps) {
        nlohmann::json jg;
        jg["question"] = g.question;
        jg["insert"] = g.insert_anchor;
        if (g.anchor_span) jg["anchor_span"] = {g.anchor_span->first, g.anchor_span->second};
        j["gaps"].push_back(std::move(jg));
    }

    j["answers"] = nlohmann::json::array();
    for (const auto& a : record.answers) {
        nlohmann::json ja;
        ja["question"] = a.gap.question;
        ja["answer"] = a.answer;
        ja["able"] = a.able;
        ja["attempts"] = a.attempts;
        ja["source_chunks"] = nlohmann::json::array();
        for (const auto& [doc_id, seq] : a.source_chunks) {
            ja["source_chunks"].push_back({{"doc_id", doc_id}, {"seq", seq}});
        }
        j["answers"].push_back(std::move(ja));
    }

    if (record.enriched) {
        nlohmann::json je;
        je["original"] = record.enriched->original;
        je["rendered"] = record.enriched->rendered;
        je["insertions"] = nlohmann::json::array();
        for (const auto& ins : record.enriched->insertions) {
            je["insertions"].push_back({{"position", ins.position}, {"comment", ins.comment}});
        }
        j["enriched"] = std::move(je);
    }

    j["summary"] = {{"text", record.summary.text},
                    {"token_count", record.summary.token_count},
                    {"truncated", record.summary.truncated},
                    {"calls_used", record.summary.calls_used}};

    j["ledger"] = nlohmann::json::array();
    for (const auto& r : record.ledger) {
        j["ledger"].push_back({{"stage_tag", r.stage_tag},
                               {"model_name", r.model_name},
                               {"tokens_in", r.tokens_in},
                               {"tokens_out", r.tokens_out},
                               {"latency_s", r.latency_s},
                               {"cost", r.cost},
                               {"estimated_usage", r.estimated_usage}});
    }
    LedgerTotals totals = ledger_totals(record.ledger);
    j["totals"] = {{"cost", totals.total_cost},
                   {"latency_s", totals.total_latency_s},
                   {"calls", totals.total_calls}};
    return j;
}

RunRecord run_record_from_json(const nlohmann::json& j) {
    RunRecord r;
    r.meeting_id = j.at("meeting_id").get<std::string>();
    r.variant = variant_from_name(j.at("variant").get<std::string>());
    r.transcript = j.at("transcript").get<std::string>();
    r.seed = j.value("seed", 0ull);
    r.config_digest = j.value("config_digest", "");
    r.degraded = j.value("degraded", false);
    r.wall_time_s = j.value("wall_time_s", 0.0);
    if (j.contains("skip_report")) {
        r.skip_report = j["skip_report"].get<std::vector<std::string>>();
    }
    if (j.contains("persona")) {
        Persona p;
        p.participant = j["persona"].at("participant").get<std::string>();
        p.text = j["persona"].at("text").get<std::string>();
        p.extracted_with = j["persona"].value("extracted_with", "");
        r.persona = std::move(p);
    }
    for (const auto& jg : j.value("gaps", nlohmann::json::array())) {
        ContextGap g;
        g.question = jg.at("question").get<std::string>();
        g.insert_anchor = jg.at("insert").get<std::string>();
        if (jg.contains("anchor_span")) {
            g.anchor_span = std::make_pair(jg["anchor_span"][0].get<std::size_t>(),
                                           jg["anchor_span"][1].get<std::size_t>());
        }
        r.gaps.push_back(std::move(g));
    }
    for (const auto& ja : j.value("answers", nlohmann::json::array())) {
        InferredAnswer a;
        a.gap.question = ja.at("question").get<std::string>();
        a.answer = ja.at("answer").get<std::string>();
        a.able = ja.at("able").get<bool>();
        a.attempts = ja.value("attempts", 0ull);
        for (const auto& jc : ja.value("source_chunks", nlohmann::json::array())) {
            a.source_chunks.emplace_back(jc.at("doc_id").get<std::string>(),
                                         jc.at("seq").get<std::size_t>());
        }
        r.answers.push_back(std::move(a));
    }
    if (j.contains("enriched")) {
        EnrichedTranscript e;
        e.original = j["enriched"].at("original").get<std::string>();
        e.rendered = j["enriched"].at("rendered").get<std::string>();
        for (const auto& ji : j["enriched"].value("insertions", nlohmann::json::array())) {
            e.insertions.push_back(
                {ji.at("position").get<std::size_t>(), ji.at("comment").get<std::string>()});
        }
        r.enriched = std::move(e);
    }
    r.summary.text = j.at("summary").at("text").get<std::string>();
    r.summary.token_count = j.at("summary").value("token_count", 0ull);
    r.summary.truncated = j.at("summary").value("truncated", false);
    r.summary.calls_used = j.at("summary").value("calls_used", 0ull);
    for (const auto& jr : j.value("ledger", nlohmann::json::array())) {
        CallRecord c;
        c.stage_tag = jr.at("stage_tag").get<std::string>();
        c.model_name = jr.at("model_name").get<std::string>();
        c.tokens_in = jr.at("tokens_in").get<std::size_t>();
        c.tokens_out = jr.at("tokens_out").get<std::size_t>();
        c.latency_s = jr.at("latency_s").get<double>();
        c.cost = jr.at("cost").get<double>();
        c.estimated_usage = jr.value("estimated_usage", false);
        r.ledger.push_back(std::move(c));
    }
    return r;
}

std::uint64_t cell_seed(std::uint64_t base_seed, const std::string& meeting_id, Variant variant) {
    return mix64(base_seed, mix64(fnv1a64(meeting_id), fnv1a64(variant_name(variant))));
}

std::vector<MatrixCell> run_matrix(const std::vector<Meeting>& meetings,
                                   const std::vector<Variant>& variants,
                                   const RunConfig& config_base, const BackendFactory& factory,
                                   const PromptLibrary& prompts, std::size_t jobs) {
    if (meetings.empty() || variants.empty()) {
        throw ConfigError("run_matrix: meetings and variants must be non-empty");
    }
    struct CellSpec {
        const Meeting* meeting;
        Variant variant;
    };
    std::vector<CellSpec> specs;
    for (const auto& m : meetings) {
        for (Variant v : variants) specs.push_back({&m, v});
    }
    std::vector<MatrixCell> cells(specs.size());

    auto run_cell = [&](std::size_t i) {
        const CellSpec& spec = specs[i];
        MatrixCell& cell = cells[i];
        cell.meeting_id = spec.meeting->meeting_id;
        cell.variant = spec.variant;
        cell.seed = cell_seed(config_base.seed, spec.meeting->meeting_id, spec.variant);
        try {
            Backends backends = factory(cell.seed);
            StageContext ctx;
            ctx.chat = backends.chat.get();
            ctx.embed = backends.embed.get();
            ctx.prompts = prompts;
            RunConfig config = config_base;
            config.variant = spec.variant;
            config.seed = cell.seed;
            cell.record = run(*spec.meeting, config, ctx);
            cell.status = "ok";
        } catch (const std::exception& e) {
            cell.status = "failed";
            cell.error = e.what();
        }
    };

    if (jobs <= 1) {
        for (std::size_t i = 0; i < specs.size(); ++i) run_cell(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> workers;
        for (std::size_t w = 0; w < std::min(jobs, specs.size()); ++w) {
            workers.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < specs.size();
                     i = next.fetch_add(1)) {
                    run_cell(i);
                }
            });
        }
        for (auto& t : workers) t.join();
    }
    return cells;
}

nlohmann::json matrix_manifest(const std::vector<MatrixCell>& cells,
                               const std::vector<std::string>& artifact_paths) {
    nlohmann::json j;
    j["cells"] = nlohmann::json::array();
    for (std::size_t i = 0; i < cells.size(); ++i) {
        nlohmann::json jc;
        jc["meeting_id"] = cells[i].meeting_id;
        jc["variant"] = variant_name(cells[i].variant);
        jc["seed"] = cells[i].seed;
        jc["status"] = cells[i].status;
        if (!cells[i].error.empty()) jc["error"] = cells[i].error;
        if (i < artifact_paths.size() && !artifact_paths[i].empty()) {
            jc["artifact"] = artifact_paths[i];
        }
        j["cells"].push_back(std::move(jc));
    }
    return j;
}

}  // namespace mssum

#include "mssum/stages.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include <json.hpp>

#include "mssum/textutil.hpp"

namespace mssum {

namespace {

const std::set<std::string> kReaderKeys = {"persona", "participant"};

std::map<std::string, std::string> reader_vars(const std::optional<PersonaContext>& persona) {
    std::map<std::string, std::string> vars;
    if (persona) {
        vars["participant"] = persona->participant;
        if (persona->persona_text) vars["persona"] = *persona->persona_text;
    }
    return vars;
}

std::string strip_code_fences(const std::string& text) {
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
}

nlohmann::json parse_enclosed(const std::string& text, char open, char close,
                              const std::string& what) {
    std::string stripped = strip_code_fences(text);
    std::size_t a = stripped.find(open);
    std::size_t b = stripped.rfind(close);
    if (a == std::string::npos || b == std::string::npos || b < a) {
        throw ParseError(what + ": no JSON payload in model output");
    }
    auto j = nlohmann::json::parse(stripped.substr(a, b - a + 1), nullptr, false);
    if (j.is_discarded()) throw ParseError(what + ": model output is not valid JSON");
    return j;
}

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

// Transcript turn blocks (separated by blank lines) with byte offsets.
std::vector<std::pair<std::size_t, std::size_t>> turn_blocks(const std::string& transcript) {
    std::vector<std::pair<std::size_t, std::size_t>> blocks;
    std::size_t pos = 0;
    while (pos < transcript.size()) {
        std::size_t sep = transcript.find("\n\n", pos);
        std::size_t end = (sep == std::string::npos) ? transcript.size() : sep;
        blocks.emplace_back(pos, end);
        if (sep == std::string::npos) break;
        pos = sep + 2;
    }
    return blocks;
}

}  // namespace

std::optional<std::pair<std::size_t, std::size_t>> locate_anchor(const std::string& transcript,
                                                                 const std::string& insert) {
    std::string needle = trim(insert);
    if (needle.empty()) return std::nullopt;

    // Tier 1: exact substring.
    std::size_t pos = transcript.find(needle);
    if (pos != std::string::npos) return std::make_pair(pos, pos + needle.size());

    // Tier 2: match after whitespace/case/punctuation normalization. A map
    // from normalized offsets back to original offsets recovers the span.
    std::string norm;
    std::vector<std::size_t> back;
    bool pending_space = false;
    for (std::size_t i = 0; i < transcript.size(); ++i) {
        unsigned char c = static_cast<unsigned char>(transcript[i]);
        if (std::isalnum(c)) {
            if (pending_space && !norm.empty()) {
                norm += ' ';
                back.push_back(i);
            }
            pending_space = false;
            norm += static_cast<char>(std::tolower(c));
            back.push_back(i);
        } else {
            pending_space = true;
        }
    }
    std::string norm_needle = normalize_loose(needle);
    if (!norm_needle.empty()) {
        std::size_t npos_ = norm.find(norm_needle);
        if (npos_ != std::string::npos) {
            std::size_t start = back[npos_];
            std::size_t end = back[npos_ + norm_needle.size() - 1] + 1;
            return std::make_pair(start, end);
        }
    }

    // Tier 3: best sentence by token Jaccard, accepted at >= 0.6.
    auto sentences = split_sentences(transcript);
    double best = 0.0;
    std::optional<std::pair<std::size_t, std::size_t>> best_span;
    for (auto [start, end] : sentences) {
        double j = token_jaccard(transcript.substr(start, end - start), needle);
        if (j > best) {
            best = j;
            best_span = std::make_pair(start, end);
        }
    }
    if (best >= 0.6) return best_span;
    return std::nullopt;
}

std::vector<ContextGap> identify_gaps(const std::string& transcript,
                                      const std::optional<PersonaContext>& persona,
                                      StageContext& ctx, std::size_t max_gaps) {
    if (transcript.empty()) throw SchemaError("identify_gaps: transcript must be non-empty");
    if (max_gaps == 0) throw SchemaError("identify_gaps: max_gaps must be >= 1");

    auto vars = reader_vars(persona);
    vars["transcript"] = transcript;
    ChatRequest req;
    req.stage_tag = "gap";
    req.user_content = render_prompt(ctx.prompts.get("gap"), vars, kReaderKeys);
    ChatResponse resp = chat(*ctx.chat, req, *ctx.ledger, ctx.tokenizer);

    nlohmann::json arr = parse_enclosed(resp.text, '[', ']', "identify_gaps");
    if (!arr.is_array()) throw ParseError("identify_gaps: expected a JSON array");

    std::vector<ContextGap> gaps;
    for (const auto& item : arr) {
        if (gaps.size() >= max_gaps) break;  // cap enforcement, model order preserved
        if (!item.is_object() || !item.contains("question") || !item.contains("insert") ||
            !item["question"].is_string() || !item["insert"].is_string()) {
            throw ParseError("identify_gaps: array items must be {question, insert} objects");
        }
        ContextGap gap;
        gap.question = item["question"].get<std::string>();
        gap.insert_anchor = item["insert"].get<std::string>();
        if (gap.question.empty()) throw ParseError("identify_gaps: empty question");
        gap.anchor_span = locate_anchor(transcript, gap.insert_anchor);
        gaps.push_back(std::move(gap));
    }
    return gaps;
}

InferredAnswer infer_answer(const ContextGap& gap, const EmbeddingIndex& index,
                            const std::string& transcript,
                            const std::optional<PersonaContext>& persona, StageContext& ctx,
                            const InferOptions& options) {
    if (options.max_attempts == 0) throw SchemaError("infer_answer: max_attempts must be >= 1");
    InferredAnswer result;
    result.gap = gap;
    if (index.empty()) return result;  // able=false, attempts=0

    auto query = embed(*ctx.embed, {gap.question}, *ctx.ledger, ctx.tokenizer).front();
    auto hits = top_k(index, query, options.max_attempts);

    // Local context: the anchor's turn plus excerpt_turn_window turns each way.
    std::string excerpt;
    if (gap.anchor_span) {
        auto blocks = turn_blocks(transcript);
        std::size_t idx = 0;
        for (std::size_t i = 0; i < blocks.size(); ++i) {
            if (gap.anchor_span->first >= blocks[i].first &&
                gap.anchor_span->first < blocks[i].second + 2) {
                idx = i;
                break;
            }
        }
        std::size_t lo = idx > options.excerpt_turn_window ? idx - options.excerpt_turn_window : 0;
        std::size_t hi = std::min(blocks.size() - 1, idx + options.excerpt_turn_window);
        excerpt = transcript.substr(blocks[lo].first, blocks[hi].second - blocks[lo].first);
    } else {
        excerpt = gap.insert_anchor;
    }

    auto vars_base = reader_vars(persona);
    vars_base["question"] = gap.question;
    vars_base["transcript"] = excerpt;

    auto ask = [&](const std::string& file_text) -> std::pair<std::string, bool> {
        auto vars = vars_base;
        vars["file"] = file_text;
        ChatRequest req;
        req.stage_tag = "infer";
        req.user_content = render_prompt(ctx.prompts.get("infer"), vars, kReaderKeys);
        ChatResponse resp = chat(*ctx.chat, req, *ctx.ledger, ctx.tokenizer);
        nlohmann::json obj = parse_enclosed(resp.text, '{', '}', "infer_answer");
        if (!obj.is_object() || !obj.contains("answer") || !obj.contains("able") ||
            !obj["answer"].is_string() || !obj["able"].is_boolean()) {
            throw ParseError("infer_answer: expected JSON {answer, able}");
        }
        return {obj["answer"].get<std::string>(), obj["able"].get<bool>()};
    };

    if (options.concat_top_k) {
        std::string file_text;
        for (const auto& hit : hits) {
            if (!file_text.empty()) file_text += "\n\n";
            file_text += hit.chunk.text;
        }
        auto [answer, able] = ask(file_text);
        result.attempts = 1;
        if (able) {
            result.able = true;
            result.answer = answer;
            for (const auto& hit : hits) {
                result.source_chunks.emplace_back(hit.chunk.doc_id, hit.chunk.seq);
            }
        }
        return result;
    }

    for (const auto& hit : hits) {
        auto [answer, able] = ask(hit.chunk.text);
        ++result.attempts;
        if (able) {
            result.able = true;
            result.answer = answer;
            result.source_chunks.emplace_back(hit.chunk.doc_id, hit.chunk.seq);
            break;
        }
        if (result.attempts >= options.max_attempts) break;
    }
    return result;
}

EnrichedTranscript inject(const std::string& transcript,
                          const std::vector<InferredAnswer>& answers) {
    EnrichedTranscript out;
    out.original = transcript;

    auto sentences = split_sentences(transcript);
    auto sentence_end_after = [&](std::size_t offset) -> std::size_t {
        for (auto [start, end] : sentences) {
            if (offset >= start && offset <= end) return end;
        }
        return offset;
    };

    for (const auto& a : answers) {
        if (!a.able) {
            out.skip_report.push_back("skipped (not answerable): " + a.gap.question);
            continue;
        }
        if (!a.gap.anchor_span) {
            out.skip_report.push_back("skipped (unresolved anchor): " + a.gap.question);
            continue;
        }
        Insertion ins;
        ins.position = sentence_end_after(a.gap.anchor_span->second - 1);
        ins.comment = a.answer;
        out.insertions.push_back(std::move(ins));
    }
    // Gap order is preserved for equal positions.
    std::stable_sort(out.insertions.begin(), out.insertions.end(),
                     [](const Insertion& a, const Insertion& b) { return a.position < b.position; });

    std::string rendered;
    std::size_t cursor = 0;
    for (const auto& ins : out.insertions) {
        rendered += transcript.substr(cursor, ins.position - cursor);
        rendered += " [";
        rendered += ins.comment;
        rendered += "]";
        cursor = ins.position;
    }
    rendered += transcript.substr(cursor);
    out.rendered = std::move(rendered);
    return out;
}

std::string strip_insertions(const EnrichedTranscript& enriched) {
    std::string out;
    std::size_t cursor = 0;  // offset into rendered
    std::size_t added = 0;   // bytes inserted so far
    for (const auto& ins : enriched.insertions) {
        std::size_t rendered_pos = ins.position + added;
        out += enriched.rendered.substr(cursor, rendered_pos - cursor);
        std::size_t region = 2 + ins.comment.size() + 1;  // " [" + comment + "]"
        cursor = rendered_pos + region;
        added += region;
    }
    out += enriched.rendered.substr(cursor);
    return out;
}

Summary summarize(const std::string& input_text, const std::optional<PersonaContext>& persona,
                  StageContext& ctx, std::size_t limit_tokens) {
    if (limit_tokens == 0) throw SchemaError("summarize: limit_tokens must be >= 1");
    const ModelProfile& profile = ctx.chat->profile();
    const std::string limit_str = std::to_string(limit_tokens);

    Summary summary;
    auto vars_base = reader_vars(persona);
    vars_base["limit"] = limit_str;

    auto single_vars = vars_base;
    single_vars["transcript"] = input_text;
    std::string single_prompt = render_prompt(ctx.prompts.get("summarize"), single_vars,
                                              kReaderKeys);

    auto run_chat = [&](const std::string& prompt) {
        ChatRequest req;
        req.stage_tag = "summarize";
        req.user_content = prompt;
        req.max_output_tokens = profile.max_output_tokens;
        ChatResponse resp = chat(*ctx.chat, req, *ctx.ledger, ctx.tokenizer);
        ++summary.calls_used;
        return resp.text;
    };

    std::string text;
    if (count_tokens(single_prompt, ctx.tokenizer) + limit_tokens <=
        profile.context_window_tokens) {
        text = run_chat(single_prompt);
    } else {
        // Sequential chunking: one global summary updated per chunk.
        auto overhead_vars = vars_base;
        overhead_vars["summary"] = "";
        overhead_vars["transcript"] = "";
        std::size_t overhead = count_tokens(render_prompt(ctx.prompts.get("summarize_update"),
                                                          overhead_vars, kReaderKeys),
                                            ctx.tokenizer) +
                               limit_tokens;  // running summary slot
        if (profile.context_window_tokens <= overhead + limit_tokens) {
            throw BudgetExceeded("summarize: context window too small for sequential chunking");
        }
        std::size_t budget = profile.context_window_tokens - overhead - limit_tokens;
        for (const auto& chunk : chunk_text(input_text, budget, 0)) {
            auto vars = vars_base;
            vars["summary"] = text;
            vars["transcript"] = chunk.text;
            text = run_chat(render_prompt(ctx.prompts.get("summarize_update"), vars, kReaderKeys));
        }
    }

    if (count_tokens(text, ctx.tokenizer) > limit_tokens) {
        // One corrective re-ask, then hard truncation at a token boundary.
        auto vars = vars_base;
        vars["summary"] = text;
        text = run_chat(render_prompt(ctx.prompts.get("summarize_shorten"), vars, kReaderKeys));
        if (count_tokens(text, ctx.tokenizer) > limit_tokens) {
            text = truncate_tokens(text, limit_tokens);
            summary.truncated = true;
        }
    }

    summary.text = std::move(text);
    summary.token_count = count_tokens(summary.text, ctx.tokenizer);
    return summary;
}

Persona extract_persona(const std::string& transcript, const std::string& participant,
                        StageContext& ctx) {
    // Speaker-role lines are rendered verbatim; the participant must be one.
    bool found = false;
    std::istringstream in(transcript);
    std::string line;
    while (std::getline(in, line)) {
        if (line == participant) {
            found = true;
            break;
        }
    }
    if (!found) {
        throw UnknownParticipant("participant '" + participant +
                                 "' does not speak in the transcript");
    }

    std::map<std::string, std::string> vars;
    vars["participant"] = participant;
    vars["transcript"] = transcript;
    ChatRequest req;
    req.stage_tag = "persona";
    req.user_content = render_prompt(ctx.prompts.get("persona"), vars);
    ChatResponse resp = chat(*ctx.chat, req, *ctx.ledger, ctx.tokenizer);
    if (resp.text.empty()) throw ParseError("extract_persona: empty persona text");

    Persona p;
    p.participant = participant;
    p.text = resp.text;
    p.extracted_with = ctx.chat->profile().model_name;
    return p;
}

}  // namespace mssum

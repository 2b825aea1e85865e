#include "mssum/mock_backend.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "mssum/textutil.hpp"

namespace mssum {

namespace {

std::uint64_t request_digest(std::uint64_t seed, const ChatRequest& req) {
    std::string content = req.system_instruction.value_or("") + "\x1f" + req.user_content;
    return mix64(seed, mix64(fnv1a64(req.stage_tag), fnv1a64(content)));
}

std::vector<std::string> content_vocab(const std::string& text) {
    auto words = whitespace_tokens(text);
    if (words.empty()) {
        words = {"meeting", "discussion", "design", "project", "decision", "team"};
    }
    return words;
}

std::string sampled_words(std::mt19937_64& rng, const std::vector<std::string>& vocab,
                          std::size_t n) {
    std::string out;
    for (std::size_t i = 0; i < n; ++i) {
        if (i) out += ' ';
        out += vocab[rng() % vocab.size()];
    }
    return out;
}

std::string make_gap_output(std::mt19937_64& rng, const ChatRequest& req,
                            const MockScript& script) {
    // Gap inserts must be verbatim transcript sentences. Transcript turns are
    // "role\nutterance" blocks separated by blank lines; restrict sampling to
    // the utterance part of such blocks so instruction text never leaks in.
    auto collect = [](const std::string& text, std::vector<std::string>& out) {
        for (auto [start, end] : split_sentences(text)) {
            std::string s = text.substr(start, end - start);
            std::size_t words = whitespace_tokens(s).size();
            if (words >= 4 && words <= 80) out.push_back(std::move(s));
        }
    };
    std::vector<std::string> candidates;
    std::size_t pos = 0;
    const std::string& content = req.user_content;
    while (pos < content.size()) {
        std::size_t blank = content.find("\n\n", pos);
        std::string block = content.substr(
            pos, blank == std::string::npos ? std::string::npos : blank - pos);
        pos = blank == std::string::npos ? content.size() : blank + 2;
        std::size_t nl = block.find('\n');
        if (nl == std::string::npos || nl == 0) continue;
        std::string head = block.substr(0, nl);
        if (head.find_first_of(" \t") != std::string::npos) continue;
        collect(block.substr(nl + 1), candidates);
    }
    if (candidates.empty()) collect(content, candidates);
    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t n = std::min(script.gap_count, candidates.size());

    nlohmann::json arr = nlohmann::json::array();
    for (std::size_t i = 0; i < n; ++i) {
        const std::string& insert = candidates[order[i]];
        auto words = whitespace_tokens(insert);
        std::string topic;
        for (std::size_t w = 0; w < std::min<std::size_t>(6, words.size()); ++w) {
            if (w) topic += ' ';
            topic += words[w];
        }
        nlohmann::json item;
        item["question"] = "What additional context explains \"" + topic + "\"?";
        item["insert"] = insert;
        arr.push_back(std::move(item));
    }
    return arr.dump();
}

std::string make_infer_output(std::mt19937_64& rng, const ChatRequest& req,
                              const MockScript& script) {
    nlohmann::json obj;
    if (script.infer_able == MockScript::InferAble::always) {
        auto vocab = content_vocab(req.user_content);
        obj["answer"] =
            "The supplementary material indicates that " + sampled_words(rng, vocab, 12) + ".";
        obj["able"] = true;
    } else {
        obj["answer"] = "";
        obj["able"] = false;
    }
    return obj.dump();
}

std::string make_running_text(std::mt19937_64& rng, const ChatRequest& req,
                              const MockScript& script, const std::string& lead) {
    std::size_t target = script.summary_tokens;
    if (req.max_output_tokens) target = std::min(target, *req.max_output_tokens);
    auto vocab = content_vocab(req.user_content);
    std::string out = lead;
    std::size_t have = whitespace_tokens(out).size();
    if (target <= have) return truncate_tokens(out, target);
    out += ' ';
    out += sampled_words(rng, vocab, target - have);
    return out;
}

std::string make_judge_output(std::mt19937_64& rng) {
    int score = 1 + static_cast<int>(rng() % 5);
    nlohmann::json obj;
    obj["score"] = score;
    return "Considering the criteria step by step: the summary covers the discussion's key "
           "points, with some loss of detail. On balance the rating below applies. ! " +
           obj.dump();
}

std::string make_facts_output(std::mt19937_64& rng, const ChatRequest& req) {
    auto vocab = content_vocab(req.user_content);
    std::size_t n = 3 + rng() % 3;
    nlohmann::json arr = nlohmann::json::array();
    for (std::size_t i = 0; i < n; ++i) {
        arr.push_back("The meeting addressed " + sampled_words(rng, vocab, 5) + ".");
    }
    return arr.dump();
}

std::string make_fact_check_output(std::mt19937_64& rng, const ChatRequest& req) {
    // Label count must match the fact array embedded in the prompt.
    std::size_t n = 1;
    const std::string& text = req.user_content;
    for (std::size_t pos = text.rfind('['); pos != std::string::npos;
         pos = (pos == 0 ? std::string::npos : text.rfind('[', pos - 1))) {
        std::size_t close = text.find(']', pos);
        if (close == std::string::npos) continue;
        auto parsed = nlohmann::json::parse(text.substr(pos, close - pos + 1), nullptr, false);
        if (!parsed.is_discarded() && parsed.is_array()) {
            n = parsed.size();
            break;
        }
    }
    nlohmann::json arr = nlohmann::json::array();
    for (std::size_t i = 0; i < n; ++i) arr.push_back(rng() % 4 != 0);
    return arr.dump();
}

}  // namespace

ChatResponse mock_respond(std::uint64_t seed, const ChatRequest& request,
                          const MockScript& script) {
    std::mt19937_64 rng(request_digest(seed, request));

    std::string text;
    if (request.stage_tag == "gap") {
        text = make_gap_output(rng, request, script);
    } else if (request.stage_tag == "infer") {
        text = make_infer_output(rng, request, script);
    } else if (request.stage_tag == "summarize") {
        text = make_running_text(rng, request, script,
                                 "The meeting covered the following points:");
    } else if (request.stage_tag == "persona") {
        text = make_running_text(rng, request, script,
                                 "The participant takes an active role in the meeting, "
                                 "showing openness and conscientiousness, and contributes");
    } else if (request.stage_tag == "judge") {
        text = make_judge_output(rng);
    } else if (request.stage_tag == "facts") {
        text = make_facts_output(rng, request);
    } else if (request.stage_tag == "fact_check") {
        text = make_fact_check_output(rng, request);
    } else {
        throw UnknownStageTag("mock backend has no script for stage '" + request.stage_tag + "'");
    }

    ChatResponse resp;
    resp.text = std::move(text);
    const TokenizerProfile words = TokenizerProfile::whitespace();
    resp.tokens_in = count_tokens(request.system_instruction.value_or(""), words) +
                     count_tokens(request.user_content, words);
    resp.tokens_out = count_tokens(resp.text, words);
    resp.latency_s = static_cast<double>(resp.tokens_in) * 1e-5 +
                     static_cast<double>(resp.tokens_out) * 1e-4;
    resp.usage_reported = true;
    return resp;
}

ModelProfile MockChatBackend::default_profile() {
    ModelProfile p;
    p.model_name = "mock-chat";
    p.context_window_tokens = 128000;
    p.max_output_tokens = 4096;
    p.price_in = 0.0;
    p.price_out = 0.0;
    return p;
}

MockChatBackend::MockChatBackend(std::uint64_t seed, MockScript script, ModelProfile profile)
    : seed_(seed), script_(script), profile_(std::move(profile)) {
    profile_.validate();
}

ChatResponse MockChatBackend::complete(const ChatRequest& request) {
    return mock_respond(seed_, request, script_);
}

MockEmbedBackend::MockEmbedBackend(std::size_t dimension) : dimension_(dimension) {
    profile_.model_name = "mock-embed";
    profile_.context_window_tokens = 8191;
    profile_.max_output_tokens = 1;
    profile_.validate();
}

std::vector<double> MockEmbedBackend::embed_one(const std::string& text, std::size_t dimension) {
    std::vector<double> v(dimension, 0.0);
    auto tokens = whitespace_tokens(normalize_loose(text));
    if (tokens.empty()) {
        v[0] = 1.0;
        return v;
    }
    for (const auto& t : tokens) {
        v[fnv1a64(t) % dimension] += 1.0;
    }
    double norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    for (double& x : v) x /= norm;
    return v;
}

std::vector<std::vector<double>> MockEmbedBackend::embed_texts(
    const std::vector<std::string>& texts) {
    std::vector<std::vector<double>> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed_one(t, dimension_));
    return out;
}

}  // namespace mssum

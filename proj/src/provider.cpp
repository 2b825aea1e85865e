#include "mssum/provider.hpp"

#include <fstream>
#include <sstream>

namespace mssum {

void ModelProfile::validate() const {
    if (model_name.empty()) throw SchemaError("model profile: model_name must be non-empty");
    if (context_window_tokens == 0 || max_output_tokens == 0) {
        throw SchemaError("model profile '" + model_name + "': token limits must be positive");
    }
    if (context_window_tokens <= max_output_tokens) {
        throw SchemaError("model profile '" + model_name +
                          "': context_window_tokens must exceed max_output_tokens");
    }
    if (price_in < 0 || price_out < 0) {
        throw SchemaError("model profile '" + model_name + "': prices must be >= 0");
    }
}

ModelProfile profile_from_json(const std::string& name, const nlohmann::json& j) {
    ModelProfile p;
    p.model_name = name;
    if (!j.is_object()) throw SchemaError("price table entry '" + name + "' must be an object");
    if (!j.contains("context_window_tokens") || !j.contains("max_output_tokens")) {
        throw SchemaError("price table entry '" + name + "': missing token limits");
    }
    p.context_window_tokens = j["context_window_tokens"].get<std::size_t>();
    p.max_output_tokens = j["max_output_tokens"].get<std::size_t>();
    p.price_in = j.value("price_in", 0.0);
    p.price_out = j.value("price_out", 0.0);
    p.validate();
    return p;
}

std::map<std::string, ModelProfile> load_price_table(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError("cannot open price table: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError("price table " + path + ": not valid JSON: " + e.what());
    }
    if (!j.is_object()) throw SchemaError("price table " + path + ": top level must be an object");
    std::map<std::string, ModelProfile> table;
    for (auto it = j.begin(); it != j.end(); ++it) {
        table[it.key()] = profile_from_json(it.key(), it.value());
    }
    return table;
}

void CallLedger::append(CallRecord record) {
    std::lock_guard<std::mutex> lock(mutex_);
    records_.push_back(std::move(record));
}

std::vector<CallRecord> CallLedger::records() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return records_;
}

std::size_t CallLedger::size() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return records_.size();
}

LedgerTotals ledger_totals(const std::vector<CallRecord>& records) {
    LedgerTotals t;
    for (const auto& r : records) {
        t.total_cost += r.cost;
        t.total_latency_s += r.latency_s;
        ++t.total_calls;
        auto& s = t.per_stage[r.stage_tag];
        s.cost += r.cost;
        s.latency_s += r.latency_s;
        ++s.calls;
    }
    return t;
}

LedgerTotals ledger_totals(const CallLedger& ledger) { return ledger_totals(ledger.records()); }

double call_cost(const ModelProfile& profile, std::size_t tokens_in, std::size_t tokens_out) {
    return static_cast<double>(tokens_in) * profile.price_in / 1e6 +
           static_cast<double>(tokens_out) * profile.price_out / 1e6;
}

ChatResponse chat(ChatBackend& backend, const ChatRequest& request, CallLedger& ledger,
                  const TokenizerProfile& tokenizer) {
    if (request.user_content.empty()) {
        throw SchemaError("chat request: user_content must be non-empty");
    }
    if (request.temperature < 0) {
        throw SchemaError("chat request: temperature must be >= 0");
    }
    const ModelProfile& profile = backend.profile();
    std::size_t input_tokens = count_tokens(request.user_content, tokenizer);
    if (request.system_instruction) {
        input_tokens += count_tokens(*request.system_instruction, tokenizer);
    }
    if (input_tokens > profile.context_window_tokens) {
        throw BudgetExceeded("stage '" + request.stage_tag + "': projected " +
                             std::to_string(input_tokens) + " input tokens exceed context window " +
                             std::to_string(profile.context_window_tokens) + " of " +
                             profile.model_name);
    }

    ChatResponse resp = backend.complete(request);

    CallRecord rec;
    rec.stage_tag = request.stage_tag;
    rec.model_name = profile.model_name;
    if (resp.usage_reported) {
        rec.tokens_in = resp.tokens_in;
        rec.tokens_out = resp.tokens_out;
    } else {
        rec.tokens_in = input_tokens;
        rec.tokens_out = count_tokens(resp.text, tokenizer);
        rec.estimated_usage = true;
        resp.tokens_in = rec.tokens_in;
        resp.tokens_out = rec.tokens_out;
    }
    rec.latency_s = resp.latency_s;
    rec.cost = call_cost(profile, rec.tokens_in, rec.tokens_out);
    ledger.append(std::move(rec));
    return resp;
}

std::vector<std::vector<double>> embed(EmbedBackend& backend,
                                       const std::vector<std::string>& texts, CallLedger& ledger,
                                       const TokenizerProfile& tokenizer) {
    if (texts.empty()) return {};
    const ModelProfile& profile = backend.profile();
    std::size_t total_tokens = 0;
    for (const auto& t : texts) {
        if (t.empty()) throw InputTooLong("embed: input texts must be non-empty");
        std::size_t n = count_tokens(t, tokenizer);
        if (n > profile.context_window_tokens) {
            throw InputTooLong("embed: input of " + std::to_string(n) +
                               " tokens exceeds limit " +
                               std::to_string(profile.context_window_tokens) + " of " +
                               profile.model_name);
        }
        total_tokens += n;
    }

    auto vectors = backend.embed_texts(texts);
    if (vectors.size() != texts.size()) {
        throw ProviderError(0, "embed: backend returned " + std::to_string(vectors.size()) +
                                   " vectors for " + std::to_string(texts.size()) + " inputs");
    }

    CallRecord rec;
    rec.stage_tag = "embed";
    rec.model_name = profile.model_name;
    rec.tokens_in = total_tokens;
    rec.tokens_out = 0;
    rec.estimated_usage = true;
    rec.latency_s =
        backend.simulated() ? static_cast<double>(total_tokens) * 1e-5 : backend.last_latency_s();
    rec.cost = call_cost(profile, rec.tokens_in, rec.tokens_out);
    ledger.append(std::move(rec));
    return vectors;
}

}  // namespace mssum

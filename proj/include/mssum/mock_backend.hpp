#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mssum/provider.hpp"

namespace mssum {

// Behaviour of the offline mock per stage tag. Output is a pure function of
// (seed, stage_tag, request content digest) plus this script.
struct MockScript {
    enum class InferAble { always, never };

    std::size_t gap_count = 5;            // upper bound on emitted gap objects
    InferAble infer_able = InferAble::always;
    std::size_t summary_tokens = 120;     // target length for summarize/persona text
};

// Deterministic, schema-valid response for the request's stage.
// Stages: "gap", "infer", "summarize", "persona", "judge", "facts", "fact_check".
ChatResponse mock_respond(std::uint64_t seed, const ChatRequest& request,
                          const MockScript& script);

class MockChatBackend : public ChatBackend {
public:
    MockChatBackend(std::uint64_t seed, MockScript script = {},
                    ModelProfile profile = default_profile());

    ChatResponse complete(const ChatRequest& request) override;
    const ModelProfile& profile() const override { return profile_; }
    bool simulated() const override { return true; }

    static ModelProfile default_profile();

private:
    std::uint64_t seed_;
    MockScript script_;
    ModelProfile profile_;
};

// L2-normalized feature-hashed unigram counts; similarity tracks lexical overlap.
class MockEmbedBackend : public EmbedBackend {
public:
    explicit MockEmbedBackend(std::size_t dimension = 64);

    std::vector<std::vector<double>> embed_texts(const std::vector<std::string>& texts) override;
    std::size_t dimension() const override { return dimension_; }
    const ModelProfile& profile() const override { return profile_; }
    bool simulated() const override { return true; }

    static std::vector<double> embed_one(const std::string& text, std::size_t dimension);

private:
    std::size_t dimension_;
    ModelProfile profile_;
};

}  // namespace mssum

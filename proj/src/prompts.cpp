#include "mssum/prompts.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mssum {

namespace {

const char* kGapTemplate =
    R"(For the following task, respond in a way that matches this description: <persona>.
Take the role of a question generator that takes the role of a defined participant and points out unclarities and open questions in a transcript.
Generate at most 5 questions. Only ask the 5 most relevant questions.
Think step by step about which passages lack context before giving your final answer.

If you were participant <participant>, what open questions would you still have in regards to the following transcript?

Transcript: <transcript>

Your answer shall only contain a Python array of dictionaries: '[{<question>, <insert>}, {<question>, <insert>}, {<question>, <insert>}, ...]'.
Each dict must contain an entry called 'question' containing the question itself and an entry called 'insert' containing an exact copy of the sentence from the transcript that is most relevant to the question.
)";

const char* kInferTemplate =
    R"(Format your entire answer as a JSON object, with an entry named "answer" containing your answer and an entry "able" containing a binary value (true or false, all lower case) for whether you were actually able to answer the question.
Base your answer strictly on information contained in the prompt, without speculating.
Tailor your answer so it fits best to this persona: <persona>.
The answer is intended for participant <participant>.
The answer should be a single running text string, not a list or dictionary.

Answer based on the following transcript and a supplemental file.
Question: <question>
Transcript: <transcript>
Supplemental file: <file>
)";

const char* kSummarizeTemplate =
    R"(You are a professional summarizer and have been tasked with creating an abstractive summary for a participant in a meeting.
Your summary should be <limit> tokens or less.
Carefully analyze the following transcript and provide a detailed summary for the participant.
The summary is for participant <participant>.
Consider the target persona who will have to work with the summary: <persona>.
The generated summary should help the persona understand the meeting content even after a long time, and it should be the perfect source for the persona to post-process the meeting content and prepare for the next steps.
Focus on what is relevant for the participant to know and add what the participant needs to know to best work with the meeting content.

Summarize this transcript. Create an abstractive summary. Make the summary <limit> tokens or less.
Transcript: <transcript>
)";

const char* kSummarizeUpdateTemplate =
    R"(You are a professional summarizer working through a long meeting transcript in sequential chunks, keeping one global summary updated as you go.
Your summary should be <limit> tokens or less.
The summary is for participant <participant>.
Consider the target persona who will have to work with the summary: <persona>.

Current global summary: <summary>
Next transcript chunk: <transcript>

Update the global summary so it also covers the new chunk. Create an abstractive summary. Make the summary <limit> tokens or less.
)";

const char* kSummarizeShortenTemplate =
    R"(The following summary exceeds the limit of <limit> tokens.
Rewrite it so it is <limit> tokens or less while keeping the most important content.
Summary: <summary>
)";

const char* kPersonaTemplate =
    R"(You are a professional profiler and have been tasked with creating a persona for a participant in a meeting.
Carefully analyze the following transcript and provide a detailed persona for the participant.
In your answer, include the participant's role, personality traits from the Big Five, point of view, contributions, knowledge that they brought to the meeting, information that they did not know, and any other relevant information.
Make sure to provide a detailed and comprehensive persona.
Your answer should be a string containing a running text.

Create a persona for participant <participant> based on the following transcript: <transcript>.
)";

const char* kJudgeTemplate =
    R"(You are an expert in the field of summarizing meetings and are tasked with evaluating the quality of the following summary.
Score the summary according to the scoring criteria with a Likert score between 1 (worst) and 5 (best).
The summary was written for this target persona: <persona>.

Transcript: <transcript>
Summary: <summary>
Criteria: <criteria>

Your task is to rank the summaries based on the criteria provided.
Remember to consider the quality of the summaries and how well they capture the key points of the original transcript.
First provide an argumentation for your ranking. Therefore, use chain-of-thought and think step by step.
Return a json object with the ranking for the evaluation criteria.
The output should be in the following format:
<explanation, step-by-step> ! <json object>
The json object should follow the structure ```json {<evaluation criteria> : <Likert Score>}```
The JSON object should only contain the single Likert score for the currently assessed criteria.
)";

const char* kFactsTemplate =
    R"(Break the following summary down into its atomic facts.
An atomic fact is a single minimal factual claim.
Return only a JSON array of strings, one string per atomic fact.
Summary: <summary>
)";

const char* kFactCheckTemplate =
    R"(For each fact below, decide whether it is supported by the transcript.
Return only a JSON array of booleans (true or false, all lower case), one per fact, in the same order as the facts.
Transcript: <transcript>
Facts: <facts>
)";

}  // namespace

PromptLibrary PromptLibrary::defaults() {
    PromptLibrary lib;
    lib.templates_["gap"] = kGapTemplate;
    lib.templates_["infer"] = kInferTemplate;
    lib.templates_["summarize"] = kSummarizeTemplate;
    lib.templates_["summarize_update"] = kSummarizeUpdateTemplate;
    lib.templates_["summarize_shorten"] = kSummarizeShortenTemplate;
    lib.templates_["persona"] = kPersonaTemplate;
    lib.templates_["judge"] = kJudgeTemplate;
    lib.templates_["facts"] = kFactsTemplate;
    lib.templates_["fact_check"] = kFactCheckTemplate;
    return lib;
}

PromptLibrary PromptLibrary::from_directory(const std::string& dir) {
    PromptLibrary lib = defaults();
    for (auto& [name, text] : lib.templates_) {
        std::filesystem::path p = std::filesystem::path(dir) / (name + ".txt");
        if (std::filesystem::exists(p)) {
            std::ifstream in(p, std::ios::binary);
            std::ostringstream buf;
            buf << in.rdbuf();
            text = buf.str();
        }
    }
    return lib;
}

const std::string& PromptLibrary::get(const std::string& name) const {
    auto it = templates_.find(name);
    if (it == templates_.end()) {
        throw std::out_of_range("no prompt template named '" + name + "'");
    }
    return it->second;
}

void PromptLibrary::set(const std::string& name, std::string text) {
    templates_[name] = std::move(text);
}

bool PromptLibrary::has(const std::string& name) const { return templates_.count(name) != 0; }

std::string render_prompt(const std::string& tmpl,
                          const std::map<std::string, std::string>& vars,
                          const std::set<std::string>& optional_keys) {
    std::string out;
    std::size_t pos = 0;
    while (pos <= tmpl.size()) {
        std::size_t eol = tmpl.find('\n', pos);
        std::string line =
            eol == std::string::npos ? tmpl.substr(pos) : tmpl.substr(pos, eol - pos);

        bool drop = false;
        for (const auto& key : optional_keys) {
            if (!vars.count(key) && line.find("<" + key + ">") != std::string::npos) {
                drop = true;
                break;
            }
        }
        if (!drop) {
            for (const auto& [key, value] : vars) {
                const std::string slot = "<" + key + ">";
                std::size_t at = 0;
                while ((at = line.find(slot, at)) != std::string::npos) {
                    line.replace(at, slot.size(), value);
                    at += value.size();
                }
            }
            out += line;
            if (eol != std::string::npos) out += '\n';
        }
        if (eol == std::string::npos) break;
        pos = eol + 1;
    }
    return out;
}

}  // namespace mssum

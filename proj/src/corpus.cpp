#include "mssum/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace mssum {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

const nlohmann::json& require(const nlohmann::json& obj, const char* field,
                              const std::string& where) {
    auto it = obj.find(field);
    if (it == obj.end()) {
        throw SchemaError(where + ": missing required field '" + field + "'");
    }
    return *it;
}

std::string require_string(const nlohmann::json& obj, const char* field,
                           const std::string& where) {
    const auto& v = require(obj, field, where);
    if (!v.is_string()) {
        throw SchemaError(where + ": field '" + field + "' must be a string");
    }
    return v.get<std::string>();
}

void collect_unknown(const nlohmann::json& obj, const std::set<std::string>& known,
                     const std::string& where, Meeting& out) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!known.count(it.key())) {
            out.load_warnings.push_back("ignored unknown field '" + it.key() + "' in " + where);
            out.extra[where][it.key()] = it.value();
        }
    }
}

}  // namespace

std::string to_string(DocKind kind) {
    switch (kind) {
        case DocKind::slides: return "slides";
        case DocKind::whiteboard: return "whiteboard";
        case DocKind::notes: return "notes";
        case DocKind::other: return "other";
    }
    return "other";
}

DocKind doc_kind_from_string(const std::string& s) {
    if (s == "slides") return DocKind::slides;
    if (s == "whiteboard") return DocKind::whiteboard;
    if (s == "notes") return DocKind::notes;
    if (s == "other") return DocKind::other;
    throw SchemaError("document: unknown kind '" + s + "'");
}

Meeting load_meeting(const std::string& raw_json) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(raw_json);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError(std::string("meeting: not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw SchemaError("meeting: top level must be an object");

    Meeting m;
    m.meeting_id = require_string(j, "meeting_id", "meeting");
    if (m.meeting_id.empty()) throw SchemaError("meeting: meeting_id must be non-empty");

    const auto& turns = require(j, "turns", "meeting");
    if (!turns.is_array()) throw SchemaError("meeting: field 'turns' must be an array");
    for (std::size_t i = 0; i < turns.size(); ++i) {
        const auto& jt = turns[i];
        const std::string where = "turns[" + std::to_string(i) + "]";
        if (!jt.is_object()) throw SchemaError(where + ": must be an object");
        Turn t;
        t.speaker_role = require_string(jt, "speaker_role", where);
        if (jt.contains("speaker_name") && jt["speaker_name"].is_string()) {
            t.speaker_name = jt["speaker_name"].get<std::string>();
        }
        t.text = trim(require_string(jt, "text", where));
        if (t.text.empty()) throw SchemaError(where + ": text is empty after normalization");
        collect_unknown(jt, {"speaker_role", "speaker_name", "text"}, where, m);
        m.turns.push_back(std::move(t));
    }
    if (m.turns.empty()) throw EmptyTranscript("meeting '" + m.meeting_id + "' has zero turns");

    if (j.contains("documents")) {
        const auto& docs = j["documents"];
        if (!docs.is_array()) throw SchemaError("meeting: field 'documents' must be an array");
        std::set<std::string> ids;
        for (std::size_t i = 0; i < docs.size(); ++i) {
            const auto& jd = docs[i];
            const std::string where = "documents[" + std::to_string(i) + "]";
            if (!jd.is_object()) throw SchemaError(where + ": must be an object");
            SourceDocument d;
            d.doc_id = require_string(jd, "doc_id", where);
            d.kind = doc_kind_from_string(require_string(jd, "kind", where));
            if (jd.contains("title") && jd["title"].is_string()) {
                d.title = jd["title"].get<std::string>();
            }
            d.text = require_string(jd, "text", where);
            if (d.text.empty()) throw SchemaError(where + ": text must be non-empty");
            if (!ids.insert(d.doc_id).second) {
                throw SchemaError(where + ": duplicate doc_id '" + d.doc_id + "'");
            }
            collect_unknown(jd, {"doc_id", "kind", "title", "text"}, where, m);
            m.documents.push_back(std::move(d));
        }
    }

    if (j.contains("gold_summary")) {
        if (!j["gold_summary"].is_string()) {
            throw SchemaError("meeting: field 'gold_summary' must be a string");
        }
        m.gold_summary = j["gold_summary"].get<std::string>();
    }

    collect_unknown(j, {"meeting_id", "turns", "documents", "gold_summary"}, "meeting", m);
    return m;
}

Meeting load_meeting_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError("cannot open meeting file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_meeting(buf.str());
}

nlohmann::json serialize(const Meeting& meeting) {
    nlohmann::json j;
    j["meeting_id"] = meeting.meeting_id;
    j["turns"] = nlohmann::json::array();
    for (const auto& t : meeting.turns) {
        nlohmann::json jt;
        jt["speaker_role"] = t.speaker_role;
        if (t.speaker_name) jt["speaker_name"] = *t.speaker_name;
        jt["text"] = t.text;
        j["turns"].push_back(std::move(jt));
    }
    j["documents"] = nlohmann::json::array();
    for (const auto& d : meeting.documents) {
        nlohmann::json jd;
        jd["doc_id"] = d.doc_id;
        jd["kind"] = to_string(d.kind);
        if (d.title) jd["title"] = *d.title;
        jd["text"] = d.text;
        j["documents"].push_back(std::move(jd));
    }
    if (meeting.gold_summary) j["gold_summary"] = *meeting.gold_summary;
    return j;
}

std::string render_transcript(const Meeting& meeting) {
    std::string out;
    for (std::size_t i = 0; i < meeting.turns.size(); ++i) {
        if (i) out += "\n\n";
        out += meeting.turns[i].speaker_role;
        out += '\n';
        out += meeting.turns[i].text;
    }
    return out;
}

std::size_t count_tokens(const std::string& text, const TokenizerProfile& profile) {
    if (profile.mode == TokenizerProfile::Mode::chars_per_token) {
        if (text.empty()) return 0;
        return static_cast<std::size_t>(
            std::ceil(static_cast<double>(text.size()) / profile.chars_per_token));
    }
    std::size_t n = 0;
    bool in_token = false;
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            in_token = false;
        } else if (!in_token) {
            in_token = true;
            ++n;
        }
    }
    return n;
}

CorpusStats corpus_stats(const std::vector<Meeting>& meetings) {
    if (meetings.empty()) throw EmptyCorpus("corpus_stats requires at least one meeting");
    CorpusStats s;
    s.meeting_count = meetings.size();
    const TokenizerProfile words = TokenizerProfile::whitespace();
    double turns = 0, speakers = 0, tr_words = 0, gold_words = 0, docs = 0;
    for (const auto& m : meetings) {
        turns += static_cast<double>(m.turns.size());
        std::set<std::string> roles;
        for (const auto& t : m.turns) roles.insert(t.speaker_role);
        speakers += static_cast<double>(roles.size());
        tr_words += static_cast<double>(count_tokens(render_transcript(m), words));
        docs += static_cast<double>(m.documents.size());
        if (m.gold_summary) {
            gold_words += static_cast<double>(count_tokens(*m.gold_summary, words));
            ++s.meetings_with_gold;
        }
    }
    const double n = static_cast<double>(meetings.size());
    s.avg_turns = turns / n;
    s.avg_speakers = speakers / n;
    s.avg_transcript_words = tr_words / n;
    s.avg_documents = docs / n;
    s.avg_gold_words =
        s.meetings_with_gold ? gold_words / static_cast<double>(s.meetings_with_gold) : 0.0;
    return s;
}

}  // namespace mssum

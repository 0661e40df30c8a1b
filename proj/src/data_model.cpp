#include "claimcheck/data_model.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "claimcheck/errors.hpp"
#include "claimcheck/io.hpp"

namespace claimcheck {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string_view label_name(Label label)
{
    switch (label) {
    case Label::Supports: return "SUPPORTS";
    case Label::Refutes: return "REFUTES";
    case Label::Nei: return "NEI";
    }
    return "?";
}

std::string_view label_wire_name(Label label)
{
    switch (label) {
    case Label::Supports: return "SUPPORT";
    case Label::Refutes: return "CONTRADICT";
    case Label::Nei: return "NOT_ENOUGH_INFO";
    }
    return "?";
}

std::optional<Label> parse_label(std::string_view text)
{
    if (text == "SUPPORT" || text == "SUPPORTS") {
        return Label::Supports;
    }
    if (text == "CONTRADICT" || text == "REFUTES") {
        return Label::Refutes;
    }
    if (text == "NEI" || text == "NOT_ENOUGH_INFO") {
        return Label::Nei;
    }
    return std::nullopt;
}

std::string_view provenance_name(Provenance p)
{
    switch (p) {
    case Provenance::Human: return "HUMAN";
    case Provenance::WeakIco: return "WEAK_ICO";
    case Provenance::WeakTitle: return "WEAK_TITLE";
    }
    return "?";
}

std::optional<Provenance> parse_provenance(std::string_view text)
{
    if (text == "HUMAN") {
        return Provenance::Human;
    }
    if (text == "WEAK_ICO") {
        return Provenance::WeakIco;
    }
    if (text == "WEAK_TITLE") {
        return Provenance::WeakTitle;
    }
    return std::nullopt;
}

std::string Document::full_text() const
{
    std::string text = title;
    for (const auto& s : sentences) {
        if (!text.empty()) {
            text.push_back(' ');
        }
        text += s;
    }
    return text;
}

Corpus::Corpus(std::vector<Document> documents)
{
    m_docs.reserve(documents.size());
    for (auto& d : documents) {
        add(std::move(d));
    }
}

void Corpus::add(Document doc)
{
    auto [it, inserted] = m_index.emplace(doc.doc_id, m_docs.size());
    if (!inserted) {
        throw ValidationError("duplicate doc_id " + std::to_string(doc.doc_id));
    }
    m_docs.push_back(std::move(doc));
}

const Document* Corpus::find(int doc_id) const
{
    auto it = m_index.find(doc_id);
    return it == m_index.end() ? nullptr : &m_docs[it->second];
}

const Document& Corpus::at(int doc_id) const
{
    const auto* d = find(doc_id);
    if (d == nullptr) {
        throw ValidationError("unknown doc_id " + std::to_string(doc_id));
    }
    return *d;
}

std::vector<int> DocEvidence::sentence_union() const
{
    std::set<int> all;
    for (const auto& r : rationales) {
        all.insert(r.sentences.begin(), r.sentences.end());
    }
    return {all.begin(), all.end()};
}

Label Claim::gold_label(int doc_id) const
{
    auto it = evidence.find(doc_id);
    return it == evidence.end() ? Label::Nei : it->second.label;
}

namespace {

struct LineContext {
    const std::string& source;
    std::size_t line;

    [[noreturn]] void fail(const std::string& what) const { throw ParseError(source, line, what); }
};

json parse_line(const std::string& text, const LineContext& ctx)
{
    try {
        auto value = json::parse(text);
        if (!value.is_object()) {
            ctx.fail("expected a JSON object");
        }
        return value;
    } catch (const json::parse_error& e) {
        ctx.fail(std::string("malformed JSON: ") + e.what());
    }
}

const json& field(const json& obj, const char* name, const LineContext& ctx)
{
    auto it = obj.find(name);
    if (it == obj.end()) {
        ctx.fail(std::string("missing field '") + name + "'");
    }
    return *it;
}

int as_int(const json& v, const char* name, const LineContext& ctx)
{
    if (!v.is_number_integer()) {
        ctx.fail(std::string("field '") + name + "' must be an integer");
    }
    return v.get<int>();
}

std::string as_string(const json& v, const char* name, const LineContext& ctx)
{
    if (!v.is_string()) {
        ctx.fail(std::string("field '") + name + "' must be a string");
    }
    return v.get<std::string>();
}

std::vector<int> as_int_list(const json& v, const char* name, const LineContext& ctx)
{
    if (!v.is_array()) {
        ctx.fail(std::string("field '") + name + "' must be an array of integers");
    }
    std::vector<int> out;
    out.reserve(v.size());
    for (const auto& x : v) {
        out.push_back(as_int(x, name, ctx));
    }
    return out;
}

int parse_doc_key(const std::string& key, const LineContext& ctx)
{
    try {
        std::size_t used = 0;
        int id = std::stoi(key, &used);
        if (used != key.size()) {
            throw std::invalid_argument(key);
        }
        return id;
    } catch (const std::exception&) {
        ctx.fail("evidence key '" + key + "' is not an integer doc id");
    }
}

Label parse_label_field(const json& v, const LineContext& ctx)
{
    auto label = parse_label(as_string(v, "label", ctx));
    if (!label) {
        ctx.fail("unknown label '" + v.get<std::string>() + "'");
    }
    return *label;
}

std::vector<int> normalized_indices(std::vector<int> idx)
{
    std::sort(idx.begin(), idx.end());
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    return idx;
}

void write_line(std::ostream& out, const ordered_json& obj) { out << obj.dump() << '\n'; }

}  // namespace

Corpus parse_corpus(std::istream& in, const std::string& source)
{
    Corpus corpus;
    for_each_line(in, [&](const std::string& text, std::size_t line) {
        LineContext ctx{source, line};
        auto obj = parse_line(text, ctx);
        Document doc;
        doc.doc_id = as_int(field(obj, "doc_id", ctx), "doc_id", ctx);
        doc.title = as_string(field(obj, "title", ctx), "title", ctx);
        const auto& abstract = field(obj, "abstract", ctx);
        if (!abstract.is_array()) {
            ctx.fail("field 'abstract' must be an array of strings");
        }
        for (const auto& s : abstract) {
            doc.sentences.push_back(as_string(s, "abstract", ctx));
        }
        if (corpus.contains(doc.doc_id)) {
            throw ValidationError(source + ":" + std::to_string(line) + ": duplicate doc_id " +
                                  std::to_string(doc.doc_id));
        }
        corpus.add(std::move(doc));
    });
    return corpus;
}

void write_corpus(std::ostream& out, const Corpus& corpus)
{
    for (const auto& doc : corpus) {
        ordered_json obj;
        obj["doc_id"] = doc.doc_id;
        obj["title"] = doc.title;
        obj["abstract"] = doc.sentences;
        write_line(out, obj);
    }
}

Corpus load_corpus(const std::string& path)
{
    auto in = open_input(path);
    return parse_corpus(in, path);
}

void save_corpus(const Corpus& corpus, const std::string& path)
{
    auto out = open_output(path);
    write_corpus(out, corpus);
}

std::vector<Claim> parse_claims(std::istream& in, const std::string& source)
{
    std::vector<Claim> claims;
    std::set<int> seen;
    for_each_line(in, [&](const std::string& text, std::size_t line) {
        LineContext ctx{source, line};
        auto obj = parse_line(text, ctx);
        Claim claim;
        claim.id = as_int(field(obj, "id", ctx), "id", ctx);
        if (!seen.insert(claim.id).second) {
            ctx.fail("duplicate claim id " + std::to_string(claim.id));
        }
        claim.text = as_string(field(obj, "claim", ctx), "claim", ctx);

        if (auto ev = obj.find("evidence"); ev != obj.end()) {
            if (!ev->is_object()) {
                ctx.fail("field 'evidence' must be an object");
            }
            for (const auto& [key, entries] : ev->items()) {
                int doc_id = parse_doc_key(key, ctx);
                if (!entries.is_array() || entries.empty()) {
                    ctx.fail("evidence for doc " + key + " must be a non-empty array");
                }
                DocEvidence doc_ev;
                bool first = true;
                for (const auto& entry : entries) {
                    Label label = parse_label_field(field(entry, "label", ctx), ctx);
                    if (label == Label::Nei) {
                        ctx.fail("evidence label for doc " + key + " cannot be NEI");
                    }
                    if (first) {
                        doc_ev.label = label;
                        first = false;
                    } else if (label != doc_ev.label) {
                        ctx.fail("claim " + std::to_string(claim.id) + " doc " + key +
                                 " mixes SUPPORT and CONTRADICT rationales");
                    }
                    auto sent = entry.find("sentences");
                    if (sent == entry.end() || sent->is_null()) {
                        // label-only evidence: no rationale annotation
                        continue;
                    }
                    auto idx = as_int_list(*sent, "sentences", ctx);
                    if (idx.empty()) {
                        ctx.fail("rationale for doc " + key + " has no sentences");
                    }
                    doc_ev.rationales.push_back(Rationale{label, normalized_indices(std::move(idx))});
                }
                claim.evidence.emplace(doc_id, std::move(doc_ev));
            }
        }
        if (auto cited = obj.find("cited_doc_ids"); cited != obj.end()) {
            claim.cited_doc_ids = as_int_list(*cited, "cited_doc_ids", ctx);
        }
        if (auto prov = obj.find("provenance"); prov != obj.end()) {
            auto p = parse_provenance(as_string(*prov, "provenance", ctx));
            if (!p) {
                ctx.fail("unknown provenance '" + prov->get<std::string>() + "'");
            }
            claim.provenance = *p;
        }
        if (auto trace = obj.find("trace"); trace != obj.end()) {
            claim.trace = ordered_json::parse(trace->dump());
        }
        claims.push_back(std::move(claim));
    });
    return claims;
}

void write_claims(std::ostream& out, const std::vector<Claim>& claims)
{
    for (const auto& claim : claims) {
        ordered_json obj;
        obj["id"] = claim.id;
        obj["claim"] = claim.text;
        ordered_json evidence = ordered_json::object();
        for (const auto& [doc_id, ev] : claim.evidence) {
            ordered_json entries = ordered_json::array();
            if (ev.rationales.empty()) {
                entries.push_back({{"label", label_wire_name(ev.label)}});
            }
            for (const auto& r : ev.rationales) {
                entries.push_back({{"sentences", r.sentences}, {"label", label_wire_name(r.label)}});
            }
            evidence[std::to_string(doc_id)] = std::move(entries);
        }
        obj["evidence"] = std::move(evidence);
        obj["cited_doc_ids"] = claim.cited_doc_ids;
        if (claim.provenance != Provenance::Human) {
            obj["provenance"] = provenance_name(claim.provenance);
        }
        if (!claim.trace.is_null()) {
            obj["trace"] = claim.trace;
        }
        write_line(out, obj);
    }
}

std::vector<Claim> read_claims(const std::string& path)
{
    auto in = open_input(path);
    return parse_claims(in, path);
}

void validate_claims(const std::vector<Claim>& claims, const Corpus& corpus)
{
    for (const auto& claim : claims) {
        auto where = "claim " + std::to_string(claim.id) + ": ";
        for (const auto& [doc_id, ev] : claim.evidence) {
            const auto* doc = corpus.find(doc_id);
            if (doc == nullptr) {
                throw ValidationError(where + "evidence references unknown doc_id " + std::to_string(doc_id));
            }
            for (const auto& r : ev.rationales) {
                for (int s : r.sentences) {
                    if (s < 0 || static_cast<std::size_t>(s) >= doc->sentences.size()) {
                        throw ValidationError(where + "sentence index " + std::to_string(s) +
                                              " out of range for doc " + std::to_string(doc_id) + " with " +
                                              std::to_string(doc->sentences.size()) + " sentences");
                    }
                }
            }
        }
        for (int doc_id : claim.cited_doc_ids) {
            if (!corpus.contains(doc_id)) {
                throw ValidationError(where + "cited_doc_ids references unknown doc_id " + std::to_string(doc_id));
            }
        }
    }
}

std::vector<Claim> load_claims(const std::string& path, const Corpus& corpus)
{
    auto claims = read_claims(path);
    validate_claims(claims, corpus);
    return claims;
}

void save_claims(const std::vector<Claim>& claims, const std::string& path)
{
    auto out = open_output(path);
    write_claims(out, claims);
}

std::vector<Prediction> parse_predictions(std::istream& in, const std::string& source)
{
    std::vector<Prediction> preds;
    std::set<int> seen;
    for_each_line(in, [&](const std::string& text, std::size_t line) {
        LineContext ctx{source, line};
        auto obj = parse_line(text, ctx);
        int claim_id = as_int(field(obj, "id", ctx), "id", ctx);
        if (!seen.insert(claim_id).second) {
            ctx.fail("duplicate prediction line for claim " + std::to_string(claim_id));
        }
        const auto& ev = field(obj, "evidence", ctx);
        if (!ev.is_object()) {
            ctx.fail("field 'evidence' must be an object");
        }
        std::vector<Prediction> line_preds;
        for (const auto& [key, entry] : ev.items()) {
            Prediction p;
            p.claim_id = claim_id;
            p.doc_id = parse_doc_key(key, ctx);
            p.label = parse_label_field(field(entry, "label", ctx), ctx);
            if (p.label == Label::Nei) {
                continue;
            }
            p.rationale = normalized_indices(as_int_list(field(entry, "sentences", ctx), "sentences", ctx));
            line_preds.push_back(std::move(p));
        }
        std::sort(line_preds.begin(), line_preds.end(),
                  [](const Prediction& a, const Prediction& b) { return a.doc_id < b.doc_id; });
        preds.insert(preds.end(), line_preds.begin(), line_preds.end());
    });
    return preds;
}

void write_predictions(std::ostream& out, const std::vector<Prediction>& preds)
{
    std::map<int, std::map<int, const Prediction*>> by_claim;
    for (const auto& p : preds) {
        by_claim[p.claim_id][p.doc_id] = &p;
    }
    for (const auto& [claim_id, docs] : by_claim) {
        ordered_json obj;
        obj["id"] = claim_id;
        ordered_json evidence = ordered_json::object();
        for (const auto& [doc_id, p] : docs) {
            if (p->label == Label::Nei) {
                continue;
            }
            evidence[std::to_string(doc_id)] = {{"label", label_wire_name(p->label)}, {"sentences", p->rationale}};
        }
        obj["evidence"] = std::move(evidence);
        write_line(out, obj);
    }
}

std::vector<Prediction> read_predictions(const std::string& path)
{
    auto in = open_input(path);
    return parse_predictions(in, path);
}

void save_predictions(const std::vector<Prediction>& preds, const std::string& path)
{
    auto out = open_output(path);
    write_predictions(out, preds);
}

std::vector<std::string> validate_predictions(const std::vector<Prediction>& preds,
                                              const Corpus& corpus,
                                              const std::vector<Claim>& claims)
{
    std::set<int> claim_ids;
    for (const auto& c : claims) {
        claim_ids.insert(c.id);
    }
    std::vector<std::string> violations;
    std::set<std::pair<int, int>> seen;
    for (const auto& p : preds) {
        auto where = "prediction (claim " + std::to_string(p.claim_id) + ", doc " + std::to_string(p.doc_id) + "): ";
        if (!seen.emplace(p.claim_id, p.doc_id).second) {
            violations.push_back(where + "duplicate (claim, doc) pair");
        }
        if (claim_ids.count(p.claim_id) == 0) {
            violations.push_back(where + "unknown claim id");
        }
        const auto* doc = corpus.find(p.doc_id);
        if (doc == nullptr) {
            violations.push_back(where + "unknown doc id");
        }
        if (p.label != Label::Nei && p.rationale.empty()) {
            violations.push_back(where + "label " + std::string(label_name(p.label)) + " with no rationale sentences");
        }
        if (p.label == Label::Nei && !p.rationale.empty()) {
            violations.push_back(where + "NEI label with rationale sentences");
        }
        if (!std::is_sorted(p.rationale.begin(), p.rationale.end()) ||
            std::adjacent_find(p.rationale.begin(), p.rationale.end()) != p.rationale.end()) {
            violations.push_back(where + "rationale indices not strictly increasing");
        }
        if (doc != nullptr) {
            for (int s : p.rationale) {
                if (s < 0 || static_cast<std::size_t>(s) >= doc->sentences.size()) {
                    violations.push_back(where + "sentence index " + std::to_string(s) + " out of range");
                }
            }
        }
    }
    return violations;
}

std::map<int, const Claim*> index_claims(const std::vector<Claim>& claims)
{
    std::map<int, const Claim*> out;
    for (const auto& c : claims) {
        if (!out.emplace(c.id, &c).second) {
            throw ValidationError("duplicate claim id " + std::to_string(c.id));
        }
    }
    return out;
}

}  // namespace claimcheck

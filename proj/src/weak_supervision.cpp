#include "claimcheck/weak_supervision.hpp"

#include <algorithm>
#include <cctype>
#include <random>
#include <set>

#include "claimcheck/analyzer.hpp"
#include "claimcheck/errors.hpp"
#include "claimcheck/io.hpp"

namespace claimcheck {

using nlohmann::ordered_json;

std::string_view direction_name(IcoDirection d)
{
    switch (d) {
    case IcoDirection::SigIncreased: return "SIG_INCREASED";
    case IcoDirection::SigDecreased: return "SIG_DECREASED";
    case IcoDirection::NoSigDiff: return "NO_SIG_DIFF";
    }
    return "?";
}

std::optional<IcoDirection> parse_direction(std::string_view text)
{
    for (auto d : {IcoDirection::SigIncreased, IcoDirection::SigDecreased, IcoDirection::NoSigDiff}) {
        if (direction_name(d) == text) {
            return d;
        }
    }
    return std::nullopt;
}

ordered_json ico_prompt_json(const IcoPrompt& p)
{
    ordered_json j = {{"doc_id", p.doc_id},
                      {"intervention", p.intervention},
                      {"comparator", p.comparator},
                      {"outcome", p.outcome},
                      {"direction", direction_name(p.direction)}};
    if (p.rationale_indices) {
        j["rationale_indices"] = *p.rationale_indices;
    }
    return j;
}

IcoPrompt ico_prompt_from_json(const ordered_json& j)
{
    IcoPrompt p;
    p.doc_id = j.at("doc_id").get<int>();
    p.intervention = j.at("intervention").get<std::string>();
    p.comparator = j.value("comparator", std::string());
    p.outcome = j.at("outcome").get<std::string>();
    const auto dir = j.at("direction").get<std::string>();
    auto d = parse_direction(dir);
    if (!d) {
        throw ValidationError("unknown ICO direction '" + dir + "'");
    }
    p.direction = *d;
    if (auto it = j.find("rationale_indices"); it != j.end() && !it->is_null()) {
        auto idx = it->get<std::vector<int>>();
        std::sort(idx.begin(), idx.end());
        idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
        if (idx.empty() || idx.front() < 0) {
            throw ValidationError("rationale_indices must be non-empty and non-negative");
        }
        p.rationale_indices = std::move(idx);
    }
    if (p.intervention.empty() || p.outcome.empty()) {
        throw ValidationError("intervention and outcome must be non-empty");
    }
    return p;
}

std::vector<IcoPrompt> load_ico_prompts(const std::string& path)
{
    auto in = open_input(path);
    std::vector<IcoPrompt> out;
    for_each_line(in, [&](const std::string& line, std::size_t number) {
        try {
            out.push_back(ico_prompt_from_json(ordered_json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path, number, e.what());
        } catch (const ParseError&) {
            throw;
        } catch (const ValidationError& e) {
            throw ParseError(path, number, e.what());
        }
    });
    return out;
}

std::string ico_claim_text(const IcoPrompt& p, bool increases)
{
    std::string text = p.intervention + (increases ? " increases " : " decreases ") + p.outcome;
    if (!p.comparator.empty()) {
        text += " compared to " + p.comparator;
    }
    return text;
}

std::vector<Claim> ico_to_claims(const IcoPrompt& prompt, int first_id)
{
    if (prompt.direction == IcoDirection::NoSigDiff) {
        return {};
    }
    const bool increased = prompt.direction == IcoDirection::SigIncreased;
    std::vector<Claim> out;
    for (int role = 0; role < 2; ++role) {
        const bool supports = role == 0;
        Claim c;
        c.id = first_id + role;
        c.text = ico_claim_text(prompt, supports ? increased : !increased);
        c.provenance = Provenance::WeakIco;
        c.cited_doc_ids = {prompt.doc_id};
        DocEvidence ev;
        ev.label = supports ? Label::Supports : Label::Refutes;
        if (prompt.rationale_indices) {
            ev.rationales.push_back(Rationale{ev.label, *prompt.rationale_indices});
        }
        c.evidence.emplace(prompt.doc_id, std::move(ev));
        c.trace = {{"rule", "ico-template-v1"},
                   {"role", supports ? "supports" : "refutes"},
                   {"prompt", ico_prompt_json(prompt)}};
        out.push_back(std::move(c));
    }
    return out;
}

const std::vector<NegationRule>& default_negation_rules()
{
    static const std::vector<NegationRule> rules = {
        {"does not", "does"}, {"do not", "do"}, {"is not", "is"}, {"are not", "are"}, {"cannot", "can"},
    };
    return rules;
}

namespace {

const std::set<std::string>& finding_verbs()
{
    static const std::set<std::string> verbs = {
        "increases", "increase", "increased",  "decreases", "decrease", "decreased", "improves",  "improve",
        "improved",  "reduces",  "reduce",     "reduced",   "prevents", "prevent",   "causes",    "cause",
        "induces",   "induce",   "enhances",   "enhance",   "inhibits", "inhibit",   "promotes",  "promote",
        "predicts",  "predict",  "lowers",     "lower",     "raises",   "raise",     "affects",   "affect",
        "impairs",   "impair",   "suppresses", "suppress",  "protects", "protect",   "worsens",   "worsen",
        "does",      "do",       "did",        "cannot",    "can",      "requires",  "require",   "regulates",
        "regulate",  "mediates", "mediate",    "activates", "activate", "alters",    "alter",     "accelerates",
        "delays",    "delay",    "extends",    "extend",    "shortens", "shorten",   "triggers",  "trigger",
    };
    return verbs;
}

// "is/are associated with", "is/are not", "is/are linked to"
bool has_copula_phrase(const std::vector<std::string>& toks)
{
    for (std::size_t i = 0; i + 1 < toks.size(); ++i) {
        if (toks[i] != "is" && toks[i] != "are") {
            continue;
        }
        const auto& next = toks[i + 1];
        if (next == "not" || next == "associated" || next == "linked" || next == "correlated") {
            return true;
        }
    }
    return false;
}

// whole-word search: boundaries are string ends or non-alphanumeric characters
std::size_t find_words(const std::string& text, const std::string& pattern)
{
    auto is_word = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; };
    for (std::size_t pos = text.find(pattern); pos != std::string::npos; pos = text.find(pattern, pos + 1)) {
        const bool left = pos == 0 || !is_word(text[pos - 1]);
        const std::size_t end = pos + pattern.size();
        const bool right = end == text.size() || !is_word(text[end]);
        if (left && right) {
            return pos;
        }
    }
    return std::string::npos;
}

}  // namespace

bool is_claim_like(std::string_view title)
{
    if (title.find('?') != std::string_view::npos) {
        return false;
    }
    const auto toks = analyze(title);
    if (toks.size() < 4) {
        return false;
    }
    const auto& verbs = finding_verbs();
    return has_copula_phrase(toks) ||
           std::any_of(toks.begin(), toks.end(), [&](const std::string& t) { return verbs.count(t) != 0; });
}

std::optional<std::pair<std::string, const NegationRule*>> apply_negation(const std::string& title,
                                                                          const std::vector<NegationRule>& rules)
{
    for (const auto& rule : rules) {
        const auto pos = find_words(title, rule.pattern);
        if (pos != std::string::npos) {
            std::string out = title;
            out.replace(pos, rule.pattern.size(), rule.replacement);
            return std::make_pair(out, &rule);
        }
    }
    return std::nullopt;
}

std::vector<Claim> title_to_claims(const Document& doc, int first_id, const std::vector<NegationRule>& rules)
{
    if (!is_claim_like(doc.title)) {
        return {};
    }
    std::vector<Claim> out;
    auto make = [&](std::string text, Label label, ordered_json negation) {
        Claim c;
        c.id = first_id + static_cast<int>(out.size());
        c.text = std::move(text);
        c.provenance = Provenance::WeakTitle;
        c.cited_doc_ids = {doc.doc_id};
        c.evidence.emplace(doc.doc_id, DocEvidence{label, {}});
        c.trace = {{"rule", "title-v1"}, {"doc_id", doc.doc_id}, {"negation", std::move(negation)}};
        out.push_back(std::move(c));
    };
    make(doc.title, Label::Supports, nullptr);
    if (auto neg = apply_negation(doc.title, rules)) {
        make(neg->first, Label::Refutes, {{"pattern", neg->second->pattern}, {"replacement", neg->second->replacement}});
    }
    return out;
}

Claim replay_generated(const Claim& generated, const Corpus& corpus)
{
    const auto& trace = generated.trace;
    if (!trace.is_object() || !trace.contains("rule")) {
        throw ValidationError("claim " + std::to_string(generated.id) + " has no generation trace");
    }
    const auto rule = trace.at("rule").get<std::string>();
    if (rule == "ico-template-v1") {
        const auto prompt = ico_prompt_from_json(trace.at("prompt"));
        const bool supports = trace.at("role").get<std::string>() == "supports";
        auto pair = ico_to_claims(prompt, generated.id - (supports ? 0 : 1));
        if (pair.size() != 2) {
            throw ValidationError("claim " + std::to_string(generated.id) + ": trace prompt yields no claims");
        }
        return pair[supports ? 0 : 1];
    }
    if (rule == "title-v1") {
        const auto& doc = corpus.at(trace.at("doc_id").get<int>());
        const auto& negation = trace.at("negation");
        std::vector<NegationRule> rules = default_negation_rules();
        if (!negation.is_null()) {
            rules = {{negation.at("pattern").get<std::string>(), negation.at("replacement").get<std::string>()}};
        }
        const bool refutes = !negation.is_null();
        auto claims = title_to_claims(doc, generated.id - (refutes ? 1 : 0), rules);
        if (claims.size() < (refutes ? 2u : 1u)) {
            throw ValidationError("claim " + std::to_string(generated.id) + ": trace no longer applies to its title");
        }
        return claims[refutes ? 1 : 0];
    }
    throw ValidationError("claim " + std::to_string(generated.id) + ": unknown generation rule '" + rule + "'");
}

std::vector<int> mine_hard_negatives(const Claim& claim, const InvertedIndex& index, int pool_size, int sample_size,
                                     std::uint64_t seed)
{
    if (sample_size < 0 || pool_size < sample_size) {
        throw ValidationError("mine_hard_negatives needs 0 <= sample <= pool");
    }
    const auto ranked = retrieve(index, claim, std::max(pool_size, 1));
    std::vector<int> eligible;
    for (const auto& e : ranked.entries) {
        if (claim.evidence.count(e.doc_id) == 0) {
            eligible.push_back(e.doc_id);
        }
    }
    if (static_cast<int>(eligible.size()) <= sample_size) {
        return eligible;
    }
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(claim.id)};
    std::mt19937_64 rng(seq);
    std::vector<int> out;
    std::sample(eligible.begin(), eligible.end(), std::back_inserter(out), sample_size, rng);
    return out;
}

void save_negatives(const std::map<int, std::vector<int>>& negatives, const std::string& path)
{
    auto out = open_output(path);
    for (const auto& [id, docs] : negatives) {
        out << ordered_json{{"id", id}, {"doc_ids", docs}}.dump() << '\n';
    }
    if (!out) {
        throw IoError("write failed: " + path);
    }
}

std::map<int, std::vector<int>> load_negatives(const std::string& path)
{
    auto in = open_input(path);
    std::map<int, std::vector<int>> out;
    for_each_line(in, [&](const std::string& line, std::size_t number) {
        try {
            const auto j = ordered_json::parse(line);
            const int id = j.at("id").get<int>();
            if (!out.emplace(id, j.at("doc_ids").get<std::vector<int>>()).second) {
                throw ParseError(path, number, "duplicate claim id " + std::to_string(id));
            }
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path, number, e.what());
        }
    });
    return out;
}

}  // namespace claimcheck

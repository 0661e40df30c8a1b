#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

namespace claimcheck {

/// Relation of an abstract to a claim. Numeric values index the label
/// probability triple produced by the verifier.
enum class Label : std::uint8_t { Supports = 0, Refutes = 1, Nei = 2 };

inline constexpr int kNumLabels = 3;

/// Where a claim came from; weak sources are filtered or down-weighted in training.
enum class Provenance : std::uint8_t { Human, WeakIco, WeakTitle };

std::string_view label_name(Label label);
/// Wire spelling used in claims/predictions files ("SUPPORT"/"CONTRADICT").
std::string_view label_wire_name(Label label);
/// Accepts the wire spellings plus SUPPORTS/REFUTES/NEI/NOT_ENOUGH_INFO.
std::optional<Label> parse_label(std::string_view text);

std::string_view provenance_name(Provenance p);
std::optional<Provenance> parse_provenance(std::string_view text);

struct Document {
    int doc_id = 0;
    std::string title;
    std::vector<std::string> sentences;

    /// Abstracts without sentences are accepted at load and rejected by the verifier.
    bool degenerate() const noexcept { return sentences.empty(); }
    /// Title followed by every sentence, space separated.
    std::string full_text() const;

    friend bool operator==(const Document&, const Document&) = default;
};

/// Documents in file order with O(1) lookup by doc_id.
class Corpus {
  public:
    Corpus() = default;
    explicit Corpus(std::vector<Document> documents);

    /// Throws ValidationError on duplicate doc_id.
    void add(Document doc);

    const Document* find(int doc_id) const;
    /// Throws ValidationError when the id is unknown.
    const Document& at(int doc_id) const;
    bool contains(int doc_id) const { return m_index.count(doc_id) != 0; }

    std::size_t size() const noexcept { return m_docs.size(); }
    bool empty() const noexcept { return m_docs.empty(); }
    const std::vector<Document>& documents() const noexcept { return m_docs; }
    auto begin() const { return m_docs.begin(); }
    auto end() const { return m_docs.end(); }

    friend bool operator==(const Corpus& a, const Corpus& b) { return a.m_docs == b.m_docs; }

  private:
    std::vector<Document> m_docs;
    std::unordered_map<int, std::size_t> m_index;
};

struct Rationale {
    Label label = Label::Supports;
    /// Strictly increasing, non-empty.
    std::vector<int> sentences;

    friend bool operator==(const Rationale&, const Rationale&) = default;
};

/// Gold evidence for one (claim, document) pair. An empty rationale list
/// means the pair carries a label but no rationale annotation (ABSENT).
struct DocEvidence {
    Label label = Label::Supports;
    std::vector<Rationale> rationales;

    bool has_rationales() const noexcept { return !rationales.empty(); }
    /// Sorted union of all rationale sentence indices.
    std::vector<int> sentence_union() const;

    friend bool operator==(const DocEvidence&, const DocEvidence&) = default;
};

struct Claim {
    int id = 0;
    std::string text;
    /// A doc_id absent from this map is NEI for the claim.
    std::map<int, DocEvidence> evidence;
    std::vector<int> cited_doc_ids;
    Provenance provenance = Provenance::Human;
    /// Replay record for generated claims; null for human claims.
    nlohmann::ordered_json trace;

    /// Gold label for a document: the evidence label, or NEI.
    Label gold_label(int doc_id) const;

    friend bool operator==(const Claim&, const Claim&) = default;
};

struct Prediction {
    int claim_id = 0;
    int doc_id = 0;
    Label label = Label::Nei;
    /// Sorted, unique; empty iff label is NEI.
    std::vector<int> rationale;

    friend bool operator==(const Prediction&, const Prediction&) = default;
};

// Corpus I/O. `source` names the stream in error messages.
Corpus parse_corpus(std::istream& in, const std::string& source = "<corpus>");
void write_corpus(std::ostream& out, const Corpus& corpus);
Corpus load_corpus(const std::string& path);
void save_corpus(const Corpus& corpus, const std::string& path);

// Claims I/O. Parsing checks per-record structure only; cross-references
// against a corpus are checked by validate_claims.
std::vector<Claim> parse_claims(std::istream& in, const std::string& source = "<claims>");
void write_claims(std::ostream& out, const std::vector<Claim>& claims);
std::vector<Claim> read_claims(const std::string& path);
/// Throws ValidationError naming the claim for dangling doc ids or out-of-range sentences.
void validate_claims(const std::vector<Claim>& claims, const Corpus& corpus);
std::vector<Claim> load_claims(const std::string& path, const Corpus& corpus);
void save_claims(const std::vector<Claim>& claims, const std::string& path);

// Predictions I/O. NEI predictions are represented by absence, so only
// non-NEI predictions come back from parsing. Every claim id present in the
// written list gets a line, even if all its predictions are NEI.
std::vector<Prediction> parse_predictions(std::istream& in, const std::string& source = "<predictions>");
void write_predictions(std::ostream& out, const std::vector<Prediction>& preds);
std::vector<Prediction> read_predictions(const std::string& path);
void save_predictions(const std::vector<Prediction>& preds, const std::string& path);

/// Returns one human-readable line per violated invariant; empty when valid.
std::vector<std::string> validate_predictions(const std::vector<Prediction>& preds,
                                              const Corpus& corpus,
                                              const std::vector<Claim>& claims);

/// Claims keyed by id. Throws ValidationError on duplicates.
std::map<int, const Claim*> index_claims(const std::vector<Claim>& claims);

}  // namespace claimcheck

// Regenerates the files under fixtures/. Output is a pure function of the
// constants below, so rerunning reproduces the committed fixtures exactly.

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <random>
#include <set>

#include "claimcheck/data_model.hpp"
#include "claimcheck/evaluation.hpp"
#include "claimcheck/io.hpp"
#include "claimcheck/weak_supervision.hpp"

using namespace claimcheck;
namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

template <typename T>
const T& pick(std::mt19937_64& rng, const std::vector<T>& xs)
{
    return xs[std::uniform_int_distribution<std::size_t>(0, xs.size() - 1)(rng)];
}

int uniform(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

// ---------------------------------------------------------------------------
// mini: a small readable corpus with human-style claims

struct Topic {
    std::string intervention;
    std::string outcome;
    std::string population;
};

const std::vector<Topic> kTopics = {
    {"vitamin D supplementation", "fracture risk", "older adults"},
    {"statin therapy", "LDL cholesterol", "patients with diabetes"},
    {"aerobic exercise", "depressive symptoms", "adolescents"},
    {"zinc lozenges", "cold duration", "healthy volunteers"},
    {"metformin", "HbA1c levels", "overweight adults"},
    {"aspirin", "colorectal adenoma recurrence", "high-risk patients"},
    {"omega-3 fatty acids", "triglyceride levels", "postmenopausal women"},
    {"cognitive behavioural therapy", "insomnia severity", "veterans"},
    {"probiotic yoghurt", "antibiotic-associated diarrhoea", "children"},
    {"intermittent fasting", "body weight", "obese adults"},
    {"hydroxychloroquine", "viral clearance", "hospitalised patients"},
    {"iron supplementation", "anaemia prevalence", "pregnant women"},
    {"mindfulness training", "perceived stress", "nurses"},
    {"low-dose CT screening", "lung cancer mortality", "heavy smokers"},
    {"BCG vaccination", "tuberculosis incidence", "infants"},
    {"bariatric surgery", "diabetes remission", "severely obese patients"},
    {"folic acid", "neural tube defects", "women of reproductive age"},
    {"melatonin", "sleep onset latency", "shift workers"},
    {"HPV vaccination", "cervical lesions", "young women"},
    {"tranexamic acid", "postpartum haemorrhage deaths", "women giving birth"},
};

Document mini_document(int i)
{
    const auto& t = kTopics[static_cast<std::size_t>(i)];
    Document d;
    d.doc_id = 1000 + i * 37;
    d.title = "Effect of " + t.intervention + " on " + t.outcome + " in " + t.population;
    const bool lowers = i % 3 != 1;
    const bool null_result = i % 5 == 4;
    d.sentences = {
        "BACKGROUND: The role of " + t.intervention + " in " + t.population + " remains uncertain.",
        "METHODS: We randomised " + std::to_string(120 + 17 * i) + " " + t.population + " to " + t.intervention +
            " or placebo for 12 months.",
        "The primary endpoint was " + t.outcome + ".",
    };
    if (null_result) {
        d.sentences.push_back("RESULTS: " + t.intervention + " did not change " + t.outcome + " (p = 0.41).");
    } else {
        d.sentences.push_back("RESULTS: " + t.intervention + (lowers ? " reduced " : " increased ") + t.outcome +
                              " by " + std::to_string(10 + i) + "% relative to placebo.");
    }
    d.sentences.push_back("Adverse events were similar between groups.");
    if (i % 2 == 0) {
        d.sentences.push_back("The effect persisted at " + std::to_string(18 + i) + " months of follow-up.");
    }
    d.sentences.push_back("CONCLUSION: These findings inform the use of " + t.intervention + " in " + t.population +
                          ".");
    return d;
}

void make_mini(const fs::path& dir)
{
    fs::create_directories(dir);
    Corpus corpus;
    for (int i = 0; i < 20; ++i) {
        corpus.add(mini_document(i));
    }
    save_corpus(corpus, (dir / "corpus.jsonl").string());

    std::mt19937_64 rng(2021);
    std::vector<Claim> claims;
    for (int i = 0; i < 20; ++i) {
        const auto& t = kTopics[static_cast<std::size_t>(i)];
        const auto& doc = corpus.documents()[static_cast<std::size_t>(i)];
        const bool lowers = i % 3 != 1;
        const bool null_result = i % 5 == 4;
        Claim c;
        c.id = 1 + i;
        const bool says_lowers = i % 4 != 3;
        c.text = t.intervention + (says_lowers ? " reduces " : " increases ") + t.outcome + " in " + t.population;
        int other = (i + 1 + uniform(rng, 0, 17)) % 20;
        c.cited_doc_ids = {doc.doc_id, corpus.documents()[static_cast<std::size_t>(other)].doc_id};
        std::sort(c.cited_doc_ids.begin(), c.cited_doc_ids.end());
        if (!null_result) {
            DocEvidence ev;
            ev.label = says_lowers == lowers ? Label::Supports : Label::Refutes;
            if (i % 2 == 0) {
                ev.rationales.push_back(Rationale{ev.label, {3}});
                if (i % 4 == 0) {
                    ev.rationales.push_back(Rationale{ev.label, {2, 5}});
                }
            } else {
                ev.rationales.push_back(Rationale{ev.label, {1, 3}});
            }
            c.evidence.emplace(doc.doc_id, ev);
        }
        claims.push_back(std::move(c));
    }
    save_claims(claims, (dir / "claims.jsonl").string());

    // a training config for a deliberately small model, used by the pipeline checks
    write_file((dir / "train.cfg").string(),
               "# tiny seeded model for pipeline smoke runs\n"
               "name = mini\n"
               "dataset = claims.jsonl corpus.jsonl\n"
               "epochs = 1\n"
               "batch_size = 4\n"
               "learning_rate = 0.001\n"
               "seed = 7\n"
               "max_length = 128\n"
               "vocab_size = 512\n"
               "hidden = 16\n"
               "layers = 1\n"
               "ffn = 32\n"
               "window = 8\n"
               "relative_radius = 8\n"
               "head_hidden = 16\n");
}

// ---------------------------------------------------------------------------
// synthetic: labels and rationales are fixed by marker words in the abstract

const std::vector<std::string> kSyllables = {"ka", "lo", "mi", "ne", "ru", "ta", "vo", "zi", "pe", "sha",
                                             "dor", "gen", "lix", "mab", "tor", "vel", "quin", "sol"};

std::string pseudo_word(std::mt19937_64& rng, int syllables)
{
    std::string w;
    for (int i = 0; i < syllables; ++i) {
        w += pick(rng, kSyllables);
    }
    return w;
}

constexpr const char* kSupportMarker = "confirmed";
constexpr const char* kRefuteMarker = "contradicted";

void make_synthetic(const fs::path& dir)
{
    fs::create_directories(dir);
    std::mt19937_64 rng(60500);

    std::set<std::string> used = {kSupportMarker, kRefuteMarker};
    auto fresh = [&](int syl) {
        for (;;) {
            auto w = pseudo_word(rng, syl);
            if (used.insert(w).second) {
                return w;
            }
        }
    };
    std::vector<std::string> filler;
    for (int i = 0; i < 150; ++i) {
        filler.push_back(fresh(2));
    }
    std::vector<std::string> entities;
    std::vector<std::string> outcomes;
    for (int i = 0; i < 60; ++i) {
        entities.push_back(fresh(3));
        outcomes.push_back(fresh(3));
    }

    auto sentence = [&](int lo, int hi) {
        std::string s;
        for (int i = 0, n = uniform(rng, lo, hi); i < n; ++i) {
            s += (i ? " " : "") + pick(rng, filler);
        }
        return s;
    };

    // docs 0-19 carry the support marker, 20-39 the refute marker, 40-59 none
    Corpus corpus;
    std::vector<std::vector<int>> marker_sentences(60);
    std::vector<Label> doc_label(60);
    for (int i = 0; i < 60; ++i) {
        Document d;
        d.doc_id = 5000 + i;
        d.title = entities[static_cast<std::size_t>(i)] + " and " + outcomes[static_cast<std::size_t>(i)] + " " +
                  sentence(1, 3);
        const int n = uniform(rng, 4, 7);
        const int kind = i / 20;
        doc_label[static_cast<std::size_t>(i)] = kind == 0 ? Label::Supports : kind == 1 ? Label::Refutes : Label::Nei;
        std::set<int> marked;
        if (kind < 2) {
            marked.insert(uniform(rng, 1, n - 1));
            if (uniform(rng, 0, 2) == 0) {
                marked.insert(uniform(rng, 1, n - 1));
            }
        }
        for (int s = 0; s < n; ++s) {
            std::string text = sentence(5, 9);
            if (s == 0) {
                text = entities[static_cast<std::size_t>(i)] + " " + text;
            }
            if (marked.count(s)) {
                text += " " + outcomes[static_cast<std::size_t>(i)] + " " + (kind == 0 ? kSupportMarker : kRefuteMarker);
            }
            d.sentences.push_back(text + ".");
        }
        marker_sentences[static_cast<std::size_t>(i)].assign(marked.begin(), marked.end());
        corpus.add(std::move(d));
    }
    save_corpus(corpus, (dir / "corpus.jsonl").string());

    std::vector<Claim> claims;
    for (int c = 0; c < 500; ++c) {
        Claim claim;
        claim.id = 1 + c;
        const int target = c % 3 == 2 ? 40 + uniform(rng, 0, 19) : uniform(rng, 0, 39);
        claim.text = entities[static_cast<std::size_t>(target)] + " affects " +
                     outcomes[static_cast<std::size_t>(target)] + " " + sentence(1, 3);
        std::set<int> cited = {target};
        while (static_cast<int>(cited.size()) < 1 + uniform(rng, 1, 2)) {
            cited.insert(40 + uniform(rng, 0, 19));
        }
        for (int d : cited) {
            claim.cited_doc_ids.push_back(5000 + d);
            if (doc_label[static_cast<std::size_t>(d)] != Label::Nei) {
                DocEvidence ev;
                ev.label = doc_label[static_cast<std::size_t>(d)];
                ev.rationales.push_back(Rationale{ev.label, marker_sentences[static_cast<std::size_t>(d)]});
                claim.evidence.emplace(5000 + d, ev);
            }
        }
        claims.push_back(std::move(claim));
    }
    const std::vector<Claim> train(claims.begin(), claims.begin() + 400);
    const std::vector<Claim> dev(claims.begin() + 400, claims.end());
    save_claims(train, (dir / "train.jsonl").string());
    save_claims(dev, (dir / "dev.jsonl").string());

    write_file((dir / "train.cfg").string(),
               "# toy model on the keyword-determined synthetic task\n"
               "name = synthetic\n"
               "dataset = train.jsonl corpus.jsonl\n"
               "dev = dev.jsonl corpus.jsonl\n"
               "epochs = 20\n"
               "batch_size = 8\n"
               "learning_rate = 0.001\n"
               "lambda_rationale = 15\n"
               "seed = 13\n"
               "max_length = 128\n"
               "vocab_size = 4096\n"
               "hidden = 64\n"
               "layers = 2\n"
               "ffn = 128\n"
               "window = 16\n"
               "head_hidden = 64\n"
               "patience = 5\n");

    // stage-1 style mix: half the claims keep rationales, half are label-only
    std::vector<Claim> with_rationales;
    std::vector<Claim> label_only;
    for (int c = 0; c < 40; ++c) {
        const int d = c % 40;
        Claim claim;
        claim.id = 9000 + c;
        claim.text = entities[static_cast<std::size_t>(d)] + " affects " + outcomes[static_cast<std::size_t>(d)];
        claim.cited_doc_ids = {5000 + d};
        DocEvidence ev;
        ev.label = doc_label[static_cast<std::size_t>(d)];
        if (c % 2 == 0) {
            claim.provenance = Provenance::WeakIco;
            ev.rationales.push_back(Rationale{ev.label, marker_sentences[static_cast<std::size_t>(d)]});
            claim.evidence.emplace(5000 + d, ev);
            with_rationales.push_back(std::move(claim));
        } else {
            claim.provenance = Provenance::WeakTitle;
            claim.evidence.emplace(5000 + d, ev);
            label_only.push_back(std::move(claim));
        }
    }
    save_claims(with_rationales, (dir / "stage1_rationales.jsonl").string());
    save_claims(label_only, (dir / "stage1_label_only.jsonl").string());
    write_file((dir / "stage1.cfg").string(),
               "# 50/50 mix of rationale-bearing and label-only claims\n"
               "name = stage1-mix\n"
               "dataset = stage1_rationales.jsonl corpus.jsonl\n"
               "dataset = stage1_label_only.jsonl corpus.jsonl\n"
               "epochs = 2\n"
               "batch_size = 2\n"
               "learning_rate = 0.001\n"
               "lambda_rationale = 15\n"
               "seed = 3\n"
               "max_length = 128\n"
               "vocab_size = 1024\n"
               "hidden = 16\n"
               "layers = 1\n"
               "ffn = 32\n"
               "window = 8\n"
               "relative_radius = 8\n"
               "head_hidden = 16\n");
}

// ---------------------------------------------------------------------------
// weak: claim-like titles and ICO prompts

void make_weak(const fs::path& dir)
{
    fs::create_directories(dir);
    const std::vector<std::string> titles = {
        "Vitamin B6 supplementation increases immune responses in critically ill patients.",
        "Early mobilisation does not improve survival after hip fracture.",
        "Statins do not reduce dementia risk in the elderly.",
        "Smoking cessation is not associated with weight gain in adolescents.",
        "Caffeine intake cannot explain the increase in atrial fibrillation.",
        "Methods for measuring serum ferritin",
        "Is coffee good for the liver?",
        "Metformin reduces cancer incidence in type 2 diabetes.",
        "A review of paediatric asthma guidelines",
        "Physical activity does not prevent cognitive decline in older adults.",
        "Folate levels are not linked to depression severity.",
        "Intensive blood pressure control lowers stroke risk.",
    };
    Corpus corpus;
    for (std::size_t i = 0; i < titles.size(); ++i) {
        Document d;
        d.doc_id = 7000 + static_cast<int>(i);
        d.title = titles[i];
        d.sentences = {"Background sentence for study " + std::to_string(i) + ".",
                       "We enrolled participants and followed them for two years.",
                       "The intervention changed the primary outcome significantly.",
                       "Further work is needed."};
        corpus.add(std::move(d));
    }
    save_corpus(corpus, (dir / "corpus.jsonl").string());

    std::vector<IcoPrompt> prompts = {
        {7000, "vitamin D", "placebo", "fracture risk", IcoDirection::SigDecreased, std::vector<int>{2}},
        {7001, "early mobilisation", "usual care", "length of stay", IcoDirection::SigDecreased, std::nullopt},
        {7002, "statin therapy", "", "LDL cholesterol", IcoDirection::SigDecreased, std::vector<int>{2, 3}},
        {7003, "nicotine patches", "counselling alone", "quit rates", IcoDirection::SigIncreased, std::vector<int>{2}},
        {7004, "caffeine", "decaffeinated coffee", "heart rate", IcoDirection::SigIncreased, std::nullopt},
        {7005, "iron sucrose", "oral iron", "serum ferritin", IcoDirection::NoSigDiff, std::vector<int>{2}},
        {7007, "metformin", "sulfonylureas", "cancer incidence", IcoDirection::SigDecreased, std::vector<int>{2}},
        {7009, "aerobic training", "stretching", "memory scores", IcoDirection::SigIncreased, std::nullopt},
        {7011, "intensive control", "standard control", "stroke risk", IcoDirection::SigDecreased,
         std::vector<int>{1, 2}},
        {7010, "folate", "", "depression scores", IcoDirection::NoSigDiff, std::nullopt},
    };
    auto out = open_output((dir / "ico_prompts.jsonl").string());
    for (const auto& p : prompts) {
        out << ico_prompt_json(p).dump() << '\n';
    }
}

// ---------------------------------------------------------------------------
// category: 128 annotated evidence pairs with predictions from a mock system

void make_category(const fs::path& dir)
{
    fs::create_directories(dir);
    std::mt19937_64 rng(128);
    Corpus corpus;
    for (int d = 0; d < 64; ++d) {
        Document doc;
        doc.doc_id = 3000 + d;
        doc.title = "Study " + std::to_string(d);
        for (int s = 0; s < 6; ++s) {
            doc.sentences.push_back("Sentence " + std::to_string(s) + " of study " + std::to_string(d) + ".");
        }
        corpus.add(std::move(doc));
    }
    save_corpus(corpus, (dir / "corpus.jsonl").string());

    // 128 pairs: 64 claims x 2 evidence docs each
    std::vector<Claim> gold;
    std::vector<std::pair<int, int>> pairs;
    for (int c = 0; c < 64; ++c) {
        Claim claim;
        claim.id = 1 + c;
        claim.text = "Claim number " + std::to_string(c) + " about a finding.";
        for (int k = 0; k < 2; ++k) {
            const int doc_id = 3000 + (c + 17 * k) % 64;
            DocEvidence ev;
            ev.label = uniform(rng, 0, 2) == 0 ? Label::Refutes : Label::Supports;
            const int a = uniform(rng, 0, 4);
            ev.rationales.push_back(Rationale{ev.label, {a}});
            if (uniform(rng, 0, 2) == 0) {
                ev.rationales.push_back(Rationale{ev.label, {a + 1 > 5 ? 0 : a + 1, 5}});
                std::sort(ev.rationales.back().sentences.begin(), ev.rationales.back().sentences.end());
                auto& s = ev.rationales.back().sentences;
                s.erase(std::unique(s.begin(), s.end()), s.end());
            }
            claim.evidence.emplace(doc_id, ev);
            claim.cited_doc_ids.push_back(doc_id);
            pairs.emplace_back(claim.id, doc_id);
        }
        std::sort(claim.cited_doc_ids.begin(), claim.cited_doc_ids.end());
        gold.push_back(std::move(claim));
    }
    save_claims(gold, (dir / "gold.jsonl").string());

    // exactly 43 context-free pairs and 22 background / 22 numerical pairs
    std::vector<std::size_t> idx(pairs.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    std::set<std::size_t> no_context(idx.begin(), idx.begin() + 43);
    std::shuffle(idx.begin(), idx.end(), rng);
    std::set<std::size_t> background(idx.begin(), idx.begin() + 22);
    std::shuffle(idx.begin(), idx.end(), rng);
    std::set<std::size_t> numerical(idx.begin(), idx.begin() + 22);
    auto ann = open_output((dir / "annotations.jsonl").string());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        ann << ordered_json{{"claim_id", pairs[i].first},
                            {"doc_id", pairs[i].second},
                            {"context", no_context.count(i) == 0},
                            {"background", background.count(i) != 0},
                            {"numerical", numerical.count(i) != 0}}
                   .dump()
            << '\n';
    }

    // mock system: mostly right, with label flips, partial rationales and misses
    std::vector<Prediction> preds;
    for (const auto& c : gold) {
        for (const auto& [doc_id, ev] : c.evidence) {
            Prediction p{c.id, doc_id, ev.label, ev.rationales.front().sentences};
            const int roll = uniform(rng, 0, 9);
            if (roll == 0) {
                continue;  // missed pair
            }
            if (roll == 1) {
                p.label = p.label == Label::Supports ? Label::Refutes : Label::Supports;
            } else if (roll == 2) {
                p.rationale = {(p.rationale.front() + 2) % 6};
            } else if (roll == 3) {
                p.rationale.push_back(p.rationale.back() == 5 ? 4 : 5);
                std::sort(p.rationale.begin(), p.rationale.end());
                p.rationale.erase(std::unique(p.rationale.begin(), p.rationale.end()), p.rationale.end());
            }
            preds.push_back(p);
        }
        // an extra false positive now and then
        if (uniform(rng, 0, 4) == 0) {
            preds.push_back(Prediction{c.id, 3000 + (c.id * 5) % 64, Label::Supports, {0}});
        }
    }
    std::sort(preds.begin(), preds.end(), [](const Prediction& a, const Prediction& b) {
        return std::tie(a.claim_id, a.doc_id) < std::tie(b.claim_id, b.doc_id);
    });
    preds.erase(std::unique(preds.begin(), preds.end(),
                            [](const Prediction& a, const Prediction& b) {
                                return a.claim_id == b.claim_id && a.doc_id == b.doc_id;
                            }),
                preds.end());
    save_predictions(preds, (dir / "predictions.jsonl").string());
}

}  // namespace

int main(int argc, char** argv)
{
    const fs::path root = argc > 1 ? argv[1] : "fixtures";
    try {
        make_mini(root / "mini");
        make_synthetic(root / "synthetic");
        make_weak(root / "weak");
        make_category(root / "category");
    } catch (const std::exception& e) {
        std::cerr << "make_fixtures: " << e.what() << '\n';
        return 1;
    }
    std::cerr << "fixtures written to " << root << '\n';
    return 0;
}

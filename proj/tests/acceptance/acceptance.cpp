// Acceptance runner: one PASS/FAIL line per criterion with its runtime.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "bm25_oracle.hpp"
#include "brute_force_scorer.hpp"
#include "claimcheck/analyzer.hpp"
#include "claimcheck/cli.hpp"
#include "claimcheck/evaluation.hpp"
#include "claimcheck/io.hpp"
#include "claimcheck/retrieval.hpp"
#include "claimcheck/training.hpp"
#include "claimcheck/weak_supervision.hpp"
#include "encoding_checks.hpp"
#include "gradient_check.hpp"
#include "json.hpp"
#include "reference_scores.hpp"
#include "test_support.hpp"
#include "weak_checks.hpp"

using namespace claimcheck;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kFixtures = CLAIMCHECK_FIXTURES;

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int number;
    std::string name;
    double limit_seconds;
    std::function<Outcome()> run;
};

fs::path scratch(const std::string& name)
{
    auto dir = fs::temp_directory_path() / ("claimcheck_acceptance_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

int cli(std::vector<std::string> args)
{
    args.insert(args.begin(), "claimcheck");
    return cli::dispatch(args);
}

// 1 -------------------------------------------------------------------------
Outcome metric_oracle()
{
    constexpr int kInstances = 1500;
    std::mt19937_64 rng(2024);
    std::bernoulli_distribution use_cap(0.2);
    std::uniform_int_distribution<int> cap(1, 4);
    int mismatches = 0;
    for (int i = 0; i < kInstances; ++i) {
        const auto inst = testing::random_eval_instance(rng, 10, 5, 8);
        ScoringOptions opts;
        if (use_cap(rng)) {
            opts.max_rationale_sentences = cap(rng);
        }
        const auto lib = evaluate_all(inst.preds, inst.gold, opts);
        const auto ref = testing::brute_all(inst.preds, inst.gold, opts.max_rationale_sentences);
        for (std::size_t v = 0; v < lib.size(); ++v) {
            mismatches += testing::agrees(lib[v], ref[v]) ? 0 : 1;
        }
    }
    return {mismatches == 0, std::to_string(kInstances) + " instances x 4 variants, " + std::to_string(mismatches) +
                                 " mismatches"};
}

// 2 -------------------------------------------------------------------------
Outcome f1_consistency()
{
    int checked = 0, bad = 0;
    double worst = 0.0;
    std::string worst_cell;
    for (const auto& row : testing::kReferenceRows) {
        for (std::size_t v = 0; v < row.cells.size(); ++v) {
            const auto& c = row.cells[v];
            const double err = std::abs(f1(c.p, c.r) - c.f1);
            ++checked;
            if (err > testing::kRoundingSlack) {
                ++bad;
            }
            if (err > worst) {
                worst = err;
                worst_cell = std::string(row.name) + "/" + std::string(variant_key(kAllVariants[v]));
            }
        }
    }
    const bool example = std::abs(f1(90.1, 78.6) - 84.0) <= testing::kRoundingSlack;
    std::ostringstream d;
    d << checked << " triples, " << bad << " outside +-0.15, worst " << worst << " (" << worst_cell
      << "); f1(90.1, 78.6) = " << f1(90.1, 78.6);
    return {bad == 0 && example && checked >= 28, d.str()};
}

// 3 -------------------------------------------------------------------------
Outcome gradients()
{
    const auto report = testing::run_gradient_check(50, 7);
    std::size_t nonzero_head = 0;
    std::mt19937_64 rng(9);
    for (int i = 0; i < 50; ++i) {
        VerifierModel model(testing::tiny_config(500 + static_cast<std::uint64_t>(i)));
        const auto doc = testing::random_document(rng, i, 5, 5);
        const auto in = model.assemble(testing::random_words(rng, 1, 5), doc);
        const double lambda = std::uniform_real_distribution<double>(0.0, 100.0)(rng);
        std::vector<double> grad(model.parameters().size(), 0.0);
        model.loss_and_gradient(in, static_cast<Label>(i % 3), std::nullopt, lambda, grad);
        const auto [begin, end] = model.rationale_head_range();
        for (std::size_t p = begin; p < end; ++p) {
            nonzero_head += grad[p] != 0.0 ? 1 : 0;
        }
    }
    std::ostringstream d;
    d << "50 instances, " << report.checked << " parameters checked, " << report.failures
      << " beyond 1e-4 relative (worst " << report.worst_relative << " at " << report.worst_parameter << "); "
      << nonzero_head << " nonzero rationale-head entries with ABSENT targets";
    return {report.failures == 0 && report.checked > 0 && nonzero_head == 0, d.str()};
}

// 4 -------------------------------------------------------------------------
Outcome encoding()
{
    std::mt19937_64 rng(404);
    auto cfg = testing::tiny_config(44);
    cfg.encoder.window = 2;
    cfg.encoder.max_length = 48;
    const VerifierModel model(cfg);
    int grammar = 0;
    std::size_t mask = 0, truncated = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const auto doc = testing::random_document(rng, trial, 8, 7);
        const auto claim = testing::random_words(rng, 1, 6);
        const auto in = model.assemble(claim, doc);
        grammar += testing::grammar_violations(in, model.tokenizer(), claim, doc);
        mask += testing::mask_violations(model, in);
        truncated += in.retained_sentences() < doc.sentences.size() ? 1 : 0;
    }
    std::ostringstream d;
    d << "200 pairs (" << truncated << " truncated), grammar/global-count violations " << grammar
      << ", mask violations " << mask;
    return {grammar == 0 && mask == 0, d.str()};
}

// 5 -------------------------------------------------------------------------
Outcome bm25()
{
    std::mt19937_64 rng(55);
    double worst = 0.0;
    std::size_t scored = 0;
    for (int trial = 0; trial < 30; ++trial) {
        const auto corpus = testing::random_bm25_corpus(rng, 50);
        const auto index = build_index(corpus);
        const testing::Bm25Oracle oracle(corpus, 1.2, 0.75);
        for (int q = 0; q < 4; ++q) {
            const auto query = analyze(testing::random_words(rng, 1, 6, 45));
            for (const auto& d : corpus) {
                const double expected = oracle.score(query, d.doc_id);
                const double got = bm25_score(index, query, d.doc_id);
                const double rel = std::abs(got - expected) / std::max(std::abs(expected), 1e-300);
                if (got != expected) {
                    worst = std::max(worst, rel);
                }
                ++scored;
            }
        }
    }
    int rank_mismatch = 0;
    std::uniform_int_distribution<int> kpick(1, 50);
    for (int q = 0; q < 100; ++q) {
        const auto corpus = testing::random_bm25_corpus(rng, 50);
        const auto index = build_index(corpus);
        const testing::Bm25Oracle oracle(corpus, 1.2, 0.75);
        Claim c;
        c.id = q;
        c.text = testing::random_words(rng, 1, 6, 45);
        const auto k = kpick(rng);
        const auto got = retrieve(index, c, k);
        const auto expected = oracle.ranking(analyze(c.text), static_cast<std::size_t>(k));
        bool same = got.entries.size() == expected.size();
        for (std::size_t i = 0; same && i < expected.size(); ++i) {
            same = got.entries[i].doc_id == expected[i].first &&
                   std::abs(got.entries[i].score - expected[i].second) <= 1e-9 * std::max(1.0, expected[i].second);
        }
        rank_mismatch += same ? 0 : 1;
    }
    std::ostringstream d;
    d << scored << " scores, worst relative error " << worst << "; " << rank_mismatch
      << "/100 rankings differ from exhaustive sort";
    return {worst <= 1e-9 && rank_mismatch == 0, d.str()};
}

// 6 -------------------------------------------------------------------------
Outcome end_to_end()
{
    const auto dir = scratch("e2e");
    const auto ckpt = (dir / "synthetic.ckpt").string();
    const auto syn = kFixtures + "/synthetic/";
    if (cli({"train", "--config", syn + "train.cfg", "--out", ckpt}) != 0) {
        return {false, "train failed"};
    }
    if (cli({"predict", "--model", ckpt, "--corpus", syn + "corpus.jsonl", "--claims", syn + "dev.jsonl", "--oracle",
             "--out", (dir / "dev_preds.jsonl").string()}) != 0 ||
        cli({"evaluate", "--gold", syn + "dev.jsonl", "--corpus", syn + "corpus.jsonl", "--preds",
             (dir / "dev_preds.jsonl").string(), "--out", (dir / "dev_eval.json").string()}) != 0) {
        return {false, "predict/evaluate failed"};
    }
    const auto eval = json::parse(read_file((dir / "dev_eval.json").string()));
    std::map<std::string, double> f1s;
    for (const auto& v : eval.at("variants")) {
        f1s[v.at("variant").get<std::string>()] = v.at("f1").get<double>();
    }
    const auto meta = load_checkpoint(ckpt).meta;
    const double label = f1s.at("abstract_label_only");
    const double selection = f1s.at("sentence_selection_only");
    std::ostringstream d;
    d << "best epoch " << meta.at("epoch") << "; dev abstract label-only F1 " << label
      << " (>= 0.95), sentence selection-only F1 " << selection << " (>= 0.90)";
    fs::remove_all(dir);
    return {label >= 0.95 && selection >= 0.90 && meta.at("epoch").get<int>() <= 20, d.str()};
}

// 7 -------------------------------------------------------------------------
Outcome weak_supervision()
{
    std::ostringstream d;
    bool ok = true;

    const auto prompts = load_ico_prompts(kFixtures + "/weak/ico_prompts.jsonl");
    int pairs = 0, skipped = 0, bad_pairs = 0;
    for (const auto& p : prompts) {
        const auto claims = ico_to_claims(p, 1);
        if (p.direction == IcoDirection::NoSigDiff) {
            // outside the template's precondition: nothing is generated
            skipped += 1;
            bad_pairs += claims.empty() ? 0 : 1;
            continue;
        }
        const bool good = claims.size() == 2 && claims[0].evidence.at(p.doc_id).label == Label::Supports &&
                          claims[1].evidence.at(p.doc_id).label == Label::Refutes &&
                          testing::differ_by_one_verb(claims[0].text, claims[1].text);
        pairs += 1;
        bad_pairs += good ? 0 : 1;
    }
    ok = ok && bad_pairs == 0 && pairs > 0;
    d << pairs << " ICO prompts -> one verb-flipped pair each (" << skipped << " NO_SIG_DIFF skipped, " << bad_pairs
      << " bad); ";

    const auto corpus = load_corpus(kFixtures + "/weak/corpus.jsonl");
    int does_not = 0, rewrite_ok = 0;
    for (const auto& doc : corpus) {
        const auto pos = doc.title.find("does not");
        if (pos == std::string::npos) {
            continue;
        }
        ++does_not;
        auto expected = doc.title;
        expected.replace(pos, 8, "does");
        const auto claims = title_to_claims(doc, 1);
        if (claims.size() == 2 && claims[0].text == doc.title && claims[1].text == expected &&
            claims[1].evidence.at(doc.doc_id).label == Label::Refutes) {
            ++rewrite_ok;
        }
    }
    ok = ok && does_not > 0 && rewrite_ok == does_not;
    d << rewrite_ok << "/" << does_not << " \"does not\" titles rewritten exactly; ";

    const auto syn_corpus = load_corpus(kFixtures + "/synthetic/corpus.jsonl");
    const auto claims = load_claims(kFixtures + "/synthetic/train.jsonl", syn_corpus);
    const auto index = build_index(syn_corpus);
    int gold_hits = 0, nondeterministic = 0, seed_sensitive = 0;
    for (const auto& c : claims) {
        const auto a = mine_hard_negatives(c, index, kDefaultPool, kDefaultSample, 17);
        const auto b = mine_hard_negatives(c, index, kDefaultPool, kDefaultSample, 17);
        const auto other = mine_hard_negatives(c, index, kDefaultPool, kDefaultSample, 18);
        nondeterministic += a == b ? 0 : 1;
        seed_sensitive += a == other ? 0 : 1;
        for (int doc : a) {
            gold_hits += c.evidence.count(doc) != 0 ? 1 : 0;
        }
    }
    ok = ok && gold_hits == 0 && nondeterministic == 0 && seed_sensitive > 0;
    d << "negatives (pool 1000, sample 20) for " << claims.size() << " claims: " << gold_hits << " gold docs emitted, "
      << nondeterministic << " non-deterministic, " << seed_sensitive << " change with the seed";
    return {ok, d.str()};
}

// 8 -------------------------------------------------------------------------
Outcome lambda_gating()
{
    const auto dir = scratch("gating");
    auto cfg = parse_stage_config(kFixtures + "/synthetic/stage1.cfg");
    cfg.probe_log = (dir / "probe.jsonl").string();
    const auto corpus = load_corpus(kFixtures + "/synthetic/corpus.jsonl");
    const auto with = load_claims(cfg.datasets[0].claims, corpus).size();
    const auto without = load_claims(cfg.datasets[1].claims, corpus).size();
    run_stage(cfg);
    int bearing = 0, label_only = 0, violations = 0;
    std::ifstream probe(cfg.probe_log);
    for (std::string line; std::getline(probe, line);) {
        const auto j = json::parse(line);
        const double head = j.at("rationale_head_delta").get<double>();
        if (j.at("rationale_examples").get<int>() == 0) {
            ++label_only;
            violations += head == 0.0 ? 0 : 1;
        } else {
            ++bearing;
            violations += head > 0.0 ? 0 : 1;
        }
    }
    fs::remove_all(dir);
    std::ostringstream d;
    d << with << " rationale-bearing + " << without << " ABSENT-rationale claims; " << bearing
      << " bearing batches moved the head, " << label_only << " label-only batches left it unchanged; " << violations
      << " violations";
    return {with == without && bearing > 0 && label_only > 0 && violations == 0, d.str()};
}

// 9 -------------------------------------------------------------------------
Outcome category_breakdown()
{
    const auto dir = kFixtures + "/category/";
    const auto corpus = load_corpus(dir + "corpus.jsonl");
    const auto gold = load_claims(dir + "gold.jsonl", corpus);
    const auto preds = read_predictions(dir + "predictions.jsonl");
    const auto ann = load_annotations(dir + "annotations.jsonl");
    int mismatches = 0;
    std::size_t context_yes = 0, context_no = 0;
    for (std::size_t v = 0; v < kAllVariants.size(); ++v) {
        const auto out = by_category(preds, gold, ann, kAllVariants[v]);
        for (const auto& b : out.buckets) {
            std::set<std::pair<int, int>> keep;
            for (const auto& a : ann) {
                const bool value = b.category == Category::Context      ? a.context
                                   : b.category == Category::Background ? a.background
                                                                        : a.numerical;
                if (value == b.value) {
                    keep.emplace(a.claim_id, a.doc_id);
                }
            }
            if (b.pairs != keep.size() || !testing::agrees(b.result, testing::brute_restricted(preds, gold, keep, v))) {
                ++mismatches;
            }
            if (b.category == Category::Context) {
                (b.value ? context_yes : context_no) = b.pairs;
            }
        }
    }
    std::ostringstream d;
    d << ann.size() << " annotated pairs, context yes/no = " << context_yes << "/" << context_no << ", " << mismatches
      << " bucket mismatches vs brute force over 4 variants";
    return {ann.size() == 128 && context_yes == 85 && context_no == 43 && mismatches == 0, d.str()};
}

// 10 ------------------------------------------------------------------------
Outcome reproducibility()
{
    const auto dir = scratch("repro");
    auto p = [&](const std::string& f) { return (dir / f).string(); };
    const auto mini = kFixtures + "/mini/";
    const std::vector<std::vector<std::string>> steps = {
        {"index", "build", "--corpus", mini + "corpus.jsonl", "--out", p("index.json")},
        {"retrieve", "--index", p("index.json"), "--claims", mini + "claims.jsonl", "--k", "3", "--out",
         p("retrieved.jsonl")},
        {"train", "--config", mini + "train.cfg", "--out", p("model.ckpt")},
        {"predict", "--model", p("model.ckpt"), "--corpus", mini + "corpus.jsonl", "--claims", mini + "claims.jsonl",
         "--retrievals", p("retrieved.jsonl"), "--out", p("preds.jsonl")},
        {"evaluate", "--gold", mini + "claims.jsonl", "--corpus", mini + "corpus.jsonl", "--preds", p("preds.jsonl"),
         "--out", p("eval.json")},
    };
    const std::vector<std::string> artifacts = {"index.json", "retrieved.jsonl", "model.ckpt", "preds.jsonl",
                                                "eval.json"};
    for (const auto& s : steps) {
        if (cli(s) != 0) {
            return {false, "first run failed at '" + s[0] + "'"};
        }
    }
    std::map<std::string, std::string> first;
    for (const auto& a : artifacts) {
        first[a] = read_file(p(a));
        fs::remove(p(a));
    }
    for (const auto& a : artifacts) {
        if (cli({"--replay", p(a) + ".manifest.json"}) != 0) {
            return {false, "replay of " + a + " failed"};
        }
    }
    int identical = 0;
    for (const auto& a : artifacts) {
        identical += read_file(p(a)) == first[a] ? 1 : 0;
    }
    fs::remove_all(dir);
    return {identical == static_cast<int>(artifacts.size()),
            std::to_string(identical) + "/" + std::to_string(artifacts.size()) +
                " artifacts byte-identical after replaying their manifests"};
}

}  // namespace

int main()
{
    const std::vector<Criterion> criteria = {
        {1, "metric-oracle equivalence", 60, metric_oracle},
        {2, "published F1 consistency", 1, f1_consistency},
        {3, "loss/gradient correctness", 120, gradients},
        {4, "encoding invariants", 60, encoding},
        {5, "BM25 oracle", 30, bm25},
        {6, "end-to-end toy learning", 600, end_to_end},
        {7, "weak-supervision soundness", 30, weak_supervision},
        {8, "lambda-gating pipeline check", 120, lambda_gating},
        {9, "category-breakdown fixture", 10, category_breakdown},
        {10, "reproducibility", 300, reproducibility},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = c.run();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = secs < c.limit_seconds;
        const bool pass = out.pass && in_time;
        failed += pass ? 0 : 1;
        std::printf("%s [%2d] %-30s %8.2fs (limit %gs)%s  %s\n", pass ? "PASS" : "FAIL", c.number, c.name.c_str(), secs,
                    c.limit_seconds, in_time ? "" : " OVER TIME", out.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}

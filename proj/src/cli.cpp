#include "claimcheck/cli.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "claimcheck/checkpoint.hpp"
#include "claimcheck/data_model.hpp"
#include "claimcheck/errors.hpp"
#include "claimcheck/evaluation.hpp"
#include "claimcheck/io.hpp"
#include "claimcheck/predict.hpp"
#include "claimcheck/retrieval.hpp"
#include "claimcheck/training.hpp"
#include "claimcheck/weak_supervision.hpp"

#ifndef CLAIMCHECK_VERSION
#define CLAIMCHECK_VERSION "0.0.0"
#endif

namespace claimcheck::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string version() { return CLAIMCHECK_VERSION; }

namespace {

std::string utc_timestamp()
{
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Everything needed to rerun a command and check that it reproduced its outputs.
struct Manifest {
    std::string command;
    std::vector<std::string> argv;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    ordered_json resolved = ordered_json::object();
    ordered_json seeds = ordered_json::object();

    void input(const std::string& path)
    {
        if (!path.empty()) {
            inputs.push_back(path);
        }
    }
    void output(const std::string& path) { outputs.push_back(path); }

    ordered_json digests(const std::vector<std::string>& paths) const
    {
        ordered_json j = ordered_json::object();
        for (const auto& p : paths) {
            j[p] = sha256_file(p);
        }
        return j;
    }

    /// Written beside the first output as "<output>.manifest.json".
    void write(const ordered_json& input_digests) const
    {
        ordered_json j;
        j["tool"] = "claimcheck";
        j["version"] = version();
        j["command"] = command;
        j["argv"] = argv;
        j["cwd"] = fs::current_path().string();
        j["resolved"] = resolved;
        j["inputs"] = input_digests;
        j["outputs"] = digests(outputs);
        j["seeds"] = seeds;
        j["timestamp"] = utc_timestamp();
        write_file(outputs.front() + ".manifest.json", j.dump(2) + "\n");
    }
};

// ---------------------------------------------------------------------------
// option holders

struct IndexOpts {
    std::string corpus, out;
    double k1 = 1.2, b = 0.75;
};
struct RetrieveOpts {
    std::string index, claims, out, corpus, reranker = "identity", model;
    int k = 10;
    int depth = 0;
};
struct WeakOpts {
    std::string prompts, corpus, out;
    int start_id = 1;
};
struct MineOpts {
    std::string claims, index, out;
    int pool = kDefaultPool, sample = kDefaultSample;
    std::uint64_t seed = 0;
};
struct TrainOpts {
    std::string config, out, lambda_grid;
    std::optional<int> few_shot;
    std::optional<std::uint64_t> seed;
};
struct PredictOpts {
    std::string model, corpus, claims, retrievals, out;
    std::vector<std::string> unseen;
    bool oracle = false;
    double threshold = 0.5;
    int k = 0;
};
struct EvalOpts {
    std::string gold, corpus, preds, out, variant = "all", annotator_b;
    std::optional<int> cap;
};
struct ReportOpts {
    std::string eval, by_category, format = "json", out, variant = "abstract_label_rationale", name = "system";
};

// ---------------------------------------------------------------------------
// shared helpers

ordered_json metric_json(const MetricResult& r)
{
    return {{"variant", variant_key(r.variant)},
            {"title", variant_title(r.variant)},
            {"precision", r.precision},
            {"recall", r.recall},
            {"f1", r.f1},
            {"counts", {{"correct", r.counts.correct}, {"predicted", r.counts.predicted}, {"gold", r.counts.gold}}}};
}

MetricResult metric_from_json(const ordered_json& j)
{
    MetricResult r;
    const auto key = j.at("variant").get<std::string>();
    auto v = parse_variant(key);
    if (!v) {
        throw ValidationError("unknown metric variant '" + key + "' in report");
    }
    r.variant = *v;
    r.precision = j.at("precision").get<double>();
    r.recall = j.at("recall").get<double>();
    r.f1 = j.at("f1").get<double>();
    const auto& c = j.at("counts");
    r.counts = {c.at("correct").get<std::int64_t>(), c.at("predicted").get<std::int64_t>(),
                c.at("gold").get<std::int64_t>()};
    return r;
}

std::string pct(double ratio)
{
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(1);
    s << percent_1dp(ratio);
    return s.str();
}

MetricVariant require_variant(const std::string& key)
{
    auto v = parse_variant(key);
    if (!v) {
        throw ValidationError("unknown variant '" + key + "'");
    }
    return *v;
}

// ---------------------------------------------------------------------------
// commands

void run_index(const IndexOpts& o, Manifest& m)
{
    m.input(o.corpus);
    m.output(o.out);
    m.resolved = {{"k1", o.k1}, {"b", o.b}};
    const auto corpus = load_corpus(o.corpus);
    save_index(build_index(corpus, Bm25Params{o.k1, o.b}), o.out);
}

void run_retrieve(const RetrieveOpts& o, Manifest& m)
{
    m.input(o.index);
    m.input(o.claims);
    m.input(o.corpus);
    m.input(o.model);
    m.output(o.out);
    m.resolved = {{"k", o.k}, {"reranker", o.reranker}, {"rerank_depth", o.depth}};
    if (o.k < 1) {
        throw ValidationError("--k must be >= 1");
    }
    const auto index = load_index(o.index);
    std::optional<Corpus> corpus;
    std::vector<Claim> claims;
    if (!o.corpus.empty()) {
        corpus = load_corpus(o.corpus);
        claims = load_claims(o.claims, *corpus);
    } else {
        claims = read_claims(o.claims);
    }
    std::optional<VerifierModel> model;
    PairScorer scorer;
    if (o.reranker == "toy") {
        if (o.model.empty() || !corpus) {
            throw ValidationError("--reranker toy needs --model and --corpus");
        }
        model.emplace(model_from_checkpoint(load_checkpoint(o.model)));
        scorer = [&model](const std::string& claim, const std::string& text) {
            Document doc;
            doc.sentences = {text};
            const auto out = model->forward(model->assemble(claim, doc));
            return 1.0 - out.label_probs[static_cast<std::size_t>(Label::Nei)];
        };
    } else if (o.reranker != "identity") {
        throw ValidationError("unknown reranker '" + o.reranker + "' (identity or toy)");
    }
    std::vector<RankedList> out;
    for (const auto& c : claims) {
        auto ranked = retrieve(index, c, o.k);
        if (scorer) {
            const std::size_t n = ranked.entries.size();
            const std::size_t depth = o.depth > 0 ? std::min(static_cast<std::size_t>(o.depth), n) : n;
            ranked = rerank(ranked, c, *corpus, scorer, depth);
        }
        out.push_back(std::move(ranked));
    }
    save_rankings(out, o.out);
}

void run_weakgen_ico(const WeakOpts& o, Manifest& m)
{
    m.input(o.prompts);
    m.input(o.corpus);
    m.output(o.out);
    m.resolved = {{"start_id", o.start_id}};
    const auto corpus = load_corpus(o.corpus);
    const auto prompts = load_ico_prompts(o.prompts);
    std::vector<Claim> claims;
    int next = o.start_id;
    std::size_t skipped = 0;
    for (const auto& p : prompts) {
        if (!corpus.contains(p.doc_id)) {
            throw ValidationError("ICO prompt references unknown doc " + std::to_string(p.doc_id));
        }
        auto generated = ico_to_claims(p, next);
        if (generated.empty()) {
            ++skipped;
            continue;
        }
        next += static_cast<int>(generated.size());
        for (auto& c : generated) {
            claims.push_back(std::move(c));
        }
    }
    validate_claims(claims, corpus);
    save_claims(claims, o.out);
    std::cerr << "weakgen ico: " << claims.size() << " claims from " << prompts.size() << " prompts (" << skipped
              << " NO_SIG_DIFF prompts skipped)\n";
}

void run_weakgen_titles(const WeakOpts& o, Manifest& m)
{
    m.input(o.corpus);
    m.output(o.out);
    m.resolved = {{"start_id", o.start_id}};
    const auto corpus = load_corpus(o.corpus);
    std::vector<Claim> claims;
    int next = o.start_id;
    std::size_t supports = 0, refutes = 0;
    for (const auto& doc : corpus) {
        for (auto& c : title_to_claims(doc, next)) {
            (c.evidence.begin()->second.label == Label::Supports ? supports : refutes) += 1;
            claims.push_back(std::move(c));
            ++next;
        }
    }
    save_claims(claims, o.out);
    std::cerr << "weakgen titles: " << supports << " title claims, " << refutes << " negation-flipped claims from "
              << corpus.size() << " documents\n";
}

void run_mine(const MineOpts& o, Manifest& m)
{
    m.input(o.claims);
    m.input(o.index);
    m.output(o.out);
    m.resolved = {{"pool", o.pool}, {"sample", o.sample}};
    m.seeds = {{"sample", o.seed}};
    const auto index = load_index(o.index);
    const auto claims = read_claims(o.claims);
    std::map<int, std::vector<int>> negatives;
    for (const auto& c : claims) {
        auto docs = mine_hard_negatives(c, index, o.pool, o.sample, o.seed);
        if (static_cast<int>(docs.size()) < o.sample) {
            std::cerr << "mine-negatives: claim " << c.id << " has only " << docs.size() << " eligible documents\n";
        }
        negatives[c.id] = std::move(docs);
    }
    save_negatives(negatives, o.out);
}

void run_train(const TrainOpts& o, Manifest& m)
{
    m.input(o.config);
    auto cfg = parse_stage_config(o.config);
    if (!o.out.empty()) {
        cfg.checkpoint_out = fs::absolute(o.out).lexically_normal().string();
    }
    if (o.seed) {
        cfg.seed = *o.seed;
        cfg.model.seed = *o.seed;
        cfg.few_shot_seed = *o.seed;
    }
    if (o.few_shot) {
        cfg.few_shot = *o.few_shot;
    }
    if (cfg.checkpoint_out.empty()) {
        throw ValidationError("train needs checkpoint_out in the config or --out");
    }
    for (const auto& d : cfg.datasets) {
        m.input(d.claims);
        m.input(d.corpus);
        m.input(d.negatives);
    }
    if (cfg.dev) {
        m.input(cfg.dev->claims);
        m.input(cfg.dev->corpus);
    }
    m.input(cfg.checkpoint_in);
    m.output(cfg.checkpoint_out);
    m.resolved = {{"config", format_stage_config(cfg)}};
    m.seeds = {{"stage", cfg.seed}, {"few_shot", cfg.few_shot_seed}};

    if (!o.lambda_grid.empty()) {
        std::vector<double> grid;
        std::string item;
        std::istringstream in(o.lambda_grid);
        while (std::getline(in, item, ',')) {
            try {
                grid.push_back(std::stod(item));
            } catch (const std::exception&) {
                throw ValidationError("bad --lambda-grid entry '" + item + "'");
            }
        }
        const auto report = tune_lambda(grid, cfg);
        ordered_json j;
        j["best_lambda"] = report.best_lambda;
        for (const auto& [lambda, f1] : report.scores) {
            j["scores"].push_back({{"lambda", lambda}, {"dev_abstract_label_rationale_f1", f1}});
            std::cerr << "lambda " << lambda << ": dev label+rationale F1 " << pct(f1) << '\n';
        }
        write_file(cfg.checkpoint_out + ".lambda.json", j.dump(2) + "\n");
        m.output(cfg.checkpoint_out + ".lambda.json");
        return;
    }
    TrainingHooks hooks;
    hooks.on_epoch = [](const EpochReport& r) {
        std::cerr << "epoch " << r.epoch << ": mean loss " << r.mean_loss;
        for (const auto& d : r.dev) {
            std::cerr << ", " << variant_key(d.variant) << " F1 " << pct(d.f1);
        }
        std::cerr << (r.improved ? " *" : "") << '\n';
    };
    const auto result = run_stage(cfg, hooks);
    if (result.skipped_examples > 0) {
        std::cerr << "train: skipped " << result.skipped_examples << " unencodable (claim, doc) pairs\n";
    }
    m.output(cfg.checkpoint_out + ".config");
    m.output(cfg.log.empty() ? cfg.checkpoint_out + ".log.jsonl" : cfg.log);
}

void run_predict(const PredictOpts& o, Manifest& m)
{
    m.input(o.model);
    m.input(o.corpus);
    m.input(o.claims);
    m.input(o.retrievals);
    m.output(o.out);
    m.resolved = {{"setting", o.oracle ? "oracle" : "open"}, {"threshold", o.threshold}, {"k", o.k}};
    if (o.oracle == !o.retrievals.empty()) {
        throw ValidationError("predict needs exactly one of --oracle or --retrievals");
    }
    const auto ckpt = load_checkpoint(o.model);
    m.seeds = {{"model", ckpt.model.seed}};
    for (const auto& p : o.unseen) {
        m.input(p);
    }
    audit_unseen(ckpt, o.unseen);
    const auto model = model_from_checkpoint(ckpt);
    const auto corpus = load_corpus(o.corpus);
    const auto claims = load_claims(o.claims, corpus);
    std::map<int, std::vector<int>> candidates;
    if (o.oracle) {
        candidates = oracle_candidate_map(claims);
    } else {
        for (const auto& r : load_rankings(o.retrievals)) {
            auto ids = r.doc_ids();
            if (o.k > 0 && static_cast<int>(ids.size()) > o.k) {
                ids.resize(static_cast<std::size_t>(o.k));
            }
            candidates[r.claim_id] = std::move(ids);
        }
        for (const auto& c : claims) {
            if (candidates.count(c.id) == 0) {
                throw ValidationError("claim " + std::to_string(c.id) + " has no retrieval results");
            }
        }
    }
    save_predictions(predict_claims(model, claims, corpus, candidates, o.threshold), o.out);
}

void run_evaluate(const EvalOpts& o, Manifest& m)
{
    m.input(o.gold);
    m.input(o.corpus);
    m.input(o.preds);
    m.input(o.annotator_b);
    m.output(o.out);
    if (o.preds.empty() == o.annotator_b.empty()) {
        throw ValidationError("evaluate needs exactly one of --preds or --annotator-b");
    }
    ScoringOptions opts;
    opts.max_rationale_sentences = o.cap;
    m.resolved = {{"variant", o.variant}, {"max_rationale_sentences", o.cap ? ordered_json(*o.cap) : ordered_json()}};
    const auto corpus = load_corpus(o.corpus);
    const auto gold = load_claims(o.gold, corpus);
    std::vector<MetricResult> results;
    const auto abs = [](const std::string& p) { return fs::absolute(p).lexically_normal().string(); };
    ordered_json inputs = {{"gold", abs(o.gold)}, {"corpus", abs(o.corpus)}};
    if (!o.annotator_b.empty()) {
        const auto b = load_claims(o.annotator_b, corpus);
        results = human_agreement(gold, b, corpus);
        inputs["annotator_b"] = abs(o.annotator_b);
        inputs["annotator_b_sha256"] = sha256_file(o.annotator_b);
    } else {
        const auto preds = read_predictions(o.preds);
        const auto violations = validate_predictions(preds, corpus, gold);
        if (!violations.empty()) {
            std::string msg = std::to_string(violations.size()) + " invalid predictions:";
            for (const auto& v : violations) {
                msg += "\n  " + v;
            }
            throw ValidationError(msg);
        }
        if (o.variant == "all") {
            results = evaluate_all(preds, gold, opts);
        } else {
            results = {evaluate_variant(require_variant(o.variant), preds, gold, opts)};
        }
        inputs["preds"] = abs(o.preds);
        inputs["preds_sha256"] = sha256_file(o.preds);
    }
    inputs["gold_sha256"] = sha256_file(o.gold);
    ordered_json report;
    report["mode"] = o.annotator_b.empty() ? "predictions" : "human_agreement";
    report["inputs"] = inputs;
    report["options"] = m.resolved;
    for (const auto& r : results) {
        report["variants"].push_back(metric_json(r));
    }
    write_file(o.out, report.dump(2) + "\n");
}

std::string render_results(const std::vector<MetricResult>& results, const std::string& format,
                           const std::string& name)
{
    std::ostringstream out;
    if (format == "tsv") {
        out << "variant\tprecision\trecall\tf1\tcorrect\tpredicted\tgold\n";
        for (const auto& r : results) {
            out << variant_key(r.variant) << '\t' << pct(r.precision) << '\t' << pct(r.recall) << '\t' << pct(r.f1)
                << '\t' << r.counts.correct << '\t' << r.counts.predicted << '\t' << r.counts.gold << '\n';
        }
    } else {
        out << "| Model |";
        for (const auto& r : results) {
            out << ' ' << variant_title(r.variant) << " P | R | F1 |";
        }
        out << "\n|---|";
        for (std::size_t i = 0; i < results.size(); ++i) {
            out << "---:|---:|---:|";
        }
        out << "\n| " << name << " |";
        for (const auto& r : results) {
            out << ' ' << pct(r.precision) << " | " << pct(r.recall) << " | " << pct(r.f1) << " |";
        }
        out << '\n';
    }
    return out.str();
}

std::string render_breakdown(const CategoryBreakdown& b, MetricVariant variant, const std::string& format)
{
    std::ostringstream out;
    auto row = [&](const std::string& cat, const std::string& diff, std::size_t count, const MetricResult& r) {
        if (format == "tsv") {
            out << cat << '\t' << diff << '\t' << count << '\t' << pct(r.precision) << '\t' << pct(r.recall) << '\t'
                << pct(r.f1) << '\n';
        } else {
            out << "| " << cat << " | " << diff << " | " << count << " | " << pct(r.precision) << " | "
                << pct(r.recall) << " | " << pct(r.f1) << " |\n";
        }
    };
    if (format == "tsv") {
        out << "category\tdifficulty\tcount\tprecision\trecall\tf1\n";
    } else {
        out << "| Category | Difficulty | Count | " << variant_title(variant) << " P | R | F1 |\n"
            << "|---|---|---:|---:|---:|---:|\n";
    }
    for (const auto& bucket : b.buckets) {
        row(std::string(category_name(bucket.category)), bucket.value ? "Yes" : "No", bucket.pairs, bucket.result);
    }
    row("All", "All", b.annotated_pairs, b.annotated);
    if (b.remainder_pairs > 0) {
        row("Unannotated", "-", b.remainder_pairs, b.remainder);
    }
    return out.str();
}

ordered_json breakdown_json(const CategoryBreakdown& b, MetricVariant variant)
{
    ordered_json j;
    j["variant"] = variant_key(variant);
    for (const auto& bucket : b.buckets) {
        j["buckets"].push_back({{"category", category_name(bucket.category)},
                                {"value", bucket.value},
                                {"pairs", bucket.pairs},
                                {"result", metric_json(bucket.result)}});
    }
    j["annotated"] = {{"pairs", b.annotated_pairs}, {"result", metric_json(b.annotated)}};
    j["remainder"] = {{"pairs", b.remainder_pairs}, {"result", metric_json(b.remainder)}};
    return j;
}

void run_report(const ReportOpts& o, Manifest& m)
{
    m.input(o.eval);
    m.input(o.by_category);
    m.output(o.out);
    m.resolved = {{"format", o.format}, {"variant", o.variant}, {"name", o.name}};
    if (o.format != "json" && o.format != "tsv" && o.format != "markdown-table") {
        throw ValidationError("unknown format '" + o.format + "' (json, tsv, markdown-table)");
    }
    ordered_json eval;
    try {
        eval = ordered_json::parse(read_file(o.eval));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(o.eval, 1, e.what());
    }
    std::vector<MetricResult> results;
    for (const auto& v : eval.at("variants")) {
        results.push_back(metric_from_json(v));
    }

    std::optional<CategoryBreakdown> breakdown;
    const MetricVariant variant = require_variant(o.variant);
    if (!o.by_category.empty()) {
        const auto& in = eval.at("inputs");
        if (!in.contains("preds")) {
            throw ValidationError("--by-category needs a report produced from a predictions file");
        }
        const auto gold_path = in.at("gold").get<std::string>();
        const auto preds_path = in.at("preds").get<std::string>();
        if (sha256_file(gold_path) != in.at("gold_sha256").get<std::string>() ||
            sha256_file(preds_path) != in.at("preds_sha256").get<std::string>()) {
            throw ValidationError("gold or predictions changed since " + o.eval + " was written");
        }
        m.input(gold_path);
        m.input(preds_path);
        const auto corpus = load_corpus(in.at("corpus").get<std::string>());
        const auto gold = load_claims(gold_path, corpus);
        const auto preds = read_predictions(preds_path);
        ScoringOptions opts;
        if (const auto& cap = eval.at("options").at("max_rationale_sentences"); !cap.is_null()) {
            opts.max_rationale_sentences = cap.get<int>();
        }
        breakdown = by_category(preds, gold, load_annotations(o.by_category), variant, opts);
    }

    std::string text;
    if (o.format == "json") {
        ordered_json j;
        for (const auto& r : results) {
            j["variants"].push_back(metric_json(r));
        }
        if (breakdown) {
            j["by_category"] = breakdown_json(*breakdown, variant);
        }
        text = j.dump(2) + "\n";
    } else {
        text = render_results(results, o.format, o.name);
        if (breakdown) {
            text += "\n" + render_breakdown(*breakdown, variant, o.format);
        }
    }
    write_file(o.out, text);
}

// ---------------------------------------------------------------------------
// replay

int replay(const std::string& manifest_path)
{
    ordered_json man;
    try {
        man = ordered_json::parse(read_file(manifest_path));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(manifest_path, 1, e.what());
    }
    const auto argv = man.at("argv").get<std::vector<std::string>>();
    const fs::path cwd = man.at("cwd").get<std::string>();
    const auto previous = fs::current_path();
    fs::current_path(cwd);
    struct Restore {
        fs::path dir;
        ~Restore() { fs::current_path(dir); }
    } restore{previous};

    for (const auto& [path, digest] : man.at("inputs").items()) {
        if (sha256_file(path) != digest.get<std::string>()) {
            throw ValidationError("input changed since the manifest was written: " + path);
        }
    }
    const int code = dispatch(argv);
    if (code != kExitOk) {
        return code;
    }
    for (const auto& [path, digest] : man.at("outputs").items()) {
        if (sha256_file(path) != digest.get<std::string>()) {
            throw ValidationError("replay produced different bytes for " + path);
        }
    }
    std::cerr << "replay: " << man.at("outputs").size() << " output(s) reproduced byte-identically\n";
    return kExitOk;
}

}  // namespace

int dispatch(const std::vector<std::string>& args)
{
    CLI::App app{"Scientific claim verification: retrieval, weak supervision, training, prediction and scoring.",
                 "claimcheck"};
    app.set_version_flag("--version", version());
    std::string replay_path;
    app.add_option("--replay", replay_path, "Rerun the command recorded in a manifest and verify its outputs");

    IndexOpts index_o;
    auto* index = app.add_subcommand("index", "BM25 index management");
    auto* build = index->add_subcommand("build", "Build a BM25 index over title + abstract");
    build->add_option("--corpus", index_o.corpus, "corpus.jsonl")->required();
    build->add_option("--out", index_o.out, "index JSON output")->required();
    build->add_option("--k1", index_o.k1, "term-frequency saturation")->capture_default_str();
    build->add_option("--b", index_o.b, "length normalisation")->capture_default_str();
    index->require_subcommand(1);

    RetrieveOpts ret_o;
    auto* ret = app.add_subcommand("retrieve", "Top-k BM25 documents per claim, optionally reranked");
    ret->add_option("--index", ret_o.index)->required();
    ret->add_option("--claims", ret_o.claims)->required();
    ret->add_option("--k", ret_o.k, "documents per claim")->capture_default_str();
    ret->add_option("--out", ret_o.out)->required();
    ret->add_option("--corpus", ret_o.corpus, "corpus for validation and reranking");
    ret->add_option("--reranker", ret_o.reranker, "identity or toy")->capture_default_str();
    ret->add_option("--rerank-depth", ret_o.depth, "entries to rerank (0 = all)")->capture_default_str();
    ret->add_option("--model", ret_o.model, "checkpoint for the toy reranker");

    WeakOpts weak_o;
    auto* weak = app.add_subcommand("weakgen", "Generate weakly-labelled claims");
    auto* ico = weak->add_subcommand("ico", "ICO prompts to SUPPORTS/REFUTES claim pairs");
    ico->add_option("--prompts", weak_o.prompts)->required();
    ico->add_option("--corpus", weak_o.corpus)->required();
    ico->add_option("--out", weak_o.out)->required();
    ico->add_option("--start-id", weak_o.start_id, "first claim id")->capture_default_str();
    auto* titles = weak->add_subcommand("titles", "Claim-like titles (plus negation flips) as claims");
    titles->add_option("--corpus", weak_o.corpus)->required();
    titles->add_option("--out", weak_o.out)->required();
    titles->add_option("--start-id", weak_o.start_id, "first claim id")->capture_default_str();
    weak->require_subcommand(1);

    MineOpts mine_o;
    auto* mine = app.add_subcommand("mine-negatives", "Sample hard NEI documents from the BM25 pool");
    mine->add_option("--claims", mine_o.claims)->required();
    mine->add_option("--index", mine_o.index)->required();
    mine->add_option("--pool", mine_o.pool, "BM25 pool size")->capture_default_str();
    mine->add_option("--sample", mine_o.sample, "negatives per claim")->capture_default_str();
    mine->add_option("--seed", mine_o.seed)->capture_default_str();
    mine->add_option("--out", mine_o.out)->required();

    TrainOpts train_o;
    auto* train = app.add_subcommand("train", "Run one training stage from a key = value config");
    train->add_option("--config", train_o.config)->required();
    train->add_option("--out", train_o.out, "checkpoint path (overrides checkpoint_out)");
    train->add_option("--few-shot", train_o.few_shot, "train on N sampled claims per dataset");
    train->add_option("--seed", train_o.seed, "overrides the stage and few-shot seeds");
    train->add_option("--lambda-grid", train_o.lambda_grid, "comma-separated rationale weights to tune on dev");

    PredictOpts pred_o;
    auto* pred = app.add_subcommand("predict", "Label + rationale predictions");
    pred->add_option("--model", pred_o.model)->required();
    pred->add_option("--corpus", pred_o.corpus)->required();
    pred->add_option("--claims", pred_o.claims)->required();
    auto* retr = pred->add_option("--retrievals", pred_o.retrievals, "open setting: candidates from retrieve");
    auto* orac = pred->add_flag("--oracle", pred_o.oracle, "oracle setting: candidates are the cited docs");
    retr->excludes(orac);
    orac->excludes(retr);
    pred->add_option("--k", pred_o.k, "use only the top k retrieved docs (0 = all)")->capture_default_str();
    pred->add_option("--threshold", pred_o.threshold, "rationale probability threshold")->capture_default_str();
    pred->add_option("--out", pred_o.out)->required();
    pred->add_option("--require-unseen", pred_o.unseen,
                     "fail if the model's training lineage includes any of these files (zero-shot audit)");

    EvalOpts eval_o;
    auto* eval = app.add_subcommand("evaluate", "Score predictions (or a second annotator) against gold");
    eval->add_option("--gold", eval_o.gold)->required();
    eval->add_option("--corpus", eval_o.corpus)->required();
    auto* preds_opt = eval->add_option("--preds", eval_o.preds);
    auto* ann_opt = eval->add_option("--annotator-b", eval_o.annotator_b, "human agreement: score B against gold");
    preds_opt->excludes(ann_opt);
    ann_opt->excludes(preds_opt);
    eval->add_option("--variant", eval_o.variant, "all or one variant key")->capture_default_str();
    eval->add_option("--max-rationale-sentences", eval_o.cap, "count only the first N predicted sentences");
    eval->add_option("--out", eval_o.out)->required();

    ReportOpts rep_o;
    auto* rep = app.add_subcommand("report", "Render an evaluation report");
    rep->add_option("--eval", rep_o.eval)->required();
    rep->add_option("--by-category", rep_o.by_category, "category annotations JSONL");
    rep->add_option("--variant", rep_o.variant, "variant for the category breakdown")->capture_default_str();
    rep->add_option("--format", rep_o.format, "json, tsv or markdown-table")->capture_default_str();
    rep->add_option("--name", rep_o.name, "row label in tables")->capture_default_str();
    rep->add_option("--out", rep_o.out)->required();

    std::vector<std::string> rest(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
    std::reverse(rest.begin(), rest.end());
    try {
        app.parse(rest);
        if (!replay_path.empty()) {
            if (!app.get_subcommands().empty()) {
                throw CLI::ValidationError("--replay", "cannot be combined with a subcommand");
            }
        } else if (app.get_subcommands().empty()) {
            throw CLI::RequiredError("a subcommand");
        }
    } catch (const CLI::CallForHelp& e) {
        app.exit(e);
        return kExitOk;
    } catch (const CLI::CallForAllHelp& e) {
        app.exit(e);
        return kExitOk;
    } catch (const CLI::CallForVersion& e) {
        app.exit(e);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        std::cerr << "claimcheck: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    try {
        if (!replay_path.empty()) {
            return replay(replay_path);
        }
        Manifest m;
        m.argv = args;
        const auto input_snapshot = [&]() { return m.digests(m.inputs); };
        std::function<void()> body;
        if (build->parsed()) {
            m.command = "index build";
            body = [&] { run_index(index_o, m); };
        } else if (ret->parsed()) {
            m.command = "retrieve";
            body = [&] { run_retrieve(ret_o, m); };
        } else if (ico->parsed()) {
            m.command = "weakgen ico";
            body = [&] { run_weakgen_ico(weak_o, m); };
        } else if (titles->parsed()) {
            m.command = "weakgen titles";
            body = [&] { run_weakgen_titles(weak_o, m); };
        } else if (mine->parsed()) {
            m.command = "mine-negatives";
            body = [&] { run_mine(mine_o, m); };
        } else if (train->parsed()) {
            m.command = "train";
            body = [&] { run_train(train_o, m); };
        } else if (pred->parsed()) {
            m.command = "predict";
            body = [&] { run_predict(pred_o, m); };
        } else if (eval->parsed()) {
            m.command = "evaluate";
            body = [&] { run_evaluate(eval_o, m); };
        } else if (rep->parsed()) {
            m.command = "report";
            body = [&] { run_report(rep_o, m); };
        }
        // Inputs are hashed after the command runs but are never written by
        // it, so the digests describe what was read.
        body();
        m.write(input_snapshot());
        return kExitOk;
    } catch (const IoError& e) {
        std::cerr << "claimcheck: I/O error: " << e.what() << '\n';
        return kExitIo;
    } catch (const ValidationError& e) {
        std::cerr << "claimcheck: " << e.what() << '\n';
        return kExitValidation;
    } catch (const TrainingDiverged& e) {
        std::cerr << "claimcheck: training diverged: " << e.what() << '\n';
        return kExitValidation;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "claimcheck: I/O error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "claimcheck: " << e.what() << '\n';
        return kExitValidation;
    }
}

}  // namespace claimcheck::cli

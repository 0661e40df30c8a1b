#include <filesystem>

#include "doctest.h"

#include "claimcheck/cli.hpp"
#include "claimcheck/data_model.hpp"
#include "claimcheck/io.hpp"
#include "json.hpp"

using namespace claimcheck;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kFixtures = CLAIMCHECK_FIXTURES;

int run(std::vector<std::string> args)
{
    args.insert(args.begin(), "claimcheck");
    return cli::dispatch(args);
}

struct Workdir {
    fs::path dir;
    explicit Workdir(const std::string& name) : dir(fs::temp_directory_path() / ("claimcheck_test_cli_" + name))
    {
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Workdir() { fs::remove_all(dir); }
    std::string operator/(const std::string& f) const { return (dir / f).string(); }
};

}  // namespace

TEST_CASE("usage errors exit 64")
{
    CHECK(run({}) == cli::kExitUsage);
    CHECK(run({"frobnicate"}) == cli::kExitUsage);
    CHECK(run({"index", "build", "--corpus", "x"}) == cli::kExitUsage);
    CHECK(run({"retrieve", "--index", "a", "--claims", "b", "--out", "c", "--k", "lots"}) == cli::kExitUsage);
    CHECK(run({"predict", "--model", "m", "--corpus", "c", "--claims", "x", "--oracle", "--retrievals", "r", "--out",
               "o"}) == cli::kExitUsage);
    CHECK(run({"--version"}) == cli::kExitOk);
    CHECK(run({"--help"}) == cli::kExitOk);
}

TEST_CASE("I/O and validation failures map to 2 and 1")
{
    Workdir w("errors");
    CHECK(run({"index", "build", "--corpus", w / "missing.jsonl", "--out", w / "idx.json"}) == cli::kExitIo);
    write_file(w / "broken.jsonl", "{not json\n");
    CHECK(run({"index", "build", "--corpus", w / "broken.jsonl", "--out", w / "idx.json"}) == cli::kExitValidation);
    CHECK(run({"index", "build", "--corpus", kFixtures + "/mini/corpus.jsonl", "--out", w / "idx.json", "--b", "2"}) ==
          cli::kExitValidation);
    CHECK(run({"evaluate", "--gold", kFixtures + "/mini/claims.jsonl", "--corpus", kFixtures + "/mini/corpus.jsonl",
               "--out", w / "e.json"}) == cli::kExitValidation);
    // predictions referencing an unknown doc are reported, not silently scored
    write_file(w / "bad_preds.jsonl", R"({"id": 1, "evidence": {"424242": {"label": "SUPPORT", "sentences": [0]}}})"
                                      "\n");
    CHECK(run({"evaluate", "--gold", kFixtures + "/mini/claims.jsonl", "--corpus", kFixtures + "/mini/corpus.jsonl",
               "--preds", w / "bad_preds.jsonl", "--out", w / "e.json"}) == cli::kExitValidation);
}

TEST_CASE("pipeline commands write artifacts and manifests that replay")
{
    Workdir w("pipeline");
    const auto corpus = kFixtures + "/mini/corpus.jsonl";
    const auto claims = kFixtures + "/mini/claims.jsonl";
    REQUIRE(run({"index", "build", "--corpus", corpus, "--out", w / "idx.json"}) == 0);
    REQUIRE(run({"retrieve", "--index", w / "idx.json", "--claims", claims, "--k", "3", "--out", w / "r.jsonl"}) == 0);
    REQUIRE(run({"train", "--config", kFixtures + "/mini/train.cfg", "--out", w / "m.ckpt"}) == 0);
    REQUIRE(run({"predict", "--model", w / "m.ckpt", "--corpus", corpus, "--claims", claims, "--retrievals",
                 w / "r.jsonl", "--out", w / "p.jsonl"}) == 0);
    REQUIRE(run({"evaluate", "--gold", claims, "--corpus", corpus, "--preds", w / "p.jsonl", "--out",
                 w / "e.json"}) == 0);

    const auto manifest = json::parse(read_file(w / "p.jsonl.manifest.json"));
    CHECK(manifest.at("command") == "predict");
    CHECK(manifest.at("version") == cli::version());
    CHECK(manifest.at("inputs").contains(w / "m.ckpt"));
    CHECK(manifest.at("outputs").at(w / "p.jsonl") == sha256_file(w / "p.jsonl"));
    CHECK(manifest.at("seeds").at("model") == 7);
    CHECK(manifest.contains("timestamp"));

    const auto eval = json::parse(read_file(w / "e.json"));
    CHECK(eval.at("variants").size() == 4);
    CHECK_FALSE(eval.contains("timestamp"));

    // replay reproduces every artifact
    const auto before = read_file(w / "p.jsonl");
    fs::remove(w / "p.jsonl");
    CHECK(run({"--replay", w / "p.jsonl.manifest.json"}) == 0);
    CHECK(read_file(w / "p.jsonl") == before);
    CHECK(run({"--replay", w / "m.ckpt.manifest.json"}) == 0);
    CHECK(run({"--replay", w / "e.json.manifest.json"}) == 0);

    // a changed input is refused
    write_file(w / "r.jsonl", read_file(w / "r.jsonl") + "\n");
    CHECK(run({"--replay", w / "p.jsonl.manifest.json"}) == cli::kExitValidation);
    CHECK(run({"--replay", w / "p.jsonl.manifest.json", "index"}) == cli::kExitUsage);

    // zero-shot audit: the model saw the mini claims
    CHECK(run({"predict", "--model", w / "m.ckpt", "--corpus", corpus, "--claims", claims, "--oracle", "--out",
               w / "p2.jsonl", "--require-unseen", claims}) == cli::kExitValidation);
    CHECK(run({"predict", "--model", w / "m.ckpt", "--corpus", corpus, "--claims", claims, "--oracle", "--out",
               w / "p2.jsonl", "--threshold", "1.5"}) == cli::kExitValidation);
}

TEST_CASE("weakgen, mine-negatives and the toy reranker")
{
    Workdir w("weak");
    CHECK(run({"weakgen", "titles", "--corpus", kFixtures + "/weak/corpus.jsonl", "--out", w / "t.jsonl"}) == 0);
    CHECK(run({"weakgen", "ico", "--prompts", kFixtures + "/weak/ico_prompts.jsonl", "--corpus",
               kFixtures + "/weak/corpus.jsonl", "--out", w / "i.jsonl", "--start-id", "500"}) == 0);
    const auto ico = read_claims(w / "i.jsonl");
    REQUIRE_FALSE(ico.empty());
    CHECK(ico.front().id == 500);
    CHECK(ico.size() % 2 == 0);
    CHECK(read_claims(w / "t.jsonl").size() == 15);

    const auto corpus = kFixtures + "/mini/corpus.jsonl";
    const auto claims = kFixtures + "/mini/claims.jsonl";
    REQUIRE(run({"index", "build", "--corpus", corpus, "--out", w / "idx.json"}) == 0);
    CHECK(run({"mine-negatives", "--claims", claims, "--index", w / "idx.json", "--sample", "4", "--seed", "3",
               "--out", w / "n.jsonl"}) == 0);
    const auto first = read_file(w / "n.jsonl");
    CHECK(run({"mine-negatives", "--claims", claims, "--index", w / "idx.json", "--sample", "4", "--seed", "3",
               "--out", w / "n.jsonl"}) == 0);
    CHECK(read_file(w / "n.jsonl") == first);

    REQUIRE(run({"train", "--config", kFixtures + "/mini/train.cfg", "--out", w / "m.ckpt"}) == 0);
    CHECK(run({"retrieve", "--index", w / "idx.json", "--claims", claims, "--corpus", corpus, "--k", "5",
               "--reranker", "toy", "--model", w / "m.ckpt", "--rerank-depth", "3", "--out", w / "rr.jsonl"}) == 0);
    CHECK(run({"retrieve", "--index", w / "idx.json", "--claims", claims, "--k", "5", "--reranker", "toy", "--out",
               w / "rr.jsonl"}) == cli::kExitValidation);
}

TEST_CASE("report renders tables and the category breakdown")
{
    Workdir w("report");
    const auto dir = kFixtures + "/category/";
    REQUIRE(run({"evaluate", "--gold", dir + "gold.jsonl", "--corpus", dir + "corpus.jsonl", "--preds",
                 dir + "predictions.jsonl", "--out", w / "e.json"}) == 0);
    REQUIRE(run({"report", "--eval", w / "e.json", "--format", "json", "--by-category", dir + "annotations.jsonl",
                 "--out", w / "r.json"}) == 0);
    const auto report = json::parse(read_file(w / "r.json"));
    const auto& buckets = report.at("by_category").at("buckets");
    REQUIRE(buckets.size() == 6);
    CHECK(buckets[0].at("category") == "Context");
    CHECK(buckets[0].at("value") == false);
    CHECK(buckets[0].at("pairs") == 43);
    CHECK(buckets[1].at("pairs") == 85);

    REQUIRE(run({"report", "--eval", w / "e.json", "--format", "markdown-table", "--out", w / "r.md"}) == 0);
    CHECK(read_file(w / "r.md").rfind("| Model |", 0) == 0);
    REQUIRE(run({"report", "--eval", w / "e.json", "--format", "tsv", "--out", w / "r.tsv"}) == 0);
    CHECK(read_file(w / "r.tsv").rfind("variant\tprecision", 0) == 0);
    CHECK(run({"report", "--eval", w / "e.json", "--format", "xml", "--out", w / "r.xml"}) == cli::kExitValidation);

    // reports are deterministic
    REQUIRE(run({"report", "--eval", w / "e.json", "--format", "json", "--by-category", dir + "annotations.jsonl",
                 "--out", w / "r2.json"}) == 0);
    CHECK(read_file(w / "r.json") == read_file(w / "r2.json"));
}

TEST_CASE("human agreement through evaluate --annotator-b")
{
    Workdir w("agreement");
    const auto corpus = kFixtures + "/mini/corpus.jsonl";
    const auto claims = kFixtures + "/mini/claims.jsonl";
    REQUIRE(run({"evaluate", "--gold", claims, "--corpus", corpus, "--annotator-b", claims, "--out", w / "h.json"}) ==
            0);
    const auto h = json::parse(read_file(w / "h.json"));
    CHECK(h.at("mode") == "human_agreement");
    for (const auto& v : h.at("variants")) {
        CHECK(v.at("f1") == 1.0);
    }
}

// Subprocess-level tests for the citerec command-line interface: exit codes,
// output files, manifests, determinism, and configuration precedence.
//
// The binary under test is injected at compile time as CITEREC_CLI_PATH.

// The core library builds cpp-httplib with TLS support; every test TU that
// includes the header must configure it identically to stay ODR-clean.
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "citerec/corpus.hpp"
#include "citerec/hnsw.hpp"
#include "citerec/util.hpp"
#include "unit/oracles.hpp"

using namespace citerec;
using nlohmann::json;
using testing_oracles::TempDir;

namespace {

namespace fs = std::filesystem;

struct CliResult {
    int code = -1;       // -1: did not exit normally
    std::string out;     // captured stdout
    std::string err;     // captured stderr
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string shell_quote(const std::string& s) { return "'" + s + "'"; }

// ENGINE_* variables that would leak into resolution tests if set in the
// ambient environment; every run starts from a scrubbed slate.
const char* kScrubbed[] = {"ENGINE_CONFIG",       "ENGINE_PROVIDER", "ENGINE_DIM",
                           "ENGINE_SEED",         "ENGINE_TOKENIZER", "ENGINE_EMBED_API_KEY",
                           "ENGINE_EF_SEARCH",    "ENGINE_POOL_SIZE", "ENGINE_THREADS",
                           "ENGINE_SPLIT_DATE"};

CliResult run_cli(const TempDir& dir, const std::vector<std::string>& args,
                  const std::map<std::string, std::string>& env = {}) {
    static std::atomic<int> seq{0};
    const int n = seq.fetch_add(1);
    const fs::path out_path = dir.file("cli_stdout_" + std::to_string(n) + ".txt");
    const fs::path err_path = dir.file("cli_stderr_" + std::to_string(n) + ".txt");

    std::string cmd = "env";
    for (const char* name : kScrubbed) cmd += std::string(" -u ") + name;
    for (const auto& [k, v] : env) cmd += " " + k + "=" + shell_quote(v);
    cmd += " " + shell_quote(CITEREC_CLI_PATH);
    for (const auto& a : args) cmd += " " + shell_quote(a);
    cmd += " > " + shell_quote(out_path.string()) + " 2> " + shell_quote(err_path.string());

    const int status = std::system(cmd.c_str());
    CliResult r;
    if (status != -1 && WIFEXITED(status)) r.code = WEXITSTATUS(status);
    r.out = slurp(out_path);
    r.err = slurp(err_path);
    return r;
}

json read_json(const fs::path& p) {
    const json j = json::parse(slurp(p), nullptr, false);
    REQUIRE(!j.is_discarded());
    return j;
}

/// Looks up a resolved config entry in a run manifest.
std::pair<std::string, std::string> config_entry(const json& manifest, const std::string& key) {
    for (const auto& e : manifest["config"]) {
        if (e["key"] == key) return {e["value"].get<std::string>(), e["source"].get<std::string>()};
    }
    FAIL("manifest has no config entry \"", key, "\"");
    return {};
}

struct SynthPaths {
    fs::path corpus;
    fs::path cache;
    fs::path manifest;
};

/// Generates the shared benchmark via the CLI itself: 300 pre + 150 stream
/// records, dim 16, split 2024-01-01 (stream dates run through 2024-01-15).
SynthPaths gen_small_synth(const TempDir& dir, const std::string& tag,
                           std::uint64_t seed = 5, bool with_cache = true) {
    SynthPaths p;
    p.corpus = dir.file(tag + "_corpus.jsonl");
    p.cache = dir.file(tag + "_cache.bin");
    p.manifest = dir.file(tag + "_corpus.jsonl.manifest.json");
    std::vector<std::string> args = {
        "gen-synth",      "--out-corpus", p.corpus.string(), "--seed",
        std::to_string(seed), "--dim",    "16",              "--clusters",
        "6",              "--n-pre",      "300",             "--n-stream",
        "150",            "--pre-dates",  "15",              "--stream-dates",
        "15",             "--split-date", "2024-01-01",      "--cites-per-doc",
        "3",              "--in-range-fraction", "0.4",      "--noise",
        "0.25"};
    if (with_cache) {
        args.push_back("--out-cache");
        args.push_back(p.cache.string());
    }
    const CliResult r = run_cli(dir, args);
    REQUIRE(r.code == 0);
    REQUIRE(fs::exists(p.corpus));
    if (with_cache) REQUIRE(fs::exists(p.cache));
    return p;
}

}  // namespace

TEST_CASE("help exits 0 and parse errors exit 2") {
    TempDir dir("cli_usage");

    CHECK(run_cli(dir, {"--help"}).code == 0);
    CHECK(run_cli(dir, {"--help"}).out.find("citerec") != std::string::npos);
    CHECK(run_cli(dir, {"gen-synth", "--help"}).code == 0);

    CHECK(run_cli(dir, {}).code == 2);                       // subcommand required
    CHECK(run_cli(dir, {"no-such-command"}).code == 2);
    CHECK(run_cli(dir, {"embed"}).code == 2);                // missing required flags
    CHECK(run_cli(dir, {"gen-synth", "--out-corpus"}).code == 2);  // flag without value
    const CliResult r = run_cli(dir, {"embed", "--bogus-flag", "x"});
    CHECK(r.code == 2);
    CHECK(!r.err.empty());
}

TEST_CASE("gen-synth is deterministic and writes corpus, cache, and manifest") {
    TempDir dir("cli_synth");
    const SynthPaths a = gen_small_synth(dir, "a", 5);
    const SynthPaths b = gen_small_synth(dir, "b", 5);
    const SynthPaths c = gen_small_synth(dir, "c", 6);

    CHECK(slurp(a.corpus) == slurp(b.corpus));  // same seed → same bytes
    CHECK(slurp(a.cache) == slurp(b.cache));
    CHECK(slurp(a.corpus) != slurp(c.corpus));  // different seed → different corpus

    REQUIRE(fs::exists(a.manifest));
    const json m = read_json(a.manifest);
    CHECK(m["command"] == "gen-synth");
    CHECK(m["run_id"].get<std::string>().size() == 16);
    CHECK(config_entry(m, "synth-seed") == std::pair<std::string, std::string>{"5", "flag"});
    CHECK(config_entry(m, "n-pre").first == "300");
    CHECK(m["outputs"].size() == 2);
    CHECK(m["started_at"].get<std::string>().size() == 20);

    // run_id covers command + config + inputs, not output paths or times.
    const json mb = read_json(b.manifest);
    const json mc = read_json(c.manifest);
    CHECK(m["run_id"] == mb["run_id"]);
    CHECK(m["run_id"] != mc["run_id"]);

    const CorpusStore corpus = load_corpus(a.corpus);
    CHECK(corpus.size() == 450);
    CHECK(corpus.min_date() == Date::parse_or_throw("2023-12-17"));
    CHECK(corpus.max_date() == Date::parse_or_throw("2024-01-15"));
}

TEST_CASE("embed fills a cache once and reruns are no-ops") {
    TempDir dir("cli_embed");
    const SynthPaths synth = gen_small_synth(dir, "base", 5, /*with_cache=*/false);
    const fs::path cache = dir.file("hash_cache.bin");

    const CliResult first = run_cli(dir, {"embed", "--corpus", synth.corpus.string(), "--cache",
                                          cache.string(), "--provider", "hash", "--dim", "16",
                                          "--seed", "9"});
    REQUIRE(first.code == 0);
    CHECK(first.out.find("0 already cached, 450 new") != std::string::npos);
    REQUIRE(fs::exists(cache));
    const json m = read_json(fs::path(cache.string() + ".manifest.json"));
    CHECK(m["command"] == "embed");
    CHECK(config_entry(m, "provider") == std::pair<std::string, std::string>{"hash", "flag"});
    CHECK(config_entry(m, "dim").first == "16");

    const CliResult second = run_cli(dir, {"embed", "--corpus", synth.corpus.string(), "--cache",
                                           cache.string(), "--provider", "hash", "--dim", "16",
                                           "--seed", "9"});
    REQUIRE(second.code == 0);
    CHECK(second.out.find("450 already cached, 0 new") != std::string::npos);

    SUBCASE("tfidf provider fits on the corpus") {
        const fs::path tcache = dir.file("tfidf_cache.bin");
        const CliResult r = run_cli(dir, {"embed", "--corpus", synth.corpus.string(), "--cache",
                                          tcache.string(), "--provider", "tfidf", "--dim", "64"});
        REQUIRE(r.code == 0);
        CHECK(r.out.find("tfidf:unicode:64:") != std::string::npos);
    }
    SUBCASE("provider is required") {
        const CliResult r = run_cli(dir, {"embed", "--corpus", synth.corpus.string(), "--cache",
                                          dir.file("x.bin").string()});
        CHECK(r.code == 2);
        CHECK(r.err.find("provider") != std::string::npos);
    }
    SUBCASE("missing corpus file is an i/o error") {
        const CliResult r = run_cli(dir, {"embed", "--corpus", dir.file("nope.jsonl").string(),
                                          "--cache", dir.file("x.bin").string(), "--provider",
                                          "hash"});
        CHECK(r.code == 4);
    }
    SUBCASE("unknown provider name") {
        const CliResult r = run_cli(dir, {"embed", "--corpus", synth.corpus.string(), "--cache",
                                          dir.file("x.bin").string(), "--provider", "sideways"});
        CHECK(r.code == 2);
    }
}

TEST_CASE("build-index snapshots the full corpus or a pre-split prefix") {
    TempDir dir("cli_build");
    const SynthPaths synth = gen_small_synth(dir, "base", 5);
    const fs::path full_snap = dir.file("full.hnsw");
    const fs::path pre_snap = dir.file("pre.hnsw");

    const CliResult full = run_cli(dir, {"build-index", "--corpus", synth.corpus.string(),
                                         "--cache", synth.cache.string(), "--out",
                                         full_snap.string(), "--m", "8", "--ef-construction",
                                         "40"});
    REQUIRE(full.code == 0);
    CHECK(full.out.find("indexed 450 nodes") != std::string::npos);
    const HnswIndex loaded = HnswIndex::load(full_snap);
    CHECK(loaded.size() == 450);
    CHECK(loaded.dim() == 16);
    CHECK(loaded.params().M == 8);
    CHECK(loaded.audit().clean());

    const CliResult pre = run_cli(dir, {"build-index", "--corpus", synth.corpus.string(),
                                        "--cache", synth.cache.string(), "--out",
                                        pre_snap.string(), "--split-date", "2024-01-01", "--m",
                                        "8", "--ef-construction", "40"});
    REQUIRE(pre.code == 0);
    CHECK(pre.out.find("indexed 300 nodes") != std::string::npos);
    CHECK(HnswIndex::load(pre_snap).size() == 300);

    const json m = read_json(fs::path(full_snap.string() + ".manifest.json"));
    CHECK(m["command"] == "build-index");
    CHECK(m["inputs"].size() == 2);  // corpus + cache
    CHECK(config_entry(m, "m") == std::pair<std::string, std::string>{"8", "flag"});
    CHECK(config_entry(m, "ef-search") == std::pair<std::string, std::string>{"2000", "default"});

    SUBCASE("missing cache file is an i/o error") {
        const CliResult r = run_cli(dir, {"build-index", "--corpus", synth.corpus.string(),
                                          "--cache", dir.file("none.bin").string(), "--out",
                                          dir.file("x.hnsw").string()});
        CHECK(r.code == 4);
    }
    SUBCASE("split before every record leaves nothing to index") {
        const CliResult r = run_cli(dir, {"build-index", "--corpus", synth.corpus.string(),
                                          "--cache", synth.cache.string(), "--out",
                                          dir.file("x.hnsw").string(), "--split-date",
                                          "2000-01-01"});
        CHECK(r.code == 2);
        CHECK(r.err.find("empty index") != std::string::npos);
    }
    SUBCASE("malformed split date") {
        const CliResult r = run_cli(dir, {"build-index", "--corpus", synth.corpus.string(),
                                          "--cache", synth.cache.string(), "--out",
                                          dir.file("x.hnsw").string(), "--split-date",
                                          "01/02/2024"});
        CHECK(r.code == 2);
    }
    SUBCASE("cache missing corpus vectors") {
        // A cache built for a smaller corpus cannot cover this one.
        const SynthPaths small = gen_small_synth(dir, "small", 5);
        const fs::path small_cache = dir.file("small_only.bin");
        // Re-embed just 40 records: corpus trimmed to its first 40 lines.
        const fs::path trimmed = dir.file("trimmed.jsonl");
        {
            std::istringstream all(slurp(small.corpus));
            std::ofstream out(trimmed);
            std::string line;
            for (int i = 0; i < 40 && std::getline(all, line); ++i) out << line << "\n";
        }
        REQUIRE(run_cli(dir, {"embed", "--corpus", trimmed.string(), "--cache",
                              small_cache.string(), "--provider", "hash", "--dim", "16"})
                    .code == 0);
        const CliResult r = run_cli(dir, {"build-index", "--corpus", synth.corpus.string(),
                                          "--cache", small_cache.string(), "--out",
                                          dir.file("x.hnsw").string()});
        CHECK(r.code == 2);
        CHECK(r.err.find("no vector") != std::string::npos);
    }
}

TEST_CASE("recommend emits ranked JSONL and respects the temporal split") {
    TempDir dir("cli_rec");
    const SynthPaths synth = gen_small_synth(dir, "base", 5);
    const fs::path pre_snap = dir.file("pre.hnsw");
    REQUIRE(run_cli(dir, {"build-index", "--corpus", synth.corpus.string(), "--cache",
                          synth.cache.string(), "--out", pre_snap.string(), "--split-date",
                          "2024-01-01", "--m", "8", "--ef-construction", "40"})
                .code == 0);

    const std::vector<std::string> base_args = {
        "recommend", "--snapshot", pre_snap.string(),    "--cache", synth.cache.string(),
        "--corpus",  synth.corpus.string(), "--pool-size", "50",    "--k", "10"};

    SUBCASE("single query to stdout, deterministic") {
        auto args = base_args;
        args.insert(args.end(), {"--query-id", "SYN000350"});
        const CliResult r1 = run_cli(dir, args);
        REQUIRE(r1.code == 0);
        const json line = json::parse(r1.out);
        CHECK(line["query"] == "SYN000350");
        CHECK(line["pool_size"] == 50);
        REQUIRE(line["items"].size() == 10);
        double prev = 2.0;
        for (const auto& item : line["items"]) {
            // The snapshot predates the split, so every candidate is pre-split.
            const int ordinal = std::stoi(item["id"].get<std::string>().substr(3));
            CHECK(ordinal < 300);
            CHECK(item["score"].get<double>() <= prev);
            prev = item["score"].get<double>();
        }
        const CliResult r2 = run_cli(dir, args);
        CHECK(r2.code == 0);
        CHECK(r2.out == r1.out);
    }

    SUBCASE("date-range selection writes a file and manifest") {
        const fs::path out = dir.file("recs.jsonl");
        auto args = base_args;
        args.insert(args.end(),
                    {"--from", "2024-01-01", "--to", "2024-01-05", "--out", out.string()});
        const CliResult r = run_cli(dir, args);
        REQUIRE(r.code == 0);
        REQUIRE(fs::exists(out));

        // Expected: one line per record filed in the range, in (date, id) order.
        const CorpusStore corpus = load_corpus(synth.corpus);
        std::size_t expected = 0;
        for (auto& [date, records] :
             queries_by_date(corpus, Date::parse_or_throw("2024-01-01"),
                             Date::parse_or_throw("2024-01-05")))
            expected += records.size();
        REQUIRE(expected > 0);

        std::size_t lines = 0;
        std::istringstream in(slurp(out));
        std::string line;
        std::string prev_id;
        while (std::getline(in, line)) {
            const json j = json::parse(line);
            CHECK(j["items"].size() == 10);
            ++lines;
        }
        CHECK(lines == expected);
        const json m = read_json(fs::path(out.string() + ".manifest.json"));
        CHECK(m["command"] == "recommend");
        CHECK(m["outputs"] == json::array({out.string()}));
    }

    SUBCASE("query selection must be exactly one method") {
        auto both = base_args;
        both.insert(both.end(),
                    {"--query-id", "SYN000350", "--from", "2024-01-01", "--to", "2024-01-02"});
        CHECK(run_cli(dir, both).code == 2);

        CHECK(run_cli(dir, base_args).code == 2);  // neither

        auto half = base_args;
        half.insert(half.end(), {"--from", "2024-01-01"});
        CHECK(run_cli(dir, half).code == 2);  // --from without --to
    }

    SUBCASE("unknown query id") {
        auto args = base_args;
        args.insert(args.end(), {"--query-id", "SYN999999"});
        CHECK(run_cli(dir, args).code == 2);
    }

    SUBCASE("missing snapshot is an i/o error") {
        const CliResult r = run_cli(dir, {"recommend", "--snapshot",
                                          dir.file("none.hnsw").string(), "--cache",
                                          synth.cache.string(), "--corpus",
                                          synth.corpus.string(), "--query-id", "SYN000001"});
        CHECK(r.code == 4);
    }
}

TEST_CASE("eval writes report, runlog, and summary with reproducible metrics") {
    TempDir dir("cli_eval");
    const SynthPaths synth = gen_small_synth(dir, "base", 5);

    auto eval_args = [&](const std::string& mode, const fs::path& out_dir) {
        return std::vector<std::string>{
            "eval",        "--corpus",     synth.corpus.string(),
            "--cache",     synth.cache.string(),
            "--mode",      mode,
            "--split-date", "2024-01-01",
            "--query-from", "2024-01-01",
            "--query-to",  "2024-01-15",
            "--cutoffs",   "10,50",
            "--pool-size", "100",
            "--m",         "8",
            "--ef-construction", "40",
            "--ef-search", "600",
            "--out-dir",   out_dir.string()};
    };

    const fs::path inc1 = dir.path() / "inc1";
    const fs::path inc2 = dir.path() / "inc2";
    const fs::path stat = dir.path() / "stat";
    REQUIRE(run_cli(dir, eval_args("incremental", inc1)).code == 0);
    REQUIRE(run_cli(dir, eval_args("incremental", inc2)).code == 0);
    REQUIRE(run_cli(dir, eval_args("static", stat)).code == 0);

    for (const fs::path& d : {inc1, inc2, stat}) {
        CHECK(fs::exists(d / "report.json"));
        CHECK(fs::exists(d / "runlog.csv"));
        CHECK(fs::exists(d / "summary_row.csv"));
        CHECK(fs::exists(d / "manifest.json"));
    }

    const json r1 = read_json(inc1 / "report.json");
    const json r2 = read_json(inc2 / "report.json");
    CHECK(r1["n_queries"].get<int>() > 50);
    CHECK(r1["rec_at"].contains("rec@10"));
    CHECK(r1["rec_at"].contains("rec@50"));

    // Metrics are bit-identical across reruns; only wall clock may differ.
    for (const char* key : {"n_queries", "mrr", "ndcg", "rec_at"})
        CHECK(r1[key] == r2[key]);

    // The update advantage: an incrementally maintained index sees stream
    // documents that the static snapshot cannot return.
    const json rs = read_json(stat / "report.json");
    CHECK(r1["rec_at"]["rec@50"].get<double>() > rs["rec_at"]["rec@50"].get<double>());

    // Summary row carries the manifest's run id.
    const json manifest = read_json(inc1 / "manifest.json");
    const std::string summary = slurp(inc1 / "summary_row.csv");
    CHECK(summary.rfind("run_id,mode,n_queries,", 0) == 0);
    CHECK(summary.find(manifest["run_id"].get<std::string>()) != std::string::npos);
    CHECK(summary.find(",incremental,") != std::string::npos);

    // Runlog: header + one row per streamed date.
    const std::string runlog = slurp(inc1 / "runlog.csv");
    CHECK(runlog.rfind("date,n_queries,n_inserted,", 0) == 0);
    CHECK(std::count(runlog.begin(), runlog.end(), '\n') == 16);  // header + 15 dates

    SUBCASE("invalid mode and ranges exit 2") {
        CHECK(run_cli(dir, eval_args("sideways", dir.path() / "x")).code == 2);

        auto bad = eval_args("static", dir.path() / "y");
        bad[9] = "2024-01-10";  // query-from
        bad[11] = "2024-01-05"; // query-to < query-from
        CHECK(run_cli(dir, bad).code == 2);

        auto no_queries = eval_args("static", dir.path() / "z");
        no_queries[9] = "2030-01-01";
        no_queries[11] = "2030-01-02";  // beyond every corpus date
        CHECK(run_cli(dir, no_queries).code == 2);
    }
}

TEST_CASE("keywords writes a deterministic frequency table") {
    TempDir dir("cli_kw");
    const SynthPaths synth = gen_small_synth(dir, "base", 5, /*with_cache=*/false);
    const fs::path csv1 = dir.file("kw1.csv");
    const fs::path csv4 = dir.file("kw4.csv");

    const CliResult r1 = run_cli(dir, {"keywords", "--corpus", synth.corpus.string(), "--out",
                                       csv1.string(), "--top-n", "5", "--threads", "1"});
    REQUIRE(r1.code == 0);
    const CliResult r4 = run_cli(dir, {"keywords", "--corpus", synth.corpus.string(), "--out",
                                       csv4.string(), "--top-n", "5", "--threads", "4"});
    REQUIRE(r4.code == 0);

    const std::string table = slurp(csv1);
    CHECK(table.rfind("keyword,count\n", 0) == 0);
    CHECK(std::count(table.begin(), table.end(), '\n') > 2);
    CHECK(table == slurp(csv4));  // thread count cannot change the result
    CHECK(fs::exists(fs::path(csv1.string() + ".manifest.json")));

    SUBCASE("empty corpus yields the bare header") {
        const fs::path empty = dir.file("empty.jsonl");
        std::ofstream(empty) << "\n\n";
        const fs::path out = dir.file("kw_empty.csv");
        const CliResult r = run_cli(dir, {"keywords", "--corpus", empty.string(), "--out",
                                          out.string()});
        REQUIRE(r.code == 0);
        CHECK(slurp(out) == "keyword,count\n");
    }
    SUBCASE("missing corpus is an i/o error") {
        CHECK(run_cli(dir, {"keywords", "--corpus", dir.file("none.jsonl").string(), "--out",
                            dir.file("x.csv").string()})
                  .code == 4);
    }
    SUBCASE("bad window exits 2") {
        CHECK(run_cli(dir, {"keywords", "--corpus", synth.corpus.string(), "--out",
                            dir.file("x.csv").string(), "--window", "1"})
                  .code == 2);
    }
}

TEST_CASE("configuration precedence: flag over env over file over default") {
    TempDir dir("cli_cfg");
    const SynthPaths synth = gen_small_synth(dir, "base", 5, /*with_cache=*/false);

    const fs::path cfg_file = dir.file("engine.json");
    std::ofstream(cfg_file) << R"({"provider":"hash","dim":32,"seed":11})";

    auto embed_with = [&](const std::string& tag, const std::vector<std::string>& extra,
                          const std::map<std::string, std::string>& env) {
        const fs::path cache = dir.file(tag + ".bin");
        std::vector<std::string> args = {"embed", "--corpus", synth.corpus.string(), "--cache",
                                         cache.string()};
        args.insert(args.end(), extra.begin(), extra.end());
        const CliResult r = run_cli(dir, args, env);
        REQUIRE(r.code == 0);
        return read_json(fs::path(cache.string() + ".manifest.json"));
    };

    SUBCASE("file values apply when nothing else is set") {
        const json m = embed_with("file", {"--config", cfg_file.string()}, {});
        CHECK(config_entry(m, "provider") == std::pair<std::string, std::string>{"hash", "file"});
        CHECK(config_entry(m, "dim") == std::pair<std::string, std::string>{"32", "file"});
        CHECK(config_entry(m, "seed") == std::pair<std::string, std::string>{"11", "file"});
        CHECK(config_entry(m, "config").second == "flag");
    }
    SUBCASE("environment overrides the file") {
        const json m = embed_with("env", {"--config", cfg_file.string()},
                                  {{"ENGINE_DIM", "64"}});
        CHECK(config_entry(m, "dim") == std::pair<std::string, std::string>{"64", "env"});
        CHECK(config_entry(m, "seed").second == "file");  // untouched settings stay from file
    }
    SUBCASE("flag overrides the environment") {
        const json m = embed_with("flag", {"--config", cfg_file.string(), "--dim", "16"},
                                  {{"ENGINE_DIM", "64"}});
        CHECK(config_entry(m, "dim") == std::pair<std::string, std::string>{"16", "flag"});
    }
    SUBCASE("defaults are recorded as defaults") {
        const json m = embed_with("def", {"--provider", "hash"}, {});
        CHECK(config_entry(m, "dim") == std::pair<std::string, std::string>{"0", "default"});
        CHECK(config_entry(m, "seed") == std::pair<std::string, std::string>{"1", "default"});
    }
    SUBCASE("ENGINE_CONFIG names the file when no flag is given") {
        const json m = embed_with("envcfg", {}, {{"ENGINE_CONFIG", cfg_file.string()}});
        CHECK(config_entry(m, "provider").first == "hash");
        CHECK(config_entry(m, "config").second == "env");
    }
    SUBCASE("a missing config file exits 2") {
        const CliResult r = run_cli(dir, {"embed", "--corpus", synth.corpus.string(), "--cache",
                                          dir.file("x.bin").string(), "--config",
                                          dir.file("none.json").string()});
        CHECK(r.code == 2);
    }
}

TEST_CASE("remote embedding: credentials, success, and provider failures") {
    TempDir dir("cli_remote");
    // A 40-record corpus keeps the loopback exchange to one request.
    const SynthPaths big = gen_small_synth(dir, "base", 5, /*with_cache=*/false);
    const fs::path corpus = dir.file("small.jsonl");
    {
        std::istringstream all(slurp(big.corpus));
        std::ofstream out(corpus);
        std::string line;
        for (int i = 0; i < 40 && std::getline(all, line); ++i) out << line << "\n";
    }

    // Loopback OpenAI-style endpoint: echoes one unit vector per input.
    httplib::Server server;
    std::atomic<int> hits{0};
    server.Post("/v1/embeddings", [&](const httplib::Request& req, httplib::Response& res) {
        hits.fetch_add(1);
        const json body = json::parse(req.body);
        json data = json::array();
        for (std::size_t i = 0; i < body["input"].size(); ++i) {
            json e = json::array();
            for (int d = 0; d < 8; ++d) e.push_back(d == static_cast<int>(i % 8) ? 1.0 : 0.0);
            data.push_back({{"object", "embedding"}, {"index", i}, {"embedding", e}});
        }
        res.set_content(json{{"object", "list"}, {"data", data}}.dump(), "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread worker([&] { server.listen_after_bind(); });
    server.wait_until_ready();
    const std::string endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1";

    const std::vector<std::string> base = {"embed",    "--corpus",        corpus.string(),
                                           "--provider", "remote",        "--embed-endpoint",
                                           endpoint,   "--embed-model",   "test-model",
                                           "--dim",    "8",               "--embed-max-retries",
                                           "2",        "--embed-backoff", "0.01"};

    SUBCASE("success records the credential as set, never its value") {
        auto args = base;
        args.insert(args.end(), {"--cache", dir.file("remote.bin").string()});
        const CliResult r = run_cli(dir, args, {{"ENGINE_EMBED_API_KEY", "sk-secret-123"}});
        REQUIRE(r.code == 0);
        CHECK(hits.load() == 1);
        const json m = read_json(dir.file("remote.bin.manifest.json"));
        CHECK(config_entry(m, "embed-api-key") ==
              std::pair<std::string, std::string>{"<set>", "env"});
        CHECK(m.dump().find("sk-secret-123") == std::string::npos);
        CHECK(config_entry(m, "embed-model").first == "test-model");
    }
    SUBCASE("a missing credential fails before any request") {
        const int before = hits.load();
        auto args = base;
        args.insert(args.end(), {"--cache", dir.file("nocred.bin").string()});
        const CliResult r = run_cli(dir, args);
        CHECK(r.code == 2);
        CHECK(r.err.find("ENGINE_EMBED_API_KEY") != std::string::npos);
        CHECK(hits.load() == before);
    }
    SUBCASE("an unreachable endpoint is a provider error") {
        auto args = base;
        for (auto& a : args)
            if (a == endpoint) a = "http://127.0.0.1:1/v1";
        args.insert(args.end(), {"--cache", dir.file("down.bin").string(), "--embed-timeout",
                                 "0.3"});
        const CliResult r = run_cli(dir, args, {{"ENGINE_EMBED_API_KEY", "k"}});
        CHECK(r.code == 3);
    }

    server.stop();
    worker.join();
}

TEST_CASE("serve answers HTTP requests and persists a snapshot on shutdown") {
    TempDir dir("cli_serve");
    const SynthPaths synth = gen_small_synth(dir, "base", 5);
    const fs::path snap = dir.file("serve.hnsw");
    REQUIRE(run_cli(dir, {"build-index", "--corpus", synth.corpus.string(), "--cache",
                          synth.cache.string(), "--out", snap.string(), "--m", "8",
                          "--ef-construction", "40"})
                .code == 0);
    const fs::path snap_out = dir.file("serve_out.hnsw");
    const fs::path log_path = dir.file("serve_log.txt");
    const fs::path pid_path = dir.file("serve_pid.txt");

    // Launch detached; the pid lets the test deliver SIGTERM later.
    const std::string cmd =
        "env -u ENGINE_CONFIG " + std::string(CITEREC_CLI_PATH) + " serve --snapshot '" +
        snap.string() + "' --snapshot-out '" + snap_out.string() +
        "' --port 0 --default-k 5 --provider hash --dim 16 > '" + log_path.string() +
        "' 2>&1 & echo $! > '" + pid_path.string() + "'";
    REQUIRE(std::system(cmd.c_str()) == 0);
    const pid_t pid = std::stoi(slurp(pid_path));
    REQUIRE(pid > 1);

    // Wait for the server to announce its bound port.
    int port = 0;
    for (int attempt = 0; attempt < 100 && port == 0; ++attempt) {
        const std::string log = slurp(log_path);
        const std::size_t at = log.find("127.0.0.1:");
        if (at != std::string::npos) {
            const std::size_t end = log.find_first_not_of("0123456789", at + 10);
            port = std::stoi(log.substr(at + 10, end - (at + 10)));
            break;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
    REQUIRE(port > 0);

    {
        httplib::Client cli("127.0.0.1", port);
        cli.set_connection_timeout(5);
        cli.set_read_timeout(5);

        const auto stats = cli.Get("/stats");
        REQUIRE(stats);
        CHECK(stats->status == 200);
        CHECK(json::parse(stats->body)["count"] == 450);

        const auto rec = cli.Post("/recommend", R"({"query_id":"SYN000010"})",
                                  "application/json");
        REQUIRE(rec);
        CHECK(rec->status == 200);
        CHECK(json::parse(rec->body)["items"].size() == 5);

        const auto ins = cli.Post(
            "/insert", R"({"pub_number":"LIVE1","abstract":"fresh matter"})", "application/json");
        REQUIRE(ins);
        CHECK(ins->status == 200);
    }

    // Graceful shutdown must persist the updated index.
    REQUIRE(kill(pid, SIGTERM) == 0);
    for (int attempt = 0; attempt < 100 && kill(pid, 0) == 0; ++attempt)
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
    CHECK(kill(pid, 0) != 0);

    REQUIRE(fs::exists(snap_out));
    const HnswIndex persisted = HnswIndex::load(snap_out);
    CHECK(persisted.size() == 451);  // 450 indexed + 1 live insert
    CHECK(persisted.internal_id_of("LIVE1") >= 0);
    const std::string log = slurp(log_path);
    CHECK(log.find("snapshot persisted (451 vectors)") != std::string::npos);
    CHECK(fs::exists(fs::path(snap_out.string() + ".manifest.json")));
}

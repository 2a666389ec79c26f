#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include "rba/corpus.hpp"

using namespace rba;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int run_cmd(const std::string& cmd) {
    const int status = std::system(cmd.c_str());
    if (status == -1) return -1;
    if (WIFEXITED(status)) return WEXITSTATUS(status);
    return -2;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct CliSandbox {
    fs::path dir;
    fs::path out_log;
    fs::path err_log;

    explicit CliSandbox(const std::string& name) {
        dir = fs::temp_directory_path() / "rba_cli_test" / name;
        fs::remove_all(dir);
        fs::create_directories(dir);
        out_log = dir / "stdout.txt";
        err_log = dir / "stderr.txt";
    }

    int run(const std::string& args) const {
        return run_cmd(std::string(RBAUDIT_BIN) + " " + args + " > " +
                       out_log.string() + " 2> " + err_log.string());
    }

    fs::path write_seeds() const {
        struct Row {
            const char* id;
            const char* query;
            const char* text;
            const char* answer;
            const char* entity;
            const char* variant;
        };
        static const Row rows[] = {
            {"ada", "When was Ada Lovelace born?",
             "Ada Lovelace was born in 1815. She wrote the first program. "
             "Her notes described the engine.",
             "1815", "Ada Lovelace", "the countess"},
            {"eiffel", "Where is the Eiffel Tower?",
             "The Eiffel Tower stands in Paris. It was finished in 1889. "
             "Tourists visit it daily.",
             "Paris", "Eiffel Tower", "iron lattice"},
            {"radium", "Who discovered Radium?",
             "Radium was discovered by Marie Curie. The element glowed in the "
             "dark. Its isolation took years.",
             "Marie Curie", "Radium", "the element"},
        };
        fs::path p = dir / "seeds.jsonl";
        std::ofstream out(p, std::ios::binary);
        for (const Row& r : rows) {
            std::string text(r.text);
            json j{{"id", r.id},          {"query", r.query},
                   {"text", text},        {"answer_text", r.answer},
                   {"answer_offset", text.find(r.answer)},
                   {"head_entity", r.entity}, {"variant", r.variant}};
            out << j.dump() << "\n";
        }
        return p;
    }

    fs::path write_fixture(bool all_queries = true) const {
        static const char* queries[] = {"When was Ada Lovelace born?",
                                        "Where is the Eiffel Tower?",
                                        "Who discovered Radium?"};
        fs::path p = dir / "llm_fixture.jsonl";
        std::ofstream out(p, std::ios::binary);
        bool first = true;
        for (const char* q : queries) {
            if (first && !all_queries) {
                first = false;
                continue;
            }
            first = false;
            out << json{{"kind", "rewrite"},
                        {"query", q},
                        {"generation", std::string("Clarified: ") + q}}
                       .dump()
                << "\n";
            out << json{{"kind", "q2d"},
                        {"query", q},
                        {"generation",
                         std::string("A passage answering: ") + q}}
                       .dump()
                << "\n";
        }
        return p;
    }

    fs::path write_config(const std::string& dataset, bool with_llm,
                          const fs::path& fixture = {}) const {
        json cfg{{"dataset", dataset},
                 {"output_dir", (dir / "out").string()},
                 {"cache_dir", (dir / "cache").string()},
                 {"parallelism", 2},
                 {"retrievers", json::array({{{"id", "toy"}}})},
                 {"strategies", json::array({{{"kind", "baseline"}}})}};
        if (with_llm) {
            cfg["endpoints"] = json::array({{{"id", "fx"},
                                             {"kind", "fixture"},
                                             {"path", fixture.string()}}});
            cfg["strategies"].push_back({{"kind", "rewrite"}, {"endpoint", "fx"}});
            cfg["strategies"].push_back({{"kind", "q2d"}, {"endpoint", "fx"}});
        }
        fs::path p = dir / "config.json";
        std::ofstream(p, std::ios::binary) << cfg.dump(2) << "\n";
        return p;
    }
};

}  // namespace

TEST_CASE("cli pipeline: generate, audit, enhance, offline rerun") {
    CliSandbox sb("pipeline");
    fs::path seeds = sb.write_seeds();
    fs::path dataset = sb.dir / "dataset.jsonl";

    REQUIRE(sb.run("generate --seeds " + seeds.string() + " --out " +
                   dataset.string() + " --seed 7") == 0);
    CHECK(slurp(sb.out_log).find("dataset written to") != std::string::npos);
    LoadResult loaded = load_dataset(dataset.string());
    CHECK(loaded.rejections.empty());
    CHECK(loaded.dataset.pairs.size() == 12);

    fs::path fixture = sb.write_fixture();
    fs::path config = sb.write_config(dataset.string(), true, fixture);

    // warm every generation first, without touching the report
    REQUIRE(sb.run("enhance --config " + config.string()) == 0);
    CHECK(fs::exists(sb.dir / "out" / "enhanced-rewrite-fx.jsonl"));
    CHECK(fs::exists(sb.dir / "out" / "enhanced-q2d-fx.jsonl"));
    CHECK(fs::exists(sb.dir / "cache" / "generations.jsonl"));

    // offline works because the cache is warm; exit 2 flags the one
    // degenerate cell (position pairs are invisible to bag-of-words scoring)
    REQUIRE(sb.run("audit --config " + config.string() + " --offline") == 2);
    CHECK(slurp(sb.out_log).find("report written to") != std::string::npos);
    fs::path report = sb.dir / "out" / "report.json";
    REQUIRE(fs::exists(report));
    CHECK(fs::exists(sb.dir / "out" / "report.md"));
    CHECK(fs::exists(sb.dir / "out" / "tables" / "summary.csv"));
    CHECK(fs::exists(sb.dir / "out" / "tables" / "cells.csv"));

    json parsed = json::parse(slurp(report));
    CHECK(parsed.at("cells").size() == 9);
    CHECK(parsed.at("strategy_order").size() == 3);
    for (const auto& err : parsed.at("errors")) {
        CHECK(err.at("bias_type") == "position");
        CHECK(err.at("stage") == "stats");
    }

    // identical config and caches give a byte-identical report
    const std::string first = slurp(report);
    REQUIRE(sb.run("audit --config " + config.string() + " --offline") == 2);
    CHECK(slurp(report) == first);
}

TEST_CASE("cli foil and decorrelate stages") {
    CliSandbox sb("stages");
    fs::path seeds = sb.write_seeds();
    fs::path dataset = sb.dir / "dataset.jsonl";
    REQUIRE(sb.run("generate --seeds " + seeds.string() + " --out " +
                   dataset.string()) == 0);
    fs::path config = sb.write_config(dataset.string(), false);

    REQUIRE(sb.run("decorrelate --config " + config.string()) == 0);
    json parsed = json::parse(slurp(sb.dir / "out" / "report.json"));
    CHECK(parsed.at("cells").empty());
    CHECK(parsed.at("decorrelation").at("baseline_abs_rho").size() == 4);

    // generated datasets carry no foil records, so the foil stage refuses
    CHECK(sb.run("foil --config " + config.string()) == 1);
    CHECK(slurp(sb.err_log).find("error:") != std::string::npos);
}

TEST_CASE("cli --out overrides the configured output directory") {
    CliSandbox sb("out_override");
    fs::path seeds = sb.write_seeds();
    fs::path dataset = sb.dir / "dataset.jsonl";
    REQUIRE(sb.run("generate --seeds " + seeds.string() + " --out " +
                   dataset.string()) == 0);
    fs::path config = sb.write_config(dataset.string(), false);
    fs::path other = sb.dir / "elsewhere";
    REQUIRE(sb.run("audit --config " + config.string() + " --out " +
                   other.string()) == 2);  // degenerate position cell
    CHECK(fs::exists(other / "report.json"));
    CHECK_FALSE(fs::exists(sb.dir / "out" / "report.json"));
}

TEST_CASE("cli surfaces partial failures as exit 2") {
    CliSandbox sb("partial");
    fs::path seeds = sb.write_seeds();
    fs::path dataset = sb.dir / "dataset.jsonl";
    REQUIRE(sb.run("generate --seeds " + seeds.string() + " --out " +
                   dataset.string()) == 0);
    fs::path fixture = sb.write_fixture(false);  // one query missing
    fs::path config = sb.write_config(dataset.string(), true, fixture);
    CHECK(sb.run("audit --config " + config.string()) == 2);
    CHECK(slurp(sb.err_log).find("cell error") != std::string::npos);
    // the report still exists, with the failures recorded inside
    json parsed = json::parse(slurp(sb.dir / "out" / "report.json"));
    CHECK_FALSE(parsed.at("errors").empty());
}

TEST_CASE("cli fails cleanly on bad input") {
    CliSandbox sb("bad_input");
    fs::path config =
        sb.write_config((sb.dir / "no_such_dataset.jsonl").string(), false);
    CHECK(sb.run("audit --config " + config.string()) == 1);
    CHECK(slurp(sb.err_log).find("error:") != std::string::npos);
    CHECK_FALSE(fs::exists(sb.dir / "out" / "report.json"));

    CHECK(sb.run("audit") != 0);                      // missing --config
    CHECK(sb.run("frobnicate") != 0);                 // unknown subcommand
    CHECK(sb.run("") != 0);                           // no subcommand
    CHECK(sb.run("audit --config " + (sb.dir / "absent.json").string()) == 1);
}

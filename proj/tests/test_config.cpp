#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "rba/config.hpp"
#include "rba/errors.hpp"
#include "rba/hash.hpp"

using namespace rba;
namespace fs = std::filesystem;

namespace {

const char* kMinimalConfig = R"({
  "dataset": "data/pairs.jsonl",
  "retrievers": [{"id": "toy"}],
  "strategies": [{"kind": "baseline"}]
})";

const char* kFullConfig = R"({
  "dataset": "data/pairs.jsonl",
  "output_dir": "results",
  "cache_dir": "cache",
  "alpha": 0.01,
  "bonferroni_family": 24,
  "parallelism": 2,
  "max_tokens": 128,
  "q2d_separator": " ",
  "prompts": {"rewrite": "RW {q}", "hyde": "HY {q}"},
  "endpoints": [
    {"id": "main", "kind": "http", "base_url": "https://llm.example/v1",
     "model": "m1", "auth_env": "LLM_TOKEN"},
    {"id": "fx", "kind": "fixture", "path": "fixtures/gen.jsonl"}
  ],
  "retrievers": [
    {"id": "toy-cos", "provider": {"kind": "toy"}, "metric": "cosine"},
    {"id": "toy-dot", "provider": {"kind": "toy"}, "metric": "dot",
     "length_penalty": -0.001},
    {"id": "toy-max", "provider": {"kind": "toy_multi"}, "metric": "maxsim"}
  ],
  "strategies": [
    {"kind": "baseline"},
    {"kind": "rewrite", "endpoint": "main"},
    {"kind": "hyde", "endpoint": "main"},
    {"kind": "q2d", "endpoint": "main"},
    {"kind": "hyde", "endpoint": "fx", "name": "hyde-cpt"}
  ]
})";

fs::path temp_file(const std::string& name, const std::string& content) {
    fs::path dir = fs::temp_directory_path() / "rba_config_test";
    fs::create_directories(dir);
    fs::path p = dir / name;
    std::ofstream out(p, std::ios::binary);
    out << content;
    return p;
}

// Tweaks one top-level or nested field of the full config and reparses.
Config parsed_with(const std::string& json_text) {
    return parse_config(json_text, "test");
}

}  // namespace

TEST_CASE("parse_config fills defaults") {
    Config cfg = parsed_with(kMinimalConfig);
    CHECK(cfg.dataset == "data/pairs.jsonl");
    CHECK(cfg.output_dir == "out");
    CHECK(cfg.cache_dir == "");
    CHECK(cfg.alpha == 0.05);
    CHECK(cfg.bonferroni_family == 0);
    CHECK(cfg.parallelism == 4);
    CHECK(cfg.enhance.max_tokens == 256);
    CHECK(cfg.enhance.q2d_separator == "\n");
    CHECK(cfg.enhance.templates.rewrite == PromptTemplates{}.rewrite);
    REQUIRE(cfg.retrievers.size() == 1);
    CHECK(cfg.retrievers[0].provider.kind == "toy");
    CHECK(cfg.retrievers[0].metric == Metric::cosine);
    CHECK(cfg.retrievers[0].length_penalty == 0.0);
    REQUIRE(cfg.strategies.size() == 1);
    CHECK(cfg.strategies[0].kind == StrategyKind::baseline);
    CHECK(cfg.strategies[0].name == "baseline");
    CHECK(baseline_strategy(cfg).name == "baseline");
}

TEST_CASE("parse_config reads every documented field") {
    Config cfg = parsed_with(kFullConfig);
    CHECK(cfg.output_dir == "results");
    CHECK(cfg.cache_dir == "cache");
    CHECK(cfg.alpha == 0.01);
    CHECK(cfg.bonferroni_family == 24);
    CHECK(cfg.parallelism == 2);
    CHECK(cfg.enhance.max_tokens == 128);
    CHECK(cfg.enhance.q2d_separator == " ");
    CHECK(cfg.enhance.templates.rewrite == "RW {q}");
    CHECK(cfg.enhance.templates.hyde == "HY {q}");
    REQUIRE(cfg.endpoints.size() == 2);
    CHECK(cfg.endpoints[0].id == "main");
    CHECK(cfg.endpoints[0].auth_env == "LLM_TOKEN");
    CHECK(cfg.endpoints[1].kind == "fixture");
    REQUIRE(cfg.retrievers.size() == 3);
    CHECK(cfg.retrievers[1].length_penalty == -0.001);
    CHECK(cfg.retrievers[2].metric == Metric::maxsim);
    REQUIRE(cfg.strategies.size() == 5);
    CHECK(cfg.strategies[1].name == "rewrite-main");
    CHECK(cfg.strategies[4].name == "hyde-cpt");
    CHECK(cfg.strategies[4].endpoint_id == "fx");
}

TEST_CASE("parse_config validation failures") {
    CHECK_THROWS_AS(parsed_with("not json"), ConfigError);
    CHECK_THROWS_AS(parsed_with("[]"), ConfigError);
    CHECK_THROWS_AS(parsed_with(R"({"retrievers":[{"id":"t"}],
        "strategies":[{"kind":"baseline"}]})"),
                    ConfigError);  // no dataset
    CHECK_THROWS_AS(parsed_with(R"({"dataset":"d","alpha":1.5,
        "retrievers":[{"id":"t"}],"strategies":[{"kind":"baseline"}]})"),
                    ConfigError);
    CHECK_THROWS_AS(parsed_with(R"({"dataset":"d","alpha":0,
        "retrievers":[{"id":"t"}],"strategies":[{"kind":"baseline"}]})"),
                    ConfigError);
    CHECK_THROWS_AS(parsed_with(R"({"dataset":"d","bonferroni_family":-1,
        "retrievers":[{"id":"t"}],"strategies":[{"kind":"baseline"}]})"),
                    ConfigError);
    CHECK_THROWS_AS(parsed_with(R"({"dataset":"d","parallelism":0,
        "retrievers":[{"id":"t"}],"strategies":[{"kind":"baseline"}]})"),
                    ConfigError);
    CHECK_THROWS_AS(parsed_with(R"({"dataset":"d",
        "strategies":[{"kind":"baseline"}]})"),
                    ConfigError);  // no retrievers
    CHECK_THROWS_AS(parsed_with(R"({"dataset":"d",
        "retrievers":[{"id":"t"}]})"),
                    ConfigError);  // no strategies
    CHECK_THROWS_AS(parsed_with(R"({"dataset":"d",
        "retrievers":[{"id":"t"},{"id":"t"}],
        "strategies":[{"kind":"baseline"}]})"),
                    ConfigError);  // duplicate retriever id
    CHECK_THROWS_AS(parsed_with(R"({"dataset":"d","retrievers":[{"id":"t"}],
        "strategies":[{"kind":"baseline"},{"kind":"baseline"}]})"),
                    ConfigError);  // duplicate strategy name
    CHECK_THROWS_AS(parsed_with(R"({"dataset":"d","retrievers":[{"id":"t"}],
        "strategies":[{"kind":"rewrite","endpoint":"e"}]})"),
                    ConfigError);  // baseline missing
    CHECK_THROWS_AS(parsed_with(R"({"dataset":"d","retrievers":[{"id":"t"}],
        "strategies":[{"kind":"baseline"},{"kind":"rewrite"}]})"),
                    ConfigError);  // non-baseline without endpoint
    CHECK_THROWS_AS(parsed_with(R"({"dataset":"d",
        "endpoints":[{"id":"e","base_url":"http://x"},
                     {"id":"e","base_url":"http://y"}],
        "retrievers":[{"id":"t"}],"strategies":[{"kind":"baseline"}]})"),
                    ConfigError);  // duplicate endpoint id
    CHECK_THROWS_AS(parsed_with(R"({"dataset":"d",
        "endpoints":[{"id":"e"}],
        "retrievers":[{"id":"t"}],"strategies":[{"kind":"baseline"}]})"),
                    ConfigError);  // http endpoint without base_url
}

TEST_CASE("metric and provider pairing is enforced both ways") {
    CHECK_THROWS_AS(parsed_with(R"({"dataset":"d",
        "retrievers":[{"id":"t","provider":{"kind":"toy"},"metric":"maxsim"}],
        "strategies":[{"kind":"baseline"}]})"),
                    ConfigError);
    CHECK_THROWS_AS(parsed_with(R"({"dataset":"d",
        "retrievers":[{"id":"t","provider":{"kind":"toy_multi"},"metric":"cosine"}],
        "strategies":[{"kind":"baseline"}]})"),
                    ConfigError);
    CHECK_THROWS_AS(parsed_with(R"({"dataset":"d",
        "retrievers":[{"id":"t","provider":{"kind":"precomputed","path":"p",
            "token_level":true},"metric":"dot"}],
        "strategies":[{"kind":"baseline"}]})"),
                    ConfigError);
    CHECK_NOTHROW(parsed_with(R"({"dataset":"d",
        "retrievers":[{"id":"t","provider":{"kind":"precomputed","path":"p",
            "token_level":true},"metric":"maxsim"}],
        "strategies":[{"kind":"baseline"}]})"));
}

TEST_CASE("load_config reads from disk") {
    fs::path p = temp_file("config.json", kMinimalConfig);
    Config cfg = load_config(p.string());
    CHECK(cfg.dataset == "data/pairs.jsonl");
    CHECK_THROWS_AS(load_config((p.parent_path() / "absent.json").string()),
                    ConfigError);
}

TEST_CASE("config_hash is stable and sensitive to what matters") {
    Config a = parsed_with(kMinimalConfig);
    const std::string digest = sha256_hex("dataset bytes");
    const std::string h = config_hash(a, digest);
    CHECK(h.size() == 64);
    CHECK(config_hash(a, digest) == h);  // deterministic

    // result-affecting fields move the hash
    Config b = a;
    b.alpha = 0.01;
    CHECK(config_hash(b, digest) != h);
    b = a;
    b.bonferroni_family = 24;
    CHECK(config_hash(b, digest) != h);
    b = a;
    b.enhance.templates.hyde = "different {q}";
    CHECK(config_hash(b, digest) != h);
    b = a;
    b.enhance.q2d_separator = " ";
    CHECK(config_hash(b, digest) != h);
    b = a;
    b.enhance.max_tokens = 64;
    CHECK(config_hash(b, digest) != h);
    b = a;
    b.retrievers[0].metric = Metric::dot;
    CHECK(config_hash(b, digest) != h);
    b = a;
    b.retrievers[0].length_penalty = -0.5;
    CHECK(config_hash(b, digest) != h);
    b = a;
    b.strategies.push_back(make_strategy(StrategyKind::hyde, "e"));
    CHECK(config_hash(b, digest) != h);
    CHECK(config_hash(a, sha256_hex("other bytes")) != h);

    // purely operational fields do not
    b = a;
    b.output_dir = "elsewhere";
    b.cache_dir = "tmp";
    b.parallelism = 16;
    CHECK(config_hash(b, digest) == h);
}

TEST_CASE("config_hash tracks referenced file contents") {
    fs::path vec = temp_file("vecs_hash.jsonl", "{}\n");
    Config cfg = parsed_with(kMinimalConfig);
    cfg.retrievers[0].provider.kind = "precomputed";
    cfg.retrievers[0].provider.path = vec.string();
    const std::string digest = "d";
    const std::string before = config_hash(cfg, digest);
    std::ofstream(vec, std::ios::app) << "{\"more\":1}\n";
    CHECK(config_hash(cfg, digest) != before);

    fs::path fx = temp_file("fixture_hash.jsonl", "{}\n");
    Config with_fx = parsed_with(kMinimalConfig);
    LlmEndpoint ep;
    ep.id = "fx";
    ep.kind = "fixture";
    ep.path = fx.string();
    with_fx.endpoints.push_back(ep);
    const std::string fx_before = config_hash(with_fx, digest);
    std::ofstream(fx, std::ios::app) << "{\"more\":1}\n";
    CHECK(config_hash(with_fx, digest) != fx_before);
}

TEST_CASE("make_provider builds the configured embedder") {
    ProviderConfig toy;
    CHECK(make_provider(toy)->describe() == "toy");
    CHECK_FALSE(make_provider(toy)->token_level());

    ProviderConfig multi;
    multi.kind = "toy_multi";
    CHECK(make_provider(multi)->token_level());

    fs::path vec = temp_file("vecs_provider.jsonl",
                             "{\"text_sha256\":\"" + sha256_hex("t") +
                                 "\",\"dim\":2,\"values\":[1.0,0.0]}\n");
    ProviderConfig pre;
    pre.kind = "precomputed";
    pre.path = vec.string();
    auto prov = make_provider(pre);
    CHECK(prov->describe() == "precomputed:" + vec.string());

    ProviderConfig remote;
    remote.kind = "remote";
    remote.base_url = "https://embed.example/v1";
    CHECK(make_provider(remote)->describe() == "remote:https://embed.example/v1");

    ProviderConfig bad;
    bad.kind = "quantum";
    CHECK_THROWS_AS(make_provider(bad), ConfigError);
}

TEST_CASE("baseline_strategy returns the first baseline entry") {
    Config cfg = parsed_with(kFullConfig);
    CHECK(baseline_strategy(cfg).kind == StrategyKind::baseline);
    CHECK(baseline_strategy(cfg).name == "baseline");
}

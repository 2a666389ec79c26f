#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "rba/corpus.hpp"
#include "rba/errors.hpp"
#include "rba/features.hpp"
#include "rba/hash.hpp"
#include "rba/retriever.hpp"

using namespace rba;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    fs::path dir = fs::temp_directory_path() / "rba_retriever_test";
    fs::create_directories(dir);
    return dir;
}

struct CountingProvider : EmbeddingProvider {
    std::shared_ptr<EmbeddingProvider> inner;
    int calls = 0;
    int texts_seen = 0;
    explicit CountingProvider(std::shared_ptr<EmbeddingProvider> p)
        : inner(std::move(p)) {}
    std::string describe() const override { return inner->describe(); }
    bool token_level() const override { return inner->token_level(); }
    std::vector<AnyEmbedding> embed(
        const std::vector<std::string>& texts) override {
        ++calls;
        texts_seen += static_cast<int>(texts.size());
        return inner->embed(texts);
    }
};

Embedding single(const AnyEmbedding& e) { return std::get<Embedding>(e); }

}  // namespace

TEST_CASE("metric names round trip") {
    for (Metric m : {Metric::dot, Metric::cosine, Metric::maxsim})
        CHECK(metric_from_string(to_string(m)) == m);
    CHECK_THROWS_AS(metric_from_string("euclidean"), ConfigError);
}

TEST_CASE("toy token vector matches its frozen bit stream") {
    // splitmix64 words for the stream seeded by fnv1a64("a")
    const uint64_t words[4] = {0x5f29c2aadd9b8527ull, 0xff84f1bdb6d3884full,
                               0xfdfab147e960346eull, 0xaf99d20610c74918ull};
    Embedding v = toy_token_vector("a");
    REQUIRE(v.size() == kToyDim);
    for (size_t w = 0; w < 4; ++w) {
        for (size_t b = 0; b < 64; ++b) {
            double expected = ((words[w] >> b) & 1u) ? 1.0 / 16.0 : -1.0 / 16.0;
            CAPTURE(w);
            CAPTURE(b);
            CHECK(v[w * 64 + b] == expected);
        }
    }
}

TEST_CASE("toy token vectors have exact unit norm") {
    for (const std::string& tok : {"a", "verizon", "1815", "élan", "x"}) {
        Embedding v = toy_token_vector(tok);
        double norm_sq = 0.0;
        for (double x : v) norm_sq += x * x;
        CHECK(norm_sq == 1.0);  // 256 components of exactly +-1/16
    }
    CHECK(toy_token_vector("a") == toy_token_vector("a"));
    CHECK(toy_token_vector("a") != toy_token_vector("b"));
}

TEST_CASE("toy text embedding is deterministic and case-folded") {
    ToyEmbeddingProvider toy;
    auto a1 = single(toy.embed({"Hello World"})[0]);
    auto a2 = single(toy.embed({"hello world"})[0]);
    CHECK(a1 == a2);
    CHECK(a1.size() == kToyDim);
    double norm_sq = 0.0;
    for (double x : a1) norm_sq += x * x;
    CHECK(norm_sq == doctest::Approx(1.0).epsilon(1e-12));

    // duplicated tokens rescale the sum, normalization cancels it exactly
    CHECK(single(toy.embed({"a"})[0]) == single(toy.embed({"a a"})[0]));

    auto batch = toy.embed({"alpha", "beta"});
    CHECK(single(batch[0]) == single(toy.embed({"alpha"})[0]));
    CHECK(single(batch[1]) == single(toy.embed({"beta"})[0]));

    CHECK_THROWS_AS(toy.embed({""}), Error);
    CHECK_THROWS_AS(toy.embed({"!!! ..."}), Error);
}

TEST_CASE("toy token-level provider splits per token") {
    ToyTokenEmbeddingProvider toy;
    CHECK(toy.token_level());
    auto e = toy.embed({"lost verizon"});
    const auto& te = std::get<TokenEmbeddings>(e[0]);
    REQUIRE(te.tokens.size() == 2);
    CHECK(te.tokens[0] == toy_token_vector("lost"));
    CHECK(te.tokens[1] == toy_token_vector("verizon"));
    CHECK_THROWS_AS(toy.embed({"   "}), Error);
}

TEST_CASE("score dot and cosine") {
    Embedding ex = {1.0, 0.0, 0.0};
    Embedding ey = {0.0, 2.0, 0.0};
    Embedding mix = {3.0, 4.0, 0.0};
    CHECK(score(ex, ey, Metric::dot) == 0.0);
    CHECK(score(ex, mix, Metric::dot) == 3.0);
    CHECK(score(ex, mix, Metric::cosine) == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(score(ex, ex, Metric::cosine) == doctest::Approx(1.0).epsilon(1e-12));

    // cosine ignores scale, dot does not
    Embedding ex2 = {2.0, 0.0, 0.0};
    CHECK(score(ex2, mix, Metric::cosine) ==
          doctest::Approx(score(ex, mix, Metric::cosine)).epsilon(1e-12));
    CHECK(score(ex2, mix, Metric::dot) == 6.0);

    CHECK_THROWS_AS(score(ex, Embedding{1.0, 0.0}, Metric::dot), Error);
    CHECK_THROWS_AS(score(Embedding{0.0, 0.0, 0.0}, mix, Metric::cosine), Error);
}

TEST_CASE("score maxsim") {
    TokenEmbeddings q;
    q.tokens = {{1.0, 0.0}, {0.0, 1.0}};
    TokenEmbeddings d1;
    d1.tokens = {{1.0, 0.0}};
    // first query token matches exactly (1), second has nothing better than 0
    CHECK(score(q, d1, Metric::maxsim) == 1.0);

    TokenEmbeddings d2 = d1;
    d2.tokens.push_back({0.0, 1.0});
    CHECK(score(q, d2, Metric::maxsim) == 2.0);

    // adding document tokens never lowers maxsim
    TokenEmbeddings d3 = d2;
    d3.tokens.push_back({-1.0, -1.0});
    CHECK(score(q, d3, Metric::maxsim) >= score(q, d2, Metric::maxsim));

    CHECK_THROWS_AS(score(Embedding{1.0}, d1, Metric::maxsim), Error);
    CHECK_THROWS_AS(score(q, Embedding{1.0, 0.0}, Metric::maxsim), Error);
    CHECK_THROWS_AS(score(q, TokenEmbeddings{}, Metric::maxsim), Error);
    CHECK_THROWS_AS(score(q, d1, Metric::dot), Error);
    CHECK_THROWS_AS(score(q, d1, Metric::cosine), Error);
}

TEST_CASE("precomputed provider serves stored vectors") {
    fs::path p = temp_dir() / "vectors.jsonl";
    {
        std::ofstream out(p);
        out << "{\"text_sha256\":\"" << sha256_hex("hello") << "\","
            << "\"dim\":3,\"values\":[1.0,2.0,3.0]}\n";
    }
    PrecomputedProvider prov(p.string());
    CHECK_FALSE(prov.token_level());
    CHECK(single(prov.embed({"hello"})[0]) == Embedding{1.0, 2.0, 3.0});
    CHECK_THROWS_WITH_AS(prov.embed({"other"}),
                         doctest::Contains(sha256_hex("other").c_str()), Error);

    fs::path pm = temp_dir() / "vectors_multi.jsonl";
    {
        std::ofstream out(pm);
        out << "{\"text_sha256\":\"" << sha256_hex("two tokens") << "\","
            << "\"dim\":2,\"values\":[1.0,0.0,0.0,1.0]}\n";
    }
    PrecomputedProvider multi(pm.string(), true);
    CHECK(multi.token_level());
    auto te = std::get<TokenEmbeddings>(multi.embed({"two tokens"})[0]);
    REQUIRE(te.tokens.size() == 2);
    CHECK(te.tokens[0] == Embedding{1.0, 0.0});
    CHECK(te.tokens[1] == Embedding{0.0, 1.0});

    // multi-vector payload rejected in single-vector mode
    CHECK_THROWS_AS(PrecomputedProvider(pm.string(), false), ConfigError);

    fs::path bad = temp_dir() / "vectors_bad.jsonl";
    std::ofstream(bad) << "{\"text_sha256\":\"x\"}\n";
    CHECK_THROWS_AS(PrecomputedProvider(bad.string()), ConfigError);
    CHECK_THROWS_AS(PrecomputedProvider((temp_dir() / "none.jsonl").string()),
                    ConfigError);
}

TEST_CASE("memo provider deduplicates and calls the inner provider once") {
    auto counting =
        std::make_shared<CountingProvider>(std::make_shared<ToyEmbeddingProvider>());
    MemoProvider memo(counting);

    auto out = memo.embed({"x marks", "x marks", "y not"});
    REQUIRE(out.size() == 3);
    CHECK(single(out[0]) == single(out[1]));
    CHECK(counting->calls == 1);
    CHECK(counting->texts_seen == 2);  // deduplicated before the inner call

    memo.embed({"x marks", "y not"});
    CHECK(counting->calls == 1);  // fully served from memory

    memo.embed({"z fresh"});
    CHECK(counting->calls == 2);
    CHECK(counting->texts_seen == 3);
}

TEST_CASE("memo provider persists vectors to disk") {
    fs::path p = temp_dir() / "memo_cache.jsonl";
    fs::remove(p);
    ToyEmbeddingProvider plain;
    Embedding direct = single(plain.embed({"persisted text"})[0]);
    {
        auto counting = std::make_shared<CountingProvider>(
            std::make_shared<ToyEmbeddingProvider>());
        MemoProvider memo(counting, p.string());
        memo.embed({"persisted text"});
        CHECK(counting->calls == 1);
    }
    {
        auto counting = std::make_shared<CountingProvider>(
            std::make_shared<ToyEmbeddingProvider>());
        MemoProvider memo(counting, p.string());
        auto out = memo.embed({"persisted text"});
        CHECK(counting->calls == 0);  // served from the reloaded file
        CHECK(single(out[0]) == direct);
    }
    fs::path corrupt = temp_dir() / "memo_corrupt.jsonl";
    std::ofstream(corrupt) << "{\"text_sha256\":\"k\"}\n";
    CHECK_THROWS_AS(
        MemoProvider(std::make_shared<ToyEmbeddingProvider>(), corrupt.string()),
        Error);
}

TEST_CASE("memo provider round trips token-level vectors") {
    fs::path p = temp_dir() / "memo_multi.jsonl";
    fs::remove(p);
    const std::string text = "lost verizon episode";
    TokenEmbeddings direct;
    {
        ToyTokenEmbeddingProvider plain;
        direct = std::get<TokenEmbeddings>(plain.embed({text})[0]);
        MemoProvider memo(std::make_shared<ToyTokenEmbeddingProvider>(),
                          p.string());
        memo.embed({text});
    }
    {
        auto counting = std::make_shared<CountingProvider>(
            std::make_shared<ToyTokenEmbeddingProvider>());
        MemoProvider memo(counting, p.string());
        auto te = std::get<TokenEmbeddings>(memo.embed({text})[0]);
        CHECK(counting->calls == 0);
        REQUIRE(te.tokens.size() == direct.tokens.size());
        CHECK(te.tokens == direct.tokens);
    }
    // a flattened multi-vector record cannot feed a single-vector provider
    CHECK_THROWS_AS(
        MemoProvider(std::make_shared<ToyEmbeddingProvider>(), p.string()),
        Error);
}

TEST_CASE("score_text applies the metric and length penalty") {
    ToyEmbeddingProvider toy;
    ScoringOptions opts;
    CHECK(score_text(toy, "same words", "same words", opts) ==
          doctest::Approx(1.0).epsilon(1e-12));

    const std::string doc = "four plain words here";
    double base = score_text(toy, "a query", doc, opts);
    ScoringOptions penalized = opts;
    penalized.length_penalty = -0.01;
    CHECK(score_text(toy, "a query", doc, penalized) ==
          doctest::Approx(base - 0.01 * f_brevity(doc)).epsilon(1e-12));
}

TEST_CASE("score_pair deltas") {
    ToyEmbeddingProvider toy;
    ScoringOptions opts;

    BiasPair pair;
    pair.id = "p";
    pair.query = "ada lovelace wrote programs";
    pair.answer_text = "ada";

    SUBCASE("identical documents give an exactly zero delta") {
        pair.doc_treatment = "ada lovelace wrote programs";
        pair.doc_control = "ada lovelace wrote programs";
        EnhancedQuery eq;
        eq.original = pair.query;
        eq.retrieval_text = pair.query;
        ScoreRecord rec = score_pair(pair, eq, toy, opts, "toy");
        CHECK(rec.delta == 0.0);
        CHECK(rec.s_treatment == rec.s_control);
        CHECK(rec.retriever_id == "toy");
        CHECK(rec.pair_id == "p");
    }
    SUBCASE("swapping documents negates the delta exactly") {
        pair.doc_treatment = "ada lovelace wrote the first programs";
        pair.doc_control = "weather on the coast stays mild";
        EnhancedQuery eq;
        eq.retrieval_text = pair.query;
        ScoreRecord fwd = score_pair(pair, eq, toy, opts);
        std::swap(pair.doc_treatment, pair.doc_control);
        ScoreRecord rev = score_pair(pair, eq, toy, opts);
        CHECK(fwd.delta == -rev.delta);
        CHECK(fwd.delta > 0.0);  // verbatim-overlap doc wins
    }
    SUBCASE("length penalty shifts each document score") {
        pair.doc_treatment = "short doc";
        pair.doc_control = "a much longer document with many words inside";
        EnhancedQuery eq;
        eq.retrieval_text = pair.query;
        ScoreRecord plain = score_pair(pair, eq, toy, opts);
        ScoringOptions penalized = opts;
        penalized.length_penalty = -0.5;
        ScoreRecord pen = score_pair(pair, eq, toy, penalized);
        CHECK(pen.s_treatment ==
              doctest::Approx(plain.s_treatment - 0.5 * f_brevity(pair.doc_treatment))
                  .epsilon(1e-12));
        CHECK(pen.s_control ==
              doctest::Approx(plain.s_control - 0.5 * f_brevity(pair.doc_control))
                  .epsilon(1e-12));
        // the penalty favors the shorter treatment document
        CHECK(pen.delta > plain.delta);
    }
}

TEST_CASE("maxsim end to end prefers verbatim token overlap") {
    ToyTokenEmbeddingProvider toy;
    ScoringOptions opts;
    opts.metric = Metric::maxsim;
    double hit = score_text(toy, "lost verizon", "lost verizon episode", opts);
    double miss = score_text(toy, "lost verizon", "unrelated topic words", opts);
    CHECK(hit > miss);
    // every query token finds its identical counterpart: dot = 1 each
    CHECK(hit == doctest::Approx(2.0).epsilon(1e-12));
}

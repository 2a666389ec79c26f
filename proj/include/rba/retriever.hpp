#pragma once

#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "rba/corpus.hpp"
#include "rba/enhance.hpp"

namespace rba {

using Embedding = std::vector<double>;

struct TokenEmbeddings {
    std::vector<Embedding> tokens;  // one vector per token, uniform dim
};

using AnyEmbedding = std::variant<Embedding, TokenEmbeddings>;

enum class Metric { dot, cosine, maxsim };
const char* to_string(Metric m);
Metric metric_from_string(const std::string& s);

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::string describe() const = 0;
    virtual bool token_level() const { return false; }
    // One embedding per input, order preserved. Empty/token-less texts are
    // errors; embeddings must never silently degrade.
    virtual std::vector<AnyEmbedding> embed(const std::vector<std::string>& texts) = 0;
};

inline constexpr size_t kToyDim = 256;

// The unit vector a single token maps to: FNV-1a 64 of the token seeds a
// splitmix64 stream, four output words give one sign bit per component,
// components are +-1/16 (so each token vector has exact L2 norm 1).
Embedding toy_token_vector(const std::string& token);

// Deterministic text embedder: sum of toy_token_vector over the lowercase
// word tokens, L2-normalized. Same text, same vector, every platform.
class ToyEmbeddingProvider : public EmbeddingProvider {
public:
    std::string describe() const override { return "toy"; }
    std::vector<AnyEmbedding> embed(const std::vector<std::string>& texts) override;
};

// Token-level variant for MaxSim scoring: one toy_token_vector per token.
class ToyTokenEmbeddingProvider : public EmbeddingProvider {
public:
    std::string describe() const override { return "toy-multi"; }
    bool token_level() const override { return true; }
    std::vector<AnyEmbedding> embed(const std::vector<std::string>& texts) override;
};

// Vectors from a line-delimited file of {text_sha256, dim, values}. With
// token_level, values hold k*dim floats reshaped into k token vectors.
class PrecomputedProvider : public EmbeddingProvider {
public:
    PrecomputedProvider(const std::string& path, bool token_level = false);
    std::string describe() const override { return "precomputed:" + path_; }
    bool token_level() const override { return token_level_; }
    std::vector<AnyEmbedding> embed(const std::vector<std::string>& texts) override;

private:
    std::string path_;
    bool token_level_;
    std::unordered_map<std::string, Embedding> vectors_;  // sha256 -> flat values
    std::unordered_map<std::string, size_t> dims_;
};

struct RemoteEmbeddingConfig {
    std::string base_url;
    std::string model;
    std::string auth_env;
    std::string path = "/embeddings";
    int batch_size = 32;
    int retries = 3;
};

// POST {base_url}{path} with {"model", "texts"} -> {"embeddings": [[...]]}.
class RemoteEmbeddingProvider : public EmbeddingProvider {
public:
    explicit RemoteEmbeddingProvider(RemoteEmbeddingConfig cfg);
    std::string describe() const override { return "remote:" + cfg_.base_url; }
    std::vector<AnyEmbedding> embed(const std::vector<std::string>& texts) override;

private:
    RemoteEmbeddingConfig cfg_;
};

// Memoizes by text sha256 so each unique text hits the inner provider once
// per run; optionally persists single/multi vectors to a precomputed-format
// file so interrupted runs resume without re-querying.
class MemoProvider : public EmbeddingProvider {
public:
    MemoProvider(std::shared_ptr<EmbeddingProvider> inner,
                 std::string disk_path = {});
    std::string describe() const override { return inner_->describe(); }
    bool token_level() const override { return inner_->token_level(); }
    std::vector<AnyEmbedding> embed(const std::vector<std::string>& texts) override;

private:
    std::shared_ptr<EmbeddingProvider> inner_;
    std::string disk_path_;
    std::mutex mu_;
    std::unordered_map<std::string, AnyEmbedding> memo_;  // sha256 -> embedding
};

// dot = inner product; cosine = dot over norms (zero vector is an error);
// maxsim = sum over query tokens of the best dot against document tokens.
double score(const AnyEmbedding& q, const AnyEmbedding& d, Metric metric);

struct ScoringOptions {
    Metric metric = Metric::cosine;
    // Added to every document score as penalty * token_count(doc). Used to
    // emulate retrievers with an explicit length preference.
    double length_penalty = 0.0;
};

// Embeds both texts through the provider and scores them.
double score_text(EmbeddingProvider& provider, const std::string& query_text,
                  const std::string& doc_text, const ScoringOptions& opts);

struct ScoreRecord {
    std::string pair_id;
    Strategy strategy;
    std::string retriever_id;
    double s_treatment = 0.0;  // S(q', D1)
    double s_control = 0.0;    // S(q', D2)
    double delta = 0.0;        // s_treatment - s_control
};

// Positive delta means the retriever prefers the bias-amplified document.
ScoreRecord score_pair(const BiasPair& pair, const EnhancedQuery& eq,
                       EmbeddingProvider& provider, const ScoringOptions& opts,
                       const std::string& retriever_id = {});

}  // namespace rba

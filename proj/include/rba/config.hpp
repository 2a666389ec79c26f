#pragma once

#include <memory>
#include <string>
#include <vector>

#include "rba/enhance.hpp"
#include "rba/llm.hpp"
#include "rba/retriever.hpp"

namespace rba {

struct ProviderConfig {
    std::string kind = "toy";  // toy | toy_multi | precomputed | remote
    std::string path;          // precomputed vectors file
    std::string base_url;      // remote
    std::string model;         // remote
    std::string auth_env;      // remote, env var holding the token
    bool token_level = false;  // precomputed only
    int batch_size = 32;       // remote only
};

struct RetrieverConfig {
    std::string id;
    ProviderConfig provider;
    Metric metric = Metric::cosine;
    double length_penalty = 0.0;
};

// One declarative file drives a whole audit; everything that can change a
// number lives here, secrets stay in the environment.
struct Config {
    std::string dataset;
    std::string output_dir = "out";
    std::string cache_dir;  // empty = in-memory caches only
    double alpha = 0.05;
    // 0 means "Bonferroni over each strategy's own cell count".
    int bonferroni_family = 0;
    int parallelism = 4;
    EnhanceOptions enhance;  // templates, q2d separator, max_tokens
    std::vector<LlmEndpoint> endpoints;
    std::vector<RetrieverConfig> retrievers;
    std::vector<Strategy> strategies;
};

Config load_config(const std::string& path);
Config parse_config(const std::string& text, const std::string& origin);

// Name of the strategy reductions are measured against: the first
// baseline-kind entry.
const Strategy& baseline_strategy(const Config& cfg);

// SHA-256 over every result-affecting field plus the dataset digest.
// Identical hash and warmed caches imply a byte-identical report.
// Precomputed-vector and fixture files are hashed by content when readable.
std::string config_hash(const Config& cfg, const std::string& dataset_digest);

// Provider per config, without memoization; callers wrap in MemoProvider.
std::shared_ptr<EmbeddingProvider> make_provider(const ProviderConfig& pc);

}  // namespace rba

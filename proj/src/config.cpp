#include "rba/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rba/errors.hpp"
#include "rba/hash.hpp"

namespace rba {

using nlohmann::json;

namespace {

std::string read_file_or_empty(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return {};
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

LlmEndpoint parse_endpoint(const json& j, const std::string& origin) {
    LlmEndpoint ep;
    ep.id = j.value("id", std::string());
    ep.kind = j.value("kind", std::string("http"));
    ep.base_url = j.value("base_url", std::string());
    ep.model = j.value("model", std::string());
    ep.auth_env = j.value("auth_env", std::string());
    ep.path = j.value("path", std::string());
    if (ep.id.empty()) throw ConfigError(origin + ": endpoint without id");
    if (ep.kind == "http") {
        if (ep.base_url.empty()) {
            throw ConfigError(origin + ": endpoint " + ep.id +
                              " needs base_url");
        }
    } else if (ep.kind == "fixture") {
        if (ep.path.empty()) {
            throw ConfigError(origin + ": endpoint " + ep.id + " needs path");
        }
    } else {
        throw ConfigError(origin + ": endpoint " + ep.id + ": unknown kind " +
                          ep.kind);
    }
    return ep;
}

ProviderConfig parse_provider(const json& j, const std::string& origin,
                              const std::string& rid) {
    ProviderConfig pc;
    pc.kind = j.value("kind", std::string("toy"));
    pc.path = j.value("path", std::string());
    pc.base_url = j.value("base_url", std::string());
    pc.model = j.value("model", std::string());
    pc.auth_env = j.value("auth_env", std::string());
    pc.token_level = j.value("token_level", false);
    pc.batch_size = j.value("batch_size", 32);
    if (pc.kind == "toy" || pc.kind == "toy_multi") {
        // nothing else required
    } else if (pc.kind == "precomputed") {
        if (pc.path.empty()) {
            throw ConfigError(origin + ": retriever " + rid +
                              ": precomputed provider needs path");
        }
    } else if (pc.kind == "remote") {
        if (pc.base_url.empty()) {
            throw ConfigError(origin + ": retriever " + rid +
                              ": remote provider needs base_url");
        }
        if (pc.batch_size <= 0) {
            throw ConfigError(origin + ": retriever " + rid +
                              ": batch_size must be positive");
        }
    } else {
        throw ConfigError(origin + ": retriever " + rid +
                          ": unknown provider kind " + pc.kind);
    }
    return pc;
}

}  // namespace

Config parse_config(const std::string& text, const std::string& origin) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw ConfigError(origin + ": not a JSON object");
    }
    Config cfg;
    try {
        cfg.dataset = j.value("dataset", std::string());
        cfg.output_dir = j.value("output_dir", std::string("out"));
        cfg.cache_dir = j.value("cache_dir", std::string());
        cfg.alpha = j.value("alpha", 0.05);
        cfg.bonferroni_family = j.value("bonferroni_family", 0);
        cfg.parallelism = j.value("parallelism", 4);
        cfg.enhance.q2d_separator = j.value("q2d_separator", std::string("\n"));
        cfg.enhance.max_tokens = j.value("max_tokens", 256);
        if (j.contains("prompts")) {
            const json& p = j.at("prompts");
            cfg.enhance.templates.rewrite =
                p.value("rewrite", cfg.enhance.templates.rewrite);
            cfg.enhance.templates.hyde =
                p.value("hyde", cfg.enhance.templates.hyde);
        }
        for (const json& je : j.value("endpoints", json::array())) {
            cfg.endpoints.push_back(parse_endpoint(je, origin));
        }
        for (const json& jr : j.value("retrievers", json::array())) {
            RetrieverConfig rc;
            rc.id = jr.value("id", std::string());
            if (rc.id.empty()) {
                throw ConfigError(origin + ": retriever without id");
            }
            rc.provider = parse_provider(jr.value("provider", json::object()),
                                         origin, rc.id);
            rc.metric = metric_from_string(jr.value("metric", std::string("cosine")));
            rc.length_penalty = jr.value("length_penalty", 0.0);
            cfg.retrievers.push_back(std::move(rc));
        }
        for (const json& js : j.value("strategies", json::array())) {
            const StrategyKind kind =
                strategy_kind_from_string(js.value("kind", std::string()));
            cfg.strategies.push_back(make_strategy(
                kind, js.value("endpoint", std::string()),
                js.value("name", std::string())));
        }
    } catch (const json::exception& e) {
        throw ConfigError(origin + ": " + e.what());
    }

    if (cfg.dataset.empty()) throw ConfigError(origin + ": dataset is required");
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) {
        throw ConfigError(origin + ": alpha must be in (0,1)");
    }
    if (cfg.bonferroni_family < 0) {
        throw ConfigError(origin + ": bonferroni_family must be >= 0");
    }
    if (cfg.parallelism < 1) {
        throw ConfigError(origin + ": parallelism must be >= 1");
    }
    if (cfg.retrievers.empty()) {
        throw ConfigError(origin + ": at least one retriever is required");
    }
    if (cfg.strategies.empty()) {
        throw ConfigError(origin + ": at least one strategy is required");
    }
    std::set<std::string> seen;
    for (const auto& rc : cfg.retrievers) {
        if (!seen.insert(rc.id).second) {
            throw ConfigError(origin + ": duplicate retriever id " + rc.id);
        }
        if (rc.metric == Metric::maxsim &&
            !(rc.provider.kind == "toy_multi" ||
              (rc.provider.kind == "precomputed" && rc.provider.token_level))) {
            throw ConfigError(origin + ": retriever " + rc.id +
                              ": maxsim needs a token-level provider");
        }
        if (rc.metric != Metric::maxsim &&
            (rc.provider.kind == "toy_multi" || rc.provider.token_level)) {
            throw ConfigError(origin + ": retriever " + rc.id +
                              ": token-level provider needs the maxsim metric");
        }
    }
    seen.clear();
    for (const auto& s : cfg.strategies) {
        if (!seen.insert(s.name).second) {
            throw ConfigError(origin + ": duplicate strategy name " + s.name);
        }
        if (s.kind != StrategyKind::baseline && s.endpoint_id.empty()) {
            throw ConfigError(origin + ": strategy " + s.name +
                              " needs an endpoint");
        }
    }
    std::set<std::string> ep_ids;
    for (const auto& ep : cfg.endpoints) {
        if (!ep_ids.insert(ep.id).second) {
            throw ConfigError(origin + ": duplicate endpoint id " + ep.id);
        }
    }
    bool has_baseline = false;
    for (const auto& s : cfg.strategies) {
        has_baseline |= s.kind == StrategyKind::baseline;
    }
    if (!has_baseline) {
        throw ConfigError(origin + ": a baseline strategy is required");
    }
    return cfg;
}

Config load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path);
}

const Strategy& baseline_strategy(const Config& cfg) {
    for (const auto& s : cfg.strategies) {
        if (s.kind == StrategyKind::baseline) return s;
    }
    throw ConfigError("no baseline strategy configured");
}

std::string config_hash(const Config& cfg, const std::string& dataset_digest) {
    json j;
    j["alpha"] = cfg.alpha;
    j["bonferroni_family"] = cfg.bonferroni_family;
    j["dataset_digest"] = dataset_digest;
    j["max_tokens"] = cfg.enhance.max_tokens;
    j["prompts"] = {{"hyde", cfg.enhance.templates.hyde},
                    {"rewrite", cfg.enhance.templates.rewrite}};
    j["q2d_separator"] = cfg.enhance.q2d_separator;
    j["endpoints"] = json::array();
    for (const auto& ep : cfg.endpoints) {
        json je;
        je["auth_env"] = ep.auth_env;
        je["base_url"] = ep.base_url;
        je["id"] = ep.id;
        je["kind"] = ep.kind;
        je["model"] = ep.model;
        if (ep.kind == "fixture") {
            je["fixture_digest"] = sha256_hex(read_file_or_empty(ep.path));
        }
        j["endpoints"].push_back(je);
    }
    j["retrievers"] = json::array();
    for (const auto& rc : cfg.retrievers) {
        json jr;
        jr["id"] = rc.id;
        jr["length_penalty"] = rc.length_penalty;
        jr["metric"] = to_string(rc.metric);
        jr["provider"] = {{"base_url", rc.provider.base_url},
                          {"kind", rc.provider.kind},
                          {"model", rc.provider.model},
                          {"token_level", rc.provider.token_level}};
        if (rc.provider.kind == "precomputed") {
            jr["provider"]["vectors_digest"] =
                sha256_hex(read_file_or_empty(rc.provider.path));
        }
        j["retrievers"].push_back(jr);
    }
    j["strategies"] = json::array();
    for (const auto& s : cfg.strategies) {
        j["strategies"].push_back({{"endpoint", s.endpoint_id},
                                   {"kind", to_string(s.kind)},
                                   {"name", s.name}});
    }
    return sha256_hex(j.dump());
}

std::shared_ptr<EmbeddingProvider> make_provider(const ProviderConfig& pc) {
    if (pc.kind == "toy") return std::make_shared<ToyEmbeddingProvider>();
    if (pc.kind == "toy_multi") {
        return std::make_shared<ToyTokenEmbeddingProvider>();
    }
    if (pc.kind == "precomputed") {
        return std::make_shared<PrecomputedProvider>(pc.path, pc.token_level);
    }
    if (pc.kind == "remote") {
        RemoteEmbeddingConfig rc;
        rc.base_url = pc.base_url;
        rc.model = pc.model;
        rc.auth_env = pc.auth_env;
        rc.batch_size = pc.batch_size;
        return std::make_shared<RemoteEmbeddingProvider>(rc);
    }
    throw ConfigError("unknown provider kind " + pc.kind);
}

}  // namespace rba

#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "rba/enhance.hpp"

namespace rba {

// What goes over the wire: endpoint, prompt, output budget, temperature.
// kind/query ride along for local fixture lookup only.
struct LlmRequest {
    std::string endpoint_id;
    std::string prompt;
    int max_tokens = 256;
    double temperature = 0.0;
    StrategyKind kind = StrategyKind::rewrite;
    std::string query;
};

class LlmClient {
public:
    virtual ~LlmClient() = default;
    virtual std::string generate(const LlmRequest& req) = 0;
};

struct LlmEndpoint {
    std::string id;
    std::string kind = "http";  // "http" or "fixture"
    // http
    std::string base_url;
    std::string model;
    std::string auth_env;  // env var holding the bearer token, optional
    // fixture
    std::string path;  // JSONL of {kind, query, generation}
};

// Chat/completions-style client: POST {base_url}/chat/completions with
// {model, messages, temperature, max_tokens}, reads
// choices[0].message.content.
class HttpLlmClient : public LlmClient {
public:
    explicit HttpLlmClient(LlmEndpoint endpoint, int retries = 3);
    std::string generate(const LlmRequest& req) override;

private:
    LlmEndpoint endpoint_;
    int retries_;
};

// Canned generations from a JSONL file, keyed by (strategy kind, query).
class FixtureLlmClient : public LlmClient {
public:
    explicit FixtureLlmClient(const std::string& path);
    std::string generate(const LlmRequest& req) override;

private:
    std::map<std::pair<std::string, std::string>, std::string> canned_;
    std::string path_;
};

// Dispatches to the client configured for the request's endpoint id.
class LlmRouter : public LlmClient {
public:
    explicit LlmRouter(const std::vector<LlmEndpoint>& endpoints);
    std::string generate(const LlmRequest& req) override;
    bool has_endpoint(const std::string& id) const;

private:
    std::map<std::string, std::unique_ptr<LlmClient>> clients_;
};

}  // namespace rba

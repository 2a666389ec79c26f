#include "rba/llm.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "rba/errors.hpp"

namespace rba {

using nlohmann::json;

namespace {

// "https://host:1234/v1" -> {"https://host:1234", "/v1"}
std::pair<std::string, std::string> split_base_url(const std::string& base_url) {
    size_t scheme = base_url.find("://");
    size_t path_start =
        base_url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    if (path_start == std::string::npos) return {base_url, ""};
    std::string prefix = base_url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {base_url.substr(0, path_start), prefix};
}

bool retryable_status(int status) {
    return status == 429 || status >= 500;
}

}  // namespace

HttpLlmClient::HttpLlmClient(LlmEndpoint endpoint, int retries)
    : endpoint_(std::move(endpoint)), retries_(retries) {
    if (endpoint_.base_url.empty()) {
        throw ConfigError("endpoint " + endpoint_.id + ": base_url required");
    }
}

std::string HttpLlmClient::generate(const LlmRequest& req) {
    auto [origin, prefix] = split_base_url(endpoint_.base_url);
    httplib::Client cli(origin);
    cli.set_connection_timeout(10);
    cli.set_read_timeout(120);

    httplib::Headers headers;
    if (!endpoint_.auth_env.empty()) {
        const char* token = std::getenv(endpoint_.auth_env.c_str());
        if (token == nullptr || *token == '\0') {
            throw ConfigError("endpoint " + endpoint_.id +
                              ": environment variable " + endpoint_.auth_env +
                              " is not set");
        }
        headers.emplace("Authorization", std::string("Bearer ") + token);
    }

    json body;
    body["model"] = endpoint_.model;
    body["messages"] = json::array({{{"role", "user"}, {"content", req.prompt}}});
    body["temperature"] = req.temperature;
    body["max_tokens"] = req.max_tokens;
    const std::string payload = body.dump();
    const std::string path = prefix + "/chat/completions";

    std::string last_error;
    for (int attempt = 0; attempt < std::max(1, retries_); ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(200 * attempt));
        }
        auto res = cli.Post(path, headers, payload, "application/json");
        if (!res) {
            last_error = "connection error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status != 200) {
            last_error = "HTTP " + std::to_string(res->status);
            if (retryable_status(res->status)) continue;
            throw Error("endpoint " + endpoint_.id + ": " + last_error + ": " +
                        res->body);
        }
        json j = json::parse(res->body, nullptr, false);
        if (j.is_discarded() || !j.contains("choices") || j["choices"].empty() ||
            !j["choices"][0].contains("message") ||
            !j["choices"][0]["message"].contains("content")) {
            throw Error("endpoint " + endpoint_.id +
                        ": malformed completion response");
        }
        return j["choices"][0]["message"]["content"].get<std::string>();
    }
    throw RetryableError("endpoint " + endpoint_.id + ": " + last_error +
                         " after " + std::to_string(std::max(1, retries_)) +
                         " attempts");
}

FixtureLlmClient::FixtureLlmClient(const std::string& path) : path_(path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open LLM fixture file " + path);
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.contains("kind") || !j.contains("query") ||
            !j.contains("generation")) {
            throw ConfigError("LLM fixture " + path + ": bad record at line " +
                              std::to_string(lineno));
        }
        canned_[{j.at("kind").get<std::string>(),
                 j.at("query").get<std::string>()}] =
            j.at("generation").get<std::string>();
    }
}

std::string FixtureLlmClient::generate(const LlmRequest& req) {
    auto it = canned_.find({to_string(req.kind), req.query});
    if (it == canned_.end()) {
        throw Error("LLM fixture " + path_ + ": no canned generation for kind " +
                    to_string(req.kind) + ", query \"" + req.query + "\"");
    }
    return it->second;
}

LlmRouter::LlmRouter(const std::vector<LlmEndpoint>& endpoints) {
    for (const auto& ep : endpoints) {
        if (ep.id.empty()) throw ConfigError("endpoint with empty id");
        if (clients_.count(ep.id)) {
            throw ConfigError("duplicate endpoint id " + ep.id);
        }
        if (ep.kind == "http") {
            clients_[ep.id] = std::make_unique<HttpLlmClient>(ep);
        } else if (ep.kind == "fixture") {
            clients_[ep.id] = std::make_unique<FixtureLlmClient>(ep.path);
        } else {
            throw ConfigError("endpoint " + ep.id + ": unknown kind " + ep.kind);
        }
    }
}

std::string LlmRouter::generate(const LlmRequest& req) {
    auto it = clients_.find(req.endpoint_id);
    if (it == clients_.end()) {
        throw ConfigError("no endpoint configured with id " + req.endpoint_id);
    }
    return it->second->generate(req);
}

bool LlmRouter::has_endpoint(const std::string& id) const {
    return clients_.count(id) > 0;
}

}  // namespace rba

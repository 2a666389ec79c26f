#include "rba/retriever.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "rba/errors.hpp"
#include "rba/features.hpp"
#include "rba/hash.hpp"

namespace rba {

using nlohmann::json;

const char* to_string(Metric m) {
    switch (m) {
        case Metric::dot: return "dot";
        case Metric::cosine: return "cosine";
        case Metric::maxsim: return "maxsim";
    }
    throw Error("unknown metric");
}

Metric metric_from_string(const std::string& s) {
    if (s == "dot") return Metric::dot;
    if (s == "cosine") return Metric::cosine;
    if (s == "maxsim") return Metric::maxsim;
    throw ConfigError("unknown metric: " + s);
}

Embedding toy_token_vector(const std::string& token) {
    Embedding v(kToyDim);
    uint64_t state = fnv1a64(token);
    // 256 sign bits from four splitmix64 words; each component is +-1/16 so
    // the token vector has L2 norm exactly 1.
    for (size_t word = 0; word < kToyDim / 64; ++word) {
        uint64_t bits = splitmix64(state);
        for (size_t bit = 0; bit < 64; ++bit) {
            v[word * 64 + bit] = ((bits >> bit) & 1u) ? 1.0 / 16.0 : -1.0 / 16.0;
        }
    }
    return v;
}

namespace {

double l2_norm(const Embedding& v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return std::sqrt(acc);
}

Embedding toy_text_vector(const std::string& text) {
    const std::vector<std::string> tokens = tokenize(text);
    if (tokens.empty()) {
        throw Error("toy embedder: no tokens in text \"" + text + "\"");
    }
    Embedding sum(kToyDim, 0.0);
    for (const auto& tok : tokens) {
        Embedding tv = toy_token_vector(tok);
        for (size_t i = 0; i < kToyDim; ++i) sum[i] += tv[i];
    }
    const double norm = l2_norm(sum);
    if (norm == 0.0) throw Error("toy embedder: token vectors cancelled out");
    for (double& x : sum) x /= norm;
    return sum;
}

}  // namespace

std::vector<AnyEmbedding> ToyEmbeddingProvider::embed(
    const std::vector<std::string>& texts) {
    std::vector<AnyEmbedding> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.emplace_back(toy_text_vector(t));
    return out;
}

std::vector<AnyEmbedding> ToyTokenEmbeddingProvider::embed(
    const std::vector<std::string>& texts) {
    std::vector<AnyEmbedding> out;
    out.reserve(texts.size());
    for (const auto& t : texts) {
        const std::vector<std::string> tokens = tokenize(t);
        if (tokens.empty()) {
            throw Error("toy embedder: no tokens in text \"" + t + "\"");
        }
        TokenEmbeddings te;
        te.tokens.reserve(tokens.size());
        for (const auto& tok : tokens) te.tokens.push_back(toy_token_vector(tok));
        out.emplace_back(std::move(te));
    }
    return out;
}

PrecomputedProvider::PrecomputedProvider(const std::string& path,
                                         bool token_level)
    : path_(path), token_level_(token_level) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open precomputed vectors file " + path);
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.contains("text_sha256") || !j.contains("dim") ||
            !j.contains("values")) {
            throw ConfigError("precomputed vectors " + path + ": bad record at line " +
                              std::to_string(lineno));
        }
        const auto key = j.at("text_sha256").get<std::string>();
        const auto dim = j.at("dim").get<size_t>();
        Embedding values = j.at("values").get<Embedding>();
        if (dim == 0 || values.empty() || values.size() % dim != 0 ||
            (!token_level_ && values.size() != dim)) {
            throw ConfigError("precomputed vectors " + path + ": dim mismatch at line " +
                              std::to_string(lineno));
        }
        dims_[key] = dim;
        vectors_[key] = std::move(values);
    }
}

std::vector<AnyEmbedding> PrecomputedProvider::embed(
    const std::vector<std::string>& texts) {
    std::vector<AnyEmbedding> out;
    out.reserve(texts.size());
    for (const auto& t : texts) {
        const std::string key = sha256_hex(t);
        auto it = vectors_.find(key);
        if (it == vectors_.end()) {
            throw Error("precomputed vectors " + path_ + ": no vector for text hash " +
                        key);
        }
        if (!token_level_) {
            out.emplace_back(it->second);
            continue;
        }
        const size_t dim = dims_.at(key);
        TokenEmbeddings te;
        for (size_t off = 0; off < it->second.size(); off += dim) {
            te.tokens.emplace_back(it->second.begin() + off,
                                   it->second.begin() + off + dim);
        }
        out.emplace_back(std::move(te));
    }
    return out;
}

RemoteEmbeddingProvider::RemoteEmbeddingProvider(RemoteEmbeddingConfig cfg)
    : cfg_(std::move(cfg)) {
    if (cfg_.base_url.empty()) {
        throw ConfigError("remote embedding provider: base_url required");
    }
    if (cfg_.batch_size <= 0) {
        throw ConfigError("remote embedding provider: batch_size must be positive");
    }
}

namespace {

// "https://host:1234/v1" -> {"https://host:1234", "/v1"}
std::pair<std::string, std::string> split_origin(const std::string& base_url) {
    size_t scheme = base_url.find("://");
    size_t path_start =
        base_url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    if (path_start == std::string::npos) return {base_url, ""};
    std::string prefix = base_url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {base_url.substr(0, path_start), prefix};
}

}  // namespace

std::vector<AnyEmbedding> RemoteEmbeddingProvider::embed(
    const std::vector<std::string>& texts) {
    auto [origin, prefix] = split_origin(cfg_.base_url);
    httplib::Client cli(origin);
    cli.set_connection_timeout(10);
    cli.set_read_timeout(120);

    httplib::Headers headers;
    if (!cfg_.auth_env.empty()) {
        const char* token = std::getenv(cfg_.auth_env.c_str());
        if (token == nullptr || *token == '\0') {
            throw ConfigError("remote embedding provider: environment variable " +
                              cfg_.auth_env + " is not set");
        }
        headers.emplace("Authorization", std::string("Bearer ") + token);
    }
    const std::string path = prefix + cfg_.path;

    std::vector<AnyEmbedding> out;
    out.reserve(texts.size());
    for (size_t start = 0; start < texts.size();
         start += static_cast<size_t>(cfg_.batch_size)) {
        const size_t stop =
            std::min(texts.size(), start + static_cast<size_t>(cfg_.batch_size));
        json body;
        body["model"] = cfg_.model;
        body["texts"] = std::vector<std::string>(texts.begin() + start,
                                                 texts.begin() + stop);
        const std::string payload = body.dump();

        std::string last_error;
        bool done = false;
        for (int attempt = 0; attempt < std::max(1, cfg_.retries); ++attempt) {
            if (attempt > 0) {
                std::this_thread::sleep_for(
                    std::chrono::milliseconds(200 * attempt));
            }
            auto res = cli.Post(path, headers, payload, "application/json");
            if (!res) {
                last_error = "connection error: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status != 200) {
                last_error = "HTTP " + std::to_string(res->status);
                if (res->status == 429 || res->status >= 500) continue;
                throw Error("remote embedding provider: " + last_error + ": " +
                            res->body);
            }
            json j = json::parse(res->body, nullptr, false);
            if (j.is_discarded() || !j.contains("embeddings") ||
                !j["embeddings"].is_array() ||
                j["embeddings"].size() != stop - start) {
                throw Error("remote embedding provider: malformed response");
            }
            for (const auto& vec : j["embeddings"]) {
                out.emplace_back(vec.get<Embedding>());
            }
            done = true;
            break;
        }
        if (!done) {
            throw RetryableError("remote embedding provider: " + last_error +
                                 " after " +
                                 std::to_string(std::max(1, cfg_.retries)) +
                                 " attempts");
        }
    }
    return out;
}

MemoProvider::MemoProvider(std::shared_ptr<EmbeddingProvider> inner,
                           std::string disk_path)
    : inner_(std::move(inner)), disk_path_(std::move(disk_path)) {
    if (disk_path_.empty()) return;
    std::ifstream in(disk_path_);
    if (!in) return;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.contains("text_sha256") || !j.contains("dim") ||
            !j.contains("values")) {
            throw Error("embedding cache " + disk_path_ + ": bad record at line " +
                        std::to_string(lineno));
        }
        const auto key = j.at("text_sha256").get<std::string>();
        const auto dim = j.at("dim").get<size_t>();
        Embedding values = j.at("values").get<Embedding>();
        if (dim == 0 || values.empty() || values.size() % dim != 0) {
            throw Error("embedding cache " + disk_path_ + ": dim mismatch at line " +
                        std::to_string(lineno));
        }
        if (inner_->token_level()) {
            TokenEmbeddings te;
            for (size_t off = 0; off < values.size(); off += dim) {
                te.tokens.emplace_back(values.begin() + off,
                                       values.begin() + off + dim);
            }
            memo_[key] = std::move(te);
        } else if (values.size() == dim) {
            memo_[key] = std::move(values);
        } else {
            throw Error("embedding cache " + disk_path_ +
                        ": multi-vector record for single-vector provider at line " +
                        std::to_string(lineno));
        }
    }
}

std::vector<AnyEmbedding> MemoProvider::embed(
    const std::vector<std::string>& texts) {
    std::vector<std::string> hashes(texts.size());
    std::vector<size_t> missing;
    {
        std::lock_guard lock(mu_);
        for (size_t i = 0; i < texts.size(); ++i) {
            hashes[i] = sha256_hex(texts[i]);
            if (!memo_.count(hashes[i])) missing.push_back(i);
        }
    }
    // Deduplicate missing texts before hitting the inner provider.
    std::vector<std::string> fetch_texts;
    std::vector<std::string> fetch_hashes;
    for (size_t idx : missing) {
        if (std::find(fetch_hashes.begin(), fetch_hashes.end(), hashes[idx]) ==
            fetch_hashes.end()) {
            fetch_hashes.push_back(hashes[idx]);
            fetch_texts.push_back(texts[idx]);
        }
    }
    if (!fetch_texts.empty()) {
        std::vector<AnyEmbedding> fresh = inner_->embed(fetch_texts);
        std::lock_guard lock(mu_);
        std::ofstream out;
        if (!disk_path_.empty()) {
            std::filesystem::path p(disk_path_);
            if (p.has_parent_path()) {
                std::filesystem::create_directories(p.parent_path());
            }
            out.open(disk_path_, std::ios::app);
            if (!out) throw Error("embedding cache: cannot append to " + disk_path_);
        }
        for (size_t i = 0; i < fetch_hashes.size(); ++i) {
            if (memo_.emplace(fetch_hashes[i], fresh[i]).second && out.is_open()) {
                json j;
                j["text_sha256"] = fetch_hashes[i];
                if (const auto* single = std::get_if<Embedding>(&fresh[i])) {
                    j["dim"] = single->size();
                    j["values"] = *single;
                } else {
                    const auto& multi = std::get<TokenEmbeddings>(fresh[i]);
                    j["dim"] = multi.tokens.empty() ? 0 : multi.tokens[0].size();
                    Embedding flat;
                    for (const auto& tv : multi.tokens) {
                        flat.insert(flat.end(), tv.begin(), tv.end());
                    }
                    j["values"] = flat;
                }
                out << j.dump() << '\n';
            }
        }
    }
    std::vector<AnyEmbedding> out;
    out.reserve(texts.size());
    std::lock_guard lock(mu_);
    for (const auto& h : hashes) out.push_back(memo_.at(h));
    return out;
}

namespace {

double dot_product(const Embedding& a, const Embedding& b) {
    if (a.size() != b.size()) {
        throw Error("score: dimension mismatch (" + std::to_string(a.size()) +
                    " vs " + std::to_string(b.size()) + ")");
    }
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

}  // namespace

double score(const AnyEmbedding& q, const AnyEmbedding& d, Metric metric) {
    if (metric == Metric::maxsim) {
        const auto* qm = std::get_if<TokenEmbeddings>(&q);
        const auto* dm = std::get_if<TokenEmbeddings>(&d);
        if (qm == nullptr || dm == nullptr) {
            throw Error("maxsim requires token-level embeddings on both sides");
        }
        if (qm->tokens.empty() || dm->tokens.empty()) {
            throw Error("maxsim: empty token list");
        }
        double total = 0.0;
        for (const auto& qv : qm->tokens) {
            double best = dot_product(qv, dm->tokens[0]);
            for (size_t i = 1; i < dm->tokens.size(); ++i) {
                best = std::max(best, dot_product(qv, dm->tokens[i]));
            }
            total += best;
        }
        return total;
    }
    const auto* qs = std::get_if<Embedding>(&q);
    const auto* ds = std::get_if<Embedding>(&d);
    if (qs == nullptr || ds == nullptr) {
        throw Error(std::string(to_string(metric)) +
                    " requires single-vector embeddings");
    }
    const double dp = dot_product(*qs, *ds);
    if (metric == Metric::dot) return dp;
    const double nq = l2_norm(*qs);
    const double nd = l2_norm(*ds);
    if (nq == 0.0 || nd == 0.0) throw Error("cosine: zero vector");
    return dp / (nq * nd);
}

double score_text(EmbeddingProvider& provider, const std::string& query_text,
                  const std::string& doc_text, const ScoringOptions& opts) {
    std::vector<AnyEmbedding> embs = provider.embed({query_text, doc_text});
    double s = score(embs[0], embs[1], opts.metric);
    if (opts.length_penalty != 0.0) {
        s += opts.length_penalty * f_brevity(doc_text);
    }
    return s;
}

ScoreRecord score_pair(const BiasPair& pair, const EnhancedQuery& eq,
                       EmbeddingProvider& provider, const ScoringOptions& opts,
                       const std::string& retriever_id) {
    std::vector<AnyEmbedding> embs =
        provider.embed({eq.retrieval_text, pair.doc_treatment, pair.doc_control});
    ScoreRecord rec;
    rec.pair_id = pair.id;
    rec.strategy = eq.strategy;
    rec.retriever_id = retriever_id;
    rec.s_treatment = score(embs[0], embs[1], opts.metric);
    rec.s_control = score(embs[0], embs[2], opts.metric);
    if (opts.length_penalty != 0.0) {
        rec.s_treatment += opts.length_penalty * f_brevity(pair.doc_treatment);
        rec.s_control += opts.length_penalty * f_brevity(pair.doc_control);
    }
    rec.delta = rec.s_treatment - rec.s_control;
    return rec;
}

}  // namespace rba

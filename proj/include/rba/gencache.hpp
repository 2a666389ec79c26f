#pragma once

#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

#include "rba/enhance.hpp"

namespace rba {

// Append-only store of LLM generations, line-delimited JSON records
// {key_hash, strategy_kind, endpoint_id, query, generation}. Reads are
// concurrent, writes serialized. The cache is what makes audit runs
// deterministic and resumable; generations are keyed by everything that can
// change them, including the prompt template.
class GenerationCache {
public:
    // In-memory only when path is empty.
    explicit GenerationCache(std::string path = {});

    static std::string key(StrategyKind kind, const std::string& endpoint_id,
                           const std::string& template_hash,
                           const std::string& query);

    std::optional<std::string> get(const std::string& key_hash) const;
    void put(const std::string& key_hash, StrategyKind kind,
             const std::string& endpoint_id, const std::string& query,
             const std::string& generation);

    size_t size() const;

private:
    std::string path_;
    mutable std::mutex mu_;
    std::unordered_map<std::string, std::string> entries_;
};

}  // namespace rba

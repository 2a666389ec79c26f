#include "rba/gencache.hpp"

#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "rba/errors.hpp"
#include "rba/hash.hpp"

namespace rba {

using nlohmann::json;

GenerationCache::GenerationCache(std::string path) : path_(std::move(path)) {
    if (path_.empty()) return;
    std::ifstream in(path_);
    if (!in) return;  // first run; the file appears on the first put
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("key_hash") ||
            !j.contains("generation")) {
            throw Error("generation cache " + path_ + ": bad record at line " +
                        std::to_string(lineno));
        }
        entries_[j.at("key_hash").get<std::string>()] =
            j.at("generation").get<std::string>();
    }
}

std::string GenerationCache::key(StrategyKind kind,
                                 const std::string& endpoint_id,
                                 const std::string& template_hash,
                                 const std::string& query) {
    // Length-prefixed fields so no two argument tuples collide pre-hash.
    std::string material;
    for (const std::string& part :
         {std::string(to_string(kind)), endpoint_id, template_hash, query}) {
        material += std::to_string(part.size());
        material += ':';
        material += part;
    }
    return sha256_hex(material);
}

std::optional<std::string> GenerationCache::get(
    const std::string& key_hash) const {
    std::lock_guard lock(mu_);
    auto it = entries_.find(key_hash);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void GenerationCache::put(const std::string& key_hash, StrategyKind kind,
                          const std::string& endpoint_id,
                          const std::string& query,
                          const std::string& generation) {
    std::lock_guard lock(mu_);
    auto [it, inserted] = entries_.emplace(key_hash, generation);
    if (!inserted) return;  // first write wins; keys are content-addressed
    if (path_.empty()) return;
    std::filesystem::path p(path_);
    if (p.has_parent_path()) {
        std::filesystem::create_directories(p.parent_path());
    }
    std::ofstream out(path_, std::ios::app);
    if (!out) throw Error("generation cache: cannot append to " + path_);
    json j;
    j["key_hash"] = key_hash;
    j["strategy_kind"] = to_string(kind);
    j["endpoint_id"] = endpoint_id;
    j["query"] = query;
    j["generation"] = generation;
    out << j.dump() << '\n';
    if (!out) throw Error("generation cache: write failed for " + path_);
}

size_t GenerationCache::size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
}

}  // namespace rba

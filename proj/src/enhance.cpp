#include "rba/enhance.hpp"

#include <algorithm>
#include <cstddef>

#include "rba/errors.hpp"
#include "rba/features.hpp"
#include "rba/gencache.hpp"
#include "rba/hash.hpp"
#include "rba/llm.hpp"
#include "rba/stats.hpp"

namespace rba {

const char* to_string(StrategyKind k) {
    switch (k) {
        case StrategyKind::baseline: return "baseline";
        case StrategyKind::rewrite: return "rewrite";
        case StrategyKind::hyde: return "hyde";
        case StrategyKind::q2d: return "q2d";
    }
    throw Error("unknown strategy kind");
}

StrategyKind strategy_kind_from_string(const std::string& s) {
    if (s == "baseline") return StrategyKind::baseline;
    if (s == "rewrite") return StrategyKind::rewrite;
    if (s == "hyde") return StrategyKind::hyde;
    if (s == "q2d") return StrategyKind::q2d;
    throw ConfigError("unknown strategy kind: " + s);
}

Strategy make_strategy(StrategyKind kind, std::string endpoint_id,
                       std::string name) {
    if (kind == StrategyKind::baseline && !endpoint_id.empty()) {
        throw ConfigError("baseline strategy takes no endpoint");
    }
    Strategy s;
    s.kind = kind;
    s.endpoint_id = std::move(endpoint_id);
    if (name.empty()) {
        s.name = to_string(kind);
        if (!s.endpoint_id.empty()) s.name += "-" + s.endpoint_id;
    } else {
        s.name = std::move(name);
    }
    return s;
}

const std::string& PromptTemplates::for_kind(StrategyKind kind) const {
    switch (kind) {
        case StrategyKind::rewrite:
            return rewrite;
        case StrategyKind::hyde:
        case StrategyKind::q2d:  // q2d's pseudo-document is a hyde generation
            return hyde;
        case StrategyKind::baseline:
            break;
    }
    throw Error("no prompt template for baseline");
}

std::string PromptTemplates::hash_for(StrategyKind kind) const {
    return sha256_hex(for_kind(kind));
}

std::string build_prompt(const std::string& query, StrategyKind kind,
                         const PromptTemplates& templates) {
    const std::string& tpl = templates.for_kind(kind);
    std::string out;
    out.reserve(tpl.size() + query.size());
    size_t pos = 0;
    while (true) {
        size_t hit = tpl.find("{q}", pos);
        if (hit == std::string::npos) {
            out.append(tpl, pos, std::string::npos);
            break;
        }
        out.append(tpl, pos, hit - pos);
        out.append(query);
        pos = hit + 3;
    }
    return out;
}

namespace {

void trim(std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) {
        s.clear();
        return;
    }
    size_t e = s.find_last_not_of(" \t\r\n");
    s = s.substr(b, e - b + 1);
}

}  // namespace

std::string postprocess_generation(std::string generation,
                                   const std::string& prompt) {
    trim(generation);
    // Some models echo the whole prompt before answering; drop that prefix.
    if (!prompt.empty()) {
        std::string p = prompt;
        trim(p);
        if (!p.empty() && generation.size() > p.size() &&
            generation.compare(0, p.size(), p) == 0) {
            generation.erase(0, p.size());
            trim(generation);
        }
    }
    if (generation.size() >= 2) {
        char a = generation.front(), b = generation.back();
        if ((a == '"' && b == '"') || (a == '\'' && b == '\'')) {
            generation = generation.substr(1, generation.size() - 2);
            trim(generation);
        }
    }
    return generation;
}

EnhancedQuery enhance(const std::string& query, const Strategy& strategy,
                      LlmClient* llm, GenerationCache* cache,
                      const EnhanceOptions& opts) {
    EnhancedQuery out;
    out.original = query;
    out.strategy = strategy;
    if (strategy.kind == StrategyKind::baseline) {
        out.retrieval_text = query;
        return out;
    }

    const std::string tpl_hash = opts.templates.hash_for(strategy.kind);
    const std::string key =
        GenerationCache::key(strategy.kind, strategy.endpoint_id, tpl_hash, query);

    if (cache != nullptr) {
        if (auto hit = cache->get(key)) {
            out.generation = *hit;
            out.cache_hit = true;
        }
    }
    if (!out.cache_hit) {
        if (opts.offline) {
            throw EnhanceError("offline mode and generation not cached for strategy " +
                                   strategy.name,
                               query, false);
        }
        if (llm == nullptr) {
            throw EnhanceError("no LLM client configured for strategy " + strategy.name,
                               query, false);
        }
        const std::string prompt =
            build_prompt(query, strategy.kind, opts.templates);
        LlmRequest req;
        req.endpoint_id = strategy.endpoint_id;
        req.prompt = prompt;
        req.max_tokens = opts.max_tokens;
        req.temperature = 0.0;
        req.kind = strategy.kind;
        req.query = query;
        std::string raw;
        try {
            raw = llm->generate(req);
        } catch (const RetryableError& e) {
            throw EnhanceError(e.what(), query, true);
        } catch (const Error& e) {
            throw EnhanceError(e.what(), query, false);
        }
        out.generation = postprocess_generation(std::move(raw), prompt);
        if (out.generation.empty()) {
            throw EnhanceError("empty generation for strategy " + strategy.name,
                               query, false);
        }
        if (cache != nullptr) {
            cache->put(key, strategy.kind, strategy.endpoint_id, query,
                       out.generation);
        }
    }
    if (out.generation.empty()) {
        throw EnhanceError("cached generation is empty for strategy " + strategy.name,
                           query, false);
    }

    switch (strategy.kind) {
        case StrategyKind::rewrite:
        case StrategyKind::hyde:
            out.retrieval_text = out.generation;
            break;
        case StrategyKind::q2d:
            out.retrieval_text = query + opts.q2d_separator + out.generation;
            break;
        case StrategyKind::baseline:
            break;  // handled above
    }
    return out;
}

DiagnosticsSummary rewrite_diagnostics(
    const std::vector<std::pair<std::string, std::string>>& pairs) {
    if (pairs.empty()) throw Error("rewrite_diagnostics: empty pair list");

    DiagnosticsSummary s;
    s.n = pairs.size();
    std::vector<double> words_orig, words_rew, length_change, preservation,
        new_terms;
    words_orig.reserve(pairs.size());
    words_rew.reserve(pairs.size());
    length_change.reserve(pairs.size());
    new_terms.reserve(pairs.size());
    TermSet vocab_o, vocab_r;
    size_t spans_total = 0, spans_kept = 0;

    for (const auto& [orig, rew] : pairs) {
        const double wo = f_brevity(orig);
        const double wr = f_brevity(rew);
        words_orig.push_back(wo);
        words_rew.push_back(wr);
        length_change.push_back(wr - wo);

        const TermSet to = term_set(orig);
        const TermSet tr = term_set(rew);
        vocab_o.insert(to.begin(), to.end());
        vocab_r.insert(tr.begin(), tr.end());
        if (!to.empty()) {
            size_t kept = 0;
            for (const auto& t : to) kept += tr.count(t);
            preservation.push_back(100.0 * static_cast<double>(kept) /
                                   static_cast<double>(to.size()));
        }
        size_t fresh = 0;
        for (const auto& t : tr) fresh += to.count(t) == 0;
        new_terms.push_back(static_cast<double>(fresh));

        for (const auto& span : capitalized_spans(orig)) {
            ++spans_total;
            spans_kept += rew.find(span) != std::string::npos;
        }
    }

    s.avg_words_original = mean(words_orig);
    s.avg_words_rewritten = mean(words_rew);
    s.mean_length_change = mean(length_change);
    s.term_preservation_pct = preservation.empty() ? 0.0 : mean(preservation);
    s.mean_new_terms = mean(new_terms);
    s.vocab_original = vocab_o.size();
    s.vocab_rewritten = vocab_r.size();
    if (spans_total > 0) {
        s.entity_preservation_pct = 100.0 * static_cast<double>(spans_kept) /
                                    static_cast<double>(spans_total);
    }
    return s;
}

}  // namespace rba

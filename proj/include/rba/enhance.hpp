#pragma once

#include <optional>
#include <string>
#include <vector>

namespace rba {

class LlmClient;
class GenerationCache;

enum class StrategyKind { baseline, rewrite, hyde, q2d };

const char* to_string(StrategyKind k);
StrategyKind strategy_kind_from_string(const std::string& s);

// A named query-transformation condition. CPT-style variants are the same
// kind pointed at a domain-adapted endpoint, nothing more.
struct Strategy {
    StrategyKind kind = StrategyKind::baseline;
    std::string endpoint_id;  // empty for baseline
    std::string name;         // display name; defaults to kind[-endpoint]

    bool operator==(const Strategy&) const = default;
};

// Fills in the default display name and checks the baseline/endpoint rule.
Strategy make_strategy(StrategyKind kind, std::string endpoint_id = {},
                       std::string name = {});

struct EnhancedQuery {
    std::string original;        // q
    std::string retrieval_text;  // q' -- what actually gets embedded
    Strategy strategy;
    std::string generation;  // LLM output; empty for baseline
    bool cache_hit = false;

    bool operator==(const EnhancedQuery&) const = default;
};

// Prompt templates; `{q}` is replaced by the query. Defaults are plain
// starting points and fully overridable from config.
struct PromptTemplates {
    std::string rewrite =
        "Rewrite the following question to be clearer and more explicit for "
        "document retrieval. Output only the rewritten question.\n"
        "Question: {q}";
    std::string hyde =
        "Write a short passage that answers the following question.\n"
        "Question: {q}\nPassage:";

    const std::string& for_kind(StrategyKind kind) const;
    // Participates in cache keys so template edits invalidate generations.
    std::string hash_for(StrategyKind kind) const;
};

// Instantiates the template for the kind. kind must not be baseline.
std::string build_prompt(const std::string& query, StrategyKind kind,
                         const PromptTemplates& templates = {});

// Trims whitespace/quotes and removes echoed prompt boilerplate from a raw
// LLM generation.
std::string postprocess_generation(std::string generation,
                                   const std::string& prompt);

struct EnhanceOptions {
    PromptTemplates templates;
    std::string q2d_separator = "\n";
    int max_tokens = 256;
    bool offline = false;  // cache only; any miss is an error
};

// Produces the retrieval text for one query under one strategy.
//   baseline  q' = q
//   rewrite   q' = generation
//   hyde      q' = generation
//   q2d       q' = q + separator + generation
// Generations are cached by (kind, endpoint, template hash, query); with a
// warm cache no LLM call happens. An empty generation is an error, never a
// silent fallback to the original query.
EnhancedQuery enhance(const std::string& query, const Strategy& strategy,
                      LlmClient* llm, GenerationCache* cache,
                      const EnhanceOptions& opts = {});

struct DiagnosticsSummary {
    size_t n = 0;
    double avg_words_original = 0.0;
    double avg_words_rewritten = 0.0;
    double mean_length_change = 0.0;       // words
    double term_preservation_pct = 0.0;    // averaged over pairs
    double mean_new_terms = 0.0;           // unique new terms per pair
    size_t vocab_original = 0;             // unique terms across all originals
    size_t vocab_rewritten = 0;
    std::optional<double> entity_preservation_pct;  // null when no spans found

    bool operator==(const DiagnosticsSummary&) const = default;
};

// Query-transformation characteristics over (original, rewritten) pairs.
DiagnosticsSummary rewrite_diagnostics(
    const std::vector<std::pair<std::string, std::string>>& pairs);

}  // namespace rba

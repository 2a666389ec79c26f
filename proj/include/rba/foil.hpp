#pragma once

#include <functional>
#include <string>
#include <vector>

#include "rba/corpus.hpp"
#include "rba/enhance.hpp"
#include "rba/retriever.hpp"

namespace rba {

struct FoilResult {
    double accuracy_pct = 0.0;
    size_t correct = 0;
    size_t ties = 0;
    size_t total = 0;
    std::vector<bool> per_pair;   // strict win of the evidence document
    std::vector<bool> tie_flags;  // exact score tie, counted as incorrect
};

// A pair counts correct only when S(q', evidence) > S(q', foil), strict.
// Ties are incorrect but tracked separately; a provider producing many ties
// deserves a closer look, not a quiet 0%.
// `enhancer` maps a raw query to its retrieval text for the condition under
// evaluation; enhancement and embedding errors propagate.
FoilResult foil_accuracy(
    const std::vector<FoilPair>& foils,
    const std::function<EnhancedQuery(const std::string&)>& enhancer,
    EmbeddingProvider& provider, const ScoringOptions& opts);

}  // namespace rba

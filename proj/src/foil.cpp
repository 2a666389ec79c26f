#include "rba/foil.hpp"

#include "rba/errors.hpp"
#include "rba/features.hpp"

namespace rba {

FoilResult foil_accuracy(
    const std::vector<FoilPair>& foils,
    const std::function<EnhancedQuery(const std::string&)>& enhancer,
    EmbeddingProvider& provider, const ScoringOptions& opts) {
    if (foils.empty()) throw Error("foil_accuracy: empty foil list");

    FoilResult res;
    res.total = foils.size();
    res.per_pair.reserve(foils.size());
    res.tie_flags.reserve(foils.size());
    for (const auto& f : foils) {
        const EnhancedQuery eq = enhancer(f.query);
        std::vector<AnyEmbedding> embs =
            provider.embed({eq.retrieval_text, f.doc_evidence, f.doc_foil});
        double s_evidence = score(embs[0], embs[1], opts.metric);
        double s_foil = score(embs[0], embs[2], opts.metric);
        if (opts.length_penalty != 0.0) {
            s_evidence += opts.length_penalty * f_brevity(f.doc_evidence);
            s_foil += opts.length_penalty * f_brevity(f.doc_foil);
        }
        const bool win = s_evidence > s_foil;
        const bool tie = s_evidence == s_foil;
        res.per_pair.push_back(win);
        res.tie_flags.push_back(tie);
        res.correct += win;
        res.ties += tie;
    }
    res.accuracy_pct = 100.0 * static_cast<double>(res.correct) /
                       static_cast<double>(res.total);
    return res;
}

}  // namespace rba

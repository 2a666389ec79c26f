#include "rba/audit.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>
#include <tuple>

#include <nlohmann/json.hpp>

#include "rba/corpus.hpp"
#include "rba/errors.hpp"
#include "rba/features.hpp"
#include "rba/foil.hpp"
#include "rba/gencache.hpp"
#include "rba/hash.hpp"
#include "rba/llm.hpp"
#include "rba/retriever.hpp"
#include "rba/stats.hpp"

namespace rba {

using nlohmann::json;

namespace {

void parallel_for(size_t n, int workers, const std::function<void(size_t)>& fn) {
    if (workers <= 1 || n <= 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<size_t> next{0};
    std::exception_ptr first_error;
    std::mutex err_mu;
    auto worker = [&] {
        for (size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(err_mu);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    const size_t count = std::min<size_t>(static_cast<size_t>(workers), n);
    pool.reserve(count);
    for (size_t i = 0; i < count; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

std::string read_file(const std::string& path, const char* what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError(std::string("cannot read ") + what + ": " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string file_stem(const std::string& path) {
    return std::filesystem::path(path).stem().string();
}

struct EnhSlot {
    EnhancedQuery eq;
    std::string error;  // empty = ok
};

struct RetrieverRt {
    const RetrieverConfig* cfg = nullptr;
    std::shared_ptr<MemoProvider> provider;
    ScoringOptions opts;
};

// Everything the pipeline stages share for one run.
struct RunCtx {
    const Config* cfg = nullptr;
    Dataset dataset;
    std::vector<RetrieverRt> retrievers;
    // (strategy name, query) -> enhancement result
    std::map<std::pair<std::string, std::string>, EnhSlot> enh;
};

const EnhSlot& enh_slot(const RunCtx& ctx, const std::string& strategy,
                        const std::string& query) {
    return ctx.enh.at({strategy, query});
}

std::vector<std::string> unique_queries(const Dataset& ds, bool from_pairs,
                                        bool from_foils) {
    std::vector<std::string> queries;
    auto add = [&](const std::string& q) {
        if (std::find(queries.begin(), queries.end(), q) == queries.end()) {
            queries.push_back(q);
        }
    };
    if (from_pairs) {
        for (const auto& p : ds.pairs) add(p.query);
    }
    if (from_foils) {
        for (const auto& f : ds.foils) add(f.query);
    }
    return queries;
}

void enhance_all(RunCtx& ctx, const std::vector<std::string>& queries,
                 LlmClient* llm, GenerationCache& cache, bool offline) {
    const Config& cfg = *ctx.cfg;
    EnhanceOptions opts = cfg.enhance;
    opts.offline = offline;

    struct Task {
        const Strategy* strategy;
        const std::string* query;
    };
    std::vector<Task> tasks;
    for (const auto& s : cfg.strategies) {
        for (const auto& q : queries) tasks.push_back({&s, &q});
    }
    std::vector<EnhSlot> slots(tasks.size());
    parallel_for(tasks.size(), cfg.parallelism, [&](size_t i) {
        try {
            slots[i].eq =
                enhance(*tasks[i].query, *tasks[i].strategy, llm, &cache, opts);
        } catch (const Error& e) {
            slots[i].error = e.what();
        }
    });
    for (size_t i = 0; i < tasks.size(); ++i) {
        ctx.enh[{tasks[i].strategy->name, *tasks[i].query}] = std::move(slots[i]);
    }
}

void build_retrievers(RunCtx& ctx) {
    const Config& cfg = *ctx.cfg;
    for (const auto& rc : cfg.retrievers) {
        RetrieverRt rt;
        rt.cfg = &rc;
        std::string disk;
        if (!cfg.cache_dir.empty()) {
            disk = cfg.cache_dir + "/embeddings-" + rc.id + ".jsonl";
        }
        rt.provider = std::make_shared<MemoProvider>(make_provider(rc.provider),
                                                     disk);
        rt.opts.metric = rc.metric;
        rt.opts.length_penalty = rc.length_penalty;
        ctx.retrievers.push_back(std::move(rt));
    }
}

// Best-effort batch across every text one retriever will see; failures here
// re-surface per cell, where they can be attributed.
void prewarm_embeddings(RunCtx& ctx, bool with_pairs, bool with_foils) {
    std::vector<std::string> texts;
    auto add = [&](const std::string& t) {
        if (std::find(texts.begin(), texts.end(), t) == texts.end()) {
            texts.push_back(t);
        }
    };
    for (const auto& [key, slot] : ctx.enh) {
        if (slot.error.empty()) add(slot.eq.retrieval_text);
    }
    if (with_pairs) {
        for (const auto& p : ctx.dataset.pairs) {
            add(p.doc_treatment);
            add(p.doc_control);
        }
    }
    if (with_foils) {
        for (const auto& f : ctx.dataset.foils) {
            add(f.doc_foil);
            add(f.doc_evidence);
        }
    }
    if (texts.empty()) return;
    for (auto& rt : ctx.retrievers) {
        try {
            rt.provider->embed(texts);
        } catch (const std::exception&) {
            // per-cell scoring will report the failure with context
        }
    }
}

void run_grid(RunCtx& ctx, AuditReport& rep) {
    const Config& cfg = *ctx.cfg;
    std::map<BiasType, std::vector<const BiasPair*>> by_bias;
    for (const auto& p : ctx.dataset.pairs) by_bias[p.bias_type].push_back(&p);

    for (const auto& s : cfg.strategies) {
        for (const auto& rt : ctx.retrievers) {
            for (BiasType b : kAllBiasTypes) {
                auto it = by_bias.find(b);
                if (it == by_bias.end()) continue;
                std::vector<double> deltas;
                deltas.reserve(it->second.size());
                std::string err, stage;
                for (const BiasPair* p : it->second) {
                    const EnhSlot& slot = enh_slot(ctx, s.name, p->query);
                    if (!slot.error.empty()) {
                        err = "query \"" + p->query + "\": " + slot.error;
                        stage = "enhance";
                        break;
                    }
                    try {
                        deltas.push_back(score_pair(*p, slot.eq, *rt.provider,
                                                    rt.opts, rt.cfg->id)
                                             .delta);
                    } catch (const std::exception& e) {
                        err = "pair " + p->id + ": " + e.what();
                        stage = "embed";
                        break;
                    }
                }
                if (err.empty()) {
                    try {
                        TTestResult tt = paired_ttest(deltas);
                        rep.cells.push_back(
                            {rt.cfg->id, to_string(b), s.name, tt});
                    } catch (const Error& e) {
                        err = e.what();
                        stage = "stats";
                    }
                }
                if (!err.empty()) {
                    rep.errors.push_back(
                        {rt.cfg->id, to_string(b), s.name, stage, err});
                }
            }
        }
    }
    if (!rep.cells.empty()) {
        try {
            rep.summaries =
                aggregate_grid(rep.cells, cfg.alpha, cfg.bonferroni_family,
                               baseline_strategy(cfg).name);
        } catch (const Error& e) {
            rep.errors.push_back({"", "", "", "stats", e.what()});
        }
    }
}

// Scores and the four feature values for both documents of every pair,
// computed with the condition's retrieval text, per the decorrelation
// analysis definition.
struct FeatureObs {
    std::vector<double> scores;
    std::map<std::string, std::vector<double>> features;  // name -> values
    std::map<std::string, std::string> feature_errors;    // name -> reason
};

FeatureObs collect_observations(const RunCtx& ctx, const Strategy& s,
                                const RetrieverRt& rt, std::string& fatal,
                                std::string& fatal_stage) {
    FeatureObs obs;
    for (const auto& p : ctx.dataset.pairs) {
        const EnhSlot& slot = enh_slot(ctx, s.name, p.query);
        if (!slot.error.empty()) {
            fatal = "query \"" + p.query + "\": " + slot.error;
            fatal_stage = "enhance";
            return obs;
        }
        const std::string& qprime = slot.eq.retrieval_text;
        double s_treat = 0.0, s_ctrl = 0.0;
        try {
            std::vector<AnyEmbedding> embs = rt.provider->embed(
                {qprime, p.doc_treatment, p.doc_control});
            s_treat = score(embs[0], embs[1], rt.opts.metric);
            s_ctrl = score(embs[0], embs[2], rt.opts.metric);
            if (rt.opts.length_penalty != 0.0) {
                s_treat += rt.opts.length_penalty * f_brevity(p.doc_treatment);
                s_ctrl += rt.opts.length_penalty * f_brevity(p.doc_control);
            }
        } catch (const std::exception& e) {
            fatal = "pair " + p.id + ": " + e.what();
            fatal_stage = "embed";
            return obs;
        }
        struct DocSide {
            const std::string* doc;
            double score;
            const std::optional<size_t>* stored;
        };
        for (const DocSide& side :
             {DocSide{&p.doc_treatment, s_treat, &p.answer_offset_treatment},
              DocSide{&p.doc_control, s_ctrl, &p.answer_offset_control}}) {
            obs.scores.push_back(side.score);
            auto feature = [&](const char* name, auto&& compute) {
                if (obs.feature_errors.count(name)) return;
                try {
                    obs.features[name].push_back(compute());
                } catch (const std::exception& e) {
                    obs.feature_errors[name] = "pair " + p.id + ": " + e.what();
                    obs.features.erase(name);
                }
            };
            feature("brevity", [&] { return f_brevity(*side.doc); });
            feature("literal", [&] { return f_literal(qprime, *side.doc); });
            feature("position", [&] {
                const size_t off =
                    effective_offset(*side.doc, p.answer_text, *side.stored);
                return f_position(off, *side.doc);
            });
            feature("repetition",
                    [&] { return f_repetition(qprime, *side.doc); });
        }
    }
    return obs;
}

void run_decorrelation(RunCtx& ctx, AuditReport& rep) {
    const Config& cfg = *ctx.cfg;
    const std::string base = baseline_strategy(cfg).name;
    static const char* kFeatures[] = {"brevity", "literal", "position",
                                      "repetition"};
    // (feature, strategy, retriever) -> rho
    std::map<std::tuple<std::string, std::string, std::string>, double> rho;

    for (const auto& s : cfg.strategies) {
        for (const auto& rt : ctx.retrievers) {
            std::string fatal, fatal_stage;
            FeatureObs obs = collect_observations(ctx, s, rt, fatal, fatal_stage);
            if (!fatal.empty()) {
                rep.errors.push_back(
                    {rt.cfg->id, "", s.name, fatal_stage, fatal});
                continue;
            }
            for (const char* f : kFeatures) {
                auto it = obs.features.find(f);
                if (it == obs.features.end()) {
                    rep.errors.push_back({rt.cfg->id, f, s.name, "stats",
                                          obs.feature_errors.at(f)});
                    continue;
                }
                try {
                    CorrelationResult cr = spearman(obs.scores, it->second);
                    rho[{f, s.name, rt.cfg->id}] = cr.rho;
                    rep.decorrelation_detail.push_back(
                        {rt.cfg->id, f, s.name, cr.rho, cr.n});
                } catch (const Error& e) {
                    rep.errors.push_back({rt.cfg->id, f, s.name, "stats",
                                          std::string("feature correlation: ") +
                                              e.what()});
                }
            }
        }
    }

    for (const char* f : kFeatures) {
        std::vector<double> base_abs;
        for (const auto& rt : ctx.retrievers) {
            auto it = rho.find({f, base, rt.cfg->id});
            if (it != rho.end()) base_abs.push_back(std::abs(it->second));
        }
        if (!base_abs.empty()) rep.baseline_abs_rho[f] = mean(base_abs);

        for (const auto& s : cfg.strategies) {
            if (s.name == base) continue;
            std::vector<double> pcts;
            for (const auto& rt : ctx.retrievers) {
                auto ib = rho.find({f, base, rt.cfg->id});
                auto is = rho.find({f, s.name, rt.cfg->id});
                if (ib == rho.end() || is == rho.end()) continue;
                try {
                    pcts.push_back(delta_rho(ib->second, is->second).pct);
                } catch (const Error& e) {
                    rep.errors.push_back({rt.cfg->id, f, s.name, "stats",
                                          std::string("reduction: ") + e.what()});
                }
            }
            if (!pcts.empty()) {
                rep.decorrelation.push_back({f, s.name, mean(pcts)});
            }
        }
    }
}

void run_diagnostics(RunCtx& ctx, const std::vector<std::string>& queries,
                     AuditReport& rep) {
    for (const auto& s : ctx.cfg->strategies) {
        if (s.kind != StrategyKind::rewrite) continue;
        std::vector<std::pair<std::string, std::string>> pairs;
        for (const auto& q : queries) {
            const EnhSlot& slot = enh_slot(ctx, s.name, q);
            if (slot.error.empty()) pairs.emplace_back(q, slot.eq.generation);
        }
        if (!pairs.empty()) {
            rep.diagnostics[s.name] = rewrite_diagnostics(pairs);
        }
    }
}

void run_foil_stage(RunCtx& ctx, AuditReport& rep) {
    for (const auto& s : ctx.cfg->strategies) {
        for (const auto& rt : ctx.retrievers) {
            auto enhancer = [&](const std::string& q) -> EnhancedQuery {
                const EnhSlot& slot = enh_slot(ctx, s.name, q);
                if (!slot.error.empty()) {
                    throw EnhanceError(slot.error, q, false);
                }
                return slot.eq;
            };
            try {
                FoilResult fr = foil_accuracy(ctx.dataset.foils, enhancer,
                                              *rt.provider, rt.opts);
                rep.foil.push_back({rt.cfg->id, s.name, fr.accuracy_pct,
                                    fr.ties, fr.total});
            } catch (const std::exception& e) {
                rep.errors.push_back({rt.cfg->id, "", s.name, "foil", e.what()});
            }
        }
    }
}

}  // namespace

RunOutcome run_audit(const Config& cfg, RunStage stage, bool offline) {
    const std::string raw = read_file(cfg.dataset, "dataset");
    LoadResult loaded = parse_dataset(raw, file_stem(cfg.dataset));

    const bool want_grid = stage == RunStage::audit;
    const bool want_decor =
        stage == RunStage::audit || stage == RunStage::decorrelate;
    const bool want_foil =
        stage == RunStage::foil ||
        (stage == RunStage::audit && !loaded.dataset.foils.empty());
    if (stage == RunStage::foil && loaded.dataset.foils.empty()) {
        throw ConfigError("dataset " + cfg.dataset + " has no foil records");
    }
    if ((want_grid || want_decor) && loaded.dataset.pairs.empty()) {
        throw ConfigError("dataset " + cfg.dataset + " has no bias pairs");
    }

    RunCtx ctx;
    ctx.cfg = &cfg;
    ctx.dataset = std::move(loaded.dataset);

    AuditReport rep;
    rep.dataset_name = ctx.dataset.name;
    rep.config_hash = config_hash(cfg, sha256_hex(raw));
    rep.run_id = rep.config_hash.substr(0, 12);
    rep.rejected_records = loaded.rejections.size();
    for (const auto& rc : cfg.retrievers) rep.retriever_order.push_back(rc.id);
    for (const auto& s : cfg.strategies) rep.strategy_order.push_back(s.name);

    std::unique_ptr<LlmRouter> router;
    if (!offline && !cfg.endpoints.empty()) {
        router = std::make_unique<LlmRouter>(cfg.endpoints);
    }
    GenerationCache gencache(
        cfg.cache_dir.empty() ? std::string()
                              : cfg.cache_dir + "/generations.jsonl");

    const bool need_pairs = want_grid || want_decor;
    const std::vector<std::string> queries =
        unique_queries(ctx.dataset, need_pairs, want_foil);
    enhance_all(ctx, queries, router.get(), gencache, offline);
    build_retrievers(ctx);
    prewarm_embeddings(ctx, need_pairs, want_foil);

    if (want_grid) run_grid(ctx, rep);
    if (want_decor) run_decorrelation(ctx, rep);
    if (want_grid) {
        run_diagnostics(ctx, unique_queries(ctx.dataset, true, false), rep);
    }
    if (want_foil) run_foil_stage(ctx, rep);

    RunOutcome out;
    out.report = std::move(rep);
    out.exit_code = out.report.errors.empty() ? 0 : 2;
    return out;
}

RunOutcome run_and_write(const Config& cfg, RunStage stage, bool offline) {
    RunOutcome out = run_audit(cfg, stage, offline);
    write_report(out.report, cfg.output_dir);
    return out;
}

void run_generate(const std::string& seeds_path, const std::string& out_path,
                  uint64_t rng_seed) {
    const std::vector<SeedDoc> seeds = load_seed_docs(seeds_path);
    Dataset ds;
    ds.name = file_stem(out_path);
    for (BiasType b : kAllBiasTypes) {
        std::vector<BiasPair> pairs = synth_pairs(seeds, b, rng_seed);
        ds.pairs.insert(ds.pairs.end(), pairs.begin(), pairs.end());
    }
    const std::filesystem::path path(out_path);
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write dataset file " + out_path);
    out << serialize_dataset(ds);
    if (!out) throw Error("write failed for " + out_path);
}

int run_enhance(const Config& cfg, const std::string& only_strategy,
                bool offline) {
    const std::string raw = read_file(cfg.dataset, "dataset");
    LoadResult loaded = parse_dataset(raw, file_stem(cfg.dataset));

    std::vector<const Strategy*> wanted;
    for (const auto& s : cfg.strategies) {
        if (s.kind == StrategyKind::baseline) continue;
        if (!only_strategy.empty() && s.name != only_strategy) continue;
        wanted.push_back(&s);
    }
    if (wanted.empty()) {
        throw ConfigError(only_strategy.empty()
                              ? "no non-baseline strategies configured"
                              : "no such non-baseline strategy: " +
                                    only_strategy);
    }

    std::unique_ptr<LlmRouter> router;
    if (!offline && !cfg.endpoints.empty()) {
        router = std::make_unique<LlmRouter>(cfg.endpoints);
    }
    GenerationCache gencache(
        cfg.cache_dir.empty() ? std::string()
                              : cfg.cache_dir + "/generations.jsonl");
    EnhanceOptions opts = cfg.enhance;
    opts.offline = offline;

    const std::vector<std::string> queries =
        unique_queries(loaded.dataset, true, true);
    bool any_error = false;
    std::filesystem::create_directories(cfg.output_dir);
    for (const Strategy* s : wanted) {
        std::vector<EnhSlot> slots(queries.size());
        parallel_for(queries.size(), cfg.parallelism, [&](size_t i) {
            try {
                slots[i].eq =
                    enhance(queries[i], *s, router.get(), &gencache, opts);
            } catch (const Error& e) {
                slots[i].error = e.what();
            }
        });
        std::string fname = "enhanced-";
        for (char c : s->name) {
            const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                            (c >= '0' && c <= '9') || c == '-' || c == '_';
            fname += ok ? c : '_';
        }
        fname += ".jsonl";
        std::ofstream out(std::filesystem::path(cfg.output_dir) / fname,
                          std::ios::binary);
        if (!out) {
            throw Error("cannot write " + fname + " under " + cfg.output_dir);
        }
        for (size_t i = 0; i < queries.size(); ++i) {
            json j;
            j["query"] = queries[i];
            j["strategy"] = s->name;
            if (slots[i].error.empty()) {
                j["retrieval_text"] = slots[i].eq.retrieval_text;
                j["generation"] = slots[i].eq.generation;
                j["cache_hit"] = slots[i].eq.cache_hit;
            } else {
                j["error"] = slots[i].error;
                any_error = true;
            }
            out << j.dump() << '\n';
        }
    }
    return any_error ? 2 : 0;
}

}  // namespace rba

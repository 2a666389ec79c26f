#include "rba/report.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rba/corpus.hpp"
#include "rba/errors.hpp"

namespace rba {

using nlohmann::json;

double round6(double v) {
    if (!std::isfinite(v)) return v;
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return std::strtod(buf, nullptr);
}

namespace {

std::string fmt6(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", round6(v));
    return buf;
}

std::string fmtf(double v, int decimals, bool sign = false) {
    char buf[40];
    std::snprintf(buf, sizeof buf, sign ? "%+.*f" : "%.*f", decimals, v);
    return buf;
}

json to_json(const TTestResult& t) {
    json j;
    j["abs_t"] = round6(t.abs_t);
    j["df"] = t.df;
    j["mean_delta"] = round6(t.mean_delta);
    j["n"] = t.n;
    j["p_value"] = round6(t.p_value);
    j["significant"] = t.significant;
    j["t_stat"] = round6(t.t_stat);
    return j;
}

TTestResult ttest_from_json(const json& j) {
    TTestResult t;
    t.abs_t = j.at("abs_t").get<double>();
    t.df = j.at("df").get<int>();
    t.mean_delta = j.at("mean_delta").get<double>();
    t.n = j.at("n").get<int>();
    t.p_value = j.at("p_value").get<double>();
    t.significant = j.at("significant").get<bool>();
    t.t_stat = j.at("t_stat").get<double>();
    return t;
}

json to_json(const DiagnosticsSummary& d) {
    json j;
    j["avg_words_original"] = round6(d.avg_words_original);
    j["avg_words_rewritten"] = round6(d.avg_words_rewritten);
    if (d.entity_preservation_pct) {
        j["entity_preservation_pct"] = round6(*d.entity_preservation_pct);
    } else {
        j["entity_preservation_pct"] = nullptr;
    }
    j["mean_length_change"] = round6(d.mean_length_change);
    j["mean_new_terms"] = round6(d.mean_new_terms);
    j["n"] = d.n;
    j["term_preservation_pct"] = round6(d.term_preservation_pct);
    j["vocab_original"] = d.vocab_original;
    j["vocab_rewritten"] = d.vocab_rewritten;
    return j;
}

DiagnosticsSummary diagnostics_from_json(const json& j) {
    DiagnosticsSummary d;
    d.avg_words_original = j.at("avg_words_original").get<double>();
    d.avg_words_rewritten = j.at("avg_words_rewritten").get<double>();
    if (!j.at("entity_preservation_pct").is_null()) {
        d.entity_preservation_pct = j.at("entity_preservation_pct").get<double>();
    }
    d.mean_length_change = j.at("mean_length_change").get<double>();
    d.mean_new_terms = j.at("mean_new_terms").get<double>();
    d.n = j.at("n").get<size_t>();
    d.term_preservation_pct = j.at("term_preservation_pct").get<double>();
    d.vocab_original = j.at("vocab_original").get<size_t>();
    d.vocab_rewritten = j.at("vocab_rewritten").get<size_t>();
    return d;
}

json report_to_json(const AuditReport& r) {
    json j;
    j["cells"] = json::array();
    for (const auto& c : r.cells) {
        json jc;
        jc["bias_type"] = c.bias_type;
        jc["retriever_id"] = c.retriever_id;
        jc["strategy"] = c.strategy;
        jc["ttest"] = to_json(c.ttest);
        j["cells"].push_back(jc);
    }
    j["config_hash"] = r.config_hash;
    j["dataset_name"] = r.dataset_name;

    json dec;
    dec["baseline_abs_rho"] = json::object();
    for (const auto& [feature, rho] : r.baseline_abs_rho) {
        dec["baseline_abs_rho"][feature] = round6(rho);
    }
    dec["cells"] = json::array();
    for (const auto& d : r.decorrelation) {
        json jd;
        jd["feature"] = d.feature;
        jd["pct"] = round6(d.pct);
        jd["strategy"] = d.strategy;
        dec["cells"].push_back(jd);
    }
    dec["detail"] = json::array();
    for (const auto& d : r.decorrelation_detail) {
        json jd;
        jd["feature"] = d.feature;
        jd["n"] = d.n;
        jd["retriever_id"] = d.retriever_id;
        jd["rho"] = round6(d.rho);
        jd["strategy"] = d.strategy;
        dec["detail"].push_back(jd);
    }
    j["decorrelation"] = dec;

    j["diagnostics"] = json::object();
    for (const auto& [strategy, d] : r.diagnostics) {
        j["diagnostics"][strategy] = to_json(d);
    }
    j["errors"] = json::array();
    for (const auto& e : r.errors) {
        json je;
        je["bias_type"] = e.bias_type;
        je["message"] = e.message;
        je["retriever_id"] = e.retriever_id;
        je["stage"] = e.stage;
        je["strategy"] = e.strategy;
        j["errors"].push_back(je);
    }
    j["foil"] = json::array();
    for (const auto& f : r.foil) {
        json jf;
        jf["accuracy_pct"] = round6(f.accuracy_pct);
        jf["retriever_id"] = f.retriever_id;
        jf["strategy"] = f.strategy;
        jf["ties"] = f.ties;
        jf["total"] = f.total;
        j["foil"].push_back(jf);
    }
    j["rejected_records"] = r.rejected_records;
    j["retriever_order"] = r.retriever_order;
    j["run_id"] = r.run_id;
    j["strategy_order"] = r.strategy_order;
    j["summaries"] = json::array();
    for (const auto& s : r.summaries) {
        json js;
        js["is_baseline"] = s.is_baseline;
        js["mean_abs_t"] = round6(s.mean_abs_t);
        js["reduction_vs_baseline_pct"] = round6(s.reduction_vs_baseline_pct);
        js["sig_count"] = s.sig_count;
        js["std_abs_t"] = round6(s.std_abs_t);
        js["strategy"] = s.strategy;
        js["total"] = s.total;
        j["summaries"].push_back(js);
    }
    return j;
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

std::string sanitize_filename(const std::string& s) {
    std::string out;
    for (char c : s) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                        (c >= '0' && c <= '9') || c == '-' || c == '_';
        out += ok ? c : '_';
    }
    return out.empty() ? std::string("unnamed") : out;
}

// Canonical bias order first, then anything unexpected in appearance order.
std::vector<std::string> bias_column_order(const std::vector<std::string>& seen) {
    std::vector<std::string> order;
    for (BiasType b : kAllBiasTypes) {
        const std::string name = to_string(b);
        if (std::find(seen.begin(), seen.end(), name) != seen.end()) {
            order.push_back(name);
        }
    }
    for (const auto& name : seen) {
        if (std::find(order.begin(), order.end(), name) == order.end()) {
            order.push_back(name);
        }
    }
    return order;
}

std::vector<std::string> seen_biases(const std::vector<GridCell>& cells) {
    std::vector<std::string> seen;
    for (const auto& c : cells) {
        if (std::find(seen.begin(), seen.end(), c.bias_type) == seen.end()) {
            seen.push_back(c.bias_type);
        }
    }
    return seen;
}

std::vector<std::string> seen_retrievers(const std::vector<GridCell>& cells) {
    std::vector<std::string> seen;
    for (const auto& c : cells) {
        if (std::find(seen.begin(), seen.end(), c.retriever_id) == seen.end()) {
            seen.push_back(c.retriever_id);
        }
    }
    return seen;
}

std::map<std::string, std::string> render_csv(const AuditReport& r) {
    std::map<std::string, std::string> files;

    {
        std::ostringstream out;
        out << "strategy,mean_abs_t,std_abs_t,sig_count,total,"
               "reduction_vs_baseline_pct,is_baseline\n";
        for (const auto& s : r.summaries) {
            out << csv_escape(s.strategy) << ',' << fmt6(s.mean_abs_t) << ','
                << fmt6(s.std_abs_t) << ',' << s.sig_count << ',' << s.total
                << ',' << fmt6(s.reduction_vs_baseline_pct) << ','
                << (s.is_baseline ? "true" : "false") << '\n';
        }
        files["tables/summary.csv"] = out.str();
    }
    {
        std::ostringstream out;
        out << "retriever_id,bias_type,strategy,n,df,mean_delta,t_stat,abs_t,"
               "p_value,significant\n";
        for (const auto& c : r.cells) {
            out << csv_escape(c.retriever_id) << ',' << csv_escape(c.bias_type)
                << ',' << csv_escape(c.strategy) << ',' << c.ttest.n << ','
                << c.ttest.df << ',' << fmt6(c.ttest.mean_delta) << ','
                << fmt6(c.ttest.t_stat) << ',' << fmt6(c.ttest.abs_t) << ','
                << fmt6(c.ttest.p_value) << ','
                << (c.ttest.significant ? "true" : "false") << '\n';
        }
        files["tables/cells.csv"] = out.str();
    }
    {
        std::ostringstream out;
        out << "feature,mean_abs_rho\n";
        for (const auto& [feature, rho] : r.baseline_abs_rho) {
            out << csv_escape(feature) << ',' << fmt6(rho) << '\n';
        }
        files["tables/decorrelation_baseline.csv"] = out.str();
    }
    {
        std::ostringstream out;
        out << "feature,strategy,pct_reduction\n";
        for (const auto& d : r.decorrelation) {
            out << csv_escape(d.feature) << ',' << csv_escape(d.strategy) << ','
                << fmt6(d.pct) << '\n';
        }
        files["tables/decorrelation.csv"] = out.str();
    }
    {
        std::ostringstream out;
        out << "retriever_id,feature,strategy,rho,n\n";
        for (const auto& d : r.decorrelation_detail) {
            out << csv_escape(d.retriever_id) << ',' << csv_escape(d.feature)
                << ',' << csv_escape(d.strategy) << ',' << fmt6(d.rho) << ','
                << d.n << '\n';
        }
        files["tables/decorrelation_detail.csv"] = out.str();
    }
    {
        std::ostringstream out;
        out << "retriever_id,strategy,accuracy_pct,ties,total\n";
        for (const auto& f : r.foil) {
            out << csv_escape(f.retriever_id) << ',' << csv_escape(f.strategy)
                << ',' << fmt6(f.accuracy_pct) << ',' << f.ties << ','
                << f.total << '\n';
        }
        files["tables/foil.csv"] = out.str();
    }
    {
        std::ostringstream out;
        out << "strategy,n,avg_words_original,avg_words_rewritten,"
               "mean_length_change,term_preservation_pct,mean_new_terms,"
               "vocab_original,vocab_rewritten,entity_preservation_pct\n";
        for (const auto& [strategy, d] : r.diagnostics) {
            out << csv_escape(strategy) << ',' << d.n << ','
                << fmt6(d.avg_words_original) << ',' << fmt6(d.avg_words_rewritten)
                << ',' << fmt6(d.mean_length_change) << ','
                << fmt6(d.term_preservation_pct) << ',' << fmt6(d.mean_new_terms)
                << ',' << d.vocab_original << ',' << d.vocab_rewritten << ',';
            if (d.entity_preservation_pct) out << fmt6(*d.entity_preservation_pct);
            out << '\n';
        }
        files["tables/diagnostics.csv"] = out.str();
    }
    {
        std::ostringstream out;
        out << "retriever_id,bias_type,strategy,stage,message\n";
        for (const auto& e : r.errors) {
            out << csv_escape(e.retriever_id) << ',' << csv_escape(e.bias_type)
                << ',' << csv_escape(e.strategy) << ',' << csv_escape(e.stage)
                << ',' << csv_escape(e.message) << '\n';
        }
        files["tables/errors.csv"] = out.str();
    }
    for (const auto& strategy : r.strategy_order) {
        HeatmapMatrix m = heatmap_matrix(r.cells, strategy, r.retriever_order);
        if (m.retrievers.empty() || m.bias_types.empty()) continue;
        std::ostringstream out;
        out << "retriever_id";
        for (const auto& b : m.bias_types) out << ',' << csv_escape(b);
        out << '\n';
        for (size_t i = 0; i < m.retrievers.size(); ++i) {
            out << csv_escape(m.retrievers[i]);
            for (const auto& v : m.values[i]) {
                out << ',';
                if (v) out << fmt6(*v);
            }
            out << '\n';
        }
        files["tables/heatmap-" + sanitize_filename(strategy) + ".csv"] =
            out.str();
    }
    return files;
}

std::string render_markdown(const AuditReport& r) {
    std::ostringstream out;
    out << "# Retrieval bias audit\n\n";
    out << "- run id: " << r.run_id << "\n";
    out << "- dataset: " << r.dataset_name << "\n";
    out << "- config hash: " << r.config_hash << "\n";
    out << "- rejected input records: " << r.rejected_records << "\n\n";

    if (!r.summaries.empty()) {
        out << "## Bias summary by method\n\n";
        out << "| Method | Mean \\|t\\| | Sig. Biases | Reduction |\n";
        out << "| --- | --- | --- | --- |\n";
        for (const auto& s : r.summaries) {
            out << "| " << s.strategy << " | " << fmtf(round6(s.mean_abs_t), 2)
                << " ± " << fmtf(round6(s.std_abs_t), 2) << " | " << s.sig_count
                << "/" << s.total << " | ";
            if (s.is_baseline) out << "--";
            else out << fmtf(round6(s.reduction_vs_baseline_pct), 1, true) << "%";
            out << " |\n";
        }
        out << "\n";
    }

    for (const auto& strategy : r.strategy_order) {
        HeatmapMatrix m = heatmap_matrix(r.cells, strategy, r.retriever_order);
        if (m.retrievers.empty() || m.bias_types.empty()) continue;
        out << "## |t| by retriever and bias: " << strategy << "\n\n";
        out << "| Retriever |";
        for (const auto& b : m.bias_types) out << " " << b << " |";
        out << "\n|";
        for (size_t i = 0; i <= m.bias_types.size(); ++i) out << " --- |";
        out << "\n";
        for (size_t i = 0; i < m.retrievers.size(); ++i) {
            out << "| " << m.retrievers[i] << " |";
            for (const auto& v : m.values[i]) {
                out << " " << (v ? fmtf(round6(*v), 2) : std::string("--")) << " |";
            }
            out << "\n";
        }
        out << "\n";
    }

    if (!r.foil.empty()) {
        std::vector<std::string> retrievers, strategies;
        for (const auto& f : r.foil) {
            if (std::find(retrievers.begin(), retrievers.end(), f.retriever_id) ==
                retrievers.end()) {
                retrievers.push_back(f.retriever_id);
            }
            if (std::find(strategies.begin(), strategies.end(), f.strategy) ==
                strategies.end()) {
                strategies.push_back(f.strategy);
            }
        }
        out << "## FOIL accuracy\n\n";
        out << "| Method |";
        for (const auto& rid : retrievers) out << " " << rid << " |";
        out << "\n|";
        for (size_t i = 0; i <= retrievers.size(); ++i) out << " --- |";
        out << "\n";
        size_t total_ties = 0;
        for (const auto& strategy : strategies) {
            out << "| " << strategy << " |";
            for (const auto& rid : retrievers) {
                bool found = false;
                for (const auto& f : r.foil) {
                    if (f.strategy == strategy && f.retriever_id == rid) {
                        out << " " << fmtf(round6(f.accuracy_pct), 1) << "% |";
                        total_ties += f.ties;
                        found = true;
                        break;
                    }
                }
                if (!found) out << " -- |";
            }
            out << "\n";
        }
        out << "\nScore ties count as incorrect; " << total_ties
            << " tie(s) across all cells (per-cell counts in tables/foil.csv).\n\n";
    }

    if (!r.baseline_abs_rho.empty() || !r.decorrelation.empty()) {
        std::vector<std::string> feat_seen;
        for (const auto& [feature, _] : r.baseline_abs_rho) {
            feat_seen.push_back(feature);
        }
        for (const auto& d : r.decorrelation) {
            if (std::find(feat_seen.begin(), feat_seen.end(), d.feature) ==
                feat_seen.end()) {
                feat_seen.push_back(d.feature);
            }
        }
        const std::vector<std::string> features = bias_column_order(feat_seen);
        std::vector<std::string> strategies;
        for (const auto& d : r.decorrelation) {
            if (std::find(strategies.begin(), strategies.end(), d.strategy) ==
                strategies.end()) {
                strategies.push_back(d.strategy);
            }
        }
        out << "## Feature-score decorrelation\n\n";
        out << "| Method |";
        for (const auto& f : features) out << " " << f << " |";
        out << "\n|";
        for (size_t i = 0; i <= features.size(); ++i) out << " --- |";
        out << "\n| Baseline \\|rho\\| |";
        for (const auto& f : features) {
            auto it = r.baseline_abs_rho.find(f);
            if (it != r.baseline_abs_rho.end()) {
                out << " " << fmtf(round6(it->second), 2) << " |";
            } else {
                out << " -- |";
            }
        }
        out << "\n";
        for (const auto& strategy : strategies) {
            out << "| " << strategy << " |";
            for (const auto& f : features) {
                bool found = false;
                for (const auto& d : r.decorrelation) {
                    if (d.strategy == strategy && d.feature == f) {
                        out << " " << fmtf(round6(d.pct), 1, true) << "% |";
                        found = true;
                        break;
                    }
                }
                if (!found) out << " -- |";
            }
            out << "\n";
        }
        out << "\n";
    }

    if (!r.diagnostics.empty()) {
        std::vector<std::string> strategies;
        for (const auto& s : r.strategy_order) {
            if (r.diagnostics.count(s)) strategies.push_back(s);
        }
        for (const auto& [s, _] : r.diagnostics) {
            if (std::find(strategies.begin(), strategies.end(), s) ==
                strategies.end()) {
                strategies.push_back(s);
            }
        }
        const DiagnosticsSummary& first = r.diagnostics.at(strategies.front());
        out << "## Query transformation characteristics\n\n";
        out << "| Metric | Baseline |";
        for (const auto& s : strategies) out << " " << s << " |";
        out << "\n|";
        for (size_t i = 0; i < strategies.size() + 2; ++i) out << " --- |";
        out << "\n";
        out << "| Avg. query length (words) | "
            << fmtf(round6(first.avg_words_original), 1) << " |";
        for (const auto& s : strategies) {
            out << " " << fmtf(round6(r.diagnostics.at(s).avg_words_rewritten), 1)
                << " |";
        }
        out << "\n| Length change (words) | -- |";
        for (const auto& s : strategies) {
            out << " " << fmtf(round6(r.diagnostics.at(s).mean_length_change), 1, true)
                << " |";
        }
        out << "\n| Term preservation (%) | 100 |";
        for (const auto& s : strategies) {
            out << " " << fmtf(round6(r.diagnostics.at(s).term_preservation_pct), 1)
                << " |";
        }
        out << "\n| New terms introduced | -- |";
        for (const auto& s : strategies) {
            out << " " << fmtf(round6(r.diagnostics.at(s).mean_new_terms), 1)
                << " |";
        }
        out << "\n| Unique vocabulary | " << first.vocab_original << " |";
        for (const auto& s : strategies) {
            out << " " << r.diagnostics.at(s).vocab_rewritten << " |";
        }
        out << "\n| Entity preservation (%) | 100 |";
        for (const auto& s : strategies) {
            const auto& e = r.diagnostics.at(s).entity_preservation_pct;
            out << " " << (e ? fmtf(round6(*e), 1) : std::string("--")) << " |";
        }
        out << "\n\n";
    }

    if (!r.errors.empty()) {
        out << "## Errors\n\n";
        for (const auto& e : r.errors) {
            out << "- [" << e.stage << "] ";
            if (!e.retriever_id.empty()) out << e.retriever_id << " / ";
            if (!e.bias_type.empty()) out << e.bias_type << " / ";
            if (!e.strategy.empty()) out << e.strategy << ": ";
            out << e.message << "\n";
        }
        out << "\n";
    }
    return out.str();
}

}  // namespace

std::map<std::string, std::string> render(const AuditReport& report,
                                          ReportFormat fmt) {
    switch (fmt) {
        case ReportFormat::json:
            return {{"report.json", report_to_json(report).dump(2) + "\n"}};
        case ReportFormat::csv:
            return render_csv(report);
        case ReportFormat::markdown:
            return {{"report.md", render_markdown(report)}};
    }
    throw Error("unknown report format");
}

void write_report(const AuditReport& report, const std::string& out_dir) {
    for (ReportFormat fmt :
         {ReportFormat::json, ReportFormat::csv, ReportFormat::markdown}) {
        for (const auto& [name, content] : render(report, fmt)) {
            const std::filesystem::path path =
                std::filesystem::path(out_dir) / name;
            if (path.has_parent_path()) {
                std::filesystem::create_directories(path.parent_path());
            }
            std::ofstream out(path, std::ios::binary);
            if (!out) throw Error("cannot write report file " + path.string());
            out << content;
            if (!out) throw Error("write failed for " + path.string());
        }
    }
}

AuditReport parse_report(const std::string& json_bytes) {
    json j = json::parse(json_bytes, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw Error("parse_report: malformed JSON");
    }
    try {
        AuditReport r;
        r.run_id = j.at("run_id").get<std::string>();
        r.config_hash = j.at("config_hash").get<std::string>();
        r.dataset_name = j.at("dataset_name").get<std::string>();
        r.retriever_order =
            j.at("retriever_order").get<std::vector<std::string>>();
        r.strategy_order = j.at("strategy_order").get<std::vector<std::string>>();
        for (const auto& jc : j.at("cells")) {
            GridCell c;
            c.bias_type = jc.at("bias_type").get<std::string>();
            c.retriever_id = jc.at("retriever_id").get<std::string>();
            c.strategy = jc.at("strategy").get<std::string>();
            c.ttest = ttest_from_json(jc.at("ttest"));
            r.cells.push_back(std::move(c));
        }
        for (const auto& js : j.at("summaries")) {
            StrategySummary s;
            s.is_baseline = js.at("is_baseline").get<bool>();
            s.mean_abs_t = js.at("mean_abs_t").get<double>();
            s.reduction_vs_baseline_pct =
                js.at("reduction_vs_baseline_pct").get<double>();
            s.sig_count = js.at("sig_count").get<int>();
            s.std_abs_t = js.at("std_abs_t").get<double>();
            s.strategy = js.at("strategy").get<std::string>();
            s.total = js.at("total").get<int>();
            r.summaries.push_back(std::move(s));
        }
        const json& dec = j.at("decorrelation");
        for (const auto& [feature, rho] : dec.at("baseline_abs_rho").items()) {
            r.baseline_abs_rho[feature] = rho.get<double>();
        }
        for (const auto& jd : dec.at("cells")) {
            DecorRow d;
            d.feature = jd.at("feature").get<std::string>();
            d.pct = jd.at("pct").get<double>();
            d.strategy = jd.at("strategy").get<std::string>();
            r.decorrelation.push_back(std::move(d));
        }
        for (const auto& jd : dec.at("detail")) {
            DecorDetail d;
            d.feature = jd.at("feature").get<std::string>();
            d.n = jd.at("n").get<int>();
            d.retriever_id = jd.at("retriever_id").get<std::string>();
            d.rho = jd.at("rho").get<double>();
            d.strategy = jd.at("strategy").get<std::string>();
            r.decorrelation_detail.push_back(std::move(d));
        }
        for (const auto& [strategy, jd] : j.at("diagnostics").items()) {
            r.diagnostics[strategy] = diagnostics_from_json(jd);
        }
        for (const auto& je : j.at("errors")) {
            CellIssue e;
            e.bias_type = je.at("bias_type").get<std::string>();
            e.message = je.at("message").get<std::string>();
            e.retriever_id = je.at("retriever_id").get<std::string>();
            e.stage = je.at("stage").get<std::string>();
            e.strategy = je.at("strategy").get<std::string>();
            r.errors.push_back(std::move(e));
        }
        for (const auto& jf : j.at("foil")) {
            FoilCell f;
            f.accuracy_pct = jf.at("accuracy_pct").get<double>();
            f.retriever_id = jf.at("retriever_id").get<std::string>();
            f.strategy = jf.at("strategy").get<std::string>();
            f.ties = jf.at("ties").get<size_t>();
            f.total = jf.at("total").get<size_t>();
            r.foil.push_back(std::move(f));
        }
        r.rejected_records = j.at("rejected_records").get<size_t>();
        return r;
    } catch (const json::exception& e) {
        throw Error(std::string("parse_report: ") + e.what());
    }
}

HeatmapMatrix heatmap_matrix(const std::vector<GridCell>& cells,
                             const std::string& strategy,
                             std::vector<std::string> retriever_order,
                             std::vector<std::string> bias_order) {
    HeatmapMatrix m;
    m.strategy = strategy;
    m.retrievers = retriever_order.empty() ? seen_retrievers(cells)
                                           : std::move(retriever_order);
    m.bias_types = bias_order.empty() ? bias_column_order(seen_biases(cells))
                                      : std::move(bias_order);
    m.values.assign(m.retrievers.size(),
                    std::vector<std::optional<double>>(m.bias_types.size()));
    for (const auto& c : cells) {
        if (c.strategy != strategy) continue;
        const auto ri = std::find(m.retrievers.begin(), m.retrievers.end(),
                                  c.retriever_id);
        const auto bi =
            std::find(m.bias_types.begin(), m.bias_types.end(), c.bias_type);
        if (ri == m.retrievers.end() || bi == m.bias_types.end()) continue;
        auto& slot = m.values[ri - m.retrievers.begin()]
                             [bi - m.bias_types.begin()];
        if (slot) {
            throw Error("heatmap_matrix: duplicate cell for " + c.retriever_id +
                        "/" + c.bias_type + "/" + strategy);
        }
        slot = c.ttest.abs_t;
    }
    return m;
}

}  // namespace rba

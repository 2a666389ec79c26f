#include "rba/corpus.hpp"

#include <cctype>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "rba/errors.hpp"
#include "rba/features.hpp"

using nlohmann::json;

namespace rba {

const char* to_string(BiasType b) {
    switch (b) {
        case BiasType::brevity: return "brevity";
        case BiasType::literal: return "literal";
        case BiasType::position: return "position";
        case BiasType::repetition: return "repetition";
    }
    return "?";
}

BiasType bias_type_from_string(const std::string& s) {
    for (BiasType b : kAllBiasTypes)
        if (s == to_string(b)) return b;
    throw Error("unknown bias type '" + s + "'");
}

namespace {

// ASCII + Latin-1 case folding on raw UTF-8 bytes; enough for the
// case-insensitive substring checks below.
std::string fold_case_bytes(const std::string& s) {
    std::string out = s;
    for (size_t i = 0; i < out.size(); ++i) {
        unsigned char c = static_cast<unsigned char>(out[i]);
        if (c >= 'A' && c <= 'Z') {
            out[i] = static_cast<char>(c + 0x20);
        } else if (i > 0 && static_cast<unsigned char>(out[i - 1]) == 0xC3 &&
                   c >= 0x80 && c <= 0x9E && c != 0x97) {
            out[i] = static_cast<char>(c + 0x20);
        }
    }
    return out;
}

// Total case-insensitive term frequency of the head-entity terms of the
// query. Falls back to all query terms when the capitalization heuristic
// finds no entity span.
size_t head_entity_term_count(const std::string& query, const std::string& doc) {
    TermSet entity_terms;
    for (const auto& span : capitalized_spans(query))
        for (const auto& t : tokenize(span)) entity_terms.insert(t);
    if (entity_terms.empty()) entity_terms = term_set(query);
    size_t count = 0;
    for (const auto& tok : tokenize(doc)) count += entity_terms.count(tok);
    return count;
}

}  // namespace

size_t find_answer(const std::string& doc, const std::string& answer) {
    if (answer.empty()) return std::string::npos;
    size_t pos = doc.find(answer);
    if (pos != std::string::npos) return pos;
    return fold_case_bytes(doc).find(fold_case_bytes(answer));
}

size_t effective_offset(const std::string& doc, const std::string& answer,
                        const std::optional<size_t>& stored) {
    if (stored) return *stored;
    return find_answer(doc, answer);
}

std::string validate_pair(const BiasPair& p) {
    if (p.query.empty()) return "empty query";
    if (p.doc_treatment.empty()) return "empty doc_treatment";
    if (p.doc_control.empty()) return "empty doc_control";
    if (p.answer_text.empty()) return "empty answer_text";

    auto check_offset = [&](const std::optional<size_t>& off,
                            const std::string& doc,
                            const char* which) -> std::string {
        if (!off) return {};
        if (*off > doc.size() ||
            doc.compare(*off, p.answer_text.size(), p.answer_text) != 0)
            return std::string("answer_offset_") + which +
                   " does not point at answer_text";
        return {};
    };
    if (auto e = check_offset(p.answer_offset_treatment, p.doc_treatment,
                              "treatment");
        !e.empty())
        return e;
    if (auto e = check_offset(p.answer_offset_control, p.doc_control, "control");
        !e.empty())
        return e;

    size_t off_t = effective_offset(p.doc_treatment, p.answer_text,
                                    p.answer_offset_treatment);
    size_t off_c = effective_offset(p.doc_control, p.answer_text,
                                    p.answer_offset_control);
    if (off_t == std::string::npos) return "answer_text not found in doc_treatment";
    if (off_c == std::string::npos) return "answer_text not found in doc_control";

    switch (p.bias_type) {
        case BiasType::brevity:
            if (p.doc_treatment.size() >= p.doc_control.size())
                return "brevity pair with |D1| >= |D2|";
            break;
        case BiasType::position: {
            double r1 = static_cast<double>(off_t) /
                        static_cast<double>(p.doc_treatment.size());
            double r2 = static_cast<double>(off_c) /
                        static_cast<double>(p.doc_control.size());
            if (!(r1 < r2))
                return "position pair with relative answer offset D1 >= D2";
            break;
        }
        case BiasType::repetition:
            if (head_entity_term_count(p.query, p.doc_treatment) <
                head_entity_term_count(p.query, p.doc_control))
                return "repetition pair with fewer head-entity mentions in D1";
            break;
        case BiasType::literal:
            break;  // no structural check; literalness is a feature, not a shape
    }
    return {};
}

std::string validate_foil(const FoilPair& f) {
    if (f.query.empty()) return "empty query";
    if (f.doc_foil.empty()) return "empty doc_foil";
    if (f.doc_evidence.empty()) return "empty doc_evidence";
    if (f.answer_text.empty()) return "empty answer_text";
    std::string folded_answer = fold_case_bytes(f.answer_text);
    if (fold_case_bytes(f.doc_evidence).find(folded_answer) == std::string::npos)
        return "answer_text not found in doc_evidence";
    if (fold_case_bytes(f.doc_foil).find(folded_answer) != std::string::npos)
        return "answer_text must not occur in doc_foil";
    return {};
}

namespace {

std::string get_string(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) throw Error(std::string("missing field '") + key + "'");
    if (!it->is_string())
        throw Error(std::string("field '") + key + "' is not a string");
    return it->get<std::string>();
}

std::optional<size_t> get_offset(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_number_integer() || it->get<int64_t>() < 0)
        throw Error(std::string("field '") + key +
                    "' must be a non-negative integer");
    return static_cast<size_t>(it->get<int64_t>());
}

}  // namespace

LoadResult parse_dataset(const std::string& content, const std::string& name) {
    LoadResult result;
    result.dataset.name = name;
    std::set<std::string> pair_ids, foil_ids;

    std::istringstream in(content);
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::string id;
        try {
            json j = json::parse(line);
            if (!j.is_object()) throw Error("record is not an object");
            if (j.contains("id") && j["id"].is_string())
                id = j["id"].get<std::string>();
            if (j.contains("doc_foil")) {
                FoilPair f;
                f.id = get_string(j, "id");
                f.query = get_string(j, "query");
                f.doc_foil = get_string(j, "doc_foil");
                f.doc_evidence = get_string(j, "doc_evidence");
                f.answer_text = get_string(j, "answer_text");
                if (auto reason = validate_foil(f); !reason.empty())
                    throw Error(reason);
                if (!foil_ids.insert(f.id).second)
                    throw Error("duplicate foil id '" + f.id + "'");
                result.dataset.foils.push_back(std::move(f));
            } else {
                BiasPair p;
                p.id = get_string(j, "id");
                p.bias_type = bias_type_from_string(get_string(j, "bias_type"));
                p.query = get_string(j, "query");
                p.doc_treatment = get_string(j, "doc_treatment");
                p.doc_control = get_string(j, "doc_control");
                p.answer_text = get_string(j, "answer_text");
                p.answer_offset_treatment = get_offset(j, "answer_offset_treatment");
                p.answer_offset_control = get_offset(j, "answer_offset_control");
                if (auto reason = validate_pair(p); !reason.empty())
                    throw Error(reason);
                if (!pair_ids.insert(p.id).second)
                    throw Error("duplicate pair id '" + p.id + "'");
                result.dataset.pairs.push_back(std::move(p));
            }
        } catch (const json::exception& e) {
            result.rejections.push_back({line_no, id, std::string("bad JSON: ") + e.what()});
        } catch (const std::exception& e) {
            result.rejections.push_back({line_no, id, e.what()});
        }
    }
    return result;
}

LoadResult load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read dataset file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string name = path;
    if (auto slash = name.find_last_of('/'); slash != std::string::npos)
        name = name.substr(slash + 1);
    if (auto dot = name.find_last_of('.'); dot != std::string::npos)
        name = name.substr(0, dot);
    return parse_dataset(buf.str(), name);
}

std::string serialize_dataset(const Dataset& ds) {
    std::string out;
    for (const auto& p : ds.pairs) {
        json j{{"id", p.id},
               {"bias_type", to_string(p.bias_type)},
               {"query", p.query},
               {"doc_treatment", p.doc_treatment},
               {"doc_control", p.doc_control},
               {"answer_text", p.answer_text}};
        if (p.answer_offset_treatment)
            j["answer_offset_treatment"] = *p.answer_offset_treatment;
        if (p.answer_offset_control)
            j["answer_offset_control"] = *p.answer_offset_control;
        out += j.dump();
        out += '\n';
    }
    for (const auto& f : ds.foils) {
        json j{{"id", f.id},
               {"query", f.query},
               {"doc_foil", f.doc_foil},
               {"doc_evidence", f.doc_evidence},
               {"answer_text", f.answer_text}};
        out += j.dump();
        out += '\n';
    }
    return out;
}

std::vector<SeedDoc> load_seed_docs(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read seed file: " + path);
    std::vector<SeedDoc> seeds;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            json j = json::parse(line);
            if (!j.is_object()) throw Error("record is not an object");
            SeedDoc s;
            s.id = j.value("id", std::string());
            s.query = get_string(j, "query");
            s.text = get_string(j, "text");
            s.answer_text = get_string(j, "answer_text");
            auto off = get_offset(j, "answer_offset");
            if (!off) throw Error("missing field 'answer_offset'");
            s.answer_offset = *off;
            s.head_entity = j.value("head_entity", std::string());
            if (j.contains("variant") && !j["variant"].is_null())
                s.variant = get_string(j, "variant");
            seeds.push_back(std::move(s));
        } catch (const std::exception& e) {
            throw Error("seed file " + path + " line " + std::to_string(line_no) +
                        ": " + e.what());
        }
    }
    if (seeds.empty()) throw Error("seed file " + path + " holds no records");
    return seeds;
}

namespace {

struct Sentence {
    std::string text;  // includes the terminating punctuation
    size_t begin = 0;
};

std::vector<Sentence> split_sentences_with_offsets(const std::string& text) {
    std::vector<Sentence> out;
    size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i])))
            ++i;
        if (i >= text.size()) break;
        size_t start = i;
        size_t end = text.size();
        for (size_t j = i; j < text.size(); ++j) {
            char c = text[j];
            if ((c == '.' || c == '!' || c == '?') &&
                (j + 1 >= text.size() ||
                 std::isspace(static_cast<unsigned char>(text[j + 1])))) {
                end = j + 1;
                break;
            }
        }
        out.push_back({text.substr(start, end - start), start});
        i = end;
    }
    return out;
}

std::string join_sentences(const std::vector<std::string>& sentences) {
    std::string out;
    for (const auto& s : sentences) {
        if (!out.empty()) out += ' ';
        out += s;
    }
    return out;
}

std::string replace_all(std::string text, const std::string& from,
                        const std::string& to) {
    if (from.empty()) return text;
    size_t pos = 0;
    while ((pos = text.find(from, pos)) != std::string::npos) {
        text.replace(pos, from.size(), to);
        pos += to.size();
    }
    return text;
}

// One extra mention, either as a prefix or folded in before the terminator.
std::string inject_mention(const std::string& sentence,
                           const std::string& entity, bool prefix) {
    if (prefix) return entity + ": " + sentence;
    char last = sentence.empty() ? '\0' : sentence.back();
    if (last == '.' || last == '!' || last == '?')
        return sentence.substr(0, sentence.size() - 1) + " (" + entity + ")" + last;
    return sentence + " (" + entity + ")";
}

}  // namespace

std::vector<std::string> split_sentences(const std::string& text) {
    std::vector<std::string> out;
    for (auto& s : split_sentences_with_offsets(text)) out.push_back(std::move(s.text));
    return out;
}

std::vector<BiasPair> synth_pairs(const std::vector<SeedDoc>& seeds,
                                  BiasType bias_type, uint64_t rng_seed) {
    std::mt19937_64 rng(rng_seed);
    std::vector<BiasPair> out;
    out.reserve(seeds.size());

    for (size_t si = 0; si < seeds.size(); ++si) {
        const SeedDoc& seed = seeds[si];
        std::string seed_id = seed.id.empty() ? "seed" + std::to_string(si)
                                              : seed.id;
        auto fail = [&](const std::string& why) -> Error {
            return Error("synth_pairs: seed '" + seed_id + "': " + why);
        };

        if (seed.query.empty()) throw fail("empty query");
        if (seed.answer_text.empty()) throw fail("empty answer_text");
        if (seed.answer_offset > seed.text.size() ||
            seed.text.compare(seed.answer_offset, seed.answer_text.size(),
                              seed.answer_text) != 0)
            throw fail("answer_text not at the stated offset");

        auto sentences = split_sentences_with_offsets(seed.text);
        if (sentences.size() < 3)
            throw fail("needs at least 3 sentences, found " +
                       std::to_string(sentences.size()));

        size_t answer_idx = sentences.size();
        for (size_t i = 0; i < sentences.size(); ++i) {
            if (seed.answer_offset >= sentences[i].begin &&
                seed.answer_offset < sentences[i].begin + sentences[i].text.size())
                answer_idx = i;
        }
        if (answer_idx == sentences.size())
            throw fail("answer offset not inside any sentence");

        std::vector<std::string> plain;
        for (auto& s : sentences) plain.push_back(s.text);

        BiasPair p;
        p.id = std::string(to_string(bias_type)) + "-" + seed_id;
        p.bias_type = bias_type;
        p.query = seed.query;
        p.answer_text = seed.answer_text;

        switch (bias_type) {
            case BiasType::brevity:
                p.doc_treatment = plain[answer_idx];
                p.doc_control = seed.text;
                break;
            case BiasType::literal: {
                if (!seed.variant || seed.variant->empty())
                    throw fail("literal pair needs a variant surface form");
                if (seed.head_entity.empty())
                    throw fail("literal pair needs head_entity");
                if (seed.text.find(seed.head_entity) == std::string::npos)
                    throw fail("head_entity not present in text");
                p.doc_treatment = seed.text;
                p.doc_control =
                    replace_all(seed.text, seed.head_entity, *seed.variant);
                break;
            }
            case BiasType::position: {
                std::vector<std::string> front{plain[answer_idx]};
                std::vector<std::string> rest;
                for (size_t i = 0; i < plain.size(); ++i)
                    if (i != answer_idx) rest.push_back(plain[i]);
                for (auto& s : rest) front.push_back(s);
                p.doc_treatment = join_sentences(front);
                std::vector<std::string> back = rest;
                back.push_back(plain[answer_idx]);
                p.doc_control = join_sentences(back);
                break;
            }
            case BiasType::repetition: {
                if (seed.head_entity.empty())
                    throw fail("repetition pair needs head_entity");
                std::vector<std::string> amplified;
                for (size_t i = 0; i < plain.size(); ++i) {
                    if (i == answer_idx)
                        amplified.push_back(plain[i]);
                    else
                        amplified.push_back(inject_mention(
                            plain[i], seed.head_entity, (rng() & 1) != 0));
                }
                p.doc_treatment = join_sentences(amplified);
                p.doc_control = seed.text;
                break;
            }
        }

        size_t off_t = find_answer(p.doc_treatment, p.answer_text);
        size_t off_c = find_answer(p.doc_control, p.answer_text);
        if (off_t == std::string::npos)
            throw fail("generated treatment document lost the answer");
        if (off_c == std::string::npos)
            throw fail("generated control document lost the answer");
        // only record exact-match offsets; a case-folded hit stays unannotated
        if (p.doc_treatment.compare(off_t, p.answer_text.size(), p.answer_text) == 0)
            p.answer_offset_treatment = off_t;
        if (p.doc_control.compare(off_c, p.answer_text.size(), p.answer_text) == 0)
            p.answer_offset_control = off_c;

        if (auto reason = validate_pair(p); !reason.empty())
            throw fail("generated pair fails validation: " + reason);
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace rba

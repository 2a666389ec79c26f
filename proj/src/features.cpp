#include "rba/features.hpp"

#include <unordered_map>

#include "rba/errors.hpp"

namespace rba {
namespace {

struct Codepoint {
    uint32_t cp = 0;
    size_t len = 1;  // bytes consumed
};

Codepoint decode_utf8(std::string_view s, size_t i) {
    unsigned char c0 = static_cast<unsigned char>(s[i]);
    if (c0 < 0x80) return {c0, 1};
    auto cont = [&](size_t k) -> uint32_t {
        if (i + k >= s.size()) return 0xFFFFFFFF;
        unsigned char c = static_cast<unsigned char>(s[i + k]);
        return (c & 0xC0) == 0x80 ? (c & 0x3Fu) : 0xFFFFFFFF;
    };
    if ((c0 & 0xE0) == 0xC0) {
        uint32_t c1 = cont(1);
        if (c1 != 0xFFFFFFFF) return {((c0 & 0x1Fu) << 6) | c1, 2};
    } else if ((c0 & 0xF0) == 0xE0) {
        uint32_t c1 = cont(1), c2 = cont(2);
        if (c1 != 0xFFFFFFFF && c2 != 0xFFFFFFFF)
            return {((c0 & 0x0Fu) << 12) | (c1 << 6) | c2, 3};
    } else if ((c0 & 0xF8) == 0xF0) {
        uint32_t c1 = cont(1), c2 = cont(2), c3 = cont(3);
        if (c1 != 0xFFFFFFFF && c2 != 0xFFFFFFFF && c3 != 0xFFFFFFFF)
            return {((c0 & 0x07u) << 18) | (c1 << 12) | (c2 << 6) | c3, 4};
    }
    // Invalid byte: treat as a separator so malformed input cannot merge
    // adjacent tokens.
    return {0, 1};
}

bool is_word_cp(uint32_t cp) {
    if (cp < 0x80)
        return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') ||
               (cp >= 'A' && cp <= 'Z');
    if (cp <= 0xFF)
        return cp == 0xAA || cp == 0xB5 || cp == 0xBA ||
               (cp >= 0xC0 && cp != 0xD7 && cp != 0xF7);
    return true;  // beyond Latin-1: assume letter
}

uint32_t lower_cp(uint32_t cp) {
    if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
    if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;
    return cp;
}

bool is_upper_cp(uint32_t cp) {
    return (cp >= 'A' && cp <= 'Z') || (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7);
}

void append_cp(std::string& out, uint32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

struct RawToken {
    std::string text;   // original casing
    size_t begin = 0;   // byte offset
    size_t end = 0;     // one past last byte
    bool sentence_initial = false;
    uint32_t first_cp = 0;
};

std::vector<RawToken> scan(std::string_view text) {
    std::vector<RawToken> out;
    bool pending_sentence_start = true;
    size_t i = 0;
    while (i < text.size()) {
        Codepoint c = decode_utf8(text, i);
        if (is_word_cp(c.cp)) {
            RawToken tok;
            tok.begin = i;
            tok.sentence_initial = pending_sentence_start;
            tok.first_cp = c.cp;
            pending_sentence_start = false;
            while (i < text.size()) {
                Codepoint cc = decode_utf8(text, i);
                if (!is_word_cp(cc.cp)) break;
                tok.text.append(text.substr(i, cc.len));
                i += cc.len;
            }
            tok.end = i;
            out.push_back(std::move(tok));
        } else {
            if ((c.cp == '.' || c.cp == '!' || c.cp == '?')) {
                size_t next = i + c.len;
                if (next >= text.size() ||
                    static_cast<unsigned char>(text[next]) == ' ' ||
                    text[next] == '\n' || text[next] == '\t' ||
                    text[next] == '\r')
                    pending_sentence_start = true;
            }
            i += c.len;
        }
    }
    return out;
}

std::string lowercase(std::string_view token) {
    std::string out;
    out.reserve(token.size());
    size_t i = 0;
    while (i < token.size()) {
        Codepoint c = decode_utf8(token, i);
        append_cp(out, lower_cp(c.cp));
        i += c.len;
    }
    return out;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    for (auto& t : scan(text)) out.push_back(lowercase(t.text));
    return out;
}

std::vector<std::string> tokenize_cased(std::string_view text) {
    std::vector<std::string> out;
    for (auto& t : scan(text)) out.push_back(std::move(t.text));
    return out;
}

TermSet term_set(std::string_view text) {
    TermSet s;
    for (auto& t : scan(text)) s.insert(lowercase(t.text));
    return s;
}

std::vector<std::string> capitalized_spans(std::string_view text) {
    std::vector<RawToken> toks = scan(text);
    std::vector<std::string> spans;
    size_t i = 0;
    while (i < toks.size()) {
        if (toks[i].sentence_initial || !is_upper_cp(toks[i].first_cp)) {
            ++i;
            continue;
        }
        size_t j = i;
        while (j + 1 < toks.size() && !toks[j + 1].sentence_initial &&
               is_upper_cp(toks[j + 1].first_cp)) {
            // runs only continue across plain spaces
            std::string_view sep =
                text.substr(toks[j].end, toks[j + 1].begin - toks[j].end);
            if (sep.find_first_not_of(' ') != std::string_view::npos) break;
            ++j;
        }
        spans.emplace_back(text.substr(toks[i].begin, toks[j].end - toks[i].begin));
        i = j + 1;
    }
    return spans;
}

double f_brevity(std::string_view d) {
    return static_cast<double>(scan(d).size());
}

double f_literal(std::string_view q, std::string_view d) {
    TermSet tq = term_set(q);
    TermSet td = term_set(d);
    if (tq.empty() && td.empty())
        throw Error("f_literal: both term sets empty (0/0 Jaccard)");
    size_t inter = 0;
    for (const auto& t : tq) inter += td.count(t);
    size_t uni = tq.size() + td.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

double f_position(size_t answer_offset, std::string_view d) {
    if (d.empty() || answer_offset >= d.size())
        throw Error("f_position: answer offset " + std::to_string(answer_offset) +
                    " out of range for document of length " +
                    std::to_string(d.size()));
    return static_cast<double>(answer_offset) / static_cast<double>(d.size());
}

double f_repetition(std::string_view q, std::string_view d) {
    TermSet tq = term_set(q);
    if (tq.empty()) throw Error("f_repetition: query has no terms");
    std::unordered_map<std::string, size_t> tf;
    for (auto& t : tokenize(d)) ++tf[t];
    double sum = 0.0;
    for (const auto& t : tq) {
        auto it = tf.find(t);
        if (it != tf.end()) sum += static_cast<double>(it->second);
    }
    return sum / static_cast<double>(tq.size());
}

}  // namespace rba

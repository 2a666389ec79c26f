#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace rba {

// Lowercase word tokenizer shared by the feature extractors, the toy
// embedder, and the corpus validators. Tokens are maximal runs of
// letters/digits; everything else separates. ASCII and Latin-1 letters are
// case-folded, codepoints above U+00FF are kept verbatim and treated as
// letters.
std::vector<std::string> tokenize(std::string_view text);

// Same segmentation, original casing kept.
std::vector<std::string> tokenize_cased(std::string_view text);

using TermSet = std::set<std::string>;

// Unique lowercase terms of a text.
TermSet term_set(std::string_view text);

// Maximal runs of capitalized tokens, skipping sentence-initial tokens and
// breaking runs at any separator other than plain spaces. Returns the spans
// with their original spelling. A crude entity heuristic, shared by the
// rewrite diagnostics and the repetition validator.
std::vector<std::string> capitalized_spans(std::string_view text);

// Document length in tokens.
double f_brevity(std::string_view d);

// Jaccard similarity of the two term sets. Both sets empty is an error.
double f_literal(std::string_view q, std::string_view d);

// answer_offset / |d|, both in characters (bytes of UTF-8 here).
// Requires 0 <= answer_offset < |d|.
double f_position(size_t answer_offset, std::string_view d);

// Mean term frequency of the query's unique terms in d. Empty query term
// set is an error.
double f_repetition(std::string_view q, std::string_view d);

}  // namespace rba
